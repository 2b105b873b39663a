"""Holevo capacity of qubit channels.

Pipeline: fixed mesh of pure inputs -> concave maximization over the weights
-> support extraction and clustering -> Newton refinement of inputs and
weights -> supporting-hyperplane certificate. The weight problem is stopped
by its relative-entropy dual gap ``max_j H[ch(r_j), ch(avg)] - chi``, which is
an exact optimality margin for the mesh-restricted problem.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .qubit import (
    BlochVector,
    InvalidStateError,
    QubitChannel,
    cp_margin,
    entropy,
    entropy_of_length,
    entropy_rate,
    neg_entropy_derivatives,
    relent_bloch,
    require_cp,
)
from .relent import sup_relent
from .sphere import (
    angular_distance,
    circle_points,
    mesh_points,
    plane_normal,
    pmap,
    random_rotations,
    retract,
    retract_jacobian,
    tangent_basis,
)

log = logging.getLogger(__name__)

__all__ = [
    "Ensemble",
    "CapacityResult",
    "CapacityConfig",
    "SimplexSolution",
    "ConvergenceError",
    "RankDeficiencyError",
    "mesh_points",
    "holevo_chi",
    "maximize_over_probs",
    "extract_support",
    "refine",
    "supporting_hyperplane",
    "verify_hyperplane",
    "capacity",
    "planar_capacity",
    "mesh_lower_bound",
]


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before its criterion; ``best`` holds the last iterate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class RankDeficiencyError(ValueError):
    def __init__(self, message: str, dependent: Sequence[int] = ()):
        super().__init__(message)
        self.dependent = tuple(dependent)


@dataclass(frozen=True)
class Ensemble:
    """Probabilities paired with input states."""

    probs: tuple[float, ...]
    inputs: tuple[BlochVector, ...]

    def __post_init__(self):
        if len(self.probs) != len(self.inputs) or not self.probs:
            raise ValueError("ensemble needs matching, nonempty probs and inputs")
        if any(p <= 0 for p in self.probs):
            raise ValueError(f"ensemble probabilities must be positive: {self.probs}")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"ensemble probabilities sum to {math.fsum(self.probs)}")

    @classmethod
    def from_arrays(cls, probs, points, *, normalize_points: bool = False) -> "Ensemble":
        probs = np.asarray(probs, dtype=float)
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if normalize_points:
            pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        probs = probs / probs.sum()
        return cls(tuple(float(p) for p in probs), tuple(BlochVector.from_array(p) for p in pts))

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def entries(self) -> list[tuple[float, BlochVector]]:
        return list(zip(self.probs, self.inputs))

    @property
    def probs_array(self) -> np.ndarray:
        return np.array(self.probs)

    @property
    def points_array(self) -> np.ndarray:
        return np.array([r.as_array() for r in self.inputs])

    def average(self) -> BlochVector:
        return BlochVector.from_array(self.probs_array @ self.points_array)

    def reflect_y(self) -> "Ensemble":
        return Ensemble(self.probs, tuple(r.reflect_y() for r in self.inputs))

    def as_dict(self) -> dict:
        return {"probs": list(self.probs), "inputs": [list(r) for r in self.inputs]}

    @classmethod
    def from_dict(cls, d: dict) -> "Ensemble":
        return cls(tuple(float(p) for p in d["probs"]), tuple(BlochVector(*map(float, r)) for r in d["inputs"]))


@dataclass
class CapacityResult:
    capacity: float
    ensemble: Ensemble
    xi: np.ndarray
    xi0: float
    dual_gap: float
    iterations: int
    max_violation: float = math.nan
    grad_norm: float = math.nan
    non_unique: bool = False
    seed: int = 0
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "ensemble": self.ensemble.as_dict(),
            "xi": [float(v) for v in self.xi],
            "xi0": self.xi0,
            "dual_gap": self.dual_gap,
            "iterations": self.iterations,
            "max_violation": self.max_violation,
            "grad_norm": self.grad_norm,
            "non_unique": self.non_unique,
            "seed": self.seed,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CapacityResult":
        return cls(
            capacity=float(d["capacity"]),
            ensemble=Ensemble.from_dict(d["ensemble"]),
            xi=np.array(d["xi"], dtype=float),
            xi0=float(d["xi0"]),
            dual_gap=float(d["dual_gap"]),
            iterations=int(d["iterations"]),
            max_violation=float(d["max_violation"]),
            grad_norm=float(d["grad_norm"]),
            non_unique=bool(d["non_unique"]),
            seed=int(d["seed"]),
            notes=list(d.get("notes", [])),
        )


@dataclass
class CapacityConfig:
    mesh_ks: tuple[int, ...] = (20, 30, 40)
    rotations: int = 5
    seed: int = 0
    tol: float = 1e-9
    mesh_tol: float = 1e-11
    prune: float = 1e-4
    support_cap: int = 4
    verify_k: int = 200
    grad_tol: float = 1e-10
    allow_noncp: bool = False


# ---------------------------------------------------------------------------
# objective

def _chi(probs: np.ndarray, outs: np.ndarray, out_entropy: Optional[np.ndarray] = None) -> float:
    if out_entropy is None:
        out_entropy = entropy_of_length(np.linalg.norm(outs, axis=-1))
    return float(entropy(probs @ outs) - probs @ out_entropy)


def holevo_chi(ch: QubitChannel, e: Ensemble) -> float:
    """``S(ch(avg)) - sum_i p_i S(ch(r_i))`` in bits."""
    return max(_chi(e.probs_array, ch(e.points_array)), 0.0)


def _grad_s(a: np.ndarray) -> np.ndarray:
    """Gradient of the entropy with respect to a Bloch vector (rows allowed)."""
    s = np.linalg.norm(a, axis=-1, keepdims=True)
    u = np.divide(a, s, out=np.zeros_like(a), where=s > 0)
    return -entropy_rate(s) * u


def _hess_s(a: np.ndarray) -> np.ndarray:
    return -neg_entropy_derivatives(a)[1]


# ---------------------------------------------------------------------------
# weights on a fixed point set

@dataclass
class SimplexSolution:
    probs: np.ndarray
    chi: float
    dual_gap: float
    iterations: int


def _newton_polish(q: np.ndarray, outs: np.ndarray, ent: np.ndarray, iters: int = 30) -> np.ndarray:
    """Newton steps on a small support with the last weight eliminated."""
    if len(q) < 2:
        return q
    basis = (outs[:-1] - outs[-1]).T
    d_ent = ent[:-1] - ent[-1]
    for _ in range(iters):
        avg = q @ outs
        g = basis.T @ _grad_s(avg) - d_ent
        if np.abs(g).max() < 1e-15:
            break
        h = basis.T @ _hess_s(avg) @ basis
        step = -np.linalg.lstsq(h, g, rcond=1e-13)[0]
        cand = q.copy()
        cand[:-1] += step
        cand[-1] = 1.0 - cand[:-1].sum()
        if cand.min() < 0:
            break
        q = cand
    return q


def _reduce_support(q: np.ndarray, outs: np.ndarray, ent: np.ndarray) -> np.ndarray:
    """Caratheodory reduction: zero weights without changing the average output.

    Moves along null directions of ``[outs^T; 1]`` in the direction that does
    not decrease chi, until at most four weights remain positive.
    """
    q = q.copy()
    while np.count_nonzero(q > 0) > 4:
        act = np.flatnonzero(q > 0)
        m = np.vstack([outs[act].T, np.ones(len(act))])
        null = np.linalg.svd(m)[2][-1]
        # moving by t * null keeps the average and changes chi by -t * (null . ent)
        if null @ ent[act] > 0:
            null = -null
        neg = np.flatnonzero(null < 0)
        ratios = q[act[neg]] / -null[neg]
        j = int(np.argmin(ratios))
        q[act] = np.maximum(q[act] + ratios[j] * null, 0.0)
        q[act[neg[j]]] = 0.0
        q /= q.sum()
    return q


def maximize_over_probs(ch: QubitChannel, points, tol: float = 1e-11, max_iter: int = 1000) -> SimplexSolution:
    """Maximize chi over the weights of a fixed set of pure inputs.

    Fully corrective conditional gradient: each round adds the input with the
    largest relative entropy to the current average output, re-solves the
    weights on the active set, and polishes with Newton once the active set
    has at most four members. Stops when the dual gap is below ``tol``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("no points")
    outs = ch(pts)
    ent = entropy_of_length(np.linalg.norm(outs, axis=1))
    active = [int(np.argmin(ent))]
    q = np.array([1.0])
    gap = math.inf
    chi = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        avg = q @ outs[active]
        rel = relent_bloch(outs, avg)
        chi = float(entropy(avg) - q @ ent[active])
        best = int(np.argmax(rel))
        gap = float(rel[best] - chi)
        if gap <= tol:
            break
        if best not in active:
            active.append(best)
            q = np.append(q, 0.0)
        q = _solve_active(q, outs[active], ent[active])
        keep = q > 1e-14
        active = [a for a, k in zip(active, keep) if k]
        q = q[keep] / q[keep].sum()
    else:
        probs = np.zeros(len(pts))
        probs[active] = q
        raise ConvergenceError(f"weight optimization stalled with dual gap {gap:.3e}",
                               best=SimplexSolution(probs, chi, max(gap, 0.0), it))
    probs = np.zeros(len(pts))
    probs[active] = q
    return SimplexSolution(probs, chi, max(gap, 0.0), it)


def _solve_active(q0: np.ndarray, outs: np.ndarray, ent: np.ndarray) -> np.ndarray:
    m = len(q0)
    if m == 1:
        return np.array([1.0])

    def neg_chi(q):
        avg = q @ outs
        return -(float(entropy(avg)) - q @ ent), -(outs @ _grad_s(avg) - ent)

    res = minimize(
        neg_chi, q0, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * m,
        constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0, "jac": lambda x: np.ones_like(x)}],
        options={"ftol": 1e-16, "maxiter": 500},
    )
    q = np.clip(res.x, 0.0, None)
    q /= q.sum()
    if np.count_nonzero(q > 1e-14) > 4:
        q = _reduce_support(np.where(q > 1e-14, q, 0.0), outs, ent)
    act = np.flatnonzero(q > 1e-14)
    if len(act) <= 4:
        q_act = _newton_polish(q[act] / q[act].sum(), outs[act], ent[act])
        q = np.zeros(m)
        q[act] = q_act
    return q


def mesh_lower_bound(ch: QubitChannel, k: int, tol: float = 1e-12) -> SimplexSolution:
    """Capacity lower bound from the ``k**2 - k + 2`` point mesh."""
    return maximize_over_probs(ch, mesh_points(k), tol=tol)


# ---------------------------------------------------------------------------
# support extraction

def extract_support(probs, points, threshold: float = 1e-4, *, cap: int = 4,
                    cluster_radius: float = 0.0) -> Ensemble:
    """Drop weights at or below ``threshold * max(probs)``, merge nearby points.

    Points within ``cluster_radius`` (angular distance) of a heavier kept point
    are merged into it by weighted mean, projected back onto the sphere. Only
    the ``cap`` heaviest clusters are kept; weights are renormalized.
    """
    probs = np.asarray(probs, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if probs.size == 0 or probs.max() <= 0:
        raise ValueError("empty support")
    keep = np.flatnonzero(probs > threshold * probs.max())
    order = keep[np.argsort(-probs[keep], kind="stable")]
    centers: list[int] = []
    members: list[list[int]] = []
    for i in order:
        for c, mem in zip(centers, members):
            if cluster_radius > 0 and angular_distance(pts[i], pts[c]) <= cluster_radius:
                mem.append(i)
                break
        else:
            centers.append(i)
            members.append([i])
    weights = np.array([probs[m].sum() for m in members])
    locs = np.array([probs[m] @ pts[m] for m in members])
    norms = np.linalg.norm(locs, axis=1, keepdims=True)
    locs = np.where(norms > 0, locs / np.where(norms > 0, norms, 1.0), pts[centers])
    top = np.argsort(-weights, kind="stable")[:cap]
    return Ensemble.from_arrays(weights[top], locs[top], normalize_points=True)


# ---------------------------------------------------------------------------
# Newton refinement of inputs and weights

class _Chart:
    """Local coordinates ``(u_1..u_n, w_1..w_{n-1})`` around an ensemble."""

    def __init__(self, ch: QubitChannel, points: np.ndarray, probs: np.ndarray, plane: Optional[str]):
        self.ch = ch
        self.points = points
        self.probs = probs
        self.n = len(probs)
        if plane is None:
            self.bases = [tangent_basis(r) for r in points]
        else:
            normal = plane_normal(plane)
            self.bases = [np.cross(normal, r)[None, :] / np.linalg.norm(np.cross(normal, r)) for r in points]
        self.dim_u = self.bases[0].shape[0]
        self.size = self.n * self.dim_u + self.n - 1

    def unpack(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        d = self.dim_u
        pts = np.array([retract(r, b, z[i * d:(i + 1) * d]) for i, (r, b) in enumerate(zip(self.points, self.bases))])
        w = z[self.n * d:]
        probs = np.append(self.probs[:-1] + w, 0.0)
        probs[-1] = 1.0 - probs[:-1].sum()
        return pts, probs

    def value(self, z: np.ndarray) -> float:
        pts, probs = self.unpack(z)
        return _chi(probs, self.ch(pts))

    def gradient(self, z: np.ndarray) -> np.ndarray:
        d = self.dim_u
        pts, probs = self.unpack(z)
        lam = self.ch.lam
        outs = self.ch(pts)
        avg = probs @ outs
        g_avg = _grad_s(avg)
        g_out = _grad_s(outs)
        ent = entropy_of_length(np.linalg.norm(outs, axis=1))
        out = np.empty(self.size)
        for i, (r, b) in enumerate(zip(self.points, self.bases)):
            d_r = probs[i] * lam * (g_avg - g_out[i])
            out[i * d:(i + 1) * d] = retract_jacobian(r, b, z[i * d:(i + 1) * d]) @ d_r
        d_p = outs @ g_avg - ent
        out[self.n * d:] = d_p[:-1] - d_p[-1]
        return out

    def hessian(self, step: float = 1e-6) -> np.ndarray:
        h = np.empty((self.size, self.size))
        for j in range(self.size):
            e = np.zeros(self.size)
            e[j] = step
            h[:, j] = (self.gradient(e) - self.gradient(-e)) / (2 * step)
        return (h + h.T) / 2


def chi_gradient(ch: QubitChannel, e: Ensemble, *, plane: Optional[str] = None):
    """Value, chart gradient and chart function at ``e``; used by tests."""
    chart = _Chart(ch, e.points_array, e.probs_array, plane)
    return chart.value, chart.gradient, chart.size


def refine(ch: QubitChannel, e0: Ensemble, *, plane: Optional[str] = None, grad_tol: float = 1e-10,
           max_iter: int = 200, min_prob: float = 1e-9, verify_k: int = 200,
           certify: bool = True) -> CapacityResult:
    """Newton's method on the gradient of chi in (inputs, weights).

    Inputs live on the sphere (or on a coordinate great circle if ``plane``
    is given) and are handled in charts re-centred at every step. Weights use
    the first ``n - 1`` coordinates with the last eliminated. A weight that
    falls below ``min_prob`` removes its input. Steps use absolute Hessian
    eigenvalues and backtracking, so chi never decreases.
    """
    pts = e0.points_array / np.linalg.norm(e0.points_array, axis=1, keepdims=True)
    probs = e0.probs_array.copy()
    val = _chi(probs, ch(pts))
    gnorm = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        chart = _Chart(ch, pts, probs, plane)
        g = chart.gradient(np.zeros(chart.size))
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            break
        h = chart.hessian()
        w, v = np.linalg.eigh(h)
        floor = max(1e-12, 1e-9 * np.abs(w).max())
        step = v @ ((v.T @ g) / np.maximum(np.abs(w), floor))
        n = np.linalg.norm(step)
        if n > 0.3:
            step *= 0.3 / n
        # stay inside the simplex
        _, cand_p = chart.unpack(step)
        if cand_p.min() < 0:
            dp = cand_p - probs
            neg = dp < 0
            t = float(np.min(-probs[neg] / dp[neg]))
            step *= min(1.0, t)
        accepted = False
        for _ in range(50):
            cand_pts, cand_p = chart.unpack(step)
            cand_val = _chi(np.clip(cand_p, 0.0, None), ch(cand_pts))
            if cand_val >= val - 1e-15 * max(1.0, abs(val)):
                accepted = True
                break
            step = step / 2
        if not accepted:
            break
        pts, probs, val = cand_pts, np.clip(cand_p, 0.0, None), cand_val
        small = probs < min_prob
        if np.any(small) and len(probs) > 1:
            pts, probs = pts[~small], probs[~small] / probs[~small].sum()
            val = _chi(probs, ch(pts))
    chart = _Chart(ch, pts, probs, plane)
    gnorm = float(np.linalg.norm(chart.gradient(np.zeros(chart.size))))
    ens = Ensemble.from_arrays(probs, pts, normalize_points=True)
    result = CapacityResult(
        capacity=holevo_chi(ch, ens), ensemble=ens, xi=np.full(3, math.nan), xi0=math.nan,
        dual_gap=math.nan, iterations=it, grad_norm=gnorm, non_unique=not ch.is_injective,
    )
    if gnorm > grad_tol:
        raise ConvergenceError(f"refinement stopped with gradient norm {gnorm:.3e}", best=result)
    if certify:
        certify_result(ch, result, verify_k=verify_k)
    return result


def certify_result(ch: QubitChannel, result: CapacityResult, verify_k: int = 200) -> CapacityResult:
    """Fill in the hyperplane, its violation and the dual gap in place."""
    ens = result.ensemble
    if len(ens) >= 2:
        try:
            result.xi, result.xi0 = supporting_hyperplane(ch, ens)
            result.max_violation = verify_hyperplane(ch, result.xi, result.xi0, verify_k)
        except RankDeficiencyError as exc:
            result.notes.append(str(exc))
    avg_out_norm = np.linalg.norm(ch(ens.probs_array @ ens.points_array))
    if avg_out_norm < 1.0 - 1e-12:
        sup, _ = sup_relent(ch, ens.average(), grid_k=verify_k)
        result.dual_gap = max(sup - result.capacity, 0.0)
    else:
        result.dual_gap = 0.0 if result.capacity <= 1e-15 else math.inf
    return result


# ---------------------------------------------------------------------------
# certificate

def supporting_hyperplane(ch: QubitChannel, e: Ensemble) -> tuple[np.ndarray, float]:
    """Plane ``xi . a + xi0 = S(a)`` through the output entropy points of ``e``.

    With four members the 4x4 system is solved exactly. With two or three
    the plane is fixed inside the affine span of the outputs by the members
    and outside it by the entropy gradient at the average output, which is
    the relative-entropy plane ``xi = -c`` with ``log2 ch(avg) = c0 I + c.sigma``.
    """
    outs = ch(e.points_array)
    ent = entropy_of_length(np.linalg.norm(outs, axis=1))
    n = len(outs)
    if n < 2:
        raise RankDeficiencyError("a single output does not determine a hyperplane", dependent=(0,))
    m = np.hstack([outs, np.ones((n, 1))])
    rank = np.linalg.matrix_rank(m, tol=1e-10)
    if rank < n:
        dependent = _dependent_rows(m)
        raise RankDeficiencyError(f"outputs are affinely dependent (rank {rank} < {n}); rows {dependent}",
                                  dependent=dependent)
    if n == 4:
        sol = np.linalg.solve(m, ent)
        return sol[:3], float(sol[3])
    if n > 4:
        raise RankDeficiencyError("more than four outputs in R^3 are always affinely dependent")
    avg = e.probs_array @ outs
    xi = _grad_s(avg)
    span = (outs[1:] - outs[0]).T
    resid = ent[1:] - ent[0] - (outs[1:] - outs[0]) @ xi
    xi = xi + span @ np.linalg.lstsq(span.T @ span, resid, rcond=None)[0]
    xi0 = float(np.mean(ent - outs @ xi))
    return xi, xi0


def _dependent_rows(m: np.ndarray) -> list[int]:
    kept: list[int] = []
    dependent = []
    for i in range(len(m)):
        if np.linalg.matrix_rank(m[kept + [i]], tol=1e-10) > len(kept):
            kept.append(i)
        else:
            dependent.append(i)
    return dependent


def verify_hyperplane(ch: QubitChannel, xi, xi0: float, grid_k: int = 200) -> float:
    """``max(xi . ch(r) + xi0 - S(ch(r)))`` over a ``grid_k`` mesh of pure inputs."""
    outs = ch(mesh_points(grid_k))
    return float(np.max(outs @ np.asarray(xi, dtype=float) + xi0 - entropy_of_length(np.linalg.norm(outs, axis=1))))


# ---------------------------------------------------------------------------
# driver

def _start(ch: QubitChannel, pts: np.ndarray, k: float, config: CapacityConfig, plane: Optional[str]):
    try:
        sol = maximize_over_probs(ch, pts, tol=config.mesh_tol)
    except ConvergenceError as exc:
        sol = exc.best
    ens = extract_support(sol.probs, pts, config.prune, cap=config.support_cap, cluster_radius=3 * math.pi / k)
    resolved = maximize_over_probs(ch, ens.points_array, tol=config.mesh_tol)
    nz = resolved.probs > 0
    ens = Ensemble.from_arrays(resolved.probs[nz], ens.points_array[nz])
    try:
        return refine(ch, ens, plane=plane, grad_tol=config.grad_tol, verify_k=config.verify_k), sol.chi
    except ConvergenceError as exc:
        log.info("start k=%s did not converge: %s", k, exc)
        return None, sol.chi


def _check_cp(ch: QubitChannel, config: CapacityConfig) -> Optional[str]:
    if not ch.image_in_ball():
        raise InvalidStateError(f"channel {ch.as_dict()} maps part of the Bloch ball outside it")
    if not config.allow_noncp:
        require_cp(ch)
        return None
    margin = cp_margin(ch)
    if margin < -1e-10:
        log.warning("channel is not completely positive (min Choi eigenvalue %.3e)", margin)
        return f"channel is not completely positive (min Choi eigenvalue {margin:.3e})"
    return None


def _select(results: list[CapacityResult]) -> CapacityResult:
    best = max(r.capacity for r in results)
    tied = [r for r in results if r.capacity >= best - 1e-11]
    return min(tied, key=lambda r: (r.max_violation if math.isfinite(r.max_violation) else math.inf,
                                    len(r.ensemble)))


def capacity(ch: QubitChannel, config: Optional[CapacityConfig] = None) -> CapacityResult:
    """Holevo capacity with multi-start mesh seeding and a certificate.

    Every mesh resolution in ``config.mesh_ks`` is tried under
    ``config.rotations`` seeded rotations (the first is the identity).
    """
    config = config or CapacityConfig()
    noncp_note = _check_cp(ch, config)
    rotations = random_rotations(config.rotations, config.seed)
    jobs = [(k, rot) for k in config.mesh_ks for rot in rotations]
    outcomes = pmap(lambda job: _start(ch, mesh_points(job[0]) @ job[1].T, job[0], config, None), jobs)
    results = [res for res, _ in outcomes if res is not None]
    if not results:
        raise ConvergenceError("no start converged", best=max((c for _, c in outcomes), default=None))
    best = _select(results)
    best.iterations = sum(r.iterations for r in results)
    best.seed = config.seed
    if noncp_note:
        best.notes.append(noncp_note)
    if best.non_unique:
        best.notes.append("channel is not injective; the optimal ensemble may not be unique")
    if best.dual_gap > config.tol:
        best.notes.append(f"dual gap {best.dual_gap:.3e} exceeds tolerance {config.tol:.1e}")
    return best


def planar_capacity(ch: QubitChannel, plane: str = "xz", n_points: int = 720,
                    config: Optional[CapacityConfig] = None) -> CapacityResult:
    """Optimum over ensembles whose inputs lie on one coordinate great circle.

    Such ensembles need at most three members. The reported dual gap is with
    respect to the unrestricted problem, so it is positive when the planar
    optimum is not the true capacity.
    """
    config = config or CapacityConfig()
    noncp_note = _check_cp(ch, config)
    pts = circle_points(n_points, plane)
    cfg = CapacityConfig(**{**config.__dict__, "support_cap": 3})
    res, _ = _start(ch, pts, n_points / 2, cfg, plane)
    if res is None:
        raise ConvergenceError("planar refinement did not converge")
    res.seed = config.seed
    if noncp_note:
        res.notes.append(noncp_note)
    return res
