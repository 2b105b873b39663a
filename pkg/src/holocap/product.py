"""Tensor square of a qubit channel on two-qubit pure states.

Pure inputs are written in Schmidt form

    |Psi> = sqrt(p) |u>|v> + e^{i nu} sqrt(1-p) |u_perp>|v_perp>,
    |u>   = (cos theta_u, e^{i phi_u} sin theta_u),

so ``theta`` is the half-polar angle and ``phi`` the azimuth of ``u`` on the
Bloch sphere. The additivity test compares

    G(Psi) = H[(ch x ch)(Psi), ch(avg) x ch(avg)]

against twice the capacity, with ``avg`` the optimal average input.
"""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .qubit import (
    NotCompletelyPositiveError,
    QubitChannel,
    as_bloch_array,
    bloch_to_angles,
    choi_matrix,
    entropy_of_length,
    log_coefficients,
    partial_trace,
)
from .sphere import mesh_points

log = logging.getLogger(__name__)

KRAUS_TOL = 1e-12
SUPERADDITIVITY_FLAG = -1e-6


@dataclass(frozen=True)
class KrausSet:
    operators: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.operators)

    def completeness_error(self) -> float:
        total = sum(a.conj().T @ a for a in self.operators)
        return float(np.max(np.abs(total - np.eye(2))))

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(a @ rho @ a.conj().T for a in self.operators)

    def tensor_square(self) -> np.ndarray:
        """All ``A_i (x) A_j`` stacked as an array of shape ``(n*n, 4, 4)``."""
        return np.array([np.kron(a, b) for a in self.operators for b in self.operators])


def kraus_from_choi(ch: QubitChannel, tol: float = KRAUS_TOL) -> KrausSet:
    """Kraus operators from the eigendecomposition of the Choi matrix."""
    choi = 2 * choi_matrix(ch)
    w, v = np.linalg.eigh(choi)
    if w.min() < -1e-10:
        raise NotCompletelyPositiveError(f"channel {ch.as_dict()} is not completely positive")
    ops = tuple(math.sqrt(val) * v[:, i].reshape(2, 2).T for i, val in enumerate(w) if val > tol)
    return KrausSet(ops)


@dataclass(frozen=True)
class SchmidtState:
    p: float
    theta_u: float = 0.0
    phi_u: float = 0.0
    theta_v: float = 0.0
    phi_v: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if not -1e-15 <= self.p <= 1 + 1e-15:
            raise ValueError(f"Schmidt weight p={self.p} outside [0, 1]")

    @classmethod
    def from_bloch(cls, p: float, u, v, nu: float = 0.0) -> "SchmidtState":
        tu, pu = bloch_to_angles(u)
        tv, pv = bloch_to_angles(v)
        return cls(float(p), float(tu), float(pu), float(tv), float(pv), float(nu))

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.theta_u, self.phi_u, self.theta_v, self.phi_v, self.nu])

    def as_dict(self) -> dict:
        return dict(zip(("p", "theta_u", "phi_u", "theta_v", "phi_v", "nu"), map(float, self.as_array())))


def _qubit_pair(theta, phi) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s, e = np.cos(theta), np.sin(theta), np.exp(1j * phi)
    u = np.stack([c + 0j, e * s], axis=-1)
    u_perp = np.stack([np.conj(e) * s, -c + 0j], axis=-1)
    return u, u_perp


def schmidt_vectors(params) -> np.ndarray:
    """Vectorized :func:`schmidt_vector` over rows ``(p, tu, fu, tv, fv, nu)``."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    p, tu, fu, tv, fv, nu = params.T
    u, up = _qubit_pair(tu, fu)
    v, vp = _qubit_pair(tv, fv)
    uv = np.einsum("ni,nj->nij", u, v).reshape(-1, 4)
    upvp = np.einsum("ni,nj->nij", up, vp).reshape(-1, 4)
    p = np.clip(p, 0.0, 1.0)
    return np.sqrt(p)[:, None] * uv + (np.exp(1j * nu) * np.sqrt(1 - p))[:, None] * upvp


def schmidt_vector(s: SchmidtState) -> np.ndarray:
    return schmidt_vectors(s.as_array())[0]


def _outputs(ch: QubitChannel, psis: np.ndarray) -> np.ndarray:
    """``(ch x ch)(|psi><psi|)`` for every row of ``psis``, via Kraus products."""
    kk = kraus_from_choi(ch).tensor_square()
    phi = np.einsum("kij,nj->nki", kk, psis)
    return np.einsum("nki,nkj->nij", phi, phi.conj())


def product_output(ch: QubitChannel, s: SchmidtState) -> np.ndarray:
    return _outputs(ch, schmidt_vector(s)[None, :])[0]


def cross_term(ch: QubitChannel, s: SchmidtState) -> np.ndarray:
    """Coherence part ``X`` of the output, so that
    ``out = p ch(u)(x)ch(v) + (1-p) ch(u')(x)ch(v') + sqrt(p(1-p)) X``."""
    from .qubit import apply_channel_operator

    u, up = _qubit_pair(s.theta_u, s.phi_u)
    v, vp = _qubit_pair(s.theta_v, s.phi_v)
    a = np.kron(apply_channel_operator(ch, np.outer(u, up.conj())), apply_channel_operator(ch, np.outer(v, vp.conj())))
    return np.exp(-1j * s.nu) * a + np.exp(1j * s.nu) * a.conj().T


def _marginal_blochs(out: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = out.reshape(-1, 2, 2, 2, 2)
    r1 = np.einsum("nijkj->nik", t)
    r2 = np.einsum("nijik->njk", t)

    def bloch(m):
        return np.stack([2 * m[:, 1, 0].real, 2 * m[:, 1, 0].imag, (m[:, 0, 0] - m[:, 1, 1]).real], axis=-1)

    return bloch(r1), bloch(r2)


def _entropies(out: np.ndarray) -> np.ndarray:
    w = np.clip(np.linalg.eigvalsh(out), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return -terms.sum(axis=-1)


class ProductRelent:
    """``G`` and its pieces for a fixed channel and reference input."""

    def __init__(self, ch: QubitChannel, rho_avg):
        self.ch = ch
        self.kk = kraus_from_choi(ch).tensor_square()
        ref = ch(as_bloch_array(rho_avg))
        self.c0, self.c = log_coefficients(ref)

    def outputs(self, psis) -> np.ndarray:
        psis = np.atleast_2d(psis)
        phi = np.einsum("kij,nj->nki", self.kk, psis)
        return np.einsum("nki,nkj->nij", phi, phi.conj())

    def cross_entropy(self, out: np.ndarray) -> np.ndarray:
        """``-Tr[out log2(sigma (x) sigma)]``, which only sees the marginals."""
        b1, b2 = _marginal_blochs(out)
        return -(2 * self.c0 + (b1 + b2) @ self.c)

    def values(self, psis) -> np.ndarray:
        out = self.outputs(psis)
        return np.maximum(self.cross_entropy(out) - _entropies(out), 0.0)

    def values_from_params(self, params) -> np.ndarray:
        return self.values(schmidt_vectors(params))


def relent_vs_product_avg(ch: QubitChannel, s: SchmidtState, rho_avg) -> float:
    """``G = -S[out] - Tr[out log(ch(avg) (x) ch(avg))]`` in bits."""
    ref = ch(as_bloch_array(rho_avg))
    if np.linalg.norm(ref) >= 1.0 - 1e-12:
        return math.inf
    return float(ProductRelent(ch, rho_avg).values_from_params(s.as_array())[0])


def relent_cross_term(ch: QubitChannel, s: SchmidtState, rho_avg) -> float:
    """The second term of ``G``; affine in ``p`` at fixed angles."""
    pr = ProductRelent(ch, rho_avg)
    return float(pr.cross_entropy(pr.outputs(schmidt_vector(s)))[0])


# ---------------------------------------------------------------------------
# scans

@dataclass
class AdditivityScan:
    max_g: float
    argmax: SchmidtState
    margin: float
    samples: int
    ascents: int
    seed: int

    @property
    def supports_additivity(self) -> bool:
        return self.margin >= -1e-8

    @property
    def superadditivity_candidate(self) -> bool:
        return self.margin < SUPERADDITIVITY_FLAG

    def as_dict(self) -> dict:
        return {
            "max_g": self.max_g,
            "argmax": self.argmax.as_dict(),
            "margin": self.margin,
            "samples": self.samples,
            "ascents": self.ascents,
            "seed": self.seed,
            "supports_additivity": self.supports_additivity,
            "superadditivity_candidate": self.superadditivity_candidate,
        }


_HALF_PI = math.pi / 2
_TWO_PI = 2 * math.pi


def _scale_params(x: np.ndarray, p_values: Optional[Sequence[float]]) -> np.ndarray:
    """Map the unit cube onto (p, theta_u, phi_u, theta_v, phi_v, nu)."""
    out = np.empty_like(x)
    if p_values is None:
        out[:, 0] = x[:, 0]
    else:
        vals = np.asarray(p_values, dtype=float)
        out[:, 0] = vals[np.minimum((x[:, 0] * len(vals)).astype(int), len(vals) - 1)]
    out[:, 1] = x[:, 1] * _HALF_PI
    out[:, 2] = x[:, 2] * _TWO_PI
    out[:, 3] = x[:, 3] * _HALF_PI
    out[:, 4] = x[:, 4] * _TWO_PI
    out[:, 5] = x[:, 5] * _TWO_PI
    return out


def additivity_scan(ch: QubitChannel, rho_avg, capacity_value: float, *, samples: int = 100_000,
                    ascents: int = 200, seed: int = 0, p_values: Optional[Sequence[float]] = None,
                    batch: int = 20_000) -> AdditivityScan:
    """Largest ``G`` over Schmidt states found by a Sobol sweep plus local ascent.

    The sweep covers every pure two-qubit state: half-polar angles in
    [0, pi/2] and azimuths and ``nu`` in [0, 2 pi). ``p_values`` restricts the
    Schmidt weight to a finite set, which is then held fixed during ascent.
    ``margin = 2 C - max G``.
    """
    pr = ProductRelent(ch, rho_avg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        cube = qmc.Sobol(d=6, scramble=True, seed=seed).random(samples)
    params = _scale_params(cube, p_values)
    values = np.concatenate([pr.values_from_params(params[i:i + batch]) for i in range(0, samples, batch)])
    best_idx = np.argsort(-values, kind="stable")[:ascents]
    best_val = float(values[best_idx[0]])
    best_par = params[best_idx[0]].copy()
    fixed_p = p_values is not None

    for idx in best_idx:
        x0 = params[idx]
        if fixed_p:
            p = x0[0]

            def neg(y, p=p):
                return -float(pr.values_from_params(np.concatenate([[p], y]))[0])

            res = minimize(neg, x0[1:], method="L-BFGS-B", options={"ftol": 1e-15, "gtol": 1e-12})
            cand = np.concatenate([[p], res.x])
        else:
            def neg(y):
                return -float(pr.values_from_params(y)[0])

            bounds = [(0.0, 1.0)] + [(None, None)] * 5
            res = minimize(neg, x0, method="L-BFGS-B", bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-12})
            cand = res.x
        val = float(pr.values_from_params(cand)[0])
        if val > best_val:
            best_val, best_par = val, cand
    state = SchmidtState(*map(float, best_par))
    return AdditivityScan(best_val, state, 2 * capacity_value - best_val, samples, len(best_idx), seed)


def g_slice(ch: QubitChannel, rho_avg, angles: Sequence[float], nus: Sequence[float] = (0.0, _HALF_PI, math.pi, 3 * _HALF_PI),
            p_grid: Optional[Sequence[float]] = None) -> list[tuple[float, float, float]]:
    """Rows ``(nu, p, G)`` along ``p`` for fixed ``(theta_u, phi_u, theta_v, phi_v)``."""
    p_grid = np.linspace(0.0, 1.0, 101) if p_grid is None else np.asarray(p_grid, dtype=float)
    pr = ProductRelent(ch, rho_avg)
    rows = []
    for nu in nus:
        params = np.column_stack([p_grid, np.tile(np.asarray(angles, dtype=float), (len(p_grid), 1)), np.full(len(p_grid), nu)])
        for p, g in zip(p_grid, pr.values_from_params(params)):
            rows.append((float(nu), float(p), float(g)))
    return rows


def ket_from_bloch(r) -> np.ndarray:
    theta, phi = bloch_to_angles(r)
    return np.array([math.cos(theta), np.exp(1j * phi) * math.sin(theta)])


@dataclass
class PairScan:
    max_g: float
    indices: tuple[int, int, int, int]
    nu: float
    evaluated: int
    skipped: int


def nonschmidt_pair_scan(ch: QubitChannel, rho_avg, inputs, nus: Sequence[float]) -> PairScan:
    """Max of ``G`` over ``(|u_i u_j> + e^{i nu} |u_k u_l>) / norm`` for all index tuples."""
    kets = [ket_from_bloch(r) for r in inputs]
    pr = ProductRelent(ch, rho_avg)
    psis, labels = [], []
    skipped = 0
    for i, j, k, l in itertools.product(range(len(kets)), repeat=4):
        a = np.kron(kets[i], kets[j])
        b = np.kron(kets[k], kets[l])
        for nu in nus:
            psi = a + np.exp(1j * nu) * b
            n = np.linalg.norm(psi)
            if n < 1e-10:
                log.info("skipping zero-norm combination %s at nu=%.6g", (i, j, k, l), nu)
                skipped += 1
                continue
            psis.append(psi / n)
            labels.append(((i, j, k, l), float(nu)))
    vals = pr.values(np.array(psis))
    best = int(np.argmax(vals))
    return PairScan(float(vals[best]), labels[best][0], labels[best][1], len(psis), skipped)


# ---------------------------------------------------------------------------
# the concavity counterexample

def mu_channel(mu: float) -> QubitChannel:
    """``rho(mu x, mu y, z / 2)``, completely positive for ``0 <= mu <= 3/4``."""
    return QubitChannel(mu, mu, 0.5)


def closed_form_eigenvalues(mu: float, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    root = np.sqrt(1 + (16 * mu ** 4 - 4) * p * (1 - p))
    base = np.full(p.shape, 3 / 16)
    return np.stack([base, base, (5 + 4 * root) / 16, (5 - 4 * root) / 16], axis=-1)


@dataclass
class ConcavityCurve:
    mu: float
    p: np.ndarray
    numeric: np.ndarray
    closed_form: np.ndarray
    second_differences: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.numeric - self.closed_form)))

    def shape(self, tol: float = 1e-9) -> str:
        d = self.second_differences
        if np.all(np.abs(d) <= tol):
            return "flat"
        if np.all(d <= tol):
            return "concave"
        if np.all(d >= -tol):
            return "convex"
        return "mixed"

    def rows(self):
        for p, fn, fc in zip(self.p, self.numeric, self.closed_form):
            yield self.mu, float(p), float(fn), float(fc)


def concavity_curve(mu: float, p_grid: Optional[Sequence[float]] = None) -> ConcavityCurve:
    """Output entropy of ``sqrt(p)|00> + sqrt(1-p)|11>`` under the mu-channel squared."""
    if not 0 <= mu <= 0.75:
        raise ValueError(f"mu={mu} outside [0, 0.75]; the channel is not CP there")
    p_grid = np.round(np.linspace(0.0, 1.0, 101), 12) if p_grid is None else np.asarray(p_grid, dtype=float)
    ch = mu_channel(mu)
    params = np.column_stack([p_grid, np.zeros((len(p_grid), 5))])
    numeric = _entropies(_outputs(ch, schmidt_vectors(params)))
    w = closed_form_eigenvalues(mu, p_grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        closed = -np.sum(np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0), axis=-1)
    return ConcavityCurve(mu, p_grid, numeric, closed, np.diff(numeric, 2))


def min_output_entropy(ch: QubitChannel) -> float:
    """Minimum of ``S(ch(r))`` over pure inputs (longest output vector)."""
    pts = mesh_points(40)
    lengths = np.linalg.norm(ch(pts), axis=1)
    best = 0.0
    for r0 in pts[np.argsort(-lengths)[:8]]:
        res = minimize(lambda v: -np.linalg.norm(ch(v / np.linalg.norm(v))), r0, method="BFGS",
                       options={"gtol": 1e-13})
        r = res.x / np.linalg.norm(res.x)
        best = max(best, float(np.linalg.norm(ch(r))))
    return float(entropy_of_length(min(best, 1.0)))


def min_output_entropy_product_floor(mu: float) -> float:
    """Twice the single-channel minimal output entropy of the mu-channel."""
    return 2 * min_output_entropy(mu_channel(mu))


def partial_traces(m) -> tuple[np.ndarray, np.ndarray]:
    return partial_trace(m, 0), partial_trace(m, 1)
