"""Relative entropy of channel outputs to a reference output.

For a reference input ``rho_avg`` the landscape ``g(w) = H[ch(w), ch(rho_avg)]``
over pure inputs ``w`` bounds the capacity from above, and at the optimal
average its maxima sit exactly at the optimal inputs with height equal to the
capacity. This module scans, maximizes and classifies that landscape.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .qubit import (
    BlochVector,
    InvalidStateError,
    QubitChannel,
    as_bloch_array,
    entropy_rate,
    log_coefficients,
    neg_entropy_derivatives,
    relent_bloch,
)
from .sphere import angular_distance, angular_grid, pmap, retract, tangent_basis

DEDUP_RADIUS = 1e-4
KIND_TOL = 1e-7


class SupportMismatchError(InvalidStateError):
    """The reference output is not full rank."""


@dataclass(frozen=True)
class CriticalPoint:
    location: BlochVector
    value: float
    kind: str  # "maximum", "saddle", "minimum" or "degenerate"
    grad_norm: float = 0.0
    hessian_eigs: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {
            "location": list(self.location),
            "value": self.value,
            "kind": self.kind,
            "grad_norm": self.grad_norm,
            "hessian_eigs": list(self.hessian_eigs),
        }


@dataclass
class LandscapeGrid:
    """Values of ``g`` on a (phi, theta) grid; see :func:`qubit.angles_to_bloch`."""

    phi: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    points: np.ndarray = field(repr=False)

    @property
    def theta_steps(self) -> int:
        return len(self.theta)

    @property
    def phi_steps(self) -> int:
        return len(self.phi)

    def rows(self):
        for i, ph in enumerate(self.phi):
            for j, th in enumerate(self.theta):
                x, y, z = self.points[i, j]
                yield ph, th, x, y, z, self.values[i, j]

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "theta", "x", "y", "z", "H"])
            for row in self.rows():
                w.writerow([f"{v:.12g}" for v in row])


class RelentLandscape:
    """``g(w) = H[ch(w), ch(rho_avg)]`` with analytic derivatives on the sphere."""

    def __init__(self, ch: QubitChannel, rho_avg):
        self.ch = ch
        self.rho_avg = as_bloch_array(rho_avg)
        self.reference = ch(self.rho_avg)
        if np.linalg.norm(self.reference) >= 1.0 - 1e-12:
            raise SupportMismatchError("reference output is pure; relative entropy is unbounded")
        self.c0, self.c = log_coefficients(self.reference)

    def value(self, r):
        return relent_bloch(self.ch(r), self.reference)

    def ambient_gradient(self, r) -> np.ndarray:
        """Euclidean gradient of ``g`` in input coordinates; vectorized."""
        a = self.ch(as_bloch_array(r))
        s = np.linalg.norm(a, axis=-1, keepdims=True)
        u = np.divide(a, s, out=np.zeros_like(a), where=s > 0)
        return self.ch.lam * (entropy_rate(s) * u - self.c)

    def tangent_gradient_norm(self, r) -> np.ndarray:
        r = as_bloch_array(r)
        g = self.ambient_gradient(r)
        t = g - np.sum(g * r, axis=-1, keepdims=True) * r
        return np.linalg.norm(t, axis=-1)

    def riemannian(self, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Tangent basis, tangent gradient and Riemannian Hessian at ``r``."""
        r = np.asarray(r, dtype=float)
        lam = self.ch.lam
        gn, hn = neg_entropy_derivatives(self.ch(r))
        grad = lam * (gn - self.c)
        hess = lam[:, None] * hn * lam[None, :]
        basis = tangent_basis(r)
        g_t = basis @ grad
        h_t = basis @ hess @ basis.T - (r @ grad) * np.eye(2)
        return basis, g_t, h_t


def _newton_on_sphere(land: RelentLandscape, r0, *, maximize: bool, tol: float = 1e-13,
                      max_iter: int = 100, max_step: float = 0.2):
    """Newton iteration for a critical point of ``g`` on the sphere.

    With ``maximize`` the step uses absolute Hessian eigenvalues and a
    backtracking line search, so it only climbs; otherwise it is a plain
    Newton root-finder for the gradient and converges to the nearest critical
    point of any kind.
    """
    r = np.asarray(r0, dtype=float)
    r = r / np.linalg.norm(r)
    val = float(land.value(r))
    for _ in range(max_iter):
        basis, g, h = land.riemannian(r)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            break
        w, v = np.linalg.eigh(h)
        if maximize:
            scale = np.maximum(np.abs(w), 1e-6 * max(1.0, np.abs(w).max()))
            step = v @ ((v.T @ g) / scale)
        else:
            step = -np.linalg.lstsq(h, g, rcond=1e-14)[0]
        n = np.linalg.norm(step)
        if n > max_step:
            step *= max_step / n
        if maximize:
            for _ in range(40):
                cand = retract(r, basis, step)
                cval = float(land.value(cand))
                if cval >= val - 1e-15:
                    break
                step = step / 2
            else:
                break
        else:
            cand = retract(r, basis, step)
            cval = float(land.value(cand))
        if np.allclose(cand, r, rtol=0, atol=1e-16):
            break
        r, val = cand, cval
    _, g, _ = land.riemannian(r)
    return r, val, float(np.linalg.norm(g))


def _classify(eigs) -> str:
    eigs = np.asarray(eigs)
    if np.any(np.abs(eigs) <= KIND_TOL):
        return "degenerate"
    if np.all(eigs < 0):
        return "maximum"
    if np.all(eigs > 0):
        return "minimum"
    return "saddle"


def _critical_point(land: RelentLandscape, r, val, gnorm) -> CriticalPoint:
    _, _, h = land.riemannian(r)
    eigs = np.linalg.eigvalsh(h)
    return CriticalPoint(BlochVector.from_array(r), float(val), _classify(eigs), float(gnorm),
                         tuple(float(e) for e in eigs))


def _dedupe(points: list[CriticalPoint], radius: float = DEDUP_RADIUS) -> list[CriticalPoint]:
    out: list[CriticalPoint] = []
    for p in sorted(points, key=lambda c: (-c.value, c.grad_norm)):
        loc = p.location.as_array()
        if any(angular_distance(loc, q.location.as_array()) < radius for q in out):
            continue
        out.append(p)
    return out


def _padded(values: np.ndarray) -> np.ndarray:
    """Pad an angular grid by one cell, wrapping azimuth and across the poles."""
    n_theta = values.shape[1]
    half = n_theta // 2
    top = np.roll(values[:1], half, axis=1)
    bottom = np.roll(values[-1:], half, axis=1)
    v = np.vstack([top, values, bottom])
    return np.hstack([v[:, -1:], v, v[:, :1]])


def _local_extrema(values: np.ndarray, *, mode: str) -> np.ndarray:
    """Indices ``(i, j)`` of discrete local maxima (``mode='max'``) or minima."""
    pad = _padded(values)
    core = pad[1:-1, 1:-1]
    mask = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = pad[1 + di: pad.shape[0] - 1 + di, 1 + dj: pad.shape[1] - 1 + dj]
            mask &= core >= nb if mode == "max" else core <= nb
    return np.argwhere(mask)


def equidistance(ch: QubitChannel, ensemble) -> list[float]:
    """``H[ch(rho_i), ch(rho_avg)]`` for every member of the ensemble."""
    pts = ensemble.points_array
    avg = ch(ensemble.probs_array @ pts)
    return [float(v) for v in np.atleast_1d(relent_bloch(ch(pts), avg))]


def log_output_coefficients(ch: QubitChannel, rho_avg) -> tuple[float, np.ndarray]:
    """``(c0, c)`` with ``log2 ch(rho_avg) = c0 I + c . sigma``."""
    return log_coefficients(ch(as_bloch_array(rho_avg)))


def landscape(ch: QubitChannel, rho_avg, n_phi: int = 200, n_theta: int = 400) -> LandscapeGrid:
    land = RelentLandscape(ch, rho_avg)
    phi, theta, pts = angular_grid(n_phi, n_theta)
    return LandscapeGrid(phi, theta, land.value(pts), pts)


def sup_relent(ch: QubitChannel, rho_avg, grid_k: int = 200, refine_tol: float = 1e-13,
               window: float = 1e-4) -> tuple[float, list[CriticalPoint]]:
    """Supremum of ``g`` over pure inputs and all relative maxima near it.

    A ``grid_k x 2 grid_k`` angular scan seeds Newton ascents from every
    discrete local maximum. Maxima within ``window`` of the supremum are
    returned, highest first.
    """
    land = RelentLandscape(ch, rho_avg)
    _, _, pts = angular_grid(grid_k, 2 * grid_k, endpoints=False)
    vals = land.value(pts)
    if vals.max() - vals.min() <= 1e-13:
        r = pts.reshape(-1, 3)[int(np.argmax(vals))]
        cp = _critical_point(land, r, float(vals.max()), 0.0)
        return float(vals.max()), [cp]
    seeds = _local_extrema(vals, mode="max")
    order = np.argsort([-vals[i, j] for i, j in seeds])[:64]
    seeds = [pts[tuple(seeds[o])] for o in order]

    def climb(r):
        r, val, gnorm = _newton_on_sphere(land, r, maximize=True, tol=refine_tol)
        return _critical_point(land, r, val, gnorm)

    found = _dedupe(pmap(climb, seeds))
    best = max(c.value for c in found)
    return best, [c for c in found if c.value >= best - window]


def critical_census(ch: QubitChannel, rho_avg, n_phi: int = 400, n_theta: int = 800,
                    grad_tol: float = 1e-8) -> list[CriticalPoint]:
    """All critical points of ``g`` found by dense seeding and Newton's method.

    Seeds are discrete local minima of the tangent-gradient norm on the grid.
    Points whose Hessian has an eigenvalue within ``1e-7`` of zero are kept
    with kind ``"degenerate"``. A landscape that is flat on the whole grid is
    reported as a single degenerate point.
    """
    land = RelentLandscape(ch, rho_avg)
    _, _, pts = angular_grid(n_phi, n_theta, endpoints=False)
    vals = land.value(pts)
    if vals.max() - vals.min() <= 1e-12:
        r = pts[0, 0]
        _, _, h = land.riemannian(r)
        eigs = np.linalg.eigvalsh(h)
        return [CriticalPoint(BlochVector.from_array(r), float(vals[0, 0]), "degenerate",
                              float(land.tangent_gradient_norm(r)), tuple(float(e) for e in eigs))]
    gn = land.tangent_gradient_norm(pts)
    seeds = [pts[i, j] for i, j in _local_extrema(gn, mode="min")]

    def solve(r):
        r, val, gnorm = _newton_on_sphere(land, r, maximize=False, tol=1e-14, max_iter=60, max_step=0.05)
        return r, val, gnorm

    found = []
    for r, val, gnorm in pmap(solve, seeds):
        if gnorm <= grad_tol:
            found.append(_critical_point(land, r, val, gnorm))
    return _dedupe(found)
