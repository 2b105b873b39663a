"""Qubit states, affine Bloch channels, entropies and complete positivity.

Conventions used throughout the package:

* Logarithms are base 2, so every entropy is in bits.
* A qubit state is written ``rho(x, y, z) = (I + x sx + y sy + z sz) / 2``.
* A channel acts on Bloch vectors as ``(l1 x + t1, l2 y + t2, l3 z + t3)``.

Most routines accept either a :class:`BlochVector` or any array-like whose
last axis has length 3, and broadcast over leading axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EPS = 1e-12
LN2 = math.log(2.0)
#: Returned by relative entropies when the support condition fails.
INFINITE = math.inf

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
IDENTITY = np.eye(2, dtype=complex)


class InvalidStateError(ValueError):
    """Raised for vectors outside the Bloch ball or invalid density matrices."""


class NotCompletelyPositiveError(ValueError):
    """Raised when an operation requires a CP channel and gets something else."""


@dataclass(frozen=True)
class BlochVector:
    """A point of the closed unit ball, i.e. a qubit density matrix."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.x * self.x + self.y * self.y + self.z * self.z
        if not np.isfinite(n2) or n2 > (1.0 + EPS) ** 2:
            raise InvalidStateError(f"Bloch vector ({self.x}, {self.y}, {self.z}) has norm > 1")

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        x, y, z = (float(v) for v in np.asarray(arr, dtype=float).reshape(3))
        return cls(x, y, z)

    @classmethod
    def from_angles(cls, phi: float, theta: float) -> "BlochVector":
        return cls.from_array(angles_to_bloch(phi, theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def is_pure(self) -> bool:
        return abs(self.norm ** 2 - 1.0) <= EPS * 10

    def reflect_y(self) -> "BlochVector":
        return BlochVector(self.x, -self.y, self.z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


def as_bloch_array(r) -> np.ndarray:
    """Return ``r`` as a float array with trailing axis 3."""
    if isinstance(r, BlochVector):
        return r.as_array()
    arr = np.asarray(r, dtype=float)
    if arr.shape[-1:] != (3,):
        raise InvalidStateError(f"expected trailing dimension 3, got shape {arr.shape}")
    return arr


def angles_to_bloch(phi, theta) -> np.ndarray:
    """Pure state from half-polar angle ``phi`` and azimuth ``theta``.

    This is the chart ``|u> = (cos phi, e^{i theta} sin phi)`` whose Bloch vector
    is ``(sin 2phi cos theta, sin 2phi sin theta, cos 2phi)``.
    """
    phi, theta = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(theta, dtype=float))
    s = np.sin(2 * phi)
    return np.stack([s * np.cos(theta), s * np.sin(theta), np.cos(2 * phi)], axis=-1)


def bloch_to_angles(r) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`angles_to_bloch` for unit vectors; ``phi`` in [0, pi/2]."""
    r = as_bloch_array(r)
    n = np.linalg.norm(r, axis=-1)
    phi = 0.5 * np.arccos(np.clip(r[..., 2] / n, -1.0, 1.0))
    theta = np.arctan2(r[..., 1], r[..., 0])
    return phi, theta


def bloch_to_density(r) -> np.ndarray:
    """Density matrix ``(I + r . sigma) / 2``; broadcasts over leading axes."""
    r = as_bloch_array(r)
    if np.any(np.linalg.norm(r, axis=-1) > 1.0 + EPS):
        raise InvalidStateError("Bloch vector outside the unit ball")
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    out = np.empty(r.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = 1 + z
    out[..., 0, 1] = x - 1j * y
    out[..., 1, 0] = x + 1j * y
    out[..., 1, 1] = 1 - z
    return out / 2


def density_to_bloch(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    x = 2 * m[..., 1, 0].real
    y = 2 * m[..., 1, 0].imag
    z = (m[..., 0, 0] - m[..., 1, 1]).real
    return np.stack([x, y, z], axis=-1)


@dataclass(frozen=True)
class QubitChannel:
    """Affine Bloch-ball map ``r -> diag(lambda) r + t``."""

    lambda1: float
    lambda2: float
    lambda3: float
    t1: float = 0.0
    t2: float = 0.0
    t3: float = 0.0

    @classmethod
    def from_params(cls, lam: Sequence[float], t: Sequence[float] = (0.0, 0.0, 0.0)) -> "QubitChannel":
        l1, l2, l3 = (float(v) for v in lam)
        t1, t2, t3 = (float(v) for v in t)
        return cls(l1, l2, l3, t1, t2, t3)

    @property
    def lam(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    @property
    def shift(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3])

    @property
    def is_injective(self) -> bool:
        return all(v != 0.0 for v in (self.lambda1, self.lambda2, self.lambda3))

    def image_in_ball(self, tol: float = EPS) -> bool:
        return bool(np.all(np.abs(self.lam) + np.abs(self.shift) <= 1.0 + tol))

    def __call__(self, r) -> np.ndarray:
        return self.lam * as_bloch_array(r) + self.shift

    def as_dict(self) -> dict:
        return {"lambda": self.lam.tolist(), "t": self.shift.tolist()}


def apply_channel(ch: QubitChannel, r) -> BlochVector | np.ndarray:
    """Image of ``r`` under ``ch``; returns a BlochVector for BlochVector input."""
    arr = as_bloch_array(r)
    if np.any(np.linalg.norm(arr, axis=-1) > 1.0 + EPS):
        raise InvalidStateError("input outside the unit ball")
    out = ch(arr)
    if isinstance(r, BlochVector):
        return BlochVector.from_array(out)
    return out


def apply_channel_operator(ch: QubitChannel, m) -> np.ndarray:
    """Linear extension of the channel to arbitrary (complex) 2x2 operators."""
    m = np.asarray(m, dtype=complex)
    m0 = np.trace(m, axis1=-2, axis2=-1)
    out = m0[..., None, None] * IDENTITY
    for k, s in enumerate(PAULIS):
        mk = np.einsum("...ij,ji->...", m, s)
        out = out + (ch.lam[k] * mk + ch.shift[k] * m0)[..., None, None] * s
    return out / 2


# ---------------------------------------------------------------------------
# entropies

def binary_entropy(p) -> np.ndarray:
    """Binary entropy in bits with ``0 log 0 = 0``."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        b = np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return a + b


def entropy_of_length(s) -> np.ndarray:
    """Entropy of a qubit state whose Bloch vector has length ``s``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    p, q = (1.0 + s) / 2.0, (1.0 - s) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return -p * np.log2(p) - np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0)


def entropy(r):
    """Von Neumann entropy (bits) of the qubit state with Bloch vector ``r``."""
    arr = as_bloch_array(r)
    val = entropy_of_length(np.linalg.norm(arr, axis=-1))
    return float(val) if val.ndim == 0 else val


def entropy_rate(s) -> np.ndarray:
    """``-dS/ds`` for a Bloch length ``s``, i.e. ``atanh(s) / ln 2``.

    Lengths are clipped just below 1 so that pure outputs give a large finite
    slope instead of infinity.
    """
    return np.arctanh(np.clip(np.asarray(s, dtype=float), 0.0, 1.0 - 1e-15)) / LN2


def entropy_curvature(s) -> np.ndarray:
    """``-d^2 S/ds^2`` for a Bloch length ``s``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0 - 1e-15)
    return 1.0 / ((1.0 - s * s) * LN2)


def neg_entropy_derivatives(a) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of ``-S`` with respect to a single Bloch vector ``a``."""
    a = as_bloch_array(a)
    s = float(np.linalg.norm(a))
    if s < 1e-300:
        return np.zeros(3), np.eye(3) / LN2
    u = a / s
    k = float(entropy_rate(s))
    proj = np.outer(u, u)
    return k * u, float(entropy_curvature(s)) * proj + (k / s) * (np.eye(3) - proj)


def check_density(m, *, herm_tol: float = 1e-12, trace_tol: float = 1e-10, eig_tol: float = 1e-10) -> np.ndarray:
    """Validate a density matrix and return its (clamped) eigenvalues."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise InvalidStateError("matrix is not Hermitian")
    if abs(np.trace(m).real - 1.0) > trace_tol:
        raise InvalidStateError(f"trace {np.trace(m).real} != 1")
    w = _hermitian_eigvals(m)
    if w.min() < -eig_tol:
        raise InvalidStateError(f"negative eigenvalue {w.min()}")
    return np.clip(w, 0.0, None)


def _hermitian_eigvals(m: np.ndarray) -> np.ndarray:
    if m.shape == (2, 2):
        a, d = m[0, 0].real, m[1, 1].real
        b = abs(m[0, 1])
        mean, half = (a + d) / 2, math.hypot((a - d) / 2, b)
        return np.array([mean - half, mean + half])
    return np.linalg.eigvalsh(m)


def _entropy_of_eigs(w) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def entropy_matrix(m) -> float:
    """Von Neumann entropy (bits) of a density matrix of any size."""
    return _entropy_of_eigs(check_density(m))


def relative_entropy(w, s, *, support_tol: float = 1e-12) -> float:
    """``Tr w (log w - log s)`` in bits, or :data:`INFINITE` on support mismatch."""
    w = np.asarray(w, dtype=complex)
    s = np.asarray(s, dtype=complex)
    check_density(w)
    check_density(s)
    ev, vec = np.linalg.eigh(s)
    # weight of w on each eigenvector of s
    weights = np.einsum("ji,jk,ki->i", vec.conj(), w, vec).real
    kernel = ev <= support_tol
    if np.any(weights[kernel] > support_tol):
        return INFINITE
    logs = np.where(kernel, 0.0, np.log2(np.where(kernel, 1.0, ev)))
    cross = float(np.sum(weights * logs))
    return max(-entropy_matrix(w) - cross, 0.0)


def log_coefficients(b) -> tuple[float, np.ndarray]:
    """Coefficients of ``log2 rho(b) = c0 I + c . sigma`` for a full-rank state."""
    b = as_bloch_array(b)
    s = float(np.linalg.norm(b))
    if s >= 1.0:
        raise InvalidStateError("state is not full rank")
    c0 = 0.5 * math.log2((1.0 - s * s) / 4.0)
    if s == 0.0:
        return c0, np.zeros(3)
    return c0, (math.atanh(s) / LN2) * b / s


def relent_bloch(a, b) -> np.ndarray | float:
    """Qubit relative entropy ``H(rho(a), rho(b))`` in bits, vectorized over ``a``.

    ``b`` must be a single vector. If ``rho(b)`` is pure the result is 0 where
    ``a == b`` and :data:`INFINITE` elsewhere.
    """
    a = as_bloch_array(a)
    b = as_bloch_array(b)
    sb = float(np.linalg.norm(b))
    if sb >= 1.0 - 1e-15:
        same = np.linalg.norm(a - b, axis=-1) <= 1e-12
        out = np.where(same, 0.0, INFINITE)
        return float(out) if out.ndim == 0 else out
    c0, c = log_coefficients(b)
    sa = np.linalg.norm(a, axis=-1)
    out = np.maximum(-entropy_of_length(sa) - c0 - a @ c, 0.0)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# complete positivity

def choi_matrix(ch: QubitChannel) -> np.ndarray:
    """Trace-one Choi matrix ``sum_ij |i><j| (x) ch(|i><j|) / 2``."""
    out = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1.0
            out += np.kron(e, apply_channel_operator(ch, e))
    return out / 2


def cp_margin(ch: QubitChannel) -> float:
    """Smallest eigenvalue of the trace-one Choi matrix."""
    return float(np.linalg.eigvalsh(choi_matrix(ch)).min())


def is_cp(ch: QubitChannel, tol: float = 1e-10) -> bool:
    return cp_margin(ch) >= -tol


def cp_quartic(t1) -> np.ndarray | float:
    """Reference CP polynomial for ``rho(0.6x + t1, 0.601y, 0.5z + 0.495)``.

    Nonnegative exactly when the channel is CP (up to the rounding of its
    10-digit coefficients). Kept as an independent regression oracle.
    """
    t1 = np.asarray(t1, dtype=float)
    out = 0.2805326349 - 101.0098436 * t1 ** 2 + 100.2531329 * t1 ** 4
    return float(out) if out.ndim == 0 else out


def require_cp(ch: QubitChannel, tol: float = 1e-10) -> None:
    margin = cp_margin(ch)
    if margin < -tol:
        raise NotCompletelyPositiveError(
            f"channel {ch.as_dict()} is not completely positive (min Choi eigenvalue {margin:.3e})"
        )


# ---------------------------------------------------------------------------
# two-qubit helpers

def partial_trace(m, keep: int) -> np.ndarray:
    """Partial trace of a 4x4 matrix; ``keep`` is 0 (first factor) or 1."""
    t = np.asarray(m).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ijkj->ik", t)
    return np.einsum("ijik->jk", t)


def random_bloch(rng: np.random.Generator, n: int | None = None, *, pure: bool = False) -> np.ndarray:
    """Uniform samples from the unit sphere (``pure``) or ball."""
    shape = (3,) if n is None else (n, 3)
    v = rng.normal(size=shape)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    if pure:
        return v
    radius = rng.random(() if n is None else (n, 1)) ** (1.0 / 3.0)
    return v * radius


def unit_vectors(points: Iterable) -> np.ndarray:
    arr = np.array([as_bloch_array(p) for p in points], dtype=float)
    return arr / np.linalg.norm(arr, axis=-1, keepdims=True)
