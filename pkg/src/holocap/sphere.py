"""Sphere meshes, angular grids and tangent charts for pure qubit inputs."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np
from scipy.spatial.transform import Rotation

from .qubit import angles_to_bloch

T = TypeVar("T")
R = TypeVar("R")


def mesh_points(k: int) -> np.ndarray:
    """Latitude/longitude mesh of the unit sphere with duplicate poles merged.

    Polar angles ``j pi / k`` (``j = 0..k``) and azimuths ``2 l pi / k``
    (``l = 0..k-1``); the result has ``k**2 - k + 2`` rows, north pole first.
    """
    if int(k) != k or k < 2:
        raise ValueError(f"mesh resolution k must be an integer >= 2, got {k!r}")
    k = int(k)
    polar = np.arange(1, k) * math.pi / k
    azim = np.arange(k) * 2 * math.pi / k
    tt, mm = np.meshgrid(polar, azim, indexing="ij")
    ring = np.stack([np.sin(tt) * np.cos(mm), np.sin(tt) * np.sin(mm), np.cos(tt)], axis=-1)
    return np.vstack([[0.0, 0.0, 1.0], ring.reshape(-1, 3), [0.0, 0.0, -1.0]])


def circle_points(n: int, plane: str = "xz") -> np.ndarray:
    """``n`` equally spaced unit vectors on a coordinate great circle."""
    ang = np.arange(n) * 2 * math.pi / n
    out = np.zeros((n, 3))
    i, j = _plane_axes(plane)
    out[:, i] = np.cos(ang)
    out[:, j] = np.sin(ang)
    return out


def _plane_axes(plane: str) -> tuple[int, int]:
    axes = {"xy": (0, 1), "xz": (2, 0), "yz": (2, 1)}
    try:
        return axes[plane]
    except KeyError:
        raise ValueError(f"unknown plane {plane!r}; expected one of {sorted(axes)}") from None


def plane_normal(plane: str) -> np.ndarray:
    i, j = _plane_axes(plane)
    n = np.zeros(3)
    n[3 - i - j] = 1.0
    return n


def angular_grid(n_phi: int, n_theta: int, *, endpoints: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid in (half-polar ``phi``, azimuth ``theta``) and the matching points.

    ``phi`` spans [0, pi/2] (closed when ``endpoints`` else cell centres) and
    ``theta`` spans [-pi, pi). Returns ``phi``, ``theta`` and an array of shape
    ``(n_phi, n_theta, 3)``.
    """
    if endpoints:
        phi = np.linspace(0.0, math.pi / 2, n_phi)
    else:
        phi = (np.arange(n_phi) + 0.5) * (math.pi / 2) / n_phi
    theta = -math.pi + np.arange(n_theta) * 2 * math.pi / n_theta
    pts = angles_to_bloch(phi[:, None], theta[None, :])
    return phi, theta, pts


def tangent_basis(r) -> np.ndarray:
    """Orthonormal ``(2, 3)`` basis of the tangent plane at unit vector ``r``."""
    r = np.asarray(r, dtype=float)
    a = np.array([1.0, 0.0, 0.0]) if abs(r[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ r) * r
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(r, e1)
    return np.stack([e1, e2])


def exp_map(r, basis, u) -> np.ndarray:
    """Move from ``r`` along the geodesic with tangent coordinates ``u``."""
    u = np.asarray(u, dtype=float)
    v = u @ basis
    n = float(np.linalg.norm(v))
    if n < 1e-300:
        return np.array(r, dtype=float)
    out = math.cos(n) * np.asarray(r) + math.sin(n) * v / n
    return out / np.linalg.norm(out)


def retract(r, basis, u) -> np.ndarray:
    """Chart ``u -> normalize(r + u . basis)`` around the unit vector ``r``."""
    v = np.asarray(r, dtype=float) + np.asarray(u, dtype=float) @ basis
    return v / np.linalg.norm(v)


def retract_jacobian(r, basis, u) -> np.ndarray:
    """``d retract / du`` as a ``(dim u, 3)`` array."""
    v = np.asarray(r, dtype=float) + np.asarray(u, dtype=float) @ basis
    n = np.linalg.norm(v)
    w = v / n
    return (basis - np.outer(basis @ w, w)) / n


def angular_distance(a, b) -> np.ndarray | float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a / np.linalg.norm(a, axis=-1, keepdims=True)
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    # atan2 form stays accurate for nearly equal vectors
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    out = np.arctan2(cross, dot)
    return float(out) if np.ndim(out) == 0 else out


def random_rotations(n: int, seed: int) -> list[np.ndarray]:
    """Identity followed by ``n - 1`` seeded uniform SO(3) rotation matrices."""
    mats = [np.eye(3)]
    if n > 1:
        mats.extend(Rotation.random(n - 1, random_state=seed).as_matrix())
    return mats


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HOLOCAP_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map, threaded up to ``HOLOCAP_THREADS`` workers."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
