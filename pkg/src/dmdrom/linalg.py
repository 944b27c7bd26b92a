"""Dense real matrix kernels: thin SVD, energy truncation, pseudoinverse,
principal angles.

All functions are pure and operate on 2-D float64 numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, PreconditionError

# singular values below this fraction of the largest are treated as zero
ZERO_CLAMP = 1e-13

ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``m = left @ diag(singular_values) @ right_t``."""

    left: np.ndarray
    singular_values: np.ndarray
    right_t: np.ndarray

    @property
    def rank(self) -> int:
        return self.singular_values.size

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right_t


def as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DomainError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    return a


def thin_svd(m) -> SvdFactors:
    a = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for {a.shape[0]}x{a.shape[1]} matrix") from exc
    return SvdFactors(u, s, vt)


def _clamped(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        return s
    out = s.copy()
    out[out < ZERO_CLAMP * s.max()] = 0.0
    return out


def truncate_by_energy(svd, threshold: float, energy: str = "sum") -> int:
    """Smallest rank whose leading singular values meet the energy threshold.

    ``energy="sum"`` measures the fraction of the plain sum of singular values,
    ``"sum_of_squares"`` the fraction of their squares.

    >>> truncate_by_energy(np.array([9.0, 1.0]), 0.9)
    1
    """
    s = svd.singular_values if isinstance(svd, SvdFactors) else np.asarray(svd, dtype=np.float64)
    if not 0.0 < threshold <= 1.0:
        raise DomainError(f"energy threshold must lie in (0, 1], got {threshold}")
    if energy not in ("sum", "sum_of_squares"):
        raise DomainError(f"unknown energy measure {energy!r}")
    s = _clamped(s)
    if s.size == 0 or not np.any(s > 0):
        raise DomainError("all singular values are zero")
    if energy == "sum_of_squares":
        s = s * s
    cum = np.cumsum(s)
    frac = cum / cum[-1]
    rank = int(np.searchsorted(frac, threshold, side="left")) + 1
    return min(max(rank, 1), int(np.count_nonzero(s)))


def pseudoinverse(m, rank_tolerance: float = ZERO_CLAMP) -> np.ndarray:
    """Moore-Penrose pseudoinverse via the thin SVD.

    Singular values below ``rank_tolerance * sigma_max`` are dropped. The
    zero matrix maps to the zero matrix of transposed shape.
    """
    f = thin_svd(m)
    s = f.singular_values
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((f.right_t.shape[1], f.left.shape[0]))
    keep = s >= rank_tolerance * s[0]
    return (f.right_t[keep].T / s[keep]) @ f.left[:, keep].T


def check_orthonormal(u, name="basis", tol=ORTHONORMAL_TOL) -> np.ndarray:
    u = as_matrix(u, name)
    gram = u.T @ u
    err = np.max(np.abs(gram - np.eye(u.shape[1])))
    if err > tol:
        raise PreconditionError(f"{name} columns are not orthonormal (deviation {err:.2e})")
    return u


def principal_angles(u, v) -> np.ndarray:
    """Principal angles in radians, non-decreasing, between ``span(u)`` and ``span(v)``.

    Cosines come from the SVD of ``u.T @ v`` and sines from the residual of
    ``v`` after projection onto ``span(u)``; the sine branch is used for small
    angles where ``arccos`` loses all precision.
    """
    u = check_orthonormal(u, "u")
    v = check_orthonormal(v, "v")
    if u.shape[0] != v.shape[0]:
        raise PreconditionError(f"row counts differ: {u.shape[0]} vs {v.shape[0]}")
    if u.shape[1] < v.shape[1]:
        u, v = v, u
    cross = u.T @ v
    cos = np.clip(np.linalg.svd(cross, compute_uv=False), -1.0, 1.0)
    sin = np.linalg.svd(v - u @ cross, compute_uv=False)[::-1]
    sin = np.clip(sin, -1.0, 1.0)
    angles = np.where(cos**2 >= 0.5, np.arcsin(sin), np.arccos(cos))
    return np.maximum.accumulate(angles)


def subspace_distance(u, v) -> float:
    """Geodesic (arc-length) distance between two equal-dimension subspaces."""
    return float(np.linalg.norm(principal_angles(u, v)))


def orthonormalize(a) -> np.ndarray:
    """Orthonormal basis of ``range(a)`` from its thin SVD."""
    f = thin_svd(a)
    s = _clamped(f.singular_values)
    return f.left[:, s > 0]
