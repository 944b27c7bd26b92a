"""Adaptive snapshot selection and two-tier (per-trajectory, then compound) POD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DomainError
from .snapshots import Trajectory

DEFAULT_ANGLE_THRESHOLD = 1e-2
DEFAULT_ENERGY_THRESHOLD = 0.9999


@dataclass(frozen=True)
class PodBasis:
    modes: np.ndarray
    singular_values: np.ndarray
    energy_threshold: float
    source: str = "per-trajectory"

    @property
    def dof(self) -> int:
        return self.modes.shape[0]

    @property
    def rank(self) -> int:
        return self.modes.shape[1]


@dataclass(frozen=True)
class ReducedTrajectory:
    parameter: float
    dt: float
    coeffs: np.ndarray
    basis_id: str = ""

    @property
    def steps(self) -> int:
        return self.coeffs.shape[1]


def fix_signs(modes: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    ``argmax`` returns the first maximiser, which breaks ties by lowest index.
    """
    idx = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[idx, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def adaptive_select(t: Trajectory, channel: str, angle_threshold: float = DEFAULT_ANGLE_THRESHOLD,
                    criterion: str = "pairwise") -> list[int]:
    """Greedy forward selection of snapshots that point in a new direction.

    With ``criterion="pairwise"`` a post-discard snapshot is kept when its angle
    to every snapshot kept so far exceeds ``angle_threshold``; with ``"span"``
    the angle to the span of the kept snapshots must exceed it. The first
    non-zero snapshot is always kept and zero snapshots are skipped. Returns
    absolute step indices.
    """
    if not 0.0 < angle_threshold < np.pi / 2:
        raise DomainError(f"angle_threshold must lie in (0, pi/2), got {angle_threshold}")
    if criterion not in ("pairwise", "span"):
        raise DomainError(f"unknown selection criterion {criterion!r}")
    data = t.channels[channel]
    start = t.discard_count
    if start >= data.shape[1]:
        raise DomainError("no snapshots after the swing-in window")
    norms = np.linalg.norm(data, axis=0)
    cos_max = np.cos(angle_threshold)
    kept = np.zeros((data.shape[0], 0))
    selected = []
    for k in range(start, data.shape[1]):
        if norms[k] == 0.0:
            continue
        x = data[:, k] / norms[k]
        if not selected:
            kept = x[:, None]
            selected.append(k)
            continue
        if criterion == "pairwise":
            if np.max(np.abs(kept.T @ x)) < cos_max:
                kept = np.hstack([kept, x[:, None]])
                selected.append(k)
            continue
        resid = x - kept @ (kept.T @ x)
        # second pass keeps the running basis orthonormal to working precision
        resid -= kept @ (kept.T @ resid)
        rnorm = np.linalg.norm(resid)
        if np.arcsin(min(1.0, rnorm)) > angle_threshold:
            kept = np.hstack([kept, (resid / rnorm)[:, None]])
            selected.append(k)
    return selected


def pod_basis(samples, threshold: float = DEFAULT_ENERGY_THRESHOLD, energy: str = "sum",
              source: str = "per-trajectory") -> PodBasis:
    samples = linalg.as_matrix(samples, "samples")
    if not np.any(samples):
        raise DomainError("sample matrix is zero")
    f = linalg.thin_svd(samples)
    rank = linalg.truncate_by_energy(f, threshold, energy)
    modes = fix_signs(f.left[:, :rank])
    return PodBasis(modes, f.singular_values[:rank].copy(), float(threshold), source)


def compound_pod(bases: list[PodBasis], threshold: float = DEFAULT_ENERGY_THRESHOLD,
                 energy: str = "sum", scaling: str = "singular_value") -> PodBasis:
    """Second-tier POD over the modes of several per-trajectory bases."""
    if not bases:
        raise DomainError("compound_pod needs at least one basis")
    dofs = {b.dof for b in bases}
    if len(dofs) != 1:
        raise DomainError(f"bases disagree on dof: {sorted(dofs)}")
    if scaling == "singular_value":
        cols = [b.modes * b.singular_values for b in bases]
    elif scaling == "none":
        cols = [b.modes for b in bases]
    else:
        raise DomainError(f"unknown compound scaling {scaling!r}")
    return pod_basis(np.hstack(cols), threshold, energy, source="compound")


def project(b: PodBasis, t: Trajectory, channel: str, basis_id: str = "") -> ReducedTrajectory:
    states = t.window(channel)
    if states.shape[0] != b.dof:
        raise DomainError(f"channel {channel!r} has dof {states.shape[0]}, basis has {b.dof}")
    return ReducedTrajectory(t.parameter, t.dt, b.modes.T @ states, basis_id)


def project_states(b: PodBasis, states) -> np.ndarray:
    states = np.asarray(states, dtype=np.float64)
    if states.shape[0] != b.dof:
        raise DomainError(f"states have dof {states.shape[0]}, basis has {b.dof}")
    return b.modes.T @ states


def lift(b: PodBasis, r: ReducedTrajectory) -> np.ndarray:
    if r.coeffs.shape[0] != b.rank:
        raise DomainError(f"coefficients have {r.coeffs.shape[0]} rows, basis has rank {b.rank}")
    return b.modes @ r.coeffs
