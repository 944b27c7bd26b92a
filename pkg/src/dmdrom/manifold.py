"""Tangent-space interpolation of DMD operators (flat GL(r)) and DMD modes
(Grassmann manifold) across parameter samples."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .dmd import DmdModel
from .errors import DomainError

GL = "gl"
GRASSMANN = "grassmann"
HORIZONTAL_TOL = 1e-8
# largest principal angle for which the Grassmann log is accepted
MAX_ANGLE = np.pi / 2 - 1e-6


@dataclass(frozen=True)
class TangentElement:
    matrix: np.ndarray
    manifold_kind: str
    base_index: int = 0


@dataclass(frozen=True)
class InterpolatedRom:
    modes_star: np.ndarray
    reduced_operator_star: np.ndarray
    koopman: np.ndarray
    target: float
    base_index: int
    initial_star: np.ndarray | None = None


def _square_pair(base, point):
    base = linalg.as_matrix(base, "base")
    point = linalg.as_matrix(point, "point")
    if base.shape != point.shape or base.shape[0] != base.shape[1]:
        raise DomainError(f"GL points must be square and equal in shape, got {base.shape} and {point.shape}")
    return base, point


def gl_log(base, point, base_index: int = 0) -> TangentElement:
    base, point = _square_pair(base, point)
    return TangentElement(point - base, GL, base_index)


def gl_exp(base, tangent: TangentElement) -> np.ndarray:
    if tangent.manifold_kind != GL:
        raise DomainError(f"expected a {GL!r} tangent, got {tangent.manifold_kind!r}")
    base, mat = _square_pair(base, tangent.matrix)
    return base + mat


def _procrustes_rotation(u, base) -> np.ndarray:
    """Orthogonal ``O`` minimising ``||u O - base||_F``."""
    psi, _, rt = np.linalg.svd(u.T @ base)
    return psi @ rt


def _check_stiefel_pair(base, point):
    base = linalg.check_orthonormal(base, "base")
    point = linalg.check_orthonormal(point, "point")
    if base.shape != point.shape:
        raise DomainError(f"Grassmann points differ in shape: {base.shape} vs {point.shape}")
    return base, point


def grassmann_log(base, point, base_index: int = 0) -> TangentElement:
    """Riemannian log on Gr(N, r) through the Procrustes representative of ``point``.

    ``exp(base, log(base, point))`` then returns that representative, not just
    some basis of the same subspace.
    """
    base, point = _check_stiefel_pair(base, point)
    if linalg.principal_angles(base, point)[-1] >= MAX_ANGLE:
        raise DomainError("log undefined, subspaces too far (principal angle reaches pi/2)")
    point_star = point @ _procrustes_rotation(point, base)
    lmat = point_star - base @ (base.T @ point_star)
    q, s, vt = np.linalg.svd(lmat, full_matrices=False)
    delta = (q * np.arcsin(np.clip(s, 0.0, 1.0))) @ vt
    return TangentElement(delta, GRASSMANN, base_index)


def grassmann_exp(base, tangent: TangentElement) -> np.ndarray:
    if tangent.manifold_kind != GRASSMANN:
        raise DomainError(f"expected a {GRASSMANN!r} tangent, got {tangent.manifold_kind!r}")
    base = linalg.check_orthonormal(base, "base")
    delta = linalg.as_matrix(tangent.matrix, "tangent")
    if delta.shape != base.shape:
        raise DomainError(f"tangent shape {delta.shape} does not match base {base.shape}")
    horiz = np.max(np.abs(base.T @ delta))
    if horiz > HORIZONTAL_TOL:
        raise DomainError(f"tangent is not horizontal at the base (|base^T delta| = {horiz:.2e})")
    if not np.any(delta):
        return base.copy()
    q, s, vt = np.linalg.svd(delta, full_matrices=False)
    return (base @ vt.T * np.cos(s)) @ vt + (q * np.sin(s)) @ vt


def choose_base_point(sample_params, target: float, strategy: str = "closest") -> int:
    """Index of the base sample.

    ``"closest"`` takes the nearest sample (ties to the lower parameter);
    ``"geodesic_left"`` the largest sample not above the target.
    """
    params = np.asarray(sample_params, dtype=np.float64)
    if params.size == 0:
        raise DomainError("no samples to choose a base point from")
    if strategy == "closest":
        dist = np.abs(params - target)
        ties = np.flatnonzero(dist == dist.min())
        return int(ties[np.argmin(params[ties])])
    if strategy == "geodesic_left":
        left = np.flatnonzero(params <= target)
        if left.size == 0:
            return int(np.argmin(params))
        return int(left[np.argmax(params[left])])
    raise DomainError(f"unknown base strategy {strategy!r}")


def bracket(sample_params, target: float, allow_extrapolation: bool = False) -> tuple[int, int, float]:
    """Indices ``(lo, hi)`` of the samples around ``target`` and its weight on ``hi``."""
    params = np.asarray(sample_params, dtype=np.float64)
    if params.size < 2:
        raise DomainError(f"interpolation needs at least 2 samples, got {params.size}")
    order = np.argsort(params, kind="stable")
    sp = params[order]
    if np.any(np.diff(sp) <= 0):
        raise DomainError("sample parameters must be distinct")
    if not sp[0] <= target <= sp[-1] and not allow_extrapolation:
        raise DomainError(
            f"target {target} lies outside the sampled range [{sp[0]}, {sp[-1]}]; extrapolation is disabled"
        )
    j = int(np.clip(np.searchsorted(sp, target, side="right") - 1, 0, sp.size - 2))
    w = (target - sp[j]) / (sp[j + 1] - sp[j])
    return int(order[j]), int(order[j + 1]), float(w)


def _log(kind, base, point, base_index):
    return gl_log(base, point, base_index) if kind == GL else grassmann_log(base, point, base_index)


def _exp(kind, base, tangent):
    return gl_exp(base, tangent) if kind == GL else grassmann_exp(base, tangent)


def interpolate_point(points, sample_params, target: float, kind: str, base_strategy: str = "closest",
                      allow_extrapolation: bool = False, base_index: int | None = None) -> np.ndarray:
    """Linear tangent-space interpolation between the two samples bracketing ``target``.

    A target that coincides with a sample returns that sample's point.
    """
    if kind not in (GL, GRASSMANN):
        raise DomainError(f"unknown manifold kind {kind!r}")
    params = np.asarray(sample_params, dtype=np.float64)
    if len(points) != params.size:
        raise DomainError(f"{len(points)} points for {params.size} parameters")
    hit = np.flatnonzero(params == target)
    if hit.size:
        return np.array(points[int(hit[0])], dtype=np.float64)
    lo, hi, w = bracket(params, target, allow_extrapolation)
    i = choose_base_point(params, target, base_strategy) if base_index is None else base_index
    base = np.asarray(points[i], dtype=np.float64)
    v_lo = _log(kind, base, points[lo], i).matrix
    v_hi = _log(kind, base, points[hi], i).matrix
    v_star = (1.0 - w) * v_lo + w * v_hi
    if kind == GRASSMANN:
        # remove roundoff drift off the horizontal space
        v_star = v_star - base @ (base.T @ v_star)
    return _exp(kind, base, TangentElement(v_star, kind, i))


def align_samples(models: list[DmdModel], base_index: int) -> list[DmdModel]:
    """Rotate each model's DMD coordinates onto the base model's Procrustes frame.

    ``U_j -> U_j O_j``, ``A_j -> O_j^T A_j O_j`` and the initial state likewise;
    spans, eigenvalues and ``U_j A_j U_j^T`` are unchanged.
    """
    base = models[base_index]
    shapes = {(m.modes.shape, m.reduced_operator.shape) for m in models}
    if len(shapes) != 1:
        raise DomainError(f"models disagree on mode/operator shapes: {sorted(shapes)}")
    out = []
    for j, m in enumerate(models):
        if j == base_index:
            out.append(m)
            continue
        if linalg.principal_angles(base.modes, m.modes)[-1] >= MAX_ANGLE:
            raise DomainError(f"sample {j} spans a subspace too far from base sample {base_index}")
        o = _procrustes_rotation(m.modes, base.modes)
        out.append(replace(
            m,
            modes=m.modes @ o,
            reduced_operator=o.T @ m.reduced_operator @ o,
            initial_reduced=o.T @ m.initial_reduced,
        ))
    return out


def interpolate_rom(models: list[DmdModel], sample_params, target: float, base_strategy: str = "closest",
                    align: bool = True, allow_extrapolation: bool = False) -> InterpolatedRom:
    """Interpolate DMD modes on the Grassmannian and reduced operators on GL(r)."""
    if not models:
        raise DomainError("no models to interpolate")
    params = np.asarray(sample_params, dtype=np.float64)
    i = choose_base_point(params, target, base_strategy)
    if align:
        models = align_samples(models, i)
    kw = dict(base_strategy=base_strategy, allow_extrapolation=allow_extrapolation, base_index=i)
    u_star = interpolate_point([m.modes for m in models], params, target, GRASSMANN, **kw)
    a_star = interpolate_point([m.reduced_operator for m in models], params, target, GL, **kw)
    hit = np.flatnonzero(params == target)
    if hit.size:
        x_star = models[int(hit[0])].initial_reduced.copy()
    else:
        lo, hi, w = bracket(params, target, allow_extrapolation)
        x_star = (1.0 - w) * models[lo].initial_reduced + w * models[hi].initial_reduced
    return InterpolatedRom(u_star, a_star, u_star @ a_star @ u_star.T, float(target), i, x_star)
