"""Standard real-valued DMD on POD coefficient trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .errors import DomainError, FormatError, NumericalError
from .pod import ReducedTrajectory
from .snapshots import amplitude_spectrum, read_container, write_container

RANK_TOL = 1e-13
DEFAULT_PEAK_RATIO = 5.0
DEFAULT_MIN_AUTOCORR = 0.9


@dataclass(frozen=True)
class DmdModel:
    """Reduced linear predictor ``x_r[k+1] = A_r x_r[k]`` with modes ``U_r``.

    ``modes`` has one row per POD coefficient of the basis the model was fitted
    against. When only the leading ``pod_rank_used`` coefficients entered the
    fit, the remaining rows are zero.
    """

    modes: np.ndarray
    reduced_operator: np.ndarray
    dt: float
    initial_reduced: np.ndarray
    pod_rank_used: int
    parameter: float = 0.0
    warnings: tuple[str, ...] = field(default=())

    @property
    def rank(self) -> int:
        return self.reduced_operator.shape[0]

    @property
    def koopman(self) -> np.ndarray:
        return self.modes @ self.reduced_operator @ self.modes.T


@dataclass(frozen=True)
class DmdSpectrum:
    discrete_eigenvalues: np.ndarray
    continuous_frequencies: np.ndarray
    growth_rates: np.ndarray


def fit_dmd(rt: ReducedTrajectory, r: int) -> DmdModel:
    """Fit ``A_r = U_r^T Y V_r S_r^{-1}`` from consecutive snapshot pairs.

    ``r`` is reduced to the number of coefficient rows and then to the
    numerical rank of the snapshot matrix if either is smaller.
    """
    c = np.asarray(rt.coeffs, dtype=np.float64)
    if r < 1:
        raise DomainError(f"DMD rank must be positive, got {r}")
    if c.shape[1] < r + 1:
        raise DomainError(f"DMD rank {r} needs at least {r + 1} steps, trajectory has {c.shape[1]}")
    x, y = c[:, :-1], c[:, 1:]
    f = linalg.thin_svd(x)
    s = f.singular_values
    if s[0] == 0.0:
        raise DomainError("coefficient trajectory is identically zero")
    r = min(r, c.shape[0], int(np.count_nonzero(s >= RANK_TOL * s[0])))
    u_r = f.left[:, :r]
    a_r = (u_r.T @ y @ f.right_t[:r].T) / s[:r]
    return DmdModel(
        modes=u_r,
        reduced_operator=a_r,
        dt=float(rt.dt),
        initial_reduced=u_r.T @ c[:, 0],
        pod_rank_used=c.shape[0],
        parameter=float(rt.parameter),
    )


def rollout_reduced(m: DmdModel, steps: int, start=None) -> np.ndarray:
    """Reduced states ``A_r^k x_r`` for k = 0..steps-1 as an ``r x steps`` array."""
    if steps < 1:
        raise DomainError(f"steps must be at least 1, got {steps}")
    a = m.reduced_operator
    x = np.array(m.initial_reduced if start is None else start, dtype=np.float64)
    out = np.empty((a.shape[0], steps))
    out[:, 0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, steps):
            x = a @ x
            if not np.all(np.isfinite(x)):
                raise NumericalError(f"rollout diverged to non-finite values at step {k}")
            out[:, k] = x
    return out


def rollout(m: DmdModel, steps: int, start=None) -> ReducedTrajectory:
    """Roll the model forward and express the states in POD coefficients."""
    states = rollout_reduced(m, steps, start)
    return ReducedTrajectory(m.parameter, m.dt, m.modes @ states)


def reconstruct(m: DmdModel, b, steps: int) -> np.ndarray:
    """Full-order states ``Phi U_r x_r[k]`` with ``Phi`` the POD modes of ``b``."""
    if b.modes.shape[1] != m.modes.shape[0]:
        raise DomainError(f"basis rank {b.modes.shape[1]} does not match model rows {m.modes.shape[0]}")
    return b.modes @ rollout(m, steps).coeffs


def spectrum(m: DmdModel) -> DmdSpectrum:
    try:
        lam = np.linalg.eigvals(m.reduced_operator)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on {m.rank}x{m.rank} reduced operator") from exc
    real = np.sort(lam[lam.imag == 0].real)
    upper = lam[lam.imag > 0]
    upper = upper[np.lexsort((upper.imag, upper.real))]
    pairs = np.column_stack([upper, upper.conj()]).ravel()
    lam = np.concatenate([real.astype(complex), pairs])
    with np.errstate(divide="ignore"):
        growth = np.log(np.abs(lam)) / m.dt
    freq = np.abs(np.angle(lam)) / (2.0 * np.pi * m.dt)
    return DmdSpectrum(lam, freq, growth)


def dominant_dmd_frequency(reduced_operator, initial_reduced, dt: float) -> float:
    """Oscillation frequency (Hz) of the eigenmode carrying most of the initial state.

    Real eigenvalues are ignored; returns 0.0 when the operator has none that
    are complex.
    """
    lam, vecs = np.linalg.eig(np.asarray(reduced_operator, dtype=np.float64))
    amps = np.abs(np.linalg.lstsq(vecs, np.asarray(initial_reduced, dtype=complex), rcond=None)[0])
    osc = lam.imag != 0
    if not np.any(osc):
        return 0.0
    k = np.flatnonzero(osc)[np.argmax(amps[osc])]
    return float(abs(np.angle(lam[k])) / (2.0 * np.pi * dt))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / denom if denom > 0 else 0.0


def is_periodic(series, dt: float, peak_ratio: float = DEFAULT_PEAK_RATIO,
                min_autocorr: float = DEFAULT_MIN_AUTOCORR) -> bool:
    """Automated periodicity check on a scalar series.

    Requires the dominant non-DC spectral peak to exceed ``peak_ratio`` times the
    median amplitude, at least two observed periods, and a lagged
    autocorrelation of at least ``min_autocorr`` near the implied period
    (the lag is refined to the best value within +-10% of it).
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < 64:
        raise DomainError(f"periodicity check needs at least 64 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        return False
    spec = amplitude_spectrum(x, dt)
    amps = spec.amplitudes[1:]
    peak = amps.max()
    if peak == 0.0:
        return False
    k = int(np.flatnonzero(amps >= peak * (1.0 - 1e-12))[0])
    if peak < peak_ratio * np.median(amps):
        return False
    period = 1.0 / (spec.frequencies[k + 1] * dt)
    if period > x.size / 2:
        return False
    lo = max(1, int(math.floor(0.9 * period)))
    hi = min(x.size // 2, int(math.ceil(1.1 * period)))
    best = max(_pearson(x[:-lag], x[lag:]) for lag in range(lo, hi + 1))
    return best >= min_autocorr


def fit_leading(rt: ReducedTrajectory, n: int, r: int) -> DmdModel:
    total = rt.coeffs.shape[0]
    sub = ReducedTrajectory(rt.parameter, rt.dt, rt.coeffs[:n], rt.basis_id)
    m = fit_dmd(sub, r)
    modes = np.zeros((total, m.rank))
    modes[:n] = m.modes
    return replace(m, modes=modes, pod_rank_used=n)


def first_coefficient(m: DmdModel, steps: int) -> np.ndarray:
    return m.modes[0] @ rollout_reduced(m, steps)


def fit_with_fallback(rt_full: ReducedTrajectory, n_primary: int = 30, n_fallback: int = 10, r: int = 10,
                      peak_ratio: float = DEFAULT_PEAK_RATIO,
                      min_autocorr: float = DEFAULT_MIN_AUTOCORR) -> DmdModel:
    """Fit on the leading ``n_primary`` coefficients; refit on ``n_fallback`` if
    the rolled-out first coefficient is not periodic.

    Both counts are capped at the number of available coefficients. When even
    the fallback is not periodic the fallback model is returned with a
    ``"non_periodic"`` warning.
    """
    if rt_full.steps < r + 1:
        raise DomainError(f"DMD rank {r} needs at least {r + 1} steps, trajectory has {rt_full.steps}")
    total = rt_full.coeffs.shape[0]
    n1, n2 = min(n_primary, total), min(n_fallback, total)

    def periodic(m):
        try:
            return is_periodic(first_coefficient(m, rt_full.steps), rt_full.dt, peak_ratio, min_autocorr)
        except NumericalError:
            return False

    primary = fit_leading(rt_full, n1, r)
    if periodic(primary):
        return primary
    if n2 == n1:
        return replace(primary, warnings=("non_periodic",))
    fallback = fit_leading(rt_full, n2, r)
    if periodic(fallback):
        return fallback
    return replace(fallback, warnings=("non_periodic",))


def save_model(m: DmdModel, path) -> None:
    meta = {
        "dt": m.dt,
        "parameter": m.parameter,
        "pod_rank_used": m.pod_rank_used,
        "rank": m.rank,
        "warnings": list(m.warnings),
    }
    blocks = {
        "modes": m.modes,
        "reduced_operator": m.reduced_operator,
        "initial_reduced": m.initial_reduced[:, None],
    }
    write_container(path, "dmd_model", meta, blocks)


def load_model(path) -> DmdModel:
    meta, blocks = read_container(path, "dmd_model")
    try:
        return DmdModel(
            modes=blocks["modes"],
            reduced_operator=blocks["reduced_operator"],
            dt=float(meta["dt"]),
            initial_reduced=blocks["initial_reduced"][:, 0],
            pod_rank_used=int(meta["pod_rank_used"]),
            parameter=float(meta["parameter"]),
            warnings=tuple(meta.get("warnings", ())),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc
