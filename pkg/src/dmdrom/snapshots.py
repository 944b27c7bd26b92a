"""Trajectory data model, on-disk container format, synthetic limit-cycle
data and amplitude spectra.

Container layout (a directory)::

    meta.json        UTF-8 JSON; stable public keys
    <block>.f64      raw little-endian float64, column-major

``meta.json`` always carries ``schema_version``, ``kind``, ``byte_order``
("little"), ``scalar`` ("f64"), ``layout`` ("column-major") and a
``blocks`` list of ``{"name", "rows", "cols", "file"}``. Trajectories add
``parameter``, ``dt``, ``discard_count`` and a ``channels`` list of
``{"name", "dof", "steps", "file"}``.
"""

from __future__ import annotations

import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, FormatError

SCHEMA_VERSION = 1
_FIXED_KEYS = {"byte_order": "little", "scalar": "f64", "layout": "column-major"}


# -- generic container -------------------------------------------------------


def write_container(path, kind: str, meta: dict, blocks: dict[str, np.ndarray]) -> None:
    """Write named 2-D blocks plus metadata atomically (temp dir, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{path.name}.", dir=path.parent))
    try:
        entries = []
        for name, arr in blocks.items():
            a = np.asarray(arr, dtype=np.float64)
            if a.ndim == 1:
                a = a[:, None]
            fname = f"{name}.f64"
            with open(tmp / fname, "wb") as fh:
                fh.write(a.astype("<f8").tobytes(order="F"))
            entries.append({"name": name, "rows": int(a.shape[0]), "cols": int(a.shape[1]), "file": fname})
        doc = {"schema_version": SCHEMA_VERSION, "kind": kind, **_FIXED_KEYS, **meta, "blocks": entries}
        with open(tmp / "meta.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def read_meta(path) -> dict:
    path = Path(path)
    try:
        with open(path / "meta.json", encoding="utf-8") as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}/meta.json: not valid JSON ({exc})") from exc
    if not isinstance(meta, dict):
        raise FormatError(f"{path}/meta.json: top level must be an object")
    for key, expected in _FIXED_KEYS.items():
        if meta.get(key) != expected:
            raise FormatError(f"{path}/meta.json: field {key!r} must be {expected!r}, got {meta.get(key)!r}")
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}/meta.json: unsupported schema_version {meta.get('schema_version')!r}")
    return meta


def _read_block(path: Path, entry: dict, label: str) -> np.ndarray:
    try:
        rows, cols, fname = int(entry["rows"]), int(entry["cols"]), str(entry["file"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: block {label!r} has malformed rows/cols/file") from exc
    if rows < 1 or cols < 1:
        raise FormatError(f"{path}: block {label!r} declares non-positive shape {rows}x{cols}")
    raw = (path / fname).read_bytes()
    expected = rows * cols * 8
    if len(raw) != expected:
        raise FormatError(
            f"{path}: block {label!r} file {fname} holds {len(raw)} bytes, "
            f"rows*cols={rows}*{cols} requires {expected}"
        )
    return np.frombuffer(raw, dtype="<f8").reshape((rows, cols), order="F").astype(np.float64)


def read_container(path, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    meta = read_meta(path)
    if kind is not None and meta.get("kind") != kind:
        raise FormatError(f"{path}: field 'kind' is {meta.get('kind')!r}, expected {kind!r}")
    entries = meta.get("blocks")
    if not isinstance(entries, list):
        raise FormatError(f"{path}: field 'blocks' missing or not a list")
    blocks = {}
    for entry in entries:
        name = entry.get("name") if isinstance(entry, dict) else None
        if not isinstance(name, str):
            raise FormatError(f"{path}: block entry without a name")
        blocks[name] = _read_block(path, entry, name)
    return meta, blocks


# -- trajectories -------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Time series of full-order states for one parameter value.

    ``channels`` maps a field name to a ``dof x steps`` array; all channels
    share the number of steps but may differ in dof.
    """

    parameter: float
    dt: float
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    discard_count: int = 0

    def __post_init__(self):
        if not math.isfinite(self.parameter):
            raise DomainError("parameter must be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if not self.channels:
            raise DomainError("trajectory needs at least one channel")
        steps = {a.shape[1] for a in self.channels.values()}
        if len(steps) != 1:
            raise DomainError(f"channels disagree on step count: {sorted(steps)}")
        for name, a in self.channels.items():
            if a.ndim != 2 or not np.all(np.isfinite(a)):
                raise DomainError(f"channel {name!r} must be a finite 2-D array")
        if not 0 <= self.discard_count < self.steps:
            raise DomainError(f"discard_count {self.discard_count} must lie in [0, {self.steps})")

    @property
    def steps(self) -> int:
        return next(iter(self.channels.values())).shape[1]

    @property
    def channel_names(self) -> list[str]:
        return list(self.channels)

    def window(self, name: str) -> np.ndarray:
        """Post-discard snapshots of one channel."""
        return self.channels[name][:, self.discard_count:]

    def stacked_window(self) -> np.ndarray:
        return np.vstack([self.window(n) for n in self.channels])


def save_trajectory(t: Trajectory, path) -> None:
    channels = [
        {"name": name, "dof": int(a.shape[0]), "steps": int(a.shape[1]), "file": f"{name}.f64"}
        for name, a in t.channels.items()
    ]
    meta = {
        "parameter": float(t.parameter),
        "dt": float(t.dt),
        "discard_count": int(t.discard_count),
        "channels": channels,
    }
    write_container(path, "trajectory", meta, t.channels)


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    meta = read_meta(path)
    if meta.get("kind") != "trajectory":
        raise FormatError(f"{path}: field 'kind' is {meta.get('kind')!r}, expected 'trajectory'")
    try:
        parameter = float(meta["parameter"])
        dt = float(meta["dt"])
        discard = int(meta["discard_count"])
        specs = list(meta["channels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: missing or malformed field {exc}") from exc
    channels = {}
    for spec in specs:
        try:
            name, dof, steps = str(spec["name"]), int(spec["dof"]), int(spec["steps"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: channel entry malformed ({exc})") from exc
        entry = {"rows": dof, "cols": steps, "file": spec.get("file", f"{name}.f64")}
        raw_len = (path / entry["file"]).stat().st_size
        if raw_len != dof * steps * 8:
            raise FormatError(
                f"{path}: channel {name!r} field 'steps'/'dof' declares {dof}x{steps} "
                f"({dof * steps * 8} bytes) but {entry['file']} holds {raw_len} bytes"
            )
        channels[name] = _read_block(path, entry, name)
    try:
        return Trajectory(parameter, dt, channels, discard)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# -- synthetic data -----------------------------------------------------------

SYNTH_CHANNELS = ("u", "v")


def _orthonormal_set(rng: np.random.Generator, dof: int, k: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dof, k)))
    return q * np.sign(np.diag(r))


def generate_limit_cycle_family(p: float, dof: int, steps: int, dt: float, seed: int = 0) -> Trajectory:
    """Synthetic periodic trajectory whose frequency and amplitude grow with ``p``.

    Each channel is ``a(p) [cos(w t) f1 + sin(w t) f2] + 0.1 a(p) [cos(3 w t) f3
    + sin(3 w t) f4]`` with ``w = 2 pi (1 + p)``, ``a = 1 + p`` and an
    orthonormal set ``f1..f4`` drawn from ``seed`` alone, so all members of the
    family share their spatial directions.
    """
    if dof < 4:
        raise DomainError(f"dof must be at least 4 to embed the orbit, got {dof}")
    if steps < 2:
        raise DomainError(f"steps must be at least 2, got {steps}")
    if not math.isfinite(p):
        raise DomainError("parameter must be finite")
    rng = np.random.default_rng(seed)
    omega = 2.0 * np.pi * (1.0 + p)
    amp = 1.0 + p
    t = np.arange(steps) * dt
    temporal = amp * np.vstack([
        np.cos(omega * t),
        np.sin(omega * t),
        0.1 * np.cos(3 * omega * t),
        0.1 * np.sin(3 * omega * t),
    ])
    channels = {}
    for name in SYNTH_CHANNELS:
        phi = _orthonormal_set(rng, dof, 4)
        channels[name] = phi @ temporal
    return Trajectory(float(p), float(dt), channels, 0)


# -- spectra ------------------------------------------------------------------

# Hann coherent gain is 1/2
HANN_CORRECTION = 2.0


@dataclass(frozen=True)
class AmplitudeSpectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def amplitude_spectrum(series, dt: float) -> AmplitudeSpectrum:
    """Single-sided Hann-windowed amplitude spectrum of the mean-removed series.

    A sinusoid of amplitude ``A`` whose frequency falls on a bin peaks at ``A``.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < 4:
        raise DomainError(f"series needs at least 4 samples, got {x.size}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    n = x.size
    x = x - x.mean()
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    amps = HANN_CORRECTION * 2.0 * np.abs(np.fft.rfft(x * window)) / n
    amps[0] *= 0.5
    if n % 2 == 0:
        amps[-1] *= 0.5
    return AmplitudeSpectrum(np.fft.rfftfreq(n, dt), amps)


def dominant_frequency(spec: AmplitudeSpectrum) -> float:
    """Frequency of the largest non-DC amplitude; ties go to the lower frequency."""
    amps = spec.amplitudes[1:]
    if amps.size == 0:
        raise DomainError("spectrum has no non-zero frequency bins")
    peak = amps.max()
    idx = int(np.flatnonzero(amps >= peak * (1.0 - 1e-12))[0])
    return float(spec.frequencies[idx + 1])
