"""Offline/online orchestration, configuration and error metrics."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dmd, manifold, pod
from .errors import ConfigError, DomainError, FormatError, RomError
from .snapshots import Trajectory, load_trajectory, read_container, read_meta, write_container

log = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1


@dataclass
class SampleSpec:
    path: str
    parameter: float | None = None


@dataclass
class PipelineConfig:
    """All knobs of the offline and online stages; JSON-serialisable."""

    samples: list[SampleSpec] = field(default_factory=list)
    energy_threshold: float = 0.9999
    compound_threshold: float = 0.9999
    energy: str = "sum"
    compound_scaling: str = "singular_value"
    angle_threshold: float = pod.DEFAULT_ANGLE_THRESHOLD
    selection: str = "pairwise"
    n_primary: int = 30
    n_fallback: int = 10
    r: int = 10
    # overrides the per-trajectory swing-in count when set
    discard_count: int | None = None
    base_strategy: str = "closest"
    align: bool = True
    peak_ratio: float = dmd.DEFAULT_PEAK_RATIO
    min_autocorr: float = dmd.DEFAULT_MIN_AUTOCORR
    weights_path: str | None = None
    allow_extrapolation: bool = False
    schema_version: int = CONFIG_SCHEMA_VERSION

    def __post_init__(self):
        self.samples = [s if isinstance(s, SampleSpec) else SampleSpec(**s) for s in self.samples]
        self.validate()

    def validate(self) -> None:
        for name in ("energy_threshold", "compound_threshold"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")
        if not 0.0 < self.angle_threshold < np.pi / 2:
            raise ConfigError(f"angle_threshold must lie in (0, pi/2), got {self.angle_threshold}")
        if self.selection not in ("pairwise", "span"):
            raise ConfigError(f"selection must be 'pairwise' or 'span', got {self.selection!r}")
        if self.energy not in ("sum", "sum_of_squares"):
            raise ConfigError(f"energy must be 'sum' or 'sum_of_squares', got {self.energy!r}")
        if self.compound_scaling not in ("singular_value", "none"):
            raise ConfigError(f"compound_scaling must be 'singular_value' or 'none', got {self.compound_scaling!r}")
        if self.base_strategy not in ("closest", "geodesic_left"):
            raise ConfigError(f"base_strategy must be 'closest' or 'geodesic_left', got {self.base_strategy!r}")
        if min(self.n_primary, self.n_fallback, self.r) < 1:
            raise ConfigError("n_primary, n_fallback and r must be positive")
        if self.discard_count is not None and self.discard_count < 0:
            raise ConfigError("discard_count must be non-negative")
        if self.schema_version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {self.schema_version}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        cfg = cls.from_dict(d)
        # sample paths are relative to the config file
        for s in cfg.samples:
            if not Path(s.path).is_absolute():
                s.path = str(path.parent / s.path)
        return cfg

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RomDatabase:
    """Offline products: one compound basis per channel and one DMD model per
    (sample, channel), with samples in increasing parameter order."""

    sample_params: list[float]
    channels: list[str]
    bases: dict[str, pod.PodBasis]
    models: dict[str, list[dmd.DmdModel]]
    dt: float
    config: PipelineConfig

    def __post_init__(self):
        if np.any(np.diff(self.sample_params) <= 0):
            raise ConfigError("sample parameters must be strictly increasing")
        for ch in self.channels:
            if len(self.models[ch]) != len(self.sample_params):
                raise ConfigError(f"channel {ch!r} has {len(self.models[ch])} models for {len(self.sample_params)} samples")
            for m in self.models[ch]:
                if m.modes.shape[0] != self.bases[ch].rank:
                    raise ConfigError(f"channel {ch!r}: model rows do not match basis rank")


# -- offline ------------------------------------------------------------------


def _load_samples(cfg: PipelineConfig) -> list[Trajectory]:
    if not cfg.samples:
        raise ConfigError("config lists no sample trajectories")
    trajs = []
    for spec in cfg.samples:
        t = load_trajectory(spec.path)
        if spec.parameter is not None:
            t = dataclasses.replace(t, parameter=float(spec.parameter))
        if cfg.discard_count is not None:
            if cfg.discard_count >= t.steps:
                raise ConfigError(f"sample {spec.path}: discard_count {cfg.discard_count} >= steps {t.steps}")
            t = dataclasses.replace(t, discard_count=cfg.discard_count)
        trajs.append(t)
    return trajs


def _check_consistent(trajs: list[Trajectory], labels: list[str]) -> None:
    ref = trajs[0]
    shape = {n: a.shape[0] for n, a in ref.channels.items()}
    for t, label in zip(trajs[1:], labels[1:]):
        if {n: a.shape[0] for n, a in t.channels.items()} != shape:
            raise ConfigError(f"sample {label}: channels/dof {dict((n, a.shape[0]) for n, a in t.channels.items())} differ from {shape}")
        if t.dt != ref.dt:
            raise ConfigError(f"sample {label}: dt {t.dt} differs from {ref.dt}")
    params = [t.parameter for t in trajs]
    if len(set(params)) != len(params):
        raise ConfigError(f"duplicate sample parameters: {params}")


def build_database(trajs: list[Trajectory], cfg: PipelineConfig, labels: list[str] | None = None) -> RomDatabase:
    """Offline stage on in-memory trajectories."""
    labels = labels or [f"p={t.parameter}" for t in trajs]
    order = sorted(range(len(trajs)), key=lambda i: trajs[i].parameter)
    trajs = [trajs[i] for i in order]
    labels = [labels[i] for i in order]
    _check_consistent(trajs, labels)
    channels = trajs[0].channel_names
    bases, models = {}, {}
    for ch in channels:
        per_traj = []
        for t, label in zip(trajs, labels):
            try:
                idx = pod.adaptive_select(t, ch, cfg.angle_threshold, cfg.selection)
                per_traj.append(pod.pod_basis(t.channels[ch][:, idx], cfg.energy_threshold, cfg.energy))
            except RomError as exc:
                raise type(exc)(f"sample {label}, channel {ch!r}: {exc}") from exc
        basis = pod.compound_pod(per_traj, cfg.compound_threshold, cfg.energy, cfg.compound_scaling)
        fitted = []
        for t, label in zip(trajs, labels):
            try:
                rt = pod.project(basis, t, ch, basis_id=f"compound:{ch}")
                fitted.append(dmd.fit_with_fallback(rt, cfg.n_primary, cfg.n_fallback, cfg.r,
                                                    cfg.peak_ratio, cfg.min_autocorr))
            except RomError as exc:
                raise type(exc)(f"sample {label}, channel {ch!r}: {exc}") from exc
        r_common = min(m.rank for m in fitted)
        if any(m.rank != r_common for m in fitted):
            # interpolation needs one DMD rank across samples; keep each sample's N
            log.info("channel %s: refitting samples at common DMD rank %d", ch, r_common)
            fitted = [
                m if m.rank == r_common else dmd.fit_leading(pod.project(basis, t, ch), m.pod_rank_used, r_common)
                for t, m in zip(trajs, fitted)
            ]
        for m, label in zip(fitted, labels):
            if m.warnings:
                log.warning("sample %s, channel %s: %s", label, ch, ", ".join(m.warnings))
        bases[ch] = basis
        models[ch] = fitted
    return RomDatabase([t.parameter for t in trajs], channels, bases, models, trajs[0].dt, cfg)


def offline(cfg: PipelineConfig, out=None) -> RomDatabase:
    trajs = _load_samples(cfg)
    db = build_database(trajs, cfg, [s.path for s in cfg.samples])
    if out is not None:
        save_database(db, out)
    return db


# -- persistence --------------------------------------------------------------


def save_basis(b: pod.PodBasis, path) -> None:
    meta = {"energy_threshold": b.energy_threshold, "source": b.source}
    write_container(path, "pod_basis", meta, {"modes": b.modes, "singular_values": b.singular_values[:, None]})


def load_basis(path) -> pod.PodBasis:
    meta, blocks = read_container(path, "pod_basis")
    try:
        return pod.PodBasis(blocks["modes"], blocks["singular_values"][:, 0],
                            float(meta["energy_threshold"]), str(meta["source"]))
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc


def save_database(db: RomDatabase, path) -> None:
    path = Path(path)
    meta = {
        "sample_params": db.sample_params,
        "channels": db.channels,
        "dt": db.dt,
        "config": db.config.to_dict(),
        "config_hash": db.config.hash(),
    }
    write_container(path, "rom_database", meta, {})
    for ch in db.channels:
        save_basis(db.bases[ch], path / "bases" / ch)
        for i, m in enumerate(db.models[ch]):
            dmd.save_model(m, path / "models" / ch / f"{i:04d}")


def load_database(path) -> RomDatabase:
    path = Path(path)
    meta = read_meta(path)
    if meta.get("kind") != "rom_database":
        raise FormatError(f"{path}: field 'kind' is {meta.get('kind')!r}, expected 'rom_database'")
    try:
        params = [float(p) for p in meta["sample_params"]]
        channels = list(meta["channels"])
        cfg = PipelineConfig.from_dict(meta["config"])
        dt = float(meta["dt"])
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc
    bases = {ch: load_basis(path / "bases" / ch) for ch in channels}
    models = {ch: [dmd.load_model(path / "models" / ch / f"{i:04d}") for i in range(len(params))]
              for ch in channels}
    return RomDatabase(params, channels, bases, models, dt, cfg)


# -- online -------------------------------------------------------------------


@dataclass(frozen=True)
class InitSource:
    """Where the online initial reduced state comes from.

    ``kind`` is ``"snapshot"`` (project ``path``'s first post-discard state, or
    the given ``states`` per channel), ``"nearest_sample"`` or ``"interpolated"``.
    """

    kind: str = "interpolated"
    path: str | None = None
    states: dict | None = None

    @classmethod
    def parse(cls, text: str) -> "InitSource":
        if text in ("nearest_sample", "interpolated"):
            return cls(text)
        if text.startswith("snapshot:"):
            return cls("snapshot", path=text.split(":", 1)[1])
        raise ConfigError(f"unknown init source {text!r}; use nearest_sample, interpolated or snapshot:PATH")


def _interpolated_roms(db: RomDatabase, target: float) -> dict[str, manifold.InterpolatedRom]:
    cfg = db.config
    return {
        ch: manifold.interpolate_rom(db.models[ch], db.sample_params, target, cfg.base_strategy,
                                     cfg.align, cfg.allow_extrapolation)
        for ch in db.channels
    }


def resolve_init(db: RomDatabase, target: float, source: InitSource,
                 roms: dict[str, manifold.InterpolatedRom] | None = None) -> dict[str, np.ndarray]:
    roms = roms if roms is not None else _interpolated_roms(db, target)
    if source.kind == "nearest_sample":
        i = manifold.choose_base_point(db.sample_params, target, "closest")
        if db.sample_params[i] == target:
            return {ch: db.models[ch][i].initial_reduced.copy() for ch in db.channels}
        # re-express the sample's state in the interpolated frame
        out = {}
        for ch in db.channels:
            m = db.models[ch][i]
            out[ch] = roms[ch].modes_star.T @ (m.modes @ m.initial_reduced)
        return out
    if source.kind == "interpolated":
        return {ch: roms[ch].initial_star.copy() for ch in db.channels}
    if source.kind == "snapshot":
        if source.states is not None:
            states = source.states
        else:
            if source.path is None:
                raise ConfigError("snapshot init needs a path")
            t = load_trajectory(source.path)
            states = {ch: t.channels[ch][:, t.discard_count] for ch in t.channels}
        out = {}
        for ch in db.channels:
            if ch not in states:
                raise DomainError(f"snapshot lacks channel {ch!r}")
            x = np.asarray(states[ch], dtype=np.float64).ravel()
            coeffs = pod.project_states(db.bases[ch], x)
            out[ch] = roms[ch].modes_star.T @ coeffs
        return out
    raise ConfigError(f"unknown init source kind {source.kind!r}")


def online(db: RomDatabase, target: float, steps: int, init: InitSource | None = None) -> Trajectory:
    """Predict the trajectory at ``target`` from the offline database."""
    init = init or InitSource("interpolated")
    roms = _interpolated_roms(db, target)
    x0 = resolve_init(db, target, init, roms)
    channels = {}
    for ch in db.channels:
        rom = roms[ch]
        model = dmd.DmdModel(rom.modes_star, rom.reduced_operator_star, db.dt, x0[ch],
                             db.models[ch][rom.base_index].pod_rank_used, float(target))
        channels[ch] = dmd.reconstruct(model, db.bases[ch], steps)
    return Trajectory(float(target), db.dt, channels, 0)


def sample_reconstruction(db: RomDatabase, index: int, steps: int) -> Trajectory:
    """Standalone DMD reconstruction of one training sample."""
    channels = {ch: dmd.reconstruct(db.models[ch][index], db.bases[ch], steps) for ch in db.channels}
    return Trajectory(db.sample_params[index], db.dt, channels, 0)


# -- errors -------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorReport:
    per_step_l2: np.ndarray
    per_step_linf: np.ndarray
    first_step: int = 0

    @property
    def mean_l2(self) -> float:
        return float(np.mean(self.per_step_l2))

    @property
    def max_l2(self) -> float:
        return float(np.max(self.per_step_l2))

    @property
    def mean_linf(self) -> float:
        return float(np.mean(self.per_step_linf))

    @property
    def max_linf(self) -> float:
        return float(np.max(self.per_step_linf))

    def summary(self) -> dict:
        return {
            "steps": int(self.per_step_l2.size),
            "first_step": self.first_step,
            "mean_l2": self.mean_l2,
            "max_l2": self.max_l2,
            "mean_linf": self.mean_linf,
            "max_linf": self.max_linf,
        }

    def write(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "error_report.json", "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")
        with open(out_dir / "errors.csv", "w", encoding="utf-8") as fh:
            fh.write("step,l2,linf\n")
            for k, (a, b) in enumerate(zip(self.per_step_l2, self.per_step_linf)):
                fh.write(f"{self.first_step + k},{float(a)!r},{float(b)!r}\n")


def relative_errors(rom: Trajectory, reference: Trajectory, weights=None) -> ErrorReport:
    """Per-step relative weighted-l2 and l-inf errors over the post-discard windows.

    Channels are stacked into one state vector; both trajectories are cut to
    their own discard window, which must then agree in length.
    """
    if rom.channel_names != reference.channel_names:
        raise DomainError(f"channel sets differ: {rom.channel_names} vs {reference.channel_names}")
    a = rom.stacked_window()
    b = reference.stacked_window()
    if a.shape != b.shape:
        raise DomainError(f"post-discard windows differ in shape: {a.shape} vs {b.shape}")
    w = np.ones(b.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    if w.size != b.shape[0] or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DomainError(f"weights must be {b.shape[0]} finite non-negative values")
    diff = a - b
    ref_l2 = np.sqrt(w @ (b * b))
    ref_inf = np.max(np.abs(b), axis=0)
    zero = np.flatnonzero((ref_l2 == 0) | (ref_inf == 0))
    if zero.size:
        raise DomainError(f"reference state is zero at step {reference.discard_count + int(zero[0])}")
    l2 = np.sqrt(w @ (diff * diff)) / ref_l2
    linf = np.max(np.abs(diff), axis=0) / ref_inf
    return ErrorReport(l2, linf, reference.discard_count)


def load_weights(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    raw = path.read_bytes()
    if len(raw) % 8:
        raise FormatError(f"{path}: weights file size {len(raw)} is not a multiple of 8 bytes")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)
