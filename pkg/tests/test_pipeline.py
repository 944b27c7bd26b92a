import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmdrom import dmd, pipeline
from dmdrom.errors import ConfigError, DomainError
from dmdrom.pipeline import InitSource, PipelineConfig
from dmdrom.snapshots import Trajectory, amplitude_spectrum, dominant_frequency, save_trajectory

from conftest import DT, family


def test_config_defaults():
    cfg = PipelineConfig()
    assert (cfg.energy_threshold, cfg.angle_threshold, cfg.n_primary, cfg.n_fallback, cfg.r) == (
        0.9999, 1e-2, 30, 10, 10)
    assert cfg.base_strategy == "closest" and cfg.align and not cfg.allow_extrapolation


@pytest.mark.parametrize("kw", [
    dict(energy_threshold=0.0), dict(compound_threshold=1.5), dict(angle_threshold=2.0),
    dict(energy="squares"), dict(base_strategy="left"), dict(r=0), dict(discard_count=-1),
    dict(schema_version=2), dict(selection="greedy"), dict(compound_scaling="unit"),
])
def test_config_invalid(kw):
    with pytest.raises(ConfigError):
        PipelineConfig(**kw)


def test_config_roundtrip_and_hash():
    cfg = PipelineConfig(samples=[{"path": "a", "parameter": 1.0}], r=6)
    again = PipelineConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg and again.hash() == cfg.hash()
    assert PipelineConfig(r=7).hash() != PipelineConfig(r=6).hash()


def test_config_unknown_field():
    with pytest.raises(ConfigError, match="bogus"):
        PipelineConfig.from_dict({"bogus": 1})


def test_config_load_relative_paths(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"samples": [{"path": "s0"}]}))
    cfg = PipelineConfig.load(tmp_path / "c.json")
    assert cfg.samples[0].path == str(tmp_path / "s0")


def test_database_structure(family_db):
    db = family_db
    assert db.sample_params == [0.0, 0.5, 1.0] and db.channels == ["u", "v"]
    for ch in db.channels:
        assert db.bases[ch].source == "compound"
        assert len({m.rank for m in db.models[ch]}) == 1
        for m in db.models[ch]:
            assert m.modes.shape[0] == db.bases[ch].rank


def test_six_samples_all_periodic():
    db = pipeline.build_database(family(np.linspace(0, 1, 6), steps=3000), PipelineConfig())
    assert sum(len(v) for v in db.models.values()) == 12
    for ch in db.channels:
        for m in db.models[ch]:
            assert not m.warnings
            assert dmd.is_periodic(dmd.first_coefficient(m, 3000), DT)


def test_single_sample_builds_online_fails():
    db = pipeline.build_database(family([0.5], steps=2000), PipelineConfig())
    with pytest.raises(DomainError):
        pipeline.online(db, 0.6, 10)


def test_short_sample_names_offender():
    trajs = family([0.0], steps=2000) + family([1.0], steps=8)
    trajs[1] = Trajectory(1.0, DT, {k: v[:, :8] for k, v in trajs[1].channels.items()})
    with pytest.raises(DomainError, match="short-one"):
        pipeline.build_database(trajs, PipelineConfig(), ["long-one", "short-one"])


def test_inconsistent_samples():
    a, b = family([0.0, 1.0], steps=500)
    b = Trajectory(1.0, DT * 2, b.channels)
    with pytest.raises(ConfigError, match="dt"):
        pipeline.build_database([a, b], PipelineConfig())


def test_online_extrapolation_rejected(family_db):
    with pytest.raises(DomainError, match="extrapolation"):
        pipeline.online(family_db, 2.0, 10)


def test_online_output_shape(family_db):
    t = pipeline.online(family_db, 0.3, 50)
    assert t.steps == 50 and t.discard_count == 0 and t.parameter == 0.3
    assert t.channel_names == ["u", "v"]


@pytest.mark.parametrize("index", [0, 1, 2])
def test_sample_reproduction(family_db, index):
    p = family_db.sample_params[index]
    got = pipeline.online(family_db, p, 500, InitSource("nearest_sample"))
    want = pipeline.sample_reconstruction(family_db, index, 500)
    a, b = got.stacked_window(), want.stacked_window()
    assert np.linalg.norm(a - b) <= 1e-9 * np.linalg.norm(b)


def test_resolve_nearest_sample_exact(family_db):
    x = pipeline.resolve_init(family_db, 0.5, InitSource("nearest_sample"))
    for ch in family_db.channels:
        assert np.array_equal(x[ch], family_db.models[ch][1].initial_reduced)


def test_resolve_interpolated_identical_states(family_db):
    db = family_db
    same = {ch: [dmd.DmdModel(db.models[ch][0].modes, db.models[ch][0].reduced_operator, db.dt,
                              db.models[ch][0].initial_reduced, 10, p)
                 for p in db.sample_params] for ch in db.channels}
    db2 = pipeline.RomDatabase(db.sample_params, db.channels, db.bases, same, db.dt, db.config)
    x = pipeline.resolve_init(db2, 0.25, InitSource("interpolated"))
    for ch in db.channels:
        np.testing.assert_allclose(x[ch], db.models[ch][0].initial_reduced, atol=1e-12)


def test_resolve_snapshot_matches_stored(family_db, tmp_path):
    t = family([0.5])[0]
    save_trajectory(t, tmp_path / "snap")
    x = pipeline.resolve_init(family_db, 0.5, InitSource.parse(f"snapshot:{tmp_path / 'snap'}"))
    for ch in family_db.channels:
        np.testing.assert_allclose(x[ch], family_db.models[ch][1].initial_reduced, atol=1e-10)


def test_resolve_snapshot_errors(family_db, tmp_path):
    with pytest.raises(OSError):
        pipeline.resolve_init(family_db, 0.5, InitSource("snapshot", path=str(tmp_path / "missing")))
    with pytest.raises(DomainError):
        pipeline.resolve_init(family_db, 0.5, InitSource("snapshot", states={"u": np.ones(3), "v": np.ones(3)}))


def test_init_parse():
    assert InitSource.parse("nearest_sample").kind == "nearest_sample"
    assert InitSource.parse("snapshot:/x/y").path == "/x/y"
    with pytest.raises(ConfigError):
        InitSource.parse("random")


def test_monotone_predicted_frequency(family_db):
    freqs = []
    for p in [0.1, 0.3, 0.5, 0.6, 0.9]:
        t = pipeline.online(family_db, p, 8000)
        coeff = family_db.bases["u"].modes[:, 0] @ t.channels["u"]
        freqs.append(dominant_frequency(amplitude_spectrum(coeff, DT)))
    assert np.all(np.diff(freqs) > 0)


def test_database_roundtrip(family_db, tmp_path):
    pipeline.save_database(family_db, tmp_path / "db")
    db = pipeline.load_database(tmp_path / "db")
    assert db.sample_params == family_db.sample_params and db.config == family_db.config
    for ch in db.channels:
        assert db.bases[ch].modes.tobytes() == family_db.bases[ch].modes.tobytes()
        for a, b in zip(db.models[ch], family_db.models[ch]):
            assert a.reduced_operator.tobytes() == b.reduced_operator.tobytes()
    a = pipeline.online(db, 0.4, 100).stacked_window()
    b = pipeline.online(family_db, 0.4, 100).stacked_window()
    assert a.tobytes() == b.tobytes()


def traj(data, discard=0):
    return Trajectory(0.0, 1.0, {"u": np.asarray(data, dtype=float)}, discard)


def test_errors_identical():
    t = traj(np.random.default_rng(0).standard_normal((4, 6)))
    rep = pipeline.relative_errors(t, t)
    assert not rep.per_step_l2.any() and not rep.per_step_linf.any()


def test_errors_uniform_scaling():
    ref = np.random.default_rng(1).standard_normal((5, 7))
    rep = pipeline.relative_errors(traj(1.01 * ref), traj(ref))
    np.testing.assert_allclose(rep.per_step_l2, 0.01, atol=1e-12)
    np.testing.assert_allclose(rep.per_step_linf, 0.01, atol=1e-12)


def test_errors_manual_oracle():
    ref = np.array([[3.0, 1.0], [4.0, -2.0]])
    rom = np.array([[3.0, 1.0], [5.0, 0.0]])
    w = np.array([2.0, 1.0])
    rep = pipeline.relative_errors(traj(rom), traj(ref), w)
    np.testing.assert_allclose(rep.per_step_l2, [1 / np.sqrt(18 + 16), 2 / np.sqrt(2 + 4)])
    np.testing.assert_allclose(rep.per_step_linf, [1 / 4, 2 / 2])


def test_errors_discard_window():
    ref = np.arange(1.0, 11.0).reshape(2, 5)
    rep = pipeline.relative_errors(traj(ref[:, 2:]), traj(ref, discard=2))
    assert rep.per_step_l2.size == 3 and rep.first_step == 2


def test_errors_zero_reference_step():
    ref = np.ones((2, 4))
    ref[:, 2] = 0.0
    with pytest.raises(DomainError, match="step 2"):
        pipeline.relative_errors(traj(ref), traj(ref))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_errors_aggregates_recomputable(seed):
    rng = np.random.default_rng(seed)
    ref = rng.standard_normal((3, 9)) + 5
    rep = pipeline.relative_errors(traj(ref + rng.standard_normal(ref.shape)), traj(ref))
    s = rep.summary()
    assert s["mean_l2"] == float(np.mean(rep.per_step_l2)) and s["max_linf"] == float(np.max(rep.per_step_linf))
    assert np.all(rep.per_step_l2 >= 0) and np.all(rep.per_step_linf >= 0)


def test_errors_weight_scale_invariance():
    rng = np.random.default_rng(2)
    ref, rom = rng.standard_normal((4, 5)), rng.standard_normal((4, 5))
    w = rng.uniform(0.1, 2, 4)
    a = pipeline.relative_errors(traj(rom), traj(ref), w).per_step_l2
    b = pipeline.relative_errors(traj(rom), traj(ref), 7.5 * w).per_step_l2
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_error_report_files(tmp_path):
    rep = pipeline.ErrorReport(np.array([0.1, 0.3]), np.array([0.2, 0.4]), 5)
    rep.write(tmp_path)
    assert json.loads((tmp_path / "error_report.json").read_text())["max_l2"] == 0.3
    lines = (tmp_path / "errors.csv").read_text().splitlines()
    assert lines == ["step,l2,linf", "5,0.1,0.2", "6,0.3,0.4"]


def test_load_weights(tmp_path):
    w = np.array([1.0, 0.5, 2.0])
    np.save(tmp_path / "w.npy", w)
    (tmp_path / "w.f64").write_bytes(w.astype("<f8").tobytes())
    assert np.array_equal(pipeline.load_weights(tmp_path / "w.npy"), w)
    assert np.array_equal(pipeline.load_weights(tmp_path / "w.f64"), w)
