import numpy as np
import pytest

from cavity_rbm.channel import (ChannelRealization, CodebookSchedule, Frame, ScattererMotion, ScheduleError,
                                SourceVarianceError, apply_codebook_switch, channel_states, evolve_scatterer,
                                frames_from_bytes, frames_to_bytes, frames_to_csv, propagate_frame,
                                run_schedule)
from cavity_rbm.eigenmode import TWO_PI, CavityGeometry, EigenmodeEnsemble
from cavity_rbm.link import build_scenario
from cavity_rbm.modem.detector import frame_distances, normalize_spectrum
from cavity_rbm.modem.dtw import dtw_distance


@pytest.fixture
def scn(small_cfg):
    return build_scenario(small_cfg, 0)


def _spec_corr(a: Frame, b: Frame):
    x, y = np.abs(a.spectrum), np.abs(b.spectrum)
    return np.corrcoef(x, y)[0, 1]


# -- value types ---------------------------------------------------------------------------

def test_frame_grid_and_mask():
    f = Frame(np.ones(8), 8.0, 100.0, bandwidth=4.0)
    np.testing.assert_allclose(f.baseband_frequencies(), [-4, -3, -2, -1, 0, 1, 2, 3])
    assert f.occupied_mask().sum() == 5
    np.testing.assert_allclose(f.absolute_omega(), TWO_PI * (100 + f.baseband_frequencies()))
    assert Frame(np.ones(8), 8.0, 0.0).occupied_mask().all()


def test_schedule_validation():
    from cavity_rbm.perturbation import Codebook
    a, b = Codebook.zeros(4), Codebook.zeros(4).flipped([0])
    with pytest.raises(ScheduleError):
        CodebookSchedule(())
    with pytest.raises(ScheduleError):
        CodebookSchedule(((1, a),))
    with pytest.raises(ScheduleError):
        CodebookSchedule(((0, a), (5, b), (5, a)))
    s = CodebookSchedule.alternating([3, 7], a, b)
    assert s.frames == [0, 3, 7] and s.switch_frames() == [3, 7]
    with pytest.raises(ScheduleError):
        CodebookSchedule.alternating([0], a, b)


def test_motion_validation():
    with pytest.raises(ValueError):
        ScattererMotion(drift_rate=np.inf)
    with pytest.raises(ValueError):
        ScattererMotion(phase_drift_rate=-1)
    assert not ScattererMotion(1.0, 1.0, enabled=False).active


def test_realization_needs_positive_period(scn):
    with pytest.raises(ValueError):
        ChannelRealization(scn.ensemble, scn.geom, 0.0)


# -- drift ------------------------------------------------------------------------------------

def test_zero_drift_is_identity(scn):
    real = scn.realization()
    assert evolve_scatterer(real, ScattererMotion()) is real


def test_drift_is_deterministic_and_does_not_touch_input(scn):
    real = scn.realization()
    state = real.rng.bit_generator.state
    m = scn.motion("walking")
    a, b = evolve_scatterer(real, m), evolve_scatterer(real, m)
    assert a.ensemble == b.ensemble
    assert real.rng.bit_generator.state == state
    assert not a.ensemble == real.ensemble
    clone = real.clone()
    evolve_scatterer(clone, m)
    assert real.rng.bit_generator.state == state


def test_drift_correlation_decreases_with_rate(scn):
    sigma = 0.05 * scn.ensemble.mean_spacing
    corr = []
    for k in (0, 1, 2, 4):
        motion = ScattererMotion(drift_rate=k * sigma, phase_drift_rate=k * 0.02)
        vals = []
        for t in range(30):
            s = build_scenario(scn.cfg, t)
            r0 = s.realization()
            r1 = evolve_scatterer(r0, motion)
            vals.append(_spec_corr(propagate_frame(r0, s.source), propagate_frame(r1, s.source)))
        corr.append(np.mean(vals))
    assert corr[0] == pytest.approx(1.0)
    assert np.all(np.diff(corr) < 0)


# -- codebook switch ----------------------------------------------------------------------------

def test_switch_identity_and_irreversibility(scn):
    real = scn.realization()
    a, b = scn.codebooks
    assert apply_codebook_switch(real, a, a, scn.panel) is real
    there = apply_codebook_switch(real, a, b, scn.panel)
    back = apply_codebook_switch(there, b, a, scn.panel)
    assert not back.ensemble == real.ensemble


def _one_step_distances(cfg, trials):
    drift, switch = [], []
    for t in range(trials):
        s = build_scenario(cfg, t)
        det = s.detector_config()
        win = det.window_for(int(s.source.occupied_mask().sum()))
        r0 = s.realization()
        noise = s.noise_rng()
        y0 = normalize_spectrum(propagate_frame(r0, s.source, cfg.snr_db, rng=noise), det.normalization)
        r1 = evolve_scatterer(r0, s.motion("walking"))
        y1 = normalize_spectrum(propagate_frame(r1, s.source, cfg.snr_db, rng=noise), det.normalization)
        r2 = apply_codebook_switch(evolve_scatterer(r1, s.motion("walking")), *s.codebooks, s.panel)
        y2 = normalize_spectrum(propagate_frame(r2, s.source, cfg.snr_db, rng=noise), det.normalization)
        drift.append(dtw_distance(y0, y1, win))
        switch.append(dtw_distance(y1, y2, win))
    return np.array(drift), np.array(switch)


def test_switch_exceeds_99th_percentile_of_drift(scn):
    drift, switch = _one_step_distances(scn.cfg, 120)
    assert np.min(switch) > np.percentile(drift, 99)


def test_drift_distances_stochastically_dominated(scn):
    drift, switch = _one_step_distances(scn.cfg, 1000)
    q = np.linspace(0.01, 1.0, 100)
    assert np.all(np.quantile(switch, q) >= np.quantile(drift, q))


# -- propagation -------------------------------------------------------------------------------

def test_identity_channel():
    fc, fs = 1e9, 1e6
    x = Frame(np.exp(1j * np.linspace(0, 5, 64)), fs, fc)
    far = TWO_PI * 1e13
    detune = far - TWO_PI * fc
    ens = EigenmodeEnsemble([far], [1.0], [np.pi / 2], [1.0], 0.0, 2 * far)
    real = ChannelRealization(ens, CavityGeometry(1.0, 1.0, a0=detune), 1.0)
    y = propagate_frame(real, x)
    np.testing.assert_allclose(y.spectrum, x.spectrum, rtol=1e-5)


def test_noise_only_variance():
    x = Frame(np.zeros(10_000), 1e6, 1e9)
    ens = EigenmodeEnsemble([TWO_PI * 1e9], [1.0], [0.0], [1e-6], TWO_PI * 0.9e9, TWO_PI * 1.1e9)
    real = ChannelRealization(ens, CavityGeometry(1.0, 1e-6), 1.0, np.random.default_rng(3))
    y = propagate_frame(real, x, noise_power=0.25)
    assert np.var(y.spectrum) == pytest.approx(0.25, rel=0.05)
    assert abs(np.mean(y.spectrum.real ** 2) - np.mean(y.spectrum.imag ** 2)) < 0.02


def test_snr_sets_noise_relative_to_signal(scn):
    real = scn.realization()
    clean = propagate_frame(real, scn.source)
    occ = scn.source.occupied_mask()
    sig = np.mean(np.abs(clean.spectrum[occ]) ** 2)
    errs = []
    for k in range(40):
        noisy = propagate_frame(real, scn.source, 10.0, rng=np.random.default_rng(k))
        errs.append(np.mean(np.abs(noisy.spectrum - clean.spectrum) ** 2))
    assert np.mean(errs) == pytest.approx(sig / 10, rel=0.05)


def test_propagation_determinism_and_linearity(scn):
    real = scn.realization()
    x1 = scn.source
    x2 = x1.with_spectrum(np.random.default_rng(0).normal(size=x1.n_bins) + 0j)
    a = propagate_frame(real, x1)
    assert np.array_equal(a.spectrum, propagate_frame(real, x1).spectrum)
    combo = propagate_frame(real, x1.with_spectrum(2 * x1.spectrum - 3j * x2.spectrum))
    np.testing.assert_allclose(combo.spectrum, 2 * a.spectrum - 3j * propagate_frame(real, x2).spectrum,
                               rtol=1e-12, atol=1e-12 * np.abs(a.spectrum).max())
    n1 = propagate_frame(real, x1, 20.0)
    assert np.array_equal(n1.spectrum, propagate_frame(real, x1, 20.0).spectrum)


def test_grid_mismatch(scn):
    real = scn.realization()
    with pytest.raises(ValueError):
        propagate_frame(real, scn.source, n_bins=scn.source.n_bins + 1)
    with pytest.raises(ValueError):
        propagate_frame(real, scn.source, response=np.ones(3))


# -- schedules ----------------------------------------------------------------------------------

def test_static_schedule_frames_identical(scn):
    rest = scn.codebooks[0]
    frames = run_schedule(scn.realization(), CodebookSchedule(((0, rest),)), ScattererMotion(), scn.source,
                          12, panel=scn.panel)
    assert len(frames) == 12
    assert all(np.array_equal(f.spectrum, frames[0].spectrum) for f in frames)
    assert [f.frame_index for f in frames] == list(range(12))


def test_switch_peaks_noise_free(scn):
    sched = CodebookSchedule.alternating([10, 20], *scn.codebooks)
    frames = run_schedule(scn.realization(), sched, ScattererMotion(), scn.source, 30, panel=scn.panel)
    d = frame_distances(frames)
    assert set(np.flatnonzero(d > 0)) == {10, 20}


def test_schedule_beyond_run(scn):
    sched = CodebookSchedule.alternating([10], *scn.codebooks)
    with pytest.raises(ScheduleError):
        run_schedule(scn.realization(), sched, ScattererMotion(), scn.source, 10, panel=scn.panel)


def test_source_invariance_enforced(scn):
    calls = {"n": 0}

    def wobbly():
        calls["n"] += 1
        return scn.source.with_spectrum(scn.source.spectrum * (1 + 1e-9 * calls["n"]))

    with pytest.raises(SourceVarianceError):
        run_schedule(scn.realization(), CodebookSchedule(((0, scn.codebooks[0]),)), ScattererMotion(),
                     wobbly, 5, panel=scn.panel)
    steady = run_schedule(scn.realization(), CodebookSchedule(((0, scn.codebooks[0]),)), ScattererMotion(),
                          lambda: scn.source, 3, panel=scn.panel)
    assert len(steady) == 3


def test_channel_states_apply_drift_then_switch(scn):
    sched = CodebookSchedule.alternating([2], *scn.codebooks)
    states = list(channel_states(scn.realization(), sched, ScattererMotion(), 4, panel=scn.panel,
                                 initial_codebook=scn.codebooks[0]))
    assert [c for _, _, c in states] == [False, False, True, False]


def test_run_schedule_does_not_mutate_realization(scn):
    real = scn.realization()
    state = real.rng.bit_generator.state
    ens = real.ensemble
    run_schedule(real, CodebookSchedule.alternating([3], *scn.codebooks), scn.motion("walking"), scn.source,
                 6, 20.0, panel=scn.panel)
    assert real.rng.bit_generator.state == state and real.ensemble is ens


# -- export ----------------------------------------------------------------------------------------

def test_frame_exports(tmp_path, scn):
    frames = run_schedule(scn.realization(), CodebookSchedule(((0, scn.codebooks[0]),)),
                          scn.motion("walking"), scn.source, 3, 20.0, panel=scn.panel)
    frames_to_csv(frames, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "frame_index,bin_index,re,im"
    assert len(lines) == 1 + 3 * frames[0].n_bins
    fi, k, re, im = lines[1 + frames[0].n_bins + 5].split(",")
    assert (int(fi), int(k)) == (1, 5)
    assert complex(float(re), float(im)) == frames[1].spectrum[5]
    blob = frames_to_bytes(frames)
    assert blob[:4] == frames[0].n_bins.to_bytes(4, "little")
    back = frames_from_bytes(blob)
    assert len(back) == 3
    np.testing.assert_allclose(back[2].spectrum, frames[2].spectrum.astype(np.complex64), rtol=1e-6)
    with pytest.raises(ValueError):
        frames_from_bytes(blob[:-4])
