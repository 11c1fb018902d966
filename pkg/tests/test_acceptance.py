"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``[PASS]`` or ``[FAIL]`` line (visible with ``pytest -v``)
before asserting, so a full run doubles as the acceptance report.
"""

import math

import numpy as np
import pytest
from scipy import stats

from cavity_rbm.channel import CodebookSchedule
from cavity_rbm.cli import main
from cavity_rbm.config import config_from_dict
from cavity_rbm.eigenmode import (TWO_PI, CavityGeometry, EigenmodeEnsemble, Mode, critical_volume,
                                  mode_spectral_magnitude, mode_time_response, sample_ensemble,
                                  transfer_function)
from cavity_rbm.experiments import EXPERIMENTS, exp_ber_table, exp_file_roundtrip, exp_psd_variance, run_detection
from cavity_rbm.link import build_scenario, run_ofdm_link
from cavity_rbm.modem import dtw_distance
from cavity_rbm.perturbation import RectangularCavity, eigenfrequency_shift
from oracles import brute_force_dtw, resized_shift, weyl_count

pytestmark = pytest.mark.acceptance


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    assert ok, detail


def test_criterion_1_critical_volume(capsys):
    dv = critical_volume(0.1)
    report(capsys, 1, abs(dv - 1.2e-4) / 1.2e-4 < 0.01, f"critical dV(lambda=0.1 m) = {dv:.4e} m^3 vs 1.2e-4 (1%)")


def test_criterion_2_perturbation_oracle(capsys):
    box = RectangularCavity(2.0, 2.0, 4.0)
    delta = box.d / 1000
    num = eigenfrequency_shift(box, (1, 0, 1), "z+", delta)
    exact = resized_shift(1, 0, 1, 2, 2, 4, "z", delta)
    rel = abs(num - exact) / abs(exact)
    ds = [box.d / 2000, box.d / 1000, box.d / 500]
    slopes = np.array([eigenfrequency_shift(box, (1, 0, 1), "z+", d) / d for d in ds])
    spread = float(np.max(np.abs(slopes / slopes[1] - 1)))
    report(capsys, 2, rel < 0.02 and spread < 0.05,
           f"TE101 shift rel. error {rel:.2e} (< 2%), linearity spread {spread:.2e} (< 5%)")


def test_criterion_3_lorentzian_linewidth(capsys):
    tau, w0 = 5e-8, 2e10
    g = CavityGeometry(1.0, tau)
    ens = EigenmodeEnsemble.from_modes([Mode(w0, 1.0, 0.0, tau)], 1.9e10, 2.1e10)
    grid = np.linspace(w0 - 20 / tau, w0 + 20 / tau, 8001)
    p = np.abs(transfer_function(ens, g, grid)) ** 2
    above = grid[p >= 0.5 * p.max()]
    step = grid[1] - grid[0]
    fwhm_err = abs((above[-1] - above[0]) - 1 / tau)

    m = Mode(0.0, 1.0, 0.0, 1.0)
    dt = 0.01
    t = np.arange(0, 40.0, dt)
    x = mode_time_response(m, t)
    spec = np.fft.fftshift(np.fft.ifft(x)) * x.size * dt / (2 * np.pi)
    w = np.fft.fftshift(np.fft.fftfreq(x.size, dt)) * 2 * np.pi
    ref = mode_spectral_magnitude(m, w)
    k = int(np.argmax(ref))
    fft_err = abs(abs(spec[k]) - ref[k]) / ref[k]
    report(capsys, 3, fwhm_err <= step and fft_err < 0.02,
           f"FWHM error {fwhm_err:.3e} rad/s (bin {step:.3e}), FFT peak error {fft_err:.2e} (< 2%)")


def test_criterion_4_ensemble_statistics(capsys):
    g = CavityGeometry(16.0, 5e-8)
    lo, hi = TWO_PI * 3.0e9, TWO_PI * 3.1e9
    ens = sample_ensemble(2024, g, lo, hi)
    n = ens.n_m
    sp = np.diff(ens.omega)
    p = stats.kstest(sp / sp.mean(), lambda x: 1 - np.exp(-np.pi * x ** 2 / 4)).pvalue
    mean_z = abs(ens.phi.mean() - np.pi) / (np.pi / math.sqrt(3 * n))
    var_z = abs(ens.phi.var() - np.pi ** 2 / 3) / (np.pi ** 2 * math.sqrt(4 / 45 / n))
    expected = round(weyl_count(hi, 16.0) - weyl_count(lo, 16.0))
    ok = sp.size >= 10_000 and p > 0.01 and mean_z < 3 and var_z < 3 and n == expected
    report(capsys, 4, ok, f"{sp.size} spacings KS p={p:.3f}; phi mean {mean_z:.2f} sigma, var {var_z:.2f} sigma; "
                          f"modes {n} vs Weyl {expected}")


def test_criterion_5_dtw_oracle(capsys):
    rng = np.random.default_rng(2025)
    agree = 0
    for _ in range(1000):
        n, m = rng.integers(1, 11, 2)
        a, b = rng.normal(size=n), rng.normal(size=m)
        agree += dtw_distance(a, b) == brute_force_dtw(a, b)
    self_zero = all(dtw_distance(a, a) == 0.0 for a in (rng.normal(size=int(k)) for k in rng.integers(1, 50, 200)))
    report(capsys, 5, agree == 1000 and self_zero, f"{agree}/1000 instances exact, d(a,a)=0 on 200 inputs: {self_zero}")


def test_criterion_6_detection_and_ber_ordering(capsys):
    cfg = config_from_dict({"seed": 2026, "plots": False})
    switches = list(range(10, 100, 10))
    exact = 0
    for trial in range(100):
        trace, _ = run_detection(build_scenario(cfg, trial), switches, "walking", 100)
        exact += trace.pulse_indices == switches
    rows = {r["scenario"]: r["ber"] for r in exp_ber_table(cfg)["rows"]}
    ppm_s, ppm_w, ppm_r, ofdm = rows["ppm_stationary"], rows["ppm_walking"], rows["ppm_running"], rows["ofdm_walking"]
    post = []
    for trial in range(20):
        scn = build_scenario(cfg, trial)
        sched = CodebookSchedule.alternating([2], *scn.codebooks)
        post.append(run_ofdm_link(scn, 6, "stationary", schedule=sched)[1].ber_from(1))
    post_mean = float(np.mean(post))
    ok = exact >= 99 and ppm_s == 0.0 and ppm_r > ppm_w >= 0.0 and ofdm > ppm_w and abs(post_mean - 0.5) <= 0.05
    report(capsys, 6, ok, f"exact detection {exact}/100; PPM BER stationary {ppm_s:.4f} walking {ppm_w:.4f} "
                          f"running {ppm_r:.4f}; OFDM (walking schedule) {ofdm:.4f}; "
                          f"OFDM after full switch {post_mean:.4f} (0.5 +- 0.05)")


@pytest.mark.slow
def test_criterion_7_file_roundtrip(capsys):
    failures = []
    for seed in range(20):
        cfg = config_from_dict({"seed": seed, "plots": False, "snr_db": 20.0})
        for preset in ("stationary", "walking"):
            res, _ = exp_file_roundtrip(cfg, preset=preset)
            if not (res["identical"] and res["bytes_sent"] == 1024):
                failures.append((seed, preset, res["ber"]))
    report(capsys, 7, not failures, f"1 KiB at 20 dB, 20 seeds x 2 presets; failures: {failures or 'none'}")


def test_criterion_8_psd_variance(capsys):
    res = exp_psd_variance(config_from_dict({"seed": 8, "plots": False}))
    r = res["pearson_units_variance"]
    report(capsys, 8, r > 0.9, f"Pearson(units, PSD variance) = {r:.4f} (> 0.9)")


@pytest.mark.slow
def test_criterion_9_reproducibility(capsys, tmp_path):
    mismatched = []
    for name in EXPERIMENTS:
        runs = []
        for k in ("a", "b"):
            out = tmp_path / name / k
            assert main([name, "--seed", "99", "--out", str(out)]) == 0
            runs.append({p.name: p.read_bytes() for p in out.iterdir() if p.suffix in (".csv", ".json")})
        if runs[0] != runs[1] or not runs[0]:
            mismatched.append(name)
    report(capsys, 9, not mismatched, f"CSV/JSON byte-identical on rerun for {len(EXPERIMENTS)} experiments; "
                                      f"mismatched: {mismatched or 'none'}")
