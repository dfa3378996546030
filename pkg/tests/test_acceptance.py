"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import norm

from onebit.cli import main as cli_main
from onebit.codebook import (brute_force_symbols, candidate_set, candidate_symbols,
                             design_codebook)
from onebit.coded.bicm import BicmConfig, ber_crossing_db, is_waterfall_monotone, run_bicm
from onebit.coded.ldpc import default_code
from onebit.core import db_to_linear, ula_response
from onebit.detector import detect_ml, ml_weights, symbol_log_likelihoods
from onebit.rates import (blahut_arimoto_dmc, capacity_gap_db, exact_mi, linear_capacity,
                          snr_for_rate)
from oracles import all_outputs, h2, likelihood

RESULTS = []


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} -- {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def ula_deg(m, deg):
    return ula_response(m, math.radians(deg))


def random_configs(count, seed, m_max=8):
    rng = np.random.default_rng(seed)
    return [(int(rng.integers(1, m_max + 1)), float(rng.uniform(-90, 90))) for _ in range(count)]


def test_criterion_1_membership():
    t0 = time.perf_counter()
    worst = 0.0
    for m, deg in random_configs(50, seed=101):
        b = ula_deg(m, deg)
        full = brute_force_symbols(b, max_m=8)
        s_full = full.symbols[full.argmax_magnitude()]
        cand = candidate_symbols(b)
        # s_max must be a member, and nothing in the candidate set may beat it
        gap = max(float(np.min(np.abs(cand.symbols - s_full))),
                  abs(abs(s_full) - float(np.abs(cand.symbols).max())))
        worst = max(worst, gap)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 300
    assert report(1, "max-magnitude symbol lies in the candidate set", ok,
                  f"50 configs, worst gap {worst:.2e} (<= 1e-12), {elapsed:.1f} s (< 300 s)")


def test_criterion_2_bounds():
    t0 = time.perf_counter()
    fails = 0
    for m, deg in random_configs(1000, seed=202):
        mags = np.abs(candidate_symbols(ula_deg(m, deg)).symbols)
        if not (mags.min() > math.sqrt(m / 2)) or not (mags.max() >= 2 * math.sqrt(2 * m) / math.pi):
            fails += 1
    elapsed = time.perf_counter() - t0
    ok = fails == 0 and elapsed < 60
    assert report(2, "beamforming-gain bounds (exact inequalities)", ok,
                  f"1000 configs, {fails} violations, {elapsed:.1f} s (< 60 s)")


def test_criterion_3_candidate_size():
    over = sum(len(candidate_set(ula_deg(m, deg))) > 4 * m
               for m, deg in random_configs(1000, seed=303, m_max=16))
    size8 = len(candidate_set(ula_deg(8, 10)))
    ok = over == 0 and size8 == 32
    assert report(3, "candidate-set size", ok,
                  f"{over} of 1000 configs exceed 4M; |X| = {size8} at M=8, theta=10 deg (want 32)")


def test_criterion_4_ml_oracle():
    b_t = ula_deg(8, 10)
    disagreements = 0
    worst_norm = 0.0
    cases = 0
    for n in (1, 2, 3, 4):
        b_r = ula_deg(n, 10)
        outputs = np.array(all_outputs(n))
        for k in (2, 4, 8):
            cb = design_codebook(b_t, k)
            for rho in (0.01, 0.1, 1.0, 10.0):
                w = ml_weights(cb, b_r, rho)
                ll = symbol_log_likelihoods(outputs, w)
                worst_norm = max(worst_norm, float(np.max(np.abs(np.exp(ll).sum(axis=0) - 1))))
                dec = detect_ml(outputs, w)
                for r, d in zip(outputs, dec):
                    post = np.array([likelihood(r, s, b_r, rho) for s in cb.symbols])
                    # exact ties may resolve to any maximiser
                    if post[d] < post.max() * (1 - 1e-12):
                        disagreements += 1
                cases += 1
    ok = disagreements == 0 and worst_norm <= 1e-9
    assert report(4, "ML detector vs factorized posterior", ok,
                  f"{cases} (N, K, rho) cases, {disagreements} disagreements, "
                  f"normalization error {worst_norm:.1e} (<= 1e-9)")


def test_criterion_5_rates():
    p = 0.11
    bsc = blahut_arimoto_dmc([[1 - p, p], [p, 1 - p]]).rate_bits
    rho = norm.isf(p) ** 2 / 2
    mi = exact_mi(np.array([1.0, -1.0]), np.array([1.0 + 0j]), rho).rate_bits
    lin = linear_capacity(8, 8, db_to_linear(-10)).rate_bits
    errs = (abs(bsc - (1 - h2(p))), abs(mi - (1 - h2(p))), abs(lin - 2.8875))
    ok = errs[0] <= 1e-4 and errs[1] <= 1e-6 and errs[2] <= 1e-4
    assert report(5, "rate computations", ok,
                  f"BA BSC err {errs[0]:.1e} (<= 1e-4), exact_mi BSC err {errs[1]:.1e} (<= 1e-6), "
                  f"linear {lin:.5f} vs 2.8875 (<= 1e-4)")


def test_criterion_6_capacity_gap():
    t0 = time.perf_counter()
    b4 = ula_deg(4, 10)
    gap4, lin4, one4 = capacity_gap_db(4, 4, b4, b4, 1.0, mode="full")
    b8 = ula_deg(8, 10)
    gap8, lin8, one8 = capacity_gap_db(8, 8, b8, b8, 1.5, mode="candidate-reduced")
    elapsed = time.perf_counter() - t0
    ok = math.isfinite(gap4) and gap4 <= 5.0 and math.isfinite(gap8) and gap8 <= 6.0 and elapsed < 1800
    assert report(6, "capacity gap at desk scale", ok,
                  f"M=N=4 full @1.0 bit: {gap4:.3f} dB (<= 5); "
                  f"M=N=8 reduced @1.5 bits: {gap8:.3f} dB (<= 6); {elapsed:.0f} s")


def test_criterion_7_coded_chain():
    t0 = time.perf_counter()
    b = ula_deg(8, 10)
    cb = design_codebook(b, 8)
    mi_db = snr_for_rate(lambda rho: exact_mi(cb, b, rho).rate_bits, 1.5, -25.0, 5.0, 1e-3)
    grid = [round(-12.0 + 0.25 * i, 2) for i in range(17)]
    cfg = BicmConfig(cb, default_code(), b, grid, seed=2018, target_frame_errors=50,
                     max_frames=200, batch_frames=40)
    points = run_bicm(cfg)
    cross = ber_crossing_db(points)
    mono = is_waterfall_monotone(points)
    elapsed = time.perf_counter() - t0
    ok = cross - mi_db <= 3.0 and mono and elapsed < 3600
    assert report(7, "coded BICM waterfall vs MI threshold", ok,
                  f"MI=1.5 at {mi_db:.3f} dB, BER<=1e-4 at {cross:.3f} dB, "
                  f"distance {cross - mi_db:.2f} dB (<= 3.0), monotone={mono}, {elapsed:.0f} s")


def test_criterion_8_determinism(tmp_path):
    cfg = tmp_path / "det.yaml"
    cfg.write_text(
        "array: {M: 8, N: 8, theta_T_deg: 10, theta_R_deg: 10}\n"
        "K: 8\n"
        "snr_db: [-11, -10.5, -10]\n"
        "seed: 17\n"
        "rates: {K_list: [2, 8], capacity_mode: none, mi_method: monte-carlo, mc_samples: 5000}\n"
        "ber: {max_frames: 48, batch_frames: 8, target_frame_errors: 20}\n")
    outputs = {}
    for tag, threads in [("a1", 1), ("b1", 1), ("c4", 4), ("d4", 4)]:
        for cmd in ("ber", "rates"):
            out = tmp_path / f"{cmd}_{tag}"
            rc = cli_main([cmd, "--config", str(cfg), "--threads", str(threads),
                           "--out-dir", str(out)])
            assert rc == 0
            outputs[(cmd, tag)] = (out / ("ber.csv" if cmd == "ber" else "rates.csv")).read_bytes()
    same = all(outputs[(cmd, t)] == outputs[(cmd, "a1")]
               for cmd in ("ber", "rates") for t in ("b1", "c4", "d4"))
    assert report(8, "byte-identical CSVs across runs and thread counts", same,
                  "ber.csv and rates.csv compared over 2 runs x threads {1, 4}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
