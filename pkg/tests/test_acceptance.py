"""
Acceptance suite.  Each test checks one criterion at its stated tolerance and
records a PASS/FAIL line, printed in the terminal summary.
"""

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from gaussqkd.cli import main
from gaussqkd.gaussian_core import (
    GaussianState,
    NonPhysicalError,
    hs_fidelity,
    is_physical,
    purify,
    purity,
)
from gaussqkd.protocol_sim import (
    ProtocolRun,
    SiftingWindow,
    ad_error_formula,
    advantage_distillation,
    simulate,
    window_error_prediction,
)
from gaussqkd.qkd_analysis import (
    CoherentInsecureError,
    StdSymmetricState,
    accept_interval,
    alpha,
    anticoincidence_prob,
    beta,
    coincidence_prob,
    efficiency,
    efficiency_mc,
    error_rate,
    eve_conditional,
    eve_overlap,
    security_lhs,
    standard_form_cm,
    xx_marginal,
)

from conftest import random_states
from oracles import momentum_integrated, overlap_probability, random_physical_cm

REF = (2.0, 1.5, 0.6)


def test_01_physicality_matches_dual_inequality(rng, report):
    t0 = time.perf_counter()
    disagreements = banded = 0
    for _ in range(10_000):
        lam = rng.uniform(0.5, 5.0)
        cx = rng.uniform(0.0, lam + 1.0)
        cp = rng.uniform(0.0, cx)
        p1 = (lam - cx) * (lam + cp)
        p2 = (lam - cp) * (lam + cx)
        # symplectic eigenvalues are sqrt(p1), sqrt(p2) when both are positive
        if min(abs(p1 - 1), abs(p2 - 1)) < 2e-9:
            banded += 1
            continue
        dual = p1 >= 1 and p2 >= 1
        if dual != is_physical(standard_form_cm(lam, cx, cp)):
            disagreements += 1
    elapsed = time.perf_counter() - t0
    ok = disagreements == 0 and elapsed < 10
    report(1, "is_physical vs dual inequality on 1e4 triples", ok,
           f"{disagreements} disagreements, {banded} in band, {elapsed:.2f} s")
    assert ok


def test_02_purification(rng, report):
    t0 = time.perf_counter()
    worst, inexact = 0.0, 0
    for k in range(1000):
        n = 1 + k % 2
        cm = random_physical_cm(rng, n)
        out = purify(cm)
        worst = max(worst, abs(purity(out) - 1))
        inexact += not np.array_equal(out[: 2 * n, : 2 * n], cm)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and inexact == 0 and elapsed < 10
    report(2, "purify: purity 1 and exact reduction on 1e3 CMs", ok,
           f"max |purity-1| {worst:.2e}, {inexact} inexact, {elapsed:.2f} s")
    assert ok


def test_03_overlap_oracle(rng, report):
    states = random_states(rng, 1000)
    t0 = time.perf_counter()
    worst = 0.0
    for s in states:
        x0a, x0b = rng.uniform(0.0, 3.0, size=2)
        e_pp, e_mm = eve_conditional(s, x0a, x0b).states()
        fid = hs_fidelity(e_pp, e_mm)
        worst = max(worst, abs(eve_overlap(s, x0a, x0b) ** 2 - fid) / fid)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5
    report(3, "eve_overlap^2 vs hs_fidelity on 1e3 samples", ok,
           f"max rel dev {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_04_security_equivalence(rng, report):
    states = random_states(rng, 10_000)
    mismatches = excluded = 0
    for s in states:
        scale = math.sqrt(s.lam)
        x0a, x0b = rng.uniform(0.0, 2.0 * scale, size=2)
        lhs = security_lhs(s, x0a, x0b)
        if abs(lhs) < 1e-8 * (x0a**2 + x0b**2):
            excluded += 1
            continue
        eps = error_rate(s, x0a, x0b)
        direct = eps / (1 - eps) < eve_overlap(s, x0a, x0b)
        mismatches += (lhs < 0) != direct
    ok = mismatches == 0
    report(4, "sign(security_lhs) vs odds < overlap on 1e4 samples", ok,
           f"{mismatches} mismatches, {excluded} excluded")
    assert ok


def test_05_interval_roots_and_length(rng, report):
    root_worst = len_worst = 0.0
    for s in random_states(rng, 2000, mixed=True):
        x0a = rng.uniform(0.1, 3.0)
        rep = accept_interval(s, x0a)
        lo, hi = rep.interval
        for x0b in (x0a + lo, x0a + hi):
            root_worst = max(root_worst, abs(security_lhs(s, x0a, x0b)) / x0a**2)
        a = rep.alpha
        d = 4 * math.sqrt(a) / (a - 1) * x0a
        len_worst = max(len_worst, abs((hi - lo) - d) / d)
    pure_dev = max(abs(alpha(StdSymmetricState.two_mode_squeezed(r)) - 1) for r in (0.1, 0.5, 1.0))
    ok = root_worst <= 1e-9 and len_worst <= 1e-12 and pure_dev <= 1e-9
    report(5, "interval endpoints are roots, D identity, alpha(pure) = 1", ok,
           f"root {root_worst:.2e} x0a^2, length rel {len_worst:.2e}, pure {pure_dev:.1e}")
    assert ok


def test_06_coherent_gate(rng, report):
    rejected_ok = True
    n_violating = 0
    accepted, low, raised = 0, 0, 0
    worst = math.inf
    while accepted < 10_000:
        lam = rng.uniform(1.0, 5.0)
        cx = rng.uniform(0.0, lam)
        cp = rng.uniform(0.0, cx)
        try:
            s = StdSymmetricState(lam, cx, cp)
        except NonPhysicalError:
            continue
        if not s.nppt:
            continue
        if not s.coherent_ok:
            n_violating += 1
            for call in (lambda: beta(s), lambda: accept_interval(s, 1.0, "coherent")):
                try:
                    call()
                    rejected_ok = False
                except CoherentInsecureError:
                    pass
            continue
        accepted += 1
        try:
            b = beta(s)
        except NonPhysicalError:
            raised += 1
            continue
        worst = min(worst, b)
        low += b < 1 - 1e-9
    ok = rejected_ok and n_violating > 0 and low == 0 and raised == 0
    report(6, "coherent-margin violators rejected, beta >= 1 on 1e4 accepted states", ok,
           f"{n_violating} violators rejected, min beta {worst:.12f}")
    assert ok


SPOT_STATES = [REF, (1.6, 1.2, 1.0), "tmsv"]


def _spot(spec):
    return StdSymmetricState.two_mode_squeezed(0.5) if spec == "tmsv" else StdSymmetricState(*spec)


def test_07_probability_oracle(report):
    sigma = 1e-3
    prob_worst = ratio_worst = 0.0
    for spec in SPOT_STATES:
        s = _spot(spec)
        g = GaussianState(s.cm, np.zeros(4))
        for x0a, x0b in [(1.0, 1.0), (0.6, 1.4)]:
            p00 = coincidence_prob(s, x0a, x0b, sigma)
            p01 = anticoincidence_prob(s, x0a, x0b, sigma)
            q00 = overlap_probability(g, x0a, x0b, sigma, nodes=(40, 60))
            q01 = overlap_probability(g, x0a, -x0b, sigma, nodes=(40, 60))
            prob_worst = max(prob_worst, abs(p00 - q00) / q00, abs(p01 - q01) / q01)
            ratio_worst = max(ratio_worst, abs(p01 / (p00 + p01) - error_rate(s, x0a, x0b)))
    ok = prob_worst <= 1e-4 and ratio_worst <= 1e-4
    report(7, "closed-form probabilities vs 4D Wigner quadrature, error_rate limit", ok,
           f"prob rel {prob_worst:.2e}, ratio abs {ratio_worst:.2e}")
    assert ok


def test_08_marginal(rng, report):
    s = StdSymmetricState(*REF)
    r = 12 * math.sqrt(s.lam / 2)
    mass = integrate.dblquad(lambda b, a: xx_marginal(s, a, b), -r, r, -r, r, epsabs=1e-12, epsrel=1e-10)[0]
    g = GaussianState(s.cm, np.zeros(4))
    worst = 0.0
    for xa, xb in rng.uniform(-2.5, 2.5, size=(100, 2)):
        worst = max(worst, abs(momentum_integrated(g, xa, xb) - xx_marginal(s, xa, xb)))
    ok = abs(mass - 1) <= 1e-6 and worst <= 1e-6
    report(8, "xx_marginal normalization and momentum integral of W", ok,
           f"|mass-1| {abs(mass - 1):.1e}, max dev {worst:.1e}")
    assert ok


MC_STATES = [REF, (1.6, 1.2, 1.0), (3.0, 2.6, 1.5), (1.5, 0.9, 0.5), (2.5, 2.0, 1.9)]


@pytest.mark.slow
def test_09_efficiency_cross_validation(report):
    t0 = time.perf_counter()
    details, ok = [], True
    for k, spec in enumerate(MC_STATES):
        s = StdSymmetricState(*spec)
        assert s.nppt and not s.is_pure
        q = efficiency(s).value
        mc = efficiency_mc(s, n_samples=10**7, seed=100 + k)
        tol = max(0.01 * q, 3 * mc.error_bound)
        ok &= abs(q - mc.value) <= tol
        details.append(f"{abs(q - mc.value) / q:.1e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    report(9, "efficiency quadrature vs 1e7-sample Monte Carlo on 5 states", ok,
           f"rel devs {', '.join(details)}, {elapsed:.1f} s")
    assert ok


def test_10_simulator_calibration(report):
    s = StdSymmetricState(*REF)
    win = SiftingWindow.for_state(s, 1.0, 0.05)
    rec = simulate(s, win, 10**6, 5, seed=2024)
    pred = window_error_prediction(s, win)
    sim_ok = abs(rec["empirical_error"] - pred) <= 3 * rec["empirical_error_se"]

    rng = np.random.default_rng(77)
    a = rng.integers(0, 2, 10**6, dtype=np.uint8)
    b = a ^ (rng.random(10**6) < 0.1).astype(np.uint8)
    ad = advantage_distillation(ProtocolRun.from_bits(a, b), 5, seed=78)
    exact = ad_error_formula(0.1, 5)[0]
    se = math.sqrt(exact * (1 - exact) / ad.n_blocks_accepted)
    ad_ok = abs(ad.post_error - exact) <= 3 * se
    ok = sim_ok and ad_ok
    report(10, "sift error vs window prediction, AD N=5 at eps=0.1", ok,
           f"sim {rec['empirical_error']:.5f} vs {pred:.5f} (SE {rec['empirical_error_se']:.5f}); "
           f"AD {ad.post_error:.2e} vs {exact:.3e} (SE {se:.1e})")
    assert ok


def _bin_means(ln, eff, width=0.1, top=1.0):
    edges = np.arange(0.0, top + width / 2, width)
    means = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (ln >= lo) & (ln < hi)
        means.append(eff[sel].mean() if sel.any() else math.nan)
    return edges, np.array(means)


@pytest.mark.slow
def test_11_qualitative_figures(tmp_path, report, capsys):
    fig = tmp_path / "fig"
    code = main(["sweep", "--lambda-range", "1.05", "4", "26", "--cx-range", "0", "4", "26",
                 "--cp-range", "0", "4", "26", "--quiet", "-o", str(tmp_path / "sweep.csv"),
                 "--figures", str(fig)])
    capsys.readouterr()
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    ln = np.array([float(r["ln"]) for r in rows if r["eff_individual"]])
    eff = np.array([float(r["eff_individual"]) for r in rows if r["eff_individual"]])
    low, high = eff[ln < 0.1].mean(), eff[ln > 0.5].mean()
    edges, means = _bin_means(ln, eff)
    rises = np.diff(means)
    k = int(np.nanargmax(rises))
    drop_at = edges[k + 1]
    e_head = (fig / "efficiency_vs_ln.csv").read_text().splitlines()[0]
    a_head = (fig / "ln_vs_alpha.csv").read_text().splitlines()[0]
    figs_ok = e_head == "ln,eff_individual,purity" and a_head == "alpha,ln,purity"
    ok = code == 0 and len(rows) >= 500 and low < high and 0.1 <= drop_at <= 0.3 and figs_ok
    report(11, "sweep: E(LN<0.1) < E(LN>0.5), steepest drop near LN 0.2, figure CSVs", ok,
           f"{len(rows)} points, means {low:.3f} vs {high:.3f}, drop at LN {drop_at:.1f}")
    assert ok


def test_12_determinism(tmp_path, report, capsys):
    sweep_args = ["sweep", "--lambda-range", "1.2", "3", "6", "--cx-range", "0", "3", "6",
                  "--cp-range", "0", "3", "6", "--quiet"]
    sim_args = ["simulate", "--lambda", "2", "--cx", "1.5", "--cp", "0.6", "--x0", "1",
                "--n", "300000", "--runs", "2", "--seed", "99"]
    outs = []
    for args in (sweep_args, sim_args):
        pair = []
        for k in range(2):
            path = tmp_path / f"{args[0]}{k}.out"
            assert main(args + ["-o", str(path)]) == 0
            pair.append(Path(path).read_bytes())
        outs.append(pair)
    capsys.readouterr()
    ok = all(a == b and a for a, b in outs)
    report(12, "repeated sweep and simulate give byte-identical output", ok,
           f"sweep {len(outs[0][0])} B, simulate {len(outs[1][0])} B")
    assert ok
