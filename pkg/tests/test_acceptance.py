"""Acceptance criteria 1 to 10; each test prints one PASS/FAIL line.

The lines are also collected into a summary section at the end of the run.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np

from conftest import CAT_ALPHAS, CUBIC_SWEEP, N_MAX
from stellar.bounds import assess_protocol, nogo_region_multicopy, nogo_region_subadditive, wln_bound_check
from stellar.fock import FockState, fidelity, normalize_amplitudes, trace_distance_pure
from stellar.gaussian import GaussianCircuit, apply_circuit, gaussian_rows
from stellar.profile import OptimizerOptions, approx_rank_from_profile, profile, stellar_fidelity, subadditive_profile_bound
from stellar.states import make_coherent, make_fock
from stellar.wigner import wln

F1 = 3 * math.sqrt(3) / (4 * math.e)


def probe_points(*regions):
    """Every step of every region, just to the right of it, plus p = 1."""
    ps = {1.0}
    for r in regions:
        for rect in r.rectangles:
            ps.add(min(1.0, rect.p_gt + 1e-9))
    return sorted(ps)


def worst_excess(inner, outer):
    """Largest amount by which inner's boundary rises above outer's."""
    return max(inner.delta_star(p) - outer.delta_star(p) for p in probe_points(inner, outer))


def test_criterion_1_single_photon(criterion):
    t = time.perf_counter()
    value = stellar_fidelity(make_fock(1), 0).value
    elapsed = time.perf_counter() - t
    ok = abs(value - F1) <= 1e-3 and elapsed < 10
    assert criterion(1, ok, f"f_0(|1>) = {value:.6f} vs {F1:.6f}, {elapsed:.1f} s")


def test_criterion_2_two_photon_conversion(criterion, profiles):
    two = profiles.fock(2)
    pair = profiles.pair()
    seconds = profiles.timings[("two_photon_pair_profile",)]
    region = nogo_region_multicopy(two, pair)
    dom = region.dominant()
    gap = two.values[0] - pair.values[0]
    ok = (
        abs(two.values[0] - 0.38) <= 0.01
        and abs(pair.values[0] - 0.25) <= 0.01
        and len(dom) == 1
        and dom[0].p_gt == 0.0
        and abs(dom[0].delta_lt - gap) < 1e-12
        and seconds < 300
    )
    detail = f"f_0(|2>) = {two.values[0]:.5f}, f_0(|1,1>) = {pair.values[0]:.5f}, {len(dom)} dominant rectangle (0,1] x [0,{dom[0].delta_lt:.5f}), two-mode run {seconds:.0f} s"
    assert criterion(2, ok, detail)


def test_criterion_3_pair_approx_rank(criterion, profiles):
    pair = profiles.pair()
    rank = approx_rank_from_profile(pair)
    th = rank.thresholds()
    ok = (
        abs(pair.values[1] - F1) <= 2e-3
        and len(th) == 2
        and abs(th[0] - (1 - F1)) <= 1e-3
        and abs(th[1] - 0.75) <= 1e-3
        and [r for _, r in rank.breakpoints] == [2, 1, 0]
    )
    assert criterion(3, ok, f"f_1(|1,1>) = {pair.values[1]:.6f}, breakpoints at eps = {', '.join(f'{x:.5f}' for x in th)}")


def test_criterion_4_wigner_negativity(criterion):
    w2 = wln(make_fock(2))
    w11 = 2 * wln(make_fock(1))
    squeezed = apply_circuit(GaussianCircuit(1, passive=(0.3,), alphas=(0.4 - 0.2j,), rs=(0.5,)), make_fock(0, 0), out_cutoff=60)
    w_gauss = max(wln(make_coherent(1.0 + 0.5j)), wln(squeezed))
    p_star = wln_bound_check(w2, w11, 1.0)["p_threshold"]
    ok = abs(w2 - 0.55) <= 0.01 and abs(w11 - 0.71) <= 0.01 and w_gauss <= 1e-4 and abs(p_star - 0.77) <= 0.01
    assert criterion(4, ok, f"WLN(|2>) = {w2:.5f}, WLN(|1,1>) = {w11:.5f}, Gaussian max {w_gauss:.1e}, p* = {p_star:.4f}")


def test_criterion_5_fock_terminal(criterion, profiles):
    found, ok = [], True
    for n in range(1, 5):
        vals = profiles.fock(n).values
        first = next((i for i, v in enumerate(vals) if v >= 1 - 1e-6), None)
        found.append(first)
        ok = ok and first == n and abs(vals[n] - 1.0) <= 1e-6
    assert criterion(5, ok, f"first index reaching 1 for |1>..|4>: {found}")


def test_criterion_6_fock_copies_to_gkp(criterion, profiles):
    t = time.perf_counter()
    gkp = profiles.gkp()
    one = profiles.fock(1)
    seconds = profiles.timings.get(("gkp_profile",), time.perf_counter() - t)
    regions = [nogo_region_subadditive(one, k, gkp) for k in range(1, 6)]
    excess = max(worst_excess(regions[k + 1], regions[k]) for k in range(4))
    floor = regions[0].floor
    ok = excess <= 0 and floor > 0 and gkp.n_max >= N_MAX and seconds < 1800
    assert criterion(6, ok, f"k=1..5 nested (max excess {excess:.2g}), k=1 floor {floor:.5f}, GKP n_max {gkp.n_max}, profile {seconds:.0f} s")


def test_criterion_7_cats_to_gkp(criterion, profiles):
    gkp = profiles.gkp()
    regions = [nogo_region_subadditive(profiles.cat(a), 1, gkp) for a in CAT_ALPHAS]
    excess = [worst_excess(regions[i + 1], regions[i]) for i in range(len(regions) - 1)]
    floors = [r.floor for r in regions]
    ok = all(e <= 0 for e in excess) and all(f > 0 for f in floors)
    pairs = ", ".join(f"{a}->{b}: {e:+.2e}" for a, b, e in zip(CAT_ALPHAS, CAT_ALPHAS[1:], excess))
    detail = f"floors {[round(f, 5) for f in floors]}, max rise of delta* between successive amplitudes {pairs}"
    assert criterion(7, ok, detail)


def test_criterion_8_trisqueezed_to_cubic(criterion, profiles):
    tri = profiles.trisqueezed()
    ok, floors = True, []
    for c in CUBIC_SWEEP:
        region = nogo_region_multicopy(tri, profiles.cubic(c))
        dom = region.dominant()
        floors.append(round(region.floor, 5))
        ok = ok and not region.empty and len(dom) == 1 and dom[0].n == 0 and dom[0].p_gt == 0.0
        # raising the fidelity at fixed p never turns "inside" into "outside"
        for p in (0.05, 0.3, 1.0):
            inside = [assess_protocol(region, p, f)["verdict"] == "inside" for f in np.linspace(0, 1, 201)]
            ok = ok and all(b or not a for a, b in zip(inside, inside[1:]))
    assert criterion(8, ok, f"cubic c = {list(CUBIC_SWEEP)}: single n=0 rectangle each, floors {floors}; assess monotone in F")


def _random_pure(rng, dim):
    return FockState(1, dim - 1, normalize_amplitudes(rng.normal(size=dim) + 1j * rng.normal(size=dim)))


def test_criterion_9_property_suites(criterion, profiles):
    from test_profile import grid_oracle_f0

    checks = {}
    rng = np.random.default_rng(99)
    # profile monotonicity
    checks["monotone"] = all(
        all(b >= a for a, b in zip(p.values, p.values[1:]))
        for p in (profiles.fock(2), profiles.pair(), profiles.gkp(), profiles.trisqueezed())
    )
    # Gaussian invariance of profiles
    psi = _random_pure(rng, 3)
    g = GaussianCircuit(1, passive=(1.1,), alphas=(0.3 - 0.2j,), rs=(0.3,))
    a = profile(psi, 1, OptimizerOptions(seed=1)).values
    b = profile(apply_circuit(g, psi, out_cutoff=60), 1, OptimizerOptions(seed=1)).values
    checks["invariance"] = np.allclose(a, b, atol=2e-3)
    # operator-matrix unitarity on blocks whose images fit in the cutoff
    err = 0.0
    for _ in range(4):
        m = gaussian_rows(rng.uniform(-1, 1), rng.uniform(0, 6.3), 2 * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform()), 401, 401)
        err = max(err, np.abs(m.conj().T @ m - np.eye(401))[:21, :21].max())
    checks["unitarity"] = err <= 1e-8
    # brute-force grid oracle
    checks["grid"] = all(abs(profiles.fock(n).values[0] - grid_oracle_f0(n)) <= 1e-3 for n in (1, 2))
    # sub-additive bound below the direct two-mode profile
    checks["subadditive"] = all(v <= profiles.pair().values[kn] + 1e-9 for kn, v in subadditive_profile_bound(profiles.fock(1), 2))
    # continuity of fidelity in trace distance
    worst = -1.0
    for _ in range(1000):
        dim = int(rng.integers(2, 9))
        x, y, tau = (_random_pure(rng, dim) for _ in range(3))
        worst = max(worst, abs(fidelity(x, tau) - fidelity(y, tau)) - trace_distance_pure(x, y))
    checks["continuity"] = worst <= 1e-12
    ok = all(checks.values())
    assert criterion(9, ok, ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()) + f" (unitarity err {err:.1e})")


def test_criterion_10_determinism(criterion, tmp_path):
    outputs = []
    for threads in (1, 4, 8):
        cwd = tmp_path / f"t{threads}"
        cwd.mkdir()
        env = dict(os.environ, STELLAR_THREADS=str(threads))
        cmd = [sys.executable, "-m", "stellar", "profile", "cat:2:odd", "--n-max", "3", "--seed", "5", "--starts", "16", "--threads", str(threads), "--out", "prof", "--format", "both"]
        subprocess.run(cmd, check=True, env=env, cwd=cwd)
        outputs.append((cwd / "prof.json").read_bytes() + (cwd / "prof.csv").read_bytes())
    ok = outputs[0] == outputs[1] == outputs[2]
    values = json.loads((tmp_path / "t1" / "prof.json").read_text())["values"]
    assert criterion(10, ok, f"cat profile bytes identical for threads 1, 4, 8 (values {[round(v, 6) for v in values]})")
