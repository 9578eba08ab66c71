"""Acceptance criteria for the reproduction, one check per criterion.

Each check prints a single ``PASS``/``FAIL`` line with the measured numbers.
Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
Every threshold below is fixed in advance; seeds are fixed and were not tuned.
Expect several minutes of runtime on one core.
"""
import functools
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from memlearn import device, experiments as ex, solver, toy
from memlearn.network import NetworkDims, build_network
from memlearn.trainer import TargetMap, TrainerConfig, random_map, train_until_learned

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))
from oracles import nodal_oracle  # noqa: E402

SEED = 20
REALIZATIONS = 100
WORKERS = os.cpu_count() or 1

# thresholds
SUCCESS_3X3_MIN = 0.95
SUCCESS_4X4_MIN = 0.90
CV_TARGET, CV_TOL = 1 / 3, 0.10
RELEARN_CYCLES, RELEARN_REALIZATIONS = 10, 10
RECOVERY_MIN = 0.95
ORACLE_RTOL = 1e-9
ORACLE_NETWORKS = 100
POLARITY_GAP_MAX = 0.10
TOY_MEDIAN_SEEDS = 101
PROPERTY_CASES = 1000


@functools.lru_cache(maxsize=None)
def sweep(model, grid, variant=ex.BASELINE):
    spec = ex.SweepSpec(model=model, grid=list(grid), realizations=REALIZATIONS, seed=SEED,
                        variant=variant, workers=WORKERS)
    return ex.run_success_sweep(spec)


def non_decreasing(values):
    return all(b >= a for a, b in zip(values, values[1:]))


def criterion_1():
    res = sweep(device.BMS, ((3, 3, 20), (3, 3, 100), (3, 3, 400)))
    s = [p.success for p in res.points]
    ok = non_decreasing(s) and s[-1] >= SUCCESS_3X3_MIN
    return ok, f"3x3 BMS success@1000 over N_bulk 20/100/400 = {s}; need non-decreasing and last >= {SUCCESS_3X3_MIN}"


def criterion_2():
    res = sweep(device.BMS, ((4, 4, 70), (4, 4, 200), (4, 4, 600)))
    s = [p.success for p in res.points]
    ok = non_decreasing(s) and s[-1] >= SUCCESS_4X4_MIN
    return ok, f"4x4 BMS success@1000 over N_bulk 70/200/600 = {s}; need non-decreasing and last >= {SUCCESS_4X4_MIN}"


def criterion_3():
    res = ex.run_relearn_shuffle(NetworkDims(3, 400, 3), TrainerConfig(), RELEARN_CYCLES, SEED,
                                 realizations=RELEARN_REALIZATIONS, workers=WORKERS)
    cv = float(res.cv[-1])
    ok = abs(cv - CV_TARGET) <= CV_TOL
    return ok, (f"3x400x3 <CV> after {len(res.cv) - 1} maps ({RELEARN_CYCLES} shuffle cycles, "
                f"{RELEARN_REALIZATIONS} realizations) = {cv:.4f}; need {CV_TARGET:.4f} +- {CV_TOL} "
                f"[failures {res.failures}, mean-R decreases {res.mean_decreases}]")


def criterion_4():
    trace = ex.run_perturbation(NetworkDims(4, 200, 4), TrainerConfig(), period=100, fraction=0.1,
                                factor=1.05, seed=SEED, events=20)
    frac = trace.recovered_fraction
    ok = trace.learned_at is not None and len(trace.events) == 20 and frac >= RECOVERY_MIN
    unchanged = sum(e.error_after == 0 for e in trace.events)
    return ok, (f"4x200x4 identity map learned at {trace.learned_at}; recovered {frac:.2f} of "
                f"{len(trace.events)} events ({unchanged} with no error increase); need >= {RECOVERY_MIN}")


def criterion_5():
    n_small = len(ex.triangle(0.05, 20))
    n_large = len(ex.triangle(-0.5, 50))
    demo = ex.run_device_demo(ex.hysteresis_demo_params(), ex.hysteresis_waveform())
    r0 = demo.r[0]
    # r[n] is the resistance before sample n is applied
    during_small = demo.r[: 3 * n_small + 1]
    after_large = demo.r[3 * n_small + n_large:]
    constant_before = bool(np.all(during_small == r0))
    increased = bool(after_large[0] > r0)
    constant_after = bool(np.all(after_large == after_large[0]))
    ok = constant_before and increased and constant_after
    return ok, (f"R stays {r0} through three sub-threshold triangles: {constant_before}; "
                f"rises to {after_large[0]:.6g} after the negative excursion: {increased}; "
                f"then constant: {constant_after}")


def criterion_6():
    rng = np.random.default_rng(SEED)
    worst_v = worst_i = 0.0
    for _ in range(ORACLE_NETWORKS):
        n_in, n_bulk, n_out = int(rng.integers(1, 4)), int(rng.integers(1, 6)), int(rng.integers(1, 4))
        r1 = rng.uniform(50, 5000, (n_in, n_bulk))
        r2 = rng.uniform(50, 5000, (n_bulk, n_out))
        i, k = int(rng.integers(n_in)), int(rng.integers(n_out))
        v = float(rng.choice([1e-4, -0.2, 1.0]))
        ref_v, ref_i = nodal_oracle(r1, r2, i, k, v)
        for method in solver.METHODS:
            sol = solver.solve_conductances(1 / r1, 1 / r2, i, k, v, method)
            worst_v = max(worst_v, np.max(np.abs(sol.node_voltages - ref_v)) / abs(v))
            worst_i = max(worst_i, abs(sol.terminal_current - ref_i) / abs(ref_i))
    net = build_network(NetworkDims(3, 100, 3), device.BMS, np.random.default_rng(SEED))
    target = random_map(3, 3, np.random.default_rng(SEED + 1))
    cfg = TrainerConfig(solver="schur", check_conservation=True)
    rec = train_until_learned(net, target, cfg, np.random.default_rng(SEED + 2))
    cons = rec.diagnostics.max_conservation_error
    ok = worst_v <= ORACLE_RTOL and worst_i <= ORACLE_RTOL and cons <= ORACLE_RTOL and rec.diagnostics.solves > 0
    return ok, (f"{ORACLE_NETWORKS} random nets vs brute-force oracle: max voltage error {worst_v:.2e} "
                f"(relative to drive), max current error {worst_i:.2e}; training run with "
                f"{rec.diagnostics.solves} solves: max |I_src - I_sink|/I = {cons:.2e}; need <= {ORACLE_RTOL}")


def criterion_7():
    a = [p.success for p in sweep(device.BCM, ((3, 3, 20), (3, 3, 100), (3, 3, 400))).points]
    b = [p.success for p in sweep(device.BCM, ((4, 4, 70), (4, 4, 200), (4, 4, 600))).points]
    ok = non_decreasing(a) and non_decreasing(b)
    return ok, f"BCM success@1000: 3x3 over 20/100/400 = {a}; 4x4 over 70/200/600 = {b}; need both non-decreasing"


def criterion_8():
    base = sweep(device.BMS, ((4, 4, 70), (4, 4, 200), (4, 4, 600))).point(200)
    pol = sweep(device.BMS, ((4, 4, 200),), ex.RANDOM_POLARITY).points[0]
    eq = sweep(device.BMS, ((4, 4, 200),), ex.EQUAL_R).points[0]
    gap = abs(pol.success - base.success)
    t_base, t_eq = base.steps_to(0.5), eq.steps_to(0.5)
    slower = t_base is not None and t_eq is not None and t_eq > t_base
    broad = float(np.mean(eq.final_std_r)) > 0
    ok = gap <= POLARITY_GAP_MAX and slower and broad
    return ok, (f"4x200x4 success@1000 baseline {base.success:.2f}, random polarity {pol.success:.2f} "
                f"(gap {gap:.2f}, need <= {POLARITY_GAP_MAX}); steps to 0.5 success baseline {t_base}, "
                f"equal-R {t_eq} (need larger); equal-R final std R {np.mean(eq.final_std_r):.1f}")


def criterion_9():
    rng = np.random.default_rng(SEED)
    maps = list(ex.TOY_MAPS_6.values())
    trace = toy.toy_train(toy.build_toy(6, 300, 6, rng), maps, 1_000_000, rng)
    first = maps[0]
    medians = []
    for n_mid in (50, 150, 300):
        times = [toy.first_map_learning_time(6, n_mid, 6, first, seed=1000 * n_mid + s, max_steps=1_000_000)
                 for s in range(TOY_MEDIAN_SEEDS)]
        medians.append(float(np.median([np.inf if t is None else t for t in times])))
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    ok = trace.all_learned and decreasing
    return ok, (f"6x300x6 toy learned all six maps: {trace.all_learned} (at steps {trace.learned_at}); "
                f"median first-map time over N_mid 50/150/300 = {medians}; need strictly decreasing")


def criterion_10():
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(HERE / "test_properties.py")],
        capture_output=True, text=True,
    )
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    return proc.returncode == 0, f"property suite ({PROPERTY_CASES} cases per invariant): {summary}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def line(n, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"


@pytest.mark.parametrize("n", range(1, len(CRITERIA) + 1))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n - 1]()
    with capsys.disabled():
        print("\n" + line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, check in enumerate(CRITERIA, start=1):
        ok, detail = check()
        failed += not ok
        print(line(n, ok, detail), flush=True)
    print(f"{len(CRITERIA) - failed}/{len(CRITERIA)} criteria passed")
    sys.exit(1 if failed else 0)
