"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import csv
import io
import math

import numpy as np
import pytest

from povmdiscord import cli
from povmdiscord import correlation as corr
from povmdiscord import paperstate as ps
from povmdiscord import selftest
from povmdiscord.qmath import TwoQubitState, random_density_matrix, random_unitary

GRID_P = [round(0.1 * k, 1) for k in range(1, 10)]


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} ({detail})")
        assert passed, detail

    return emit


def dense_grid_oracle(p, points=100_000):
    t = np.arange(points) * (math.pi / points)
    values = ps.reduced_entropy_closed(p) - ps.f_theta_array(t, p) - ps.f_theta_array(t + math.pi, p)
    return float(values.max())


def csv_rows(argv, tmp_path, name):
    out = tmp_path / name
    assert cli.main([*argv, "--out", str(out)]) == 0
    return out.read_bytes()


def test_c1_endpoints(report):
    worst = 0.0
    for p in (0.0, 1.0):
        state = ps.build_state(p)
        worst = max(
            worst,
            abs(ps.best_projective(p)[0]),
            abs(corr.classical_correlation(state).value),
            abs(corr.mutual_information(state)),
            abs(ps.mutual_info_closed(p)),
        )
    report(1, "C_B and I vanish at p = 0 and p = 1", worst <= 1e-9, f"worst {worst:.2e}, tol 1e-9")


@pytest.mark.slow
def test_c2_projective_dominates_random_povms(report):
    worst = -math.inf
    total = 0
    for p in GRID_P:
        c_b, _ = ps.best_projective(p)
        samples = corr.monte_carlo(ps.build_state(p), 3, 100_000, planar=True, seed=2024)
        total += len(samples)
        worst = max(worst, max(s.objective for s in samples) - c_b)
    report(
        2,
        "1e5 random planar 3-outcome POVMs per p never beat the best projective value",
        worst <= 1e-9 and total == 900_000,
        f"{total} samples, max excess {worst:.2e}, tol 1e-9",
    )


def test_c3_no_saturation(report):
    gaps = {}
    for p in GRID_P:
        c_b = corr.classical_correlation(ps.build_state(p), config=corr.OptimizerConfig(starts=8)).value
        gaps[p] = ps.mutual_info_closed(p) - c_b
    smallest = min(gaps.values())
    ok = smallest > 0 and gaps[0.5] > 0.01
    report(3, "C_B < I on p = 0.1..0.9, gap > 0.01 at p = 0.5", ok, f"min gap {smallest:.4f}, gap(0.5) {gaps[0.5]:.4f}")


def test_c4_closed_forms_match_matrices(report):
    rng = np.random.default_rng(4)
    checks = selftest.closed_form_agreement(1000, rng) + [selftest.mutual_information_agreement(101)]
    worst = ", ".join(f"{c.name} {c.worst:.1e}" for c in checks)
    report(4, "closed forms agree with the matrix route", all(c.passed for c in checks), worst)


def test_c5_convexity(report):
    rng = np.random.default_rng(5)
    mix = selftest.residual_convexity(1000, rng)
    conc = selftest.entropy_concavity(1000, rng)
    report(
        5,
        "residual entropy convex in the POVM, entropy concave",
        mix.passed and conc.passed,
        f"mixture worst {mix.worst:.1e}, concavity worst {conc.worst:.1e}, tol 1e-10",
    )


@pytest.mark.slow
def test_c6_local_unitary_invariance(report):
    rng = np.random.default_rng(6)
    config = corr.OptimizerConfig(planar=False, starts=4)
    base = ps.build_state(0.5)
    reference = corr.classical_correlation(base, config=config).value
    worst = 0.0
    for _ in range(20):
        rotated = base.local_unitary(random_unitary(rng), random_unitary(rng))
        worst = max(worst, abs(corr.classical_correlation(rotated, config=config).value - reference))
    report(6, "C_B unchanged under 20 random local unitaries", worst <= 1e-6, f"worst {worst:.2e}, tol 1e-6")


def test_c7_n2_vs_dense_grid(report):
    worst_value = worst_stat = 0.0
    for p in (0.25, 0.5, 0.75):
        r = corr.optimize_n2(ps.build_state(p))
        worst_value = max(worst_value, abs(r.value - dense_grid_oracle(p)))
        worst_stat = max(worst_stat, r.stationarity_residual)
    report(
        7,
        "optimize_n2 matches a 1e5-point grid, stationary",
        worst_value <= 1e-8 and worst_stat <= 1e-6,
        f"value diff {worst_value:.2e} (tol 1e-8), stationarity {worst_stat:.2e} (tol 1e-6)",
    )


def test_c8_decomposition(report, tmp_path):
    rows = list(csv.DictReader(io.StringIO(csv_rows(["sweep"], tmp_path, "s.csv").decode())))
    identity = max(abs(float(r["c_b"]) + float(r["discord"]) - float(r["i_ab"])) for r in rows)

    rng = np.random.default_rng(8)
    config = corr.OptimizerConfig(planar=False, starts=2, max_outcomes=3)
    lowest = math.inf
    for k in range(100):
        rank = (k % 4) + 1
        state = TwoQubitState(random_density_matrix(rng, 4, rank=rank))
        summary = corr.summarize(state, config=config)
        identity = max(identity, abs(summary.classical.value + summary.discord - summary.mutual_information))
        lowest = min(lowest, summary.discord)
    ok = identity <= 1e-15 and lowest >= -1e-8
    report(8, "c_b + discord = i_ab, discord >= -1e-8 on 100 states", ok, f"identity {identity:.1e}, min discord {lowest:.2e}")


def test_c9_determinism(report, tmp_path, monkeypatch):
    sweep = ["sweep", "--p-count", "21"]
    mc = ["mc", "--p-count", "3", "--trials", "500", "--seed", "99"]
    outputs = {}
    for threads in ("1", "4"):
        monkeypatch.setenv("DISCORD_OPT_THREADS", threads)
        for rerun in range(2):
            outputs[("sweep", threads, rerun)] = csv_rows(sweep, tmp_path, f"s{threads}{rerun}.csv")
            outputs[("mc", threads, rerun)] = csv_rows(mc, tmp_path, f"m{threads}{rerun}.csv")
    same = all(len({v for k, v in outputs.items() if k[0] == name}) == 1 for name in ("sweep", "mc"))
    report(9, "sweep and mc bytes identical across reruns and thread counts", same, "threads 1 and 4, two reruns each")
