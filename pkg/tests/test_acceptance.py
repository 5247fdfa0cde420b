"""Acceptance suite: one test per contract criterion, each printing a
pass/fail line with the measured statistics. Sample counts follow the stated
criteria; cells are shared between criteria where the same data serves both.
"""
import json
import subprocess
import sys
import warnings

import numpy as np
import pytest

from plateau_lab import dqnn, experiments as ex, gradients as gr, moments as mo
from plateau_lab.cli import _moment_checks
from plateau_lab.dqnn import COST_GLOBAL, COST_LOCAL, GLOBAL_DEEP, LOCAL_M1, LOCAL_M2
from plateau_lab.ensembles import RngStream, sample_product_training_pair

TOY_SAMPLES = 100_000
MEANZERO_SAMPLES = 10_000
BOUND_SAMPLES = 20_000
MOMENT_SAMPLES = 100_000
SEED = 20260808


def _report(line: str) -> None:
    print(line, flush=True)


@pytest.fixture(scope="module")
def toy_rows():
    return ex.run_sweep(
        [2, 3, 4, 5], LOCAL_M1, [COST_GLOBAL, COST_LOCAL], "rpqc",
        samples=TOY_SAMPLES, seed=SEED,
    )


@pytest.fixture(scope="module")
def gatewise_rows():
    return ex.run_sweep(
        [2, 3, 4], GLOBAL_DEEP, [COST_GLOBAL, COST_LOCAL], "rpqc",
        samples=BOUND_SAMPLES, seed=SEED + 1,
    )


@pytest.fixture(scope="module")
def simultaneous_rows():
    return ex.run_sweep(
        [2, 3, 4], GLOBAL_DEEP, [COST_GLOBAL], "matrix-flow",
        samples=BOUND_SAMPLES, seed=SEED + 2,
    )


def test_toy_variance_matches_closed_form(toy_rows):
    """Exact toy values sit inside the 95% bootstrap CI at every n and cost."""
    ok = True
    for row in toy_rows:
        hit = row.var_ci_lo <= row.exact_value <= row.var_ci_hi
        ok &= hit
        _report(
            f"ACCEPT toy-exact n={row.n} {row.cost_kind}: var={row.grad_var:.6g} "
            f"ci=[{row.var_ci_lo:.6g},{row.var_ci_hi:.6g}] exact={row.exact_value:.6g} "
            f"{'PASS' if hit else 'FAIL'}"
        )
    assert ok


def test_mean_gradient_vanishes():
    """|mean gradient| <= 4 stderr for every family/scheme at n = 2..4."""
    cells = [
        (GLOBAL_DEEP, "rpqc", COST_GLOBAL),
        (GLOBAL_DEEP, "matrix-flow", COST_GLOBAL),
        (LOCAL_M1, "rpqc", COST_GLOBAL),
    ]
    ok = True
    for family, scheme, kind in cells:
        rows = ex.run_sweep(
            [2, 3, 4], family, [kind], scheme, samples=MEANZERO_SAMPLES, seed=SEED + 3
        )
        for row in rows:
            hit = abs(row.grad_mean) <= 4 * row.grad_mean_stderr
            ok &= hit
            _report(
                f"ACCEPT mean-zero {family}/{scheme} n={row.n}: "
                f"mean={row.grad_mean:.3g} stderr={row.grad_mean_stderr:.3g} "
                f"{'PASS' if hit else 'FAIL'}"
            )
    assert ok


def test_gatewise_global_perceptron_bound_dominates(gatewise_rows):
    """CI upper edge of the variance stays below the closed-form bound."""
    ok = True
    for row in gatewise_rows:
        bound = row.bound_value
        hit = row.var_ci_hi <= bound
        ok &= hit
        _report(
            f"ACCEPT gatewise-bound n={row.n} {row.cost_kind}: "
            f"ci_hi={row.var_ci_hi:.6g} bound={bound:.6g} {'PASS' if hit else 'FAIL'}"
        )
    assert ok


def test_simultaneous_update_bound_dominates(simultaneous_rows):
    ok = True
    for row in simultaneous_rows:
        hit = row.var_ci_hi <= row.bound_value
        ok &= hit
        _report(
            f"ACCEPT simultaneous-bound n={row.n}: ci_hi={row.var_ci_hi:.6g} "
            f"bound={row.bound_value:.6g} {'PASS' if hit else 'FAIL'}"
        )
    assert ok


def test_exponential_vs_polynomial_separation(toy_rows, gatewise_rows):
    """Global-cost deep networks collapse exponentially (soft check) while the
    local-cost toy family keeps var * 8 n^2 = 1 (hard check)."""
    glob = {r.n: r.grad_var for r in gatewise_rows if r.cost_kind == COST_GLOBAL}
    extra = ex.run_sweep(
        [5], GLOBAL_DEEP, [COST_GLOBAL], "rpqc", samples=MEANZERO_SAMPLES, seed=SEED + 4
    )
    glob[5] = extra[0].grad_var
    for n in (2, 3, 4):
        ratio = glob[n + 1] / glob[n]
        line = f"ACCEPT separation global ratio var({n+1})/var({n}) = {ratio:.3f}"
        if ratio <= 0.6:
            _report(line + " PASS")
        else:
            _report(line + " WARN (soft check: the bound is one-sided)")
            warnings.warn(f"global-cost decay ratio {ratio:.3f} > 0.6 at n={n}")
    ok = True
    for row in toy_rows:
        if row.cost_kind != COST_LOCAL:
            continue
        lo, hi = row.var_ci_lo * 8 * row.n**2, row.var_ci_hi * 8 * row.n**2
        hit = lo <= 1.0 <= hi
        ok &= hit
        _report(
            f"ACCEPT separation local n={row.n}: var*8n^2 ci=[{lo:.4f},{hi:.4f}] "
            f"{'PASS' if hit else 'FAIL'}"
        )
    assert ok


def test_moment_identity_suite():
    """MC vs exact for every moment identity at the stated sample count."""
    results = _moment_checks(MOMENT_SAMPLES, SEED + 5)
    ok = True
    for name, stat, gate, passed in results:
        ok &= passed
        _report(f"ACCEPT moments {name}: stat={stat:.4g} gate={gate} "
                f"{'PASS' if passed else 'FAIL'}")
    assert ok


def test_gradient_oracle_consistency():
    """Shift rule vs central difference, and step derivative vs forward
    difference with first-order epsilon-ratio confirmation."""
    from plateau_lab.cli import cmd_verify_gradients, ExperimentConfig

    code = cmd_verify_gradients(ExperimentConfig(command="verify-gradients", seed=SEED + 6))
    _report(f"ACCEPT gradient-oracles: exit={code} {'PASS' if code == 0 else 'FAIL'}")
    assert code == 0


def test_brick_flat_circuit_cost_equality():
    """|C_DQNN - C_flat| <= 1e-10 over 100 random draws at n = 4."""
    worst = 0.0
    for i in range(100):
        gen = RngStream(SEED + 7, i).generator()
        layers = 2 if i % 2 == 0 else 3
        net = dqnn.build_brick_network(4, layers, gen)
        pair = sample_product_training_pair(4, 4, gen)
        kind = COST_GLOBAL if i % 2 == 0 else COST_LOCAL
        cs = dqnn.CostSpec(kind, (pair,))
        c_dqnn = dqnn.cost(net, cs, method="density")
        c_flat = dqnn.map_to_hardware_efficient(net).cost(cs)
        worst = max(worst, abs(c_dqnn - c_flat))
    _report(f"ACCEPT brick-mapping: max |C_DQNN - C_flat| = {worst:.3g} "
            f"{'PASS' if worst <= 1e-10 else 'FAIL'}")
    assert worst <= 1e-10


def test_command_rerun_byte_identical(tmp_path):
    """Identical config reproduces identical bytes, independent of workers."""
    out = tmp_path / "det.csv"
    base = [sys.executable, "-m", "plateau_lab.cli", "toy-model", "--n", "2..3",
            "--samples", "150", "--seed", "11", "--out", str(out)]
    assert subprocess.run(base, capture_output=True).returncode == 0
    first = out.read_bytes()
    assert subprocess.run(base, capture_output=True).returncode == 0
    rerun_ok = out.read_bytes() == first
    assert subprocess.run(base + ["--workers", "2"], capture_output=True).returncode == 0
    workers_ok = out.read_bytes() == first
    _report(f"ACCEPT determinism: rerun identical={rerun_ok} "
            f"worker-count independent={workers_ok} "
            f"{'PASS' if rerun_ok and workers_ok else 'FAIL'}")
    assert rerun_ok and workers_ok

    table = [sys.executable, "-m", "plateau_lab.cli", "verify-moments",
             "--samples", "500", "--seed", "4"]
    a = subprocess.run(table, capture_output=True)
    b = subprocess.run(table, capture_output=True)
    assert a.stdout == b.stdout and a.returncode == b.returncode == 0
