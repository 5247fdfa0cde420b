"""Monte-Carlo gradient statistics across random initializations, exact
toy-model variances, closed-form variance bounds, and sweep orchestration
with CSV/JSON emission.

Stream policy: sample ``i`` of every cell draws from ``RngStream(seed, i)``;
bootstrap resampling uses reserved stream ids at and above 2**63, so no
worker layout or cell order can change any reported number.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .dqnn import (
    COST_GLOBAL,
    COST_LOCAL,
    GLOBAL_DEEP,
    LOCAL_M1,
    LOCAL_M2,
    CostSpec,
    NetworkSpec,
    Perceptron,
    build_brick_network,
    build_global_deep_haar,
    build_toy_network,
    map_to_hardware_efficient,
)
from .ensembles import (
    RngStream,
    haar_unitary,
    sample_identity_task_pair,
    sample_pauli_hermitian,
    sample_product_training_pair,
)
from .gradients import MatrixFlowState, RpqcParameterRef, grad_s, grad_theta_shift

SCHEME_RPQC = "rpqc"
SCHEME_MATRIX_FLOW = "matrix-flow"

FAMILIES = (LOCAL_M1, LOCAL_M2, GLOBAL_DEEP)
SCHEMES = (SCHEME_RPQC, SCHEME_MATRIX_FLOW)

MAX_REGISTER_QUBITS = 14
BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_STREAM_BASE = 2**63

CSV_COLUMNS = [
    "n",
    "family",
    "cost_kind",
    "scheme",
    "samples",
    "grad_mean",
    "grad_mean_stderr",
    "grad_var",
    "var_ci_lo",
    "var_ci_hi",
    "exact_value",
    "bound_value",
    "seed",
    "wall_time_ms",
]


class ResourceGuardError(RuntimeError):
    """Raised when a requested width would exceed the desk-scale register cap."""


def check_resource_guard(n: int) -> None:
    if 2 * n > MAX_REGISTER_QUBITS:
        raise ResourceGuardError(
            f"n={n} needs a {2 * n}-qubit register; the guard allows {MAX_REGISTER_QUBITS}"
        )


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def toy_model_exact(n: int, cost_kind: str) -> float:
    """Exact gradient variance of the m=1 toy family at random angles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if cost_kind == COST_GLOBAL:
        return 0.125 * 0.375 ** (n - 1)
    if cost_kind == COST_LOCAL:
        return 1.0 / (8.0 * n * n)
    raise ValueError(f"unknown cost kind {cost_kind!r}")


def _recursion_ratio(n: int) -> float:
    # per-perceptron factor picked up by each Haar average in the chain
    return (2.0**n * (2.0**n + 0.5)) / (2.0 ** (2 * (n + 1)) - 1.0)


def bound_rpqc(n: int, cost_kind: str) -> float:
    """Variance upper bound for deep global perceptrons trained gate-wise,
    with the probed rotation sandwiched between independent Haar factors."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if cost_kind == COST_GLOBAL:
        prefactor = 2.0 ** (4 * n + 1) / (2.0 ** (2 * n + 2) - 1.0) ** 2
        return prefactor * _recursion_ratio(n) ** (n - 1)
    if cost_kind == COST_LOCAL:
        return 2.0 ** (3 * n + 1) / (2.0 ** (2 * n + 2) - 1.0) ** 2
    raise ValueError(f"unknown cost kind {cost_kind!r}")


def bound_matrix_flow(n: int) -> float:
    """Variance upper bound for the simultaneous-update scheme: per-term bound
    multiplied by the n^2 term count of the double sum (cross terms are
    covered by the same per-term value via Cauchy-Schwarz)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    per_term = (2.0 ** (3 * n + 2) / (2.0 ** (2 * (n + 1)) - 1.0)) * _recursion_ratio(n) ** (
        n - 1
    )
    return n * n * per_term


def default_brick_layers(n: int) -> int:
    # log-depth keeps the family in its trainable regime at desk scale
    return int(math.ceil(math.log2(n))) + 1


# ---------------------------------------------------------------------------
# per-sample gradient draws
# ---------------------------------------------------------------------------

def draw_gradient_sample(
    family: str,
    scheme: str,
    cost_kind: str,
    n: int,
    training_pairs: int,
    stream: RngStream,
    entangled_input: bool = False,
    brick_layers: int | None = None,
    brick_via_hea: bool = True,
) -> float:
    """One Monte-Carlo draw: fresh random network, fresh pair(s), one gradient.

    The probed quantity follows the family: the first perceptron's rotation
    angle for rpqc schemes, or dC/ds at s = 0 for matrix flow.
    """
    gen = stream.generator()
    if family == LOCAL_M1:
        if scheme != SCHEME_RPQC:
            raise ValueError("the toy family is trained gate-wise only")
        angles = gen.uniform(0.0, 2 * np.pi, n)
        net = build_toy_network(n, angles)
        pairs = tuple(sample_identity_task_pair(n, gen) for _ in range(training_pairs))
        cspec = CostSpec(cost_kind, pairs)
        return grad_theta_shift(net, cspec, RpqcParameterRef(1, 0), method="statevector")

    if family == GLOBAL_DEEP:
        if scheme == SCHEME_RPQC:
            net = build_global_deep_haar(n, gen)
            pairs = tuple(
                sample_product_training_pair(n, n, gen, entangled_input)
                for _ in range(training_pairs)
            )
            cspec = CostSpec(cost_kind, pairs)
            return grad_theta_shift(net, cspec, RpqcParameterRef(1, 0), method="statevector")
        dim = 2 ** (n + 1)
        ps = tuple(
            Perceptron(1, j, tuple(range(n)), haar_unitary(dim, gen)) for j in range(n)
        )
        net = NetworkSpec((n, n), ps, family=GLOBAL_DEEP)
        hs = tuple(sample_pauli_hermitian(n + 1, 2.0 ** (n + 1), gen) for _ in range(n))
        pairs = tuple(
            sample_product_training_pair(n, n, gen, entangled_input)
            for _ in range(training_pairs)
        )
        flow = MatrixFlowState(network=net, generators=hs)
        return grad_s(flow, CostSpec(cost_kind, pairs), method="statevector")

    if family == LOCAL_M2:
        if scheme != SCHEME_RPQC:
            raise ValueError("the brick family is trained gate-wise only")
        layers = default_brick_layers(n) if brick_layers is None else brick_layers
        net = build_brick_network(n, layers, gen, probe_first_block=True)
        pairs = tuple(
            sample_product_training_pair(n, n, gen, entangled_input)
            for _ in range(training_pairs)
        )
        cspec = CostSpec(cost_kind, pairs)
        if brick_via_hea:
            # exact by the mapping; evaluated on n qubits instead of n(L+1)
            hea = map_to_hardware_efficient(net)
            probe = net.perceptrons[0].unitary.wblock
            theta0 = probe.theta
            c_plus = _hea_cost_at(hea, cspec, theta0 + np.pi / 2)
            c_minus = _hea_cost_at(hea, cspec, theta0 - np.pi / 2)
            return 0.5 * (c_plus - c_minus)
        return grad_theta_shift(net, cspec, RpqcParameterRef(1, net.perceptrons[0].out_index))

    raise ValueError(f"unknown family {family!r}")


def _hea_cost_at(hea, cspec: CostSpec, theta: float) -> float:
    # exactly one placement carries an angle (the probed block)
    shifted = replace(hea, placements=tuple(
        (replace(block, theta=theta) if hasattr(block, "theta") else block, pair)
        for block, pair in hea.placements
    ))
    return shifted.cost(cspec)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    n: int
    family: str
    cost_kind: str
    scheme: str
    samples: int
    grad_mean: float
    grad_mean_stderr: float
    grad_var: float
    var_ci_lo: float
    var_ci_hi: float
    exact_value: float | None
    bound_value: float | None
    seed: int
    wall_time_ms: float | None = None  # kept out of files: outputs are byte-stable


@dataclass(frozen=True)
class CellSpec:
    """One (n, family, cost, scheme) Monte-Carlo cell."""

    n: int
    family: str
    cost_kind: str
    scheme: str
    samples: int
    seed: int
    training_pairs: int = 1
    workers: int = 1
    entangled_input: bool = False
    brick_layers: int | None = None
    cell_index: int = 0


def _chunk_values(cell: CellSpec, start: int, stop: int) -> np.ndarray:
    out = np.empty(stop - start)
    for i in range(start, stop):
        try:
            out[i - start] = draw_gradient_sample(
                cell.family,
                cell.scheme,
                cell.cost_kind,
                cell.n,
                cell.training_pairs,
                RngStream(cell.seed, i),
                cell.entangled_input,
                cell.brick_layers,
            )
        except Exception as exc:
            raise RuntimeError(
                f"sample {i} (seed={cell.seed}, stream_id={i}) failed: {exc}"
            ) from exc
    return out


def _gradient_samples(cell: CellSpec) -> np.ndarray:
    edges = list(range(0, cell.samples, 1024)) + [cell.samples]
    chunks = list(zip(edges[:-1], edges[1:]))
    if cell.workers > 1:
        with ProcessPoolExecutor(max_workers=cell.workers) as pool:
            parts = list(pool.map(_chunk_worker, [(cell, a, b) for a, b in chunks]))
    else:
        parts = [_chunk_values(cell, a, b) for a, b in chunks]
    return np.concatenate(parts)


def _chunk_worker(args) -> np.ndarray:
    cell, a, b = args
    return _chunk_values(cell, a, b)


def bootstrap_variance_ci(
    values: np.ndarray,
    stream: RngStream,
    resamples: int = BOOTSTRAP_RESAMPLES,
    coverage: float = 0.95,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the unbiased sample variance. Gradient
    distributions are heavy-tailed at small n, so this replaces a normal
    approximation."""
    gen = stream.generator()
    m = values.size
    stats = np.empty(resamples)
    for r in range(resamples):
        idx = gen.integers(0, m, m)
        stats[r] = np.var(values[idx], ddof=1)
    lo, hi = np.quantile(stats, [(1 - coverage) / 2, 1 - (1 - coverage) / 2])
    return float(lo), float(hi)


def reference_values(cell: CellSpec) -> tuple[float | None, float | None]:
    exact = bound = None
    if cell.family == LOCAL_M1:
        exact = toy_model_exact(cell.n, cell.cost_kind)
    elif cell.family == GLOBAL_DEEP:
        if cell.scheme == SCHEME_RPQC:
            bound = bound_rpqc(cell.n, cell.cost_kind)
        else:
            bound = bound_matrix_flow(cell.n)
    return exact, bound


def estimate_grad_stats(cell: CellSpec) -> ReportRow:
    """Run one cell: draw samples, aggregate mean/variance, bootstrap the CI."""
    if cell.samples < 100:
        raise ValueError("statistical cells need samples >= 100")
    check_resource_guard(cell.n)
    t0 = time.perf_counter()
    values = _gradient_samples(cell)
    mean = float(values.mean())
    mean_stderr = float(values.std(ddof=1) / np.sqrt(cell.samples))
    var = float(np.var(values, ddof=1))
    lo, hi = bootstrap_variance_ci(
        values, RngStream(cell.seed, BOOTSTRAP_STREAM_BASE + cell.cell_index)
    )
    exact, bound = reference_values(cell)
    wall_ms = (time.perf_counter() - t0) * 1e3
    return ReportRow(
        n=cell.n,
        family=cell.family,
        cost_kind=cell.cost_kind,
        scheme=cell.scheme,
        samples=cell.samples,
        grad_mean=mean,
        grad_mean_stderr=mean_stderr,
        grad_var=var,
        var_ci_lo=lo,
        var_ci_hi=hi,
        exact_value=exact,
        bound_value=bound,
        seed=cell.seed,
        wall_time_ms=wall_ms,
    )


def run_sweep(
    n_values: list[int],
    family: str,
    cost_kinds: list[str],
    scheme: str,
    samples: int,
    seed: int,
    training_pairs: int = 1,
    workers: int = 1,
    entangled_input: bool = False,
    brick_layers: int | None = None,
    log=None,
    on_row=None,
) -> list[ReportRow]:
    """One report row per (n, cost_kind) cell, all sharing the sweep seed.

    ``on_row`` sees every completed row as it lands, so a caller can flush
    partial results if a later cell aborts the sweep.
    """
    if not n_values:
        raise ValueError("empty n range")
    for n in n_values:
        check_resource_guard(n)
    rows = []
    cell_index = 0
    for n in n_values:
        for kind in cost_kinds:
            cell = CellSpec(
                n=n,
                family=family,
                cost_kind=kind,
                scheme=scheme,
                samples=samples,
                seed=seed,
                training_pairs=training_pairs,
                workers=workers,
                entangled_input=entangled_input,
                brick_layers=brick_layers,
                cell_index=cell_index,
            )
            row = estimate_grad_stats(cell)
            rows.append(row)
            if on_row is not None:
                on_row(row)
            if log is not None:
                print(
                    f"[cell {cell_index}] n={n} {family}/{kind}/{scheme} "
                    f"var={row.grad_var:.4g} ({row.wall_time_ms:.0f} ms)",
                    file=log,
                )
            cell_index += 1
    return rows


# ---------------------------------------------------------------------------
# serialization (exact column order; empty string for absent optionals)
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_values(row: ReportRow) -> list[str]:
    return [
        _fmt(row.n),
        row.family,
        row.cost_kind,
        row.scheme,
        _fmt(row.samples),
        _fmt(row.grad_mean),
        _fmt(row.grad_mean_stderr),
        _fmt(row.grad_var),
        _fmt(row.var_ci_lo),
        _fmt(row.var_ci_hi),
        _fmt(row.exact_value),
        _fmt(row.bound_value),
        _fmt(row.seed),
        "",  # wall_time_ms: measured time would break byte-identical re-runs
    ]


def report_to_csv(rows: list[ReportRow], config_doc: dict) -> bytes:
    lines = [
        "# config: " + json.dumps(config_doc, sort_keys=True, separators=(",", ":")),
        f"# version: plateau-lab {__version__}",
        ",".join(CSV_COLUMNS),
    ]
    lines += [",".join(_row_values(r)) for r in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def report_to_json(rows: list[ReportRow], config_doc: dict) -> bytes:
    doc = {
        "meta": {"config": config_doc, "version": f"plateau-lab {__version__}"},
        "rows": [
            dict(zip(CSV_COLUMNS, [None if v == "" else v for v in _row_values(r)]))
            for r in rows
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
