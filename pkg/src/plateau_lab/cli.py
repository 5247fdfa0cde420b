"""Command-line entry point: config parsing, experiment dispatch, seeded
execution, atomic CSV/JSON emission, and the verification subcommands.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource
guard refusal.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .dqnn import COST_GLOBAL, COST_LOCAL, GLOBAL_DEEP, LOCAL_M1, LOCAL_M2
from .ensembles import RngStream, haar_unitary
from .experiments import (
    ResourceGuardError,
    SCHEME_MATRIX_FLOW,
    SCHEME_RPQC,
    bound_matrix_flow,
    bound_rpqc,
    report_to_csv,
    report_to_json,
    run_sweep,
    toy_model_exact,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_GUARD = 3

COMMANDS = (
    "variance-sweep",
    "toy-model",
    "verify-moments",
    "bound-table",
    "matrix-flow",
    "verify-gradients",
)


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    n_min: int = 2
    n_max: int = 2
    family: str = LOCAL_M1
    cost_kind: str = "both"
    scheme: str = SCHEME_RPQC
    samples: int = 1000
    training_pairs: int = 1
    seed: int = 0
    workers: int = 1
    output_path: str | None = None
    format: str = "csv"

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.n_min > self.n_max:
            raise UsageError(f"n_min {self.n_min} exceeds n_max {self.n_max}")
        if self.n_min < 1:
            raise UsageError("n_min must be >= 1")
        if self.family not in (LOCAL_M1, LOCAL_M2, GLOBAL_DEEP):
            raise UsageError(f"unknown family {self.family!r}")
        if self.cost_kind not in (COST_GLOBAL, COST_LOCAL, "both"):
            raise UsageError(f"unknown cost kind {self.cost_kind!r}")
        if self.scheme not in (SCHEME_RPQC, SCHEME_MATRIX_FLOW):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.command in ("variance-sweep", "toy-model", "matrix-flow", "verify-moments"):
            if self.samples < 100:
                raise UsageError(f"samples must be >= 100, got {self.samples}")
        if self.training_pairs < 1:
            raise UsageError("training_pairs must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        return self

    def doc(self) -> dict:
        # workers is execution infrastructure, not experiment definition;
        # leaving it out keeps output bytes independent of the worker count
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "workers"}

    @property
    def n_values(self) -> list[int]:
        return list(range(self.n_min, self.n_max + 1))

    @property
    def cost_kinds(self) -> list[str]:
        return [COST_GLOBAL, COST_LOCAL] if self.cost_kind == "both" else [self.cost_kind]


def parse_n_range(text: str) -> tuple[int, int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise UsageError(f"bad n range {text!r}; expected e.g. 2..5 or 3") from None


def _default_workers() -> int:
    env = os.environ.get("PLATEAU_LAB_WORKERS")
    if env is None:
        return 1
    if env == "auto":
        return os.cpu_count() or 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"bad PLATEAU_LAB_WORKERS value {env!r}") from None


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def _load_config_file(path: str, command: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    for key in doc:
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
    if "command" in doc and doc["command"] != command:
        raise UsageError(f"config file names command {doc['command']!r}, expected {command!r}")
    return doc


def build_config(command: str, args: argparse.Namespace) -> ExperimentConfig:
    """File values first, then command-line flags override."""
    values: dict = {"command": command, "workers": _default_workers()}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config, command))
        values["command"] = command
    overrides = {
        "family": getattr(args, "family", None),
        "cost_kind": getattr(args, "cost", None),
        "scheme": getattr(args, "scheme", None),
        "samples": getattr(args, "samples", None),
        "training_pairs": getattr(args, "pairs", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "output_path": getattr(args, "out", None),
        "format": getattr(args, "format", None),
    }
    if getattr(args, "n", None) is not None:
        values["n_min"], values["n_max"] = parse_n_range(args.n)
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return ExperimentConfig(**values).validate()


def write_atomic(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def emit(config: ExperimentConfig, rows, out_stream) -> None:
    payload = (
        report_to_csv(rows, config.doc())
        if config.format == "csv"
        else report_to_json(rows, config.doc())
    )
    if config.output_path:
        write_atomic(config.output_path, payload)
        print(f"wrote {config.output_path}", file=sys.stderr)
    else:
        out_stream.buffer.write(payload)


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def cmd_variance_sweep(config: ExperimentConfig) -> int:
    done: list = []
    try:
        rows = run_sweep(
            config.n_values,
            config.family,
            config.cost_kinds,
            config.scheme,
            config.samples,
            config.seed,
            training_pairs=config.training_pairs,
            workers=config.workers,
            log=sys.stderr,
            on_row=done.append,
        )
    except ResourceGuardError:
        raise  # refused upfront, nothing to flush; outer handler exits 3
    except RuntimeError as exc:
        # a cell aborted: flush the completed rows, then report the failure
        print(f"error: {exc}", file=sys.stderr)
        if done and config.output_path:
            emit(config, done, sys.stdout)
            print(f"flushed {len(done)} completed row(s) before abort", file=sys.stderr)
        return EXIT_VERIFY_FAIL
    emit(config, rows, sys.stdout)
    return EXIT_OK


def cmd_toy_model(config: ExperimentConfig) -> int:
    config.family = LOCAL_M1
    config.scheme = SCHEME_RPQC
    return cmd_variance_sweep(config)


def cmd_matrix_flow(config: ExperimentConfig) -> int:
    config.family = GLOBAL_DEEP
    config.scheme = SCHEME_MATRIX_FLOW
    if config.cost_kind == "both":
        config.cost_kind = COST_GLOBAL
    return cmd_variance_sweep(config)


def cmd_bound_table(config: ExperimentConfig) -> int:
    lines = [
        "# config: " + json.dumps(config.doc(), sort_keys=True, separators=(",", ":")),
        f"# version: plateau-lab {__version__}",
        "n,bound_rpqc_global,bound_rpqc_local,bound_matrix_flow,toy_exact_global,toy_exact_local",
    ]
    for n in config.n_values:
        lines.append(
            ",".join(
                [
                    str(n),
                    repr(bound_rpqc(n, COST_GLOBAL)),
                    repr(bound_rpqc(n, COST_LOCAL)),
                    repr(bound_matrix_flow(n)),
                    repr(toy_model_exact(n, COST_GLOBAL)),
                    repr(toy_model_exact(n, COST_LOCAL)),
                ]
            )
        )
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    if config.output_path:
        write_atomic(config.output_path, payload)
        print(f"wrote {config.output_path}", file=sys.stderr)
    else:
        sys.stdout.buffer.write(payload)
    return EXIT_OK


def _moment_checks(samples: int, seed: int):
    """All moment-identity gates: (name, z-or-residual, gate, pass)."""
    from . import moments as mo

    results = []

    def add(name: str, z: float, gate: float):
        results.append((name, z, gate, z <= gate))

    def ginibre(d, stream):
        gen = stream.generator()
        return (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2)

    sid = 0
    for d in (2, 4):
        ops = [ginibre(d, RngStream(seed, 90_000 + sid + i)) for i in range(4)]
        sid += 16
        a, b, c, dd = ops
        est = mo.mc_haar_integral(
            lambda v: np.trace(v @ a @ v.conj().T @ b), d, samples, RngStream(seed, sid)
        )
        add(f"first-moment d={d}", abs(est.value - mo.first_moment_exact(a, b)) / est.stderr, 4.0)
        sid += 1
        est = mo.mc_haar_integral(
            lambda v: np.trace(v @ a @ v.conj().T @ b @ v @ c @ v.conj().T @ dd),
            d,
            samples,
            RngStream(seed, sid),
        )
        add(
            f"second-moment-chain d={d}",
            abs(est.value - mo.second_moment_exact_chain(a, b, c, dd)) / est.stderr,
            4.0,
        )
        sid += 1
        est = mo.mc_haar_integral(
            lambda v: np.trace(v @ a @ v.conj().T @ b) * np.trace(v @ c @ v.conj().T @ dd),
            d,
            samples,
            RngStream(seed, sid),
        )
        add(
            f"second-moment-product d={d}",
            abs(est.value - mo.second_moment_exact_product(a, b, c, dd)) / est.stderr,
            4.0,
        )
        sid += 1

    a = ginibre(4, RngStream(seed, 95_000))
    mean, se = mo.mc_subsystem_twirl(a, (2, 2), samples, RngStream(seed, sid))
    sid += 1
    z = float(np.max(np.abs(mean - mo.subsystem_twirl_exact(a, (2, 2))) / np.maximum(se, 1e-13)))
    add("subsystem-twirl (2,2)", z, 4.0)

    for dims in ((2, 2), (2, 4)):
        a = ginibre(dims[0] * dims[1], RngStream(seed, 95_100 + dims[1]))
        b = ginibre(dims[0] * dims[1], RngStream(seed, 95_200 + dims[1]))
        res = mo.verify_bitstring_decomposition(a, b, dims, rng=RngStream(seed, sid))
        sid += 1
        results.append((f"block-decomposition {dims}", res, 1e-10, res <= 1e-10))

    est = mo.verify_commutator_trace_zero((2, 2, 2, 2), samples, RngStream(seed, sid))
    sid += 1
    add("commutator-trace-zero (2,2,2,2)", abs(est.value) / max(est.stderr, 1e-14), 4.0)

    res3 = mo.verify_projected_twirl_formulas((2, 2, 2, 2), samples, RngStream(seed, sid))
    add(
        "projected-twirl-eq1 (2,2,2,2)",
        abs(res3.mc_first.value - res3.exact_first) / res3.mc_first.stderr,
        4.0,
    )
    add(
        "projected-twirl-eq2 (2,2,2,2)",
        abs(res3.mc_second.value - res3.exact_second) / res3.mc_second.stderr,
        4.0,
    )
    return results


def cmd_verify_moments(config: ExperimentConfig) -> int:
    results = _moment_checks(config.samples, config.seed)
    width = max(len(r[0]) for r in results)
    all_ok = True
    for name, z, gate, ok in results:
        state = "PASS" if ok else "FAIL"
        print(f"{name:<{width}}  stat={z:12.4g}  gate={gate:<8g} {state}")
        all_ok &= ok
    print(f"verify-moments: {'all checks passed' if all_ok else 'FAILURES present'}")
    return EXIT_OK if all_ok else EXIT_VERIFY_FAIL


def cmd_verify_gradients(config: ExperimentConfig) -> int:
    from .dqnn import (
        CostSpec,
        build_brick_network,
        build_global_deep_circuit,
        build_toy_network,
    )
    from .ensembles import sample_identity_task_pair, sample_product_training_pair
    from .gradients import (
        MatrixFlowState,
        RpqcParameterRef,
        grad_s,
        grad_s_fd,
        grad_theta_fd,
        grad_theta_shift,
    )
    from .dqnn import NetworkSpec, Perceptron
    from .ensembles import sample_pauli_hermitian

    seed = config.seed
    step = 1e-4
    tol = max(1e-6, 10 * step**2)
    failures = 0
    checks = 0

    def instance(i: int):
        gen = RngStream(seed, i).generator()
        which = i % 3
        if which == 0:
            n = 1 + i % 3
            net = build_toy_network(n, gen.uniform(0, 2 * np.pi, n))
            pair = sample_identity_task_pair(n, gen)
            ref = RpqcParameterRef(1, i % n)
        elif which == 1:
            n = 1 + i % 2
            net = build_global_deep_circuit(n, gen, eta=4)
            pair = sample_product_training_pair(n, n, gen)
            ref = RpqcParameterRef(1, i % n, gate_index=i % 4)
        else:
            n = 2 + 2 * (i % 2)
            net = build_brick_network(n, 2, gen, probe_first_block=True)
            pair = sample_product_training_pair(n, n, gen)
            ref = RpqcParameterRef(1, 0)
        kind = COST_GLOBAL if i % 2 == 0 else COST_LOCAL
        return net, CostSpec(kind, (pair,)), ref

    for i in range(50):
        net, cspec, ref = instance(i)
        g_shift = grad_theta_shift(net, cspec, ref)
        g_fd = grad_theta_fd(net, cspec, ref, step)
        checks += 1
        if abs(g_shift - g_fd) > tol:
            failures += 1
            print(f"FAIL shift-vs-fd instance {i}: {g_shift} vs {g_fd}")

    for i in range(20):
        gen = RngStream(seed, 1_000 + i).generator()
        n = 1 + i % 3
        dim = 2 ** (n + 1)
        ps = tuple(Perceptron(1, j, tuple(range(n)), haar_unitary(dim, gen)) for j in range(n))
        net = NetworkSpec((n, n), ps, family=GLOBAL_DEEP)
        hs = tuple(sample_pauli_hermitian(n + 1, 2.0 ** (n + 1), gen) for _ in range(n))
        flow = MatrixFlowState(network=net, generators=hs)
        pair = sample_product_training_pair(n, n, gen)
        cspec = CostSpec(COST_GLOBAL if i % 2 == 0 else COST_LOCAL, (pair,))
        g = grad_s(flow, cspec)
        e1 = abs(grad_s_fd(flow, cspec, 1e-3) - g)
        e2 = abs(grad_s_fd(flow, cspec, 1e-4) - g)
        checks += 1
        # first-order error: e(eps) ~ K eps, so e2 should drop ~10x
        ok = e1 < 1e-10 or (e2 <= e1 / 5 + 1e-12)
        if not ok:
            failures += 1
            print(f"FAIL grad_s fd-ratio instance {i}: e(1e-3)={e1:.3g} e(1e-4)={e2:.3g}")

    print(f"verify-gradients: {checks - failures}/{checks} checks passed")
    return EXIT_OK if failures == 0 else EXIT_VERIFY_FAIL


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plateau-lab",
        description="Gradient-variance laboratory for dissipative quantum neural networks",
    )
    parser.add_argument("--version", action="version", version=f"plateau-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_samples: bool):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--n", help="width or range, e.g. 3 or 2..5")
        p.add_argument("--samples", type=int, required=needs_samples)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)

    def output(p: argparse.ArgumentParser):
        p.add_argument("--out", help="output path (written atomically); stdout if omitted")
        p.add_argument("--format", choices=("csv", "json"))

    p = sub.add_parser("variance-sweep", help="MC gradient statistics over an n range")
    common(p, needs_samples=True)
    p.add_argument("--family", choices=(LOCAL_M1, LOCAL_M2, GLOBAL_DEEP))
    p.add_argument("--cost", choices=(COST_GLOBAL, COST_LOCAL, "both"))
    p.add_argument("--scheme", choices=(SCHEME_RPQC, SCHEME_MATRIX_FLOW))
    p.add_argument("--pairs", type=int, help="training pairs per draw (N)")
    output(p)

    p = sub.add_parser("toy-model", help="m=1 toy sweep, both costs, exact values attached")
    common(p, needs_samples=True)
    p.add_argument("--cost", choices=(COST_GLOBAL, COST_LOCAL, "both"))
    p.add_argument("--pairs", type=int)
    output(p)

    p = sub.add_parser("matrix-flow", help="simultaneous-update sweep for global perceptrons")
    common(p, needs_samples=True)
    p.add_argument("--cost", choices=(COST_GLOBAL, COST_LOCAL, "both"))
    p.add_argument("--pairs", type=int)
    output(p)

    p = sub.add_parser("verify-moments", help="MC-vs-exact table for all moment identities")
    common(p, needs_samples=True)

    p = sub.add_parser("bound-table", help="closed-form bounds and exact toy values")
    common(p, needs_samples=False)
    output(p)

    p = sub.add_parser("verify-gradients", help="shift-rule and step-derivative oracles")
    common(p, needs_samples=False)
    return parser


_DISPATCH = {
    "variance-sweep": cmd_variance_sweep,
    "toy-model": cmd_toy_model,
    "matrix-flow": cmd_matrix_flow,
    "bound-table": cmd_bound_table,
    "verify-moments": cmd_verify_moments,
    "verify-gradients": cmd_verify_gradients,
}


def main(argv: list[str] | None = None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args.command, args)
        return _DISPATCH[args.command](config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
