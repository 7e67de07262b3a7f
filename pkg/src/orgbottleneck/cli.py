"""Command-line interface.

Subcommands:

    solve-ib            one bottleneck solve on a source joint
    info-curve          beta sweep producing compression/relevance pairs
    simulate-hierarchy  propagate a scenario file's hierarchy, emit per-layer CSV
    compare-topologies  strict vs skip propagation, emit gain JSON

Data goes to stdout (or --output); diagnostics go to stderr. Exit codes:
0 success, 1 argument or validation problems, 2 I/O failures. All errors
are single lines prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bottleneck import SolverConfig, solve_ib
from .exceptions import (
    CapacityError,
    ConfigError,
    ConsistencyError,
    ValidationError,
)
from .experiments import (
    Scenario,
    builtin_scenario,
    compare_random_batch,
    compare_topologies,
    info_curve,
)
from .hierarchy import propagate
from .scenario_io import (
    dump_scenario_file,
    load_joint_file,
    load_scenario_file,
)

REPORT_COLUMNS = [
    "layer_index",
    "layer_name",
    "beta_effective",
    "i_x_l_bits",
    "i_y_l_bits",
    "h_l_bits",
    "converged",
]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Parser that reports usage problems through the CLI's own error channel."""

    def error(self, message):
        raise _UsageError(message)


def _fmt(value: float) -> str:
    """Render a number with 12 significant digits."""
    value = float(value)
    if value == 0.0:
        value = 0.0  # avoid "-0"
    return format(value, ".12g")


def _round12(obj):
    """Round all floats in a JSON-ready structure to 12 significant digits."""
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="")


def _emit_json(doc, output: str | None) -> None:
    _emit(json.dumps(_round12(doc), indent=2) + "\n", output)


def _resolve_seed(cli_seed, default: int) -> int:
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get("ORGBOTTLENECK_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(
                f"ORGBOTTLENECK_SEED must be an integer, got {env!r}"
            ) from None
    return default


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {path}")
    return p


def _solver_config(beta, cardinality, seed, restarts) -> SolverConfig:
    return SolverConfig(
        beta=beta,
        bottleneck_cardinality=cardinality,
        restarts=restarts,
        rng_seed=seed,
    )


def _cmd_solve_ib(args) -> int:
    joint = load_joint_file(_require_file(args.input))
    seed = _resolve_seed(args.seed, 0)
    cfg = _solver_config(args.beta, args.cardinality, seed, args.restarts)
    sol = solve_ib(joint, cfg)
    doc = {
        "beta": sol.beta,
        "cardinality": args.cardinality,
        "seed": seed,
        "restarts": args.restarts,
        "i_x_xhat_bits": sol.i_x_xhat,
        "i_y_xhat_bits": sol.i_y_xhat,
        "lagrangian": sol.lagrangian,
        "iterations_used": sol.iterations_used,
        "converged": sol.converged,
        "marginal": sol.marginal.probs.tolist(),
        "encoder": sol.encoder.probs.tolist(),
        "decoder": sol.decoder.probs.tolist(),
    }
    _emit_json(doc, args.output)
    return 0


def _cmd_info_curve(args) -> int:
    joint = load_joint_file(_require_file(args.input))
    seed = _resolve_seed(args.seed, 0)
    if args.steps < 1:
        raise ConfigError(f"--steps must be >= 1, got {args.steps}")
    if args.steps == 1:
        schedule = np.array([args.beta_min])
    elif args.log_scale:
        if args.beta_min <= 0:
            raise ConfigError("--log-scale requires --beta-min > 0")
        schedule = np.geomspace(args.beta_min, args.beta_max, args.steps)
    else:
        schedule = np.linspace(args.beta_min, args.beta_max, args.steps)
    cfg = _solver_config(float(schedule[-1]), args.cardinality, seed, args.restarts)
    points = info_curve(joint, [float(b) for b in schedule], cfg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["beta", "i_x_xhat_bits", "i_y_xhat_bits"])
    for p in points:
        writer.writerow([_fmt(p.beta), _fmt(p.i_x_xhat), _fmt(p.i_y_xhat)])
    _emit(buf.getvalue(), args.output)
    return 0


def _report_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for s in report.states:
        writer.writerow(
            [
                s.index,
                s.name,
                _fmt(s.beta_effective),
                _fmt(s.i_x_l),
                _fmt(s.i_y_l),
                _fmt(s.h_l),
                "true" if s.converged else "false",
            ]
        )
    return buf.getvalue()


def _topology_doc(spec) -> dict:
    return {
        "layers": [
            {
                "name": layer.name,
                "attentions": list(layer.attentions),
                "cardinality": layer.cardinality,
                **(
                    {"max_rate_bits": layer.max_rate_bits}
                    if layer.max_rate_bits is not None
                    else {}
                ),
                **(
                    {"beta_override": layer.beta_override}
                    if layer.beta_override is not None
                    else {}
                ),
            }
            for layer in spec.layers
        ],
        "skips": [{"from": e.from_layer, "to": e.to_layer} for e in spec.skips],
    }


def _report_doc(report) -> dict:
    return {
        "source_mi_bits": report.source_mi,
        "topology": _topology_doc(report.topology),
        "layers": [
            {
                "layer_index": s.index,
                "layer_name": s.name,
                "beta_effective": s.beta_effective,
                "i_x_l_bits": s.i_x_l,
                "i_y_l_bits": s.i_y_l,
                "h_l_bits": s.h_l,
                "converged": s.converged,
                "rate_limit_exceeded": s.rate_limit_exceeded,
                "encoder": s.encoder.probs.tolist(),
                "representation_joint": s.representation_joint.probs.tolist(),
            }
            for s in report.states
        ],
    }


def _cmd_simulate_hierarchy(args) -> int:
    joint, spec, file_seed = load_scenario_file(_require_file(args.scenario))
    seed = _resolve_seed(args.seed, file_seed)
    if args.dump_scenario:
        dump_scenario_file(args.dump_scenario, joint, spec, file_seed)
    # beta and cardinality are per-layer concerns; propagate only reads the
    # iteration budget, restarts and seed from this config.
    cfg = SolverConfig(
        beta=1.0, bottleneck_cardinality=1, restarts=args.restarts, rng_seed=seed
    )
    report = propagate(spec, joint, cfg)
    if args.json:
        _emit_json(_report_doc(report), args.output)
    else:
        _emit(_report_csv(report), args.output)
    return 0


def _comparison_doc(result) -> dict:
    profile_keys = ["layer_index", "i_x_l_bits", "i_y_l_bits", "h_l_bits", "beta_effective"]
    return {
        "label": result.label,
        "seed": result.seed,
        "source_mi_bits": result.source_mi,
        "final_relevance_strict_bits": result.final_relevance_strict,
        "final_relevance_skip_bits": result.final_relevance_skip,
        "relevance_gain_bits": result.relevance_gain,
        "profiles": {
            "strict": [dict(zip(profile_keys, row)) for row in result.profile_strict],
            "skip": [dict(zip(profile_keys, row)) for row in result.profile_skip],
        },
    }


def _cmd_compare_topologies(args) -> int:
    modes = [args.scenario is not None, args.builtin is not None, args.random is not None]
    if sum(modes) != 1:
        raise _UsageError(
            "exactly one of --scenario, --builtin or --random is required"
        )
    restarts = args.restarts
    if args.random is not None:
        if args.params is None:
            raise _UsageError("--random requires --params <file>")
        if args.dump_scenario:
            raise _UsageError("--dump-scenario cannot be combined with --random")
        params_path = _require_file(args.params)
        try:
            params = json.loads(params_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{params_path}: invalid JSON at line {exc.lineno} "
                f"column {exc.colno}: {exc.msg}"
            ) from exc
        base_seed = _resolve_seed(args.seed, 0)
        cfg = SolverConfig(
            beta=1.0, bottleneck_cardinality=1, restarts=restarts, rng_seed=base_seed
        )
        reports, aggregates = compare_random_batch(
            args.random,
            params,
            cfg,
            base_seed=base_seed,
            warm_start=not args.no_warm_start,
        )
        doc = {
            "count": args.random,
            "aggregate": aggregates,
            "scenarios": [_comparison_doc(r) for r in reports],
        }
        _emit_json(doc, args.output)
        return 0

    if args.builtin is not None:
        scenario = builtin_scenario(args.builtin)
    else:
        joint, spec, file_seed = load_scenario_file(_require_file(args.scenario))
        if not spec.skips:
            raise ValidationError(
                "compare-topologies needs a scenario with at least one skip edge"
            )
        from dataclasses import replace

        scenario = Scenario(
            label=Path(args.scenario).stem,
            source=joint,
            spec_strict=replace(spec, skips=()),
            spec_skip=spec,
            seed=file_seed,
        )
    if args.dump_scenario:
        dump_scenario_file(
            args.dump_scenario, scenario.source, scenario.spec_skip, scenario.seed
        )
    seed = _resolve_seed(args.seed, scenario.seed)
    cfg = SolverConfig(
        beta=1.0, bottleneck_cardinality=1, restarts=restarts, rng_seed=seed
    )
    result = compare_topologies(scenario, cfg, warm_start=not args.no_warm_start)
    _emit_json(_comparison_doc(result), args.output)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="orgbottleneck", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve-ib", help="solve one bottleneck instance")
    p.add_argument("--input", required=True, help="scenario or joint JSON file")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--cardinality", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_solve_ib)

    p = sub.add_parser("info-curve", help="sweep beta and emit the trade-off curve")
    p.add_argument("--input", required=True, help="scenario or joint JSON file")
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--log-scale", action="store_true")
    p.add_argument("--cardinality", type=int, default=2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_info_curve)

    p = sub.add_parser("simulate-hierarchy", help="propagate a scenario's hierarchy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--output", default=None, help="CSV (or JSON) destination")
    p.add_argument("--json", action="store_true", help="emit the full report as JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--dump-scenario", default=None, help="re-emit the parsed scenario")
    p.set_defaults(func=_cmd_simulate_hierarchy)

    p = sub.add_parser("compare-topologies", help="strict chain vs skip topology")
    p.add_argument("--scenario", default=None)
    p.add_argument("--builtin", default=None, help="named scenario, e.g. xor")
    p.add_argument("--random", type=int, default=None, help="number of random scenarios")
    p.add_argument("--params", default=None, help="generator parameters JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--output", default=None)
    p.add_argument("--dump-scenario", default=None, help="re-emit the compared scenario")
    p.set_defaults(func=_cmd_compare_topologies)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, ConfigError, CapacityError, ConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
