"""Command-line entry points: run, serve, and scenario."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .envdata import save_env_csv
from .errors import EngineError
from .pipeline import RunConfig, run, run_scenario, save_run

log = logging.getLogger("dbpsense")


def setup_logging() -> int:
    name = os.environ.get("DBP_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("dbpsense").setLevel(level)
    return level


def _family_assignment(raw: str) -> tuple[str, str]:
    key, sep, value = raw.partition("=")
    if not sep or not key.strip() or not value.strip():
        raise argparse.ArgumentTypeError(
            f"expected FAMILY=VALUE, got {raw!r}"
        )
    return key.strip().upper(), value.strip()


def _family_number(raw: str) -> tuple[str, float]:
    family, value = _family_assignment(raw)
    try:
        return family, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected FAMILY=NUMBER, got {raw!r}"
        ) from None


def _comma_list(raw: str) -> tuple[str, ...]:
    items = tuple(part.strip() for part in raw.split(",") if part.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _comma_ints(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in _comma_list(raw))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {raw!r}"
        ) from None


def _bind_address(raw: str) -> tuple[str, int]:
    host, sep, port = raw.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {raw!r}")
    try:
        return host, int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid port in {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbpsense",
        description="Sensor placement for disinfection by-product monitoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a full placement run")
    p_run.add_argument("--network", required=True, help="EPANET .inp file")
    p_run.add_argument("--env", help="environmental data CSV")
    p_run.add_argument("--contracts", help="node,contracts CSV")
    p_run.add_argument("--out", required=True, help="artifact directory")
    p_run.add_argument(
        "--objectives",
        type=_comma_list,
        help="comma-separated objective names",
    )
    p_run.add_argument("--k", type=int, default=5, help="sensors to place")
    p_run.add_argument("--cutoff", type=float, default=0.9)
    p_run.add_argument(
        "--model",
        action="append",
        type=_family_assignment,
        metavar="FAMILY=NAME_OR_FORMULA",
        help="repeatable; replaces the default model set",
    )
    p_run.add_argument(
        "--threshold",
        action="append",
        type=_family_number,
        metavar="FAMILY=UG_PER_L",
    )
    p_run.add_argument(
        "--weight", action="append", type=_family_number, metavar="FAMILY=W"
    )
    p_run.add_argument("--region", default="eu", choices=("eu", "us"))
    p_run.add_argument("--injection-node", help="fix the release point")
    p_run.add_argument("--scenarios", type=int, default=100)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--horizon-hours", type=float, default=168.0)
    p_run.add_argument("--interval-hours", type=float, default=1.0)
    p_run.add_argument(
        "--fill-method", default="auto", choices=("auto", "ranges", "kriging")
    )
    p_run.add_argument("--injection-c0", type=float, default=1.0)
    p_run.add_argument(
        "--pareto-ks", type=_comma_ints, metavar="K1,K2,...", default=()
    )
    p_run.set_defaults(fn=cmd_run)

    p_serve = sub.add_parser("serve", help="start the local HTTP API")
    p_serve.add_argument(
        "--bind", type=_bind_address, default=("127.0.0.1", 8000), metavar="HOST:PORT"
    )
    p_serve.add_argument("--runs-dir", help="artifact root (default: temp dir)")
    p_serve.set_defaults(fn=cmd_serve)

    p_scen = sub.add_parser(
        "scenario", help="synthesize a contaminated environmental dataset"
    )
    p_scen.add_argument("--network", required=True)
    p_scen.add_argument("--fraction", type=float, required=True)
    p_scen.add_argument(
        "--families",
        type=_comma_list,
        required=True,
        help="e.g. thm or thm,haa",
    )
    p_scen.add_argument("--env", help="observed data to contaminate")
    p_scen.add_argument("--seed", type=int, default=0)
    p_scen.add_argument("--horizon-hours", type=float, default=168.0)
    p_scen.add_argument("--interval-hours", type=float, default=1.0)
    p_scen.add_argument("--out", help="output CSV path (default: stdout)")
    p_scen.set_defaults(fn=cmd_scenario)

    return parser


def cmd_run(args: argparse.Namespace) -> int:
    kwargs = dict(
        network_path=args.network,
        env_data_path=args.env,
        contracts_path=args.contracts,
        sensor_count=args.k,
        cutoff=args.cutoff,
        region=args.region,
        injection_node=args.injection_node,
        scenario_count=args.scenarios,
        seed=args.seed,
        horizon_hours=args.horizon_hours,
        interval_hours=args.interval_hours,
        fill_method=args.fill_method,
        injection_c0=args.injection_c0,
        pareto_ks=tuple(args.pareto_ks),
    )
    if args.objectives:
        kwargs["objectives"] = args.objectives
    if args.model:
        kwargs["models"] = dict(args.model)
    if args.threshold:
        kwargs["thresholds"] = dict(args.threshold)
    if args.weight:
        kwargs["weights"] = dict(args.weight)

    result = run(RunConfig(**kwargs))
    out = save_run(result, args.out)

    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"scored {len(result.scores)} nodes; {len(result.candidates)} candidates")
    for kind, placed in result.placement["per_objective"].items():
        print(f"  {kind}: " + ", ".join(node for node, _ in placed))
    consensus = result.placement["consensus"]
    print("consensus: " + ", ".join(f"{n} x{c}" for n, c in consensus.items()))
    expected = result.placement["expected_time"]
    if expected is not None:
        print(f"expected detection time: {expected:.1f} min")
    for stage, seconds in result.timings.items():
        log.info("stage %s: %.4fs", stage, seconds)
    print(f"artifacts: {out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    host, port = args.bind
    app = create_app(runs_dir=args.runs_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def cmd_scenario(args: argparse.Namespace) -> int:
    families = [f.upper() for f in args.families]
    ds = run_scenario(
        args.network,
        args.fraction,
        families,
        env_data_path=args.env,
        seed=args.seed,
        horizon_hours=args.horizon_hours,
        interval_hours=args.interval_hours,
    )
    text = save_env_csv(ds)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(
            f"wrote {ds.record_count()} records for {len(ds.nodes)} nodes "
            f"to {args.out}"
        )
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (EngineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
