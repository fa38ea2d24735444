"""Command-line front door: generate, evaluate and verify Stieltjes / inverse Stieltjes families.

    python -m stieltjes_lab.tools.stieltjes_cli gen --seed 42 --dim-m 2 --dim-k 3 --out var/output
    python -m stieltjes_lab.tools.stieltjes_cli check var/output/system.json --suite rs
    python -m stieltjes_lab.tools.stieltjes_cli verify-all --seed 7

Exit codes: 0 pass, 1 violation, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Iterable, Optional

if __package__ in (None, ""):
    sys.path.insert(0, str(Path(__file__).resolve().parents[2]))
    from stieltjes_lab import bootstrap

    bootstrap(__file__)

from dotenv import load_dotenv

from stieltjes_lab.app.config_loader import (
    REPO_ROOT,
    GridSpec,
    Tolerances,
    get_default_seed,
    get_lambda_grid_spec,
    get_output_dir,
    get_sample_count,
    get_tolerances,
    get_worker_count,
    load_app_config,
)
from stieltjes_lab.app.errors import EXIT_OK, EXIT_VIOLATION, InputError, NotAnOperator, error_payload, exit_code_for
from stieltjes_lab.app.families import FamilyHandle, FamilyKind, resolvent_limits
from stieltjes_lab.app.grid_jobs import parallel_map
from stieltjes_lab.app.linrel import to_operator
from stieltjes_lab.app.logging_setup import start_log
from stieltjes_lab.app.numerics import condition_number
from stieltjes_lab.app.reports import CheckReport, plain
from stieltjes_lab.app.serialization import (
    decode_instance,
    dump_csv_atomic,
    dump_json_atomic,
    dumps_csv,
    dumps_json,
    encode_family,
    encode_matrix,
    encode_relation,
    encode_representation,
    load_json,
)
from stieltjes_lab.services.instance_gen import (
    REP_GRID_COUNT,
    default_grid,
    generate_instances,
    parse_grid,
    validate_grid,
)
from stieltjes_lab.services.suites import (
    CHECK_SUITES,
    SUITES,
    SuiteOptions,
    check_representation,
    representation_for,
    run_suite,
    verify_all,
)

log = logging.getLogger("stieltjes_cli")

PACKAGE_DIR = Path(__file__).resolve().parents[1]


def _load_env() -> None:
    load_dotenv(PACKAGE_DIR / ".env", override=False)
    load_dotenv(REPO_ROOT / ".env", override=False)


# ---------------------------------------------------------------------------
# arguments


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _tolerance(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a float, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="Random seed (default: config default_seed).")
    common.add_argument("--dim-m", type=_positive_int, default=2, help="Dimension of M (default: 2).")
    common.add_argument("--dim-k", type=_positive_int, default=3, help="Dimension of the state space (default: 3).")
    common.add_argument("--tol", type=_tolerance, default=None, help="Override the check tolerances.")
    common.add_argument(
        "--grid",
        default=None,
        help="Lambda grid: 'default', 'arcs:R1,R2:COUNT[:MARGIN]' or 'points:z1,z2,...'.",
    )
    common.add_argument("--format", choices=("json", "csv"), default="json", help="Output format (default: json).")
    common.add_argument("--out", type=Path, default=None, help="Output file (gen: output directory).")
    common.add_argument("--kind", default=None, help="Override the family kind (stieltjes | inverse_stieltjes).")
    common.add_argument("--quiet", action="store_true", help="No console logging.")
    common.add_argument("--log-level", default=None, help="Logging level (default: LOG_LEVEL or INFO).")
    return common


def parse_args(argv: Iterable[str] | None = None) -> argparse.Namespace:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="stieltjes_cli",
        description="Construct, evaluate and verify Stieltjes and inverse Stieltjes families of linear relations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", parents=[common], help="Write a seeded system and construction.")
    for name, help_text in (
        ("eval", "Evaluate a family on a lambda grid."),
        ("rep", "Extract the integral representation of a construction family."),
        ("limits", "Limits at -0 and -inf on the negative axis."),
    ):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("instance", type=Path, help="Instance JSON (family, system, rule or construction).")
    check = sub.add_parser("check", parents=[common], help="Run one verification suite.")
    check.add_argument("instance", type=Path, help="Instance JSON.")
    check.add_argument("--suite", choices=SUITES, default="rs", help=f"Suite to run (check suites: {', '.join(CHECK_SUITES)}).")
    verify = sub.add_parser("verify-all", parents=[common], help="Run every suite on an instance or on seeded instances.")
    verify.add_argument("instance", type=Path, nargs="?", default=None, help="Instance JSON (default: generate from --seed).")
    return parser.parse_args(list(argv) if argv is not None else None)


# ---------------------------------------------------------------------------
# run context


class RunConfig:
    """Configuration for one invocation: file config overridden by flags."""

    def __init__(self, args: argparse.Namespace, cfg: Optional[dict] = None) -> None:
        cfg = load_app_config() if cfg is None else cfg
        self.tolerances: Tolerances = get_tolerances(cfg).with_override(args.tol)
        self.grid_spec: GridSpec = get_lambda_grid_spec(cfg)
        self.samples = get_sample_count(cfg)
        self.workers = get_worker_count(cfg)
        self.seed = args.seed if args.seed is not None else get_default_seed(cfg)
        self.output_dir = get_output_dir(cfg)
        self.dims = (args.dim_m, args.dim_k)
        self.grid_text = args.grid
        self.format = args.format
        self.out: Optional[Path] = args.out
        self.kind = FamilyKind.parse(args.kind) if args.kind is not None else None

    def grid(self, count: Optional[int] = None) -> list[complex]:
        if self.grid_text is None and count is not None:
            return validate_grid(default_grid(self.grid_spec, count))
        return parse_grid(self.grid_text, self.grid_spec)

    def suite_options(self) -> SuiteOptions:
        return SuiteOptions(self.tolerances, self.samples, self.seed, self.workers)


def _load_family(path: Path, config: RunConfig) -> FamilyHandle:
    family = decode_instance(load_json(path), config.kind)
    log.info("loaded %s family (%s origin, dim %d) from %s", family.kind.value, family.origin, family.dim, path)
    return family


def _emit(config: RunConfig, payload: Any, rows: Optional[list[dict[str, Any]]] = None) -> None:
    """Write JSON (or CSV rows) to --out, else to stdout."""
    if config.format == "csv":
        table = rows if rows is not None else _report_rows(payload)
        if config.out is not None:
            dump_csv_atomic(config.out, table)
        else:
            sys.stdout.write(dumps_csv(table))
        return
    if config.out is not None:
        dump_json_atomic(config.out, payload)
    else:
        sys.stdout.write(dumps_json(payload))


def _report_rows(payload: Any) -> list[dict[str, Any]]:
    if isinstance(payload, dict) and isinstance(payload.get("entries"), list):
        return payload["entries"]
    return [payload] if isinstance(payload, dict) else [{"value": payload}]


def _status(report: CheckReport) -> int:
    return EXIT_OK if report.ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args: argparse.Namespace, config: RunConfig) -> int:
    instances = generate_instances(config.seed, *config.dims)
    out_dir = config.out if config.out is not None else config.output_dir
    written = {}
    for name, data in instances.items():
        if config.kind is not None:
            data = dict(data, kind=config.kind.value)
        path = Path(out_dir) / f"{name}.json"
        dump_json_atomic(path, data)
        written[name] = str(path)
    sys.stdout.write(dumps_json({"ok": True, "seed": config.seed, "dims": list(config.dims), "files": written}))
    return EXIT_OK


def _eval_row(family: FamilyHandle, lam: complex) -> dict[str, Any]:
    row: dict[str, Any] = {"lambda": lam}
    relation = family.relation(lam)
    try:
        value = family.form_operator(lam) if family.construction is not None else to_operator(relation)
    except NotAnOperator:
        row["graph"] = encode_relation(relation)
        row["cond"] = condition_number(relation.X)
        return row
    row["value"] = encode_matrix(value)
    row["cond"] = condition_number(value)
    return row


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    family = _load_family(args.instance, config)
    grid = config.grid()
    rows = parallel_map(lambda lam: _eval_row(family, lam), grid, config.workers)
    payload = {"ok": True, "kind": family.kind.value, "origin": family.origin, "rows": rows}
    _emit(config, payload, rows)
    return EXIT_OK


def cmd_check(args: argparse.Namespace, config: RunConfig) -> int:
    family = _load_family(args.instance, config)
    report = run_suite(args.suite, family, config.grid(), config.suite_options())
    payload = report.to_dict()
    payload["suite"] = args.suite
    payload["worst"] = {name: report.worst(name) for name in sorted({e["check"] for e in report.entries})}
    _emit(config, payload)
    return _status(report)


def cmd_rep(args: argparse.Namespace, config: RunConfig) -> int:
    family = _load_family(args.instance, config)
    rep, source = representation_for(family, config.tolerances)
    grid = config.grid(REP_GRID_COUNT)
    report = check_representation(rep, source, grid)
    error = report.worst("reconstruction")
    payload = {
        "ok": report.ok,
        "representation": encode_representation(rep),
        "reconstruction_error": error,
        "grid_size": len(grid),
        "report": report.to_dict(),
    }
    _emit(config, payload, [{"t": atom.t, "weight": atom.weight} for atom in rep.atoms])
    return _status(report)


def cmd_limits(args: argparse.Namespace, config: RunConfig) -> int:
    family = _load_family(args.instance, config)
    limits = resolvent_limits(family)
    payload = {
        "ok": limits.report.ok,
        "kind": family.kind.value,
        "at_zero": encode_relation(limits.at_zero),
        "at_infinity": encode_relation(limits.at_infinity),
        "method": limits.method,
        "report": limits.report.to_dict(),
    }
    _emit(config, payload, limits.report.entries)
    return _status(limits.report)


def cmd_verify_all(args: argparse.Namespace, config: RunConfig) -> int:
    options = config.suite_options()
    grid = config.grid()
    if args.instance is not None:
        families = {str(args.instance): _load_family(args.instance, config)}
    else:
        families = {
            name: decode_instance(data, config.kind)
            for name, data in generate_instances(config.seed, *config.dims).items()
        }
    combined = CheckReport("verify_all", config.tolerances.identity_tol)
    instances: dict[str, Any] = {}
    for name, family in families.items():
        report = verify_all(family, grid, options)
        combined.merge(report, name)
        instances[name] = {"ok": report.ok, "family": encode_family(family), "suites": report.notes}
    payload = combined.to_dict()
    payload.update({"seed": config.seed, "instances": plain(instances)})
    _emit(config, payload)
    return _status(combined)


HANDLERS = {
    "gen": cmd_gen,
    "eval": cmd_eval,
    "check": cmd_check,
    "rep": cmd_rep,
    "limits": cmd_limits,
    "verify-all": cmd_verify_all,
}


def main(argv: Iterable[str] | None = None) -> int:
    _load_env()
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    start_log(app_name="stieltjes_cli", level=args.log_level, to_console=not args.quiet)
    try:
        config = RunConfig(args)
        return HANDLERS[args.command](args, config)
    except Exception as exc:
        code = exit_code_for(exc)
        if isinstance(exc, InputError):
            log.error("%s: %s", exc.__class__.__name__, exc.message)
        elif code != EXIT_OK:
            log.error("%s failed: %s", args.command, exc)
        sys.stdout.write(dumps_json(error_payload(exc, command=args.command)))
        return code


if __name__ == "__main__":
    raise SystemExit(main())
