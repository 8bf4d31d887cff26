"""Command-line entry point: check, run, slice.

Exit codes: 0 on success (and when an integration run's assertions
hold), 1 when an executable service ends in a fault, 2 on usage,
parse, resolve, or configuration errors.

The bare form `monoslice --config deploy.json program.ol` is an alias
for `slice`; with `--service` it instead runs the named services, which
is the exact command generated Dockerfiles use.
"""

from __future__ import annotations

import argparse
import signal
import sys
import time
from pathlib import Path

from . import runtime
from .config import load_config, validate_config
from .deploy import (
    DEFAULT_BASE_IMAGE,
    DEFAULT_RUNNER_CMD,
    DeployOptions,
    plan_deployment,
    write_deployment,
)
from .errors import MonosliceError
from .lexer import LexError
from .parser import ParseError, parse_source
from .semantics import CheckedProgram, ResolveFailure, resolve
from .slicer import slice_all
from .values import JsonError


def _diag(path: str, message: str) -> None:
    print(f"{path}: {message}", file=sys.stderr)


def _load_checked(program_path: str) -> CheckedProgram | None:
    """Parse and resolve a program file, printing positioned diagnostics."""
    try:
        source = Path(program_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {program_path}: {exc}", file=sys.stderr)
        return None
    try:
        program = parse_source(source, source_name=Path(program_path).stem)
    except (LexError, ParseError) as exc:
        _diag(f"{program_path}:{exc.line}:{exc.column}", _strip_position(str(exc)))
        return None
    try:
        return resolve(program)
    except ResolveFailure as failure:
        for error in failure.errors:
            where = f"{program_path}:{error.pos}" if error.pos else program_path
            _diag(where, _strip_position(str(error)))
        return None


def _strip_position(message: str) -> str:
    # errors carry "line:col: text"; the path prefix we print already has it
    head, sep, tail = message.partition(": ")
    if sep and head.replace(":", "").isdigit():
        return f"error: {tail}"
    return f"error: {message}"


def _load_config_file(config_path: str):
    try:
        return load_config(config_path)
    except OSError as exc:
        print(f"error: cannot read {config_path}: {exc}", file=sys.stderr)
        return None
    except JsonError as exc:
        _diag(config_path, f"error: {exc}")
        return None


def cmd_check(args: argparse.Namespace) -> int:
    return 0 if _load_checked(args.program) is not None else 2


def cmd_run(args: argparse.Namespace) -> int:
    checked = _load_checked(args.program)
    if checked is None:
        return 2
    config = _load_config_file(args.config)
    if config is None:
        return 2
    services = args.service or None
    try:
        system = runtime.start(checked, config, services)
    except MonosliceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    selected = list(system.instances.values())
    executables = [inst for inst in selected if inst.is_executable]
    if executables:
        faults = system.wait_executables()
        report = system.shutdown()
        print(report)
        return 1 if any(f is not None for f in faults.values()) else 0

    print(f"serving {len(selected)} service(s); interrupt to stop", file=sys.stderr)
    stop = {"flag": False}

    def _on_term(signum, frame):
        stop["flag"] = True

    try:
        previous = signal.signal(signal.SIGTERM, _on_term)
    except ValueError:  # not on the main thread; interrupts still work
        previous = None
    try:
        while not stop["flag"]:
            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        if previous is not None:
            signal.signal(signal.SIGTERM, previous)
        report = system.shutdown()
        print(report)
    return 0


def cmd_slice(args: argparse.Namespace) -> int:
    checked = _load_checked(args.program)
    if checked is None:
        return 2
    config = _load_config_file(args.config)
    if config is None:
        return 2
    issues = validate_config(checked, config)
    if issues:
        for issue in issues:
            print(f"error: {issue}", file=sys.stderr)
        return 2
    output_root = Path(args.output) if args.output else Path(f"{checked.program.source_name}-sliced")
    try:
        options = DeployOptions(
            output_root=output_root,
            config_bytes=Path(args.config).read_bytes(),
            exclude_services=set(args.exclude or []),
            base_image=args.base_image,
            runner_cmd=args.runner_cmd,
            expose_ports=args.expose_ports,
        )
        slices = slice_all(checked)
        plan = plan_deployment(slices, config, options)
        manifest = write_deployment(plan, force=args.force)
    except (MonosliceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for relative, size in manifest:
        print(f"{output_root / relative}\t{size}")
    return 0


def _add_slice_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", "-o", help="output directory (default: <program>-sliced)")
    parser.add_argument(
        "--exclude", action="append", metavar="SERVICE",
        help="leave a service out of the deployment (repeatable)",
    )
    parser.add_argument("--base-image", default=DEFAULT_BASE_IMAGE, help="Dockerfile FROM image")
    parser.add_argument("--runner-cmd", default=DEFAULT_RUNNER_CMD, help="container entry command")
    parser.add_argument(
        "--expose-ports", action="store_true",
        help="publish each service's socket port in the compose file",
    )
    parser.add_argument("--force", action="store_true", help="replace an existing output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monoslice",
        description="Check, locally run, and slice a single-file microservice architecture.",
    )
    subcommands = parser.add_subparsers(dest="command", required=True)

    check = subcommands.add_parser("check", help="parse and resolve a program")
    check.add_argument("program")
    check.set_defaults(func=cmd_check)

    run = subcommands.add_parser("run", help="run services locally")
    run.add_argument("--config", required=True, help="JSON configuration file")
    run.add_argument(
        "--service", action="append", metavar="NAME",
        help="run only this service (repeatable; default: all)",
    )
    run.add_argument("program")
    run.set_defaults(func=cmd_run)

    slice_cmd = subcommands.add_parser("slice", help="slice into per-service codebases")
    slice_cmd.add_argument("--config", required=True, help="JSON configuration file")
    _add_slice_options(slice_cmd)
    slice_cmd.add_argument("program")
    slice_cmd.set_defaults(func=cmd_slice)

    return parser


def build_bare_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monoslice",
        description="Bare form: slice the program, or run it when --service is given.",
    )
    parser.add_argument("--config", required=True)
    parser.add_argument("--service", action="append", metavar="NAME")
    _add_slice_options(parser)
    parser.add_argument("program")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] in ("check", "run", "slice"):
            args = build_parser().parse_args(argv)
        else:
            args = build_bare_parser().parse_args(argv)
            args.func = cmd_run if args.service else cmd_slice
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
