"""Command line entry point.

    anharm <command> [--config=<path>] [--key=value ...]

Commands: solve, levels, sweep, perturb, oracle-check. Data goes to stdout
or ``output_path``; diagnostics go to stderr, with verbosity taken from the
ANHARM_LOG environment variable (quiet, info, debug).

Exit codes: 0 success, 1 no admissible oscillation state, 2 configuration
error.
"""

from __future__ import annotations

import logging
import os
import sys

from anharm import serialize
from anharm.config import COMMANDS, RunConfig, parse_config
from anharm.errors import ConfigError, IllConditionedPolynomial, NoAdmissibleState
from anharm.perturbation import perturbed_compare, sweep
from anharm.spectrum import harmonic_reference, solve, spectrum
from anharm.verify import oracle_check

logger = logging.getLogger("anharm")

EXIT_OK = 0
EXIT_NO_STATE = 1
EXIT_CONFIG = 2

LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _render(config: RunConfig, columns, rows, payload) -> str:
    if config.output_format == "json":
        return serialize.to_json({"command": config.command, "spec": serialize.spec_dict(config.spec), **payload})
    return serialize.to_csv(columns, rows)


def run(config: RunConfig) -> tuple[int, str]:
    """Execute one command; returns the exit code and the serialized output."""
    spec = config.spec
    code = EXIT_OK
    if config.command == "solve":
        solved = solve(spec)
        columns, rows = serialize.solve_table(spec, solved)
        payload = {"branches": rows}
        if not any(b.accepted for b, _ in solved):
            logger.error("no admissible oscillation state")
            code = EXIT_NO_STATE
    elif config.command == "levels":
        table = spectrum(spec)
        columns, rows = serialize.levels_table(table, harmonic_reference(spec))
        payload = {"spectrum": table.to_dict(), "rows": rows}
    elif config.command == "sweep":
        s = config.sweep
        trace = sweep(
            spec, s["i"], s["lo"], s["hi"], s["steps"],
            **{k: s[k] for k in ("amplification", "match_tol") if k in s},
        )
        columns, rows = serialize.sweep_table(trace)
        payload = serialize.sweep_payload(trace)
    elif config.command == "perturb":
        p = config.perturb
        cmp = perturbed_compare(spec, p["delta"], **({"match_tol": p["match_tol"]} if "match_tol" in p else {}))
        if cmp.perturbed is None:
            logger.warning(cmp.outcome)
        columns, rows = serialize.perturb_table(cmp)
        payload = serialize.perturb_payload(cmp)
    else:
        check = oracle_check(spec, **(config.oracle or {}))
        columns, rows = serialize.oracle_table(check)
        payload = {"verdict": check.verdict, "pairs": rows, "scan_range": list(check.oracle.scan_range),
                   "scan_step": check.oracle.scan_step}
        logger.info("oracle-check verdict: %s", check.verdict)
    return code, _render(config, columns, rows, payload)


def _configure_logging():
    level_name = os.environ.get("ANHARM_LOG", "info").lower()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    for name in ("anharm", "py.warnings"):
        log = logging.getLogger(name)
        log.handlers[:] = [handler]
        log.setLevel(LOG_LEVELS.get(level_name, logging.INFO))
        log.propagate = False
    logging.captureWarnings(True)


def main(argv=None) -> int:
    _configure_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__.strip(), file=sys.stderr)
        return EXIT_OK if argv else EXIT_CONFIG
    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        logger.error("unknown command %r; expected one of %s", command, ", ".join(COMMANDS))
        return EXIT_CONFIG

    config_text = None
    overrides = []
    for arg in rest:
        if arg.startswith("--config="):
            path = arg.split("=", 1)[1]
            try:
                with open(path, encoding="utf-8") as fh:
                    config_text = fh.read()
            except OSError as exc:
                logger.error("config: cannot read %s: %s", path, exc)
                return EXIT_CONFIG
        elif arg.startswith("--"):
            overrides.append(arg)
        else:
            logger.error("unexpected argument %r", arg)
            return EXIT_CONFIG

    try:
        config = parse_config(config_text, overrides, command=command)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG

    try:
        code, text = run(config)
    except NoAdmissibleState as exc:
        logger.error("%s", exc)
        return EXIT_NO_STATE
    except IllConditionedPolynomial as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG

    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
