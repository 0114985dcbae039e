"""Command line front end.

Subcommands::

    povmdiscord sweep      C_B, I(A:B), discord of the example state over a p grid
    povmdiscord mc         objective of random POVMs on the example state
    povmdiscord optimize   all measures for a two-qubit state read from JSON
    povmdiscord selftest   built-in consistency checks

Exit codes: 0 success, 2 bad input or arguments, 3 invalid density matrix,
4 optimizer or resampling failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import correlation as corr
from . import paperstate as ps
from . import povm as pv
from . import selftest
from .qmath import InvalidStateError, TwoQubitState

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVALID_STATE = 3
EXIT_OPTIMIZER = 4

log = logging.getLogger("povmdiscord")


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    p_start: float = 0.0
    p_stop: float = 1.0
    p_count: int = 101
    trials: int = 1_000_000
    outcomes: int = 3
    planar: bool | None = None
    seed: int = 0
    tol: float = 1e-10
    log_base: str = "2"
    out: str = "-"
    format: str = "csv"
    variant: str = "ours"
    side: str = "B"
    starts: int = 32
    state_file: str | None = None

    def __post_init__(self):
        if self.p_count < 1:
            raise InputError("--p-count must be at least 1")
        if self.trials < 1:
            raise InputError("--trials must be at least 1")
        if self.outcomes not in (2, 3, 4):
            raise InputError("--outcomes must be 2, 3 or 4")
        if not 0 <= self.seed < 2**64:
            raise InputError("--seed must be a 64-bit unsigned integer")
        if not (0.0 <= self.p_start <= 1.0 and 0.0 <= self.p_stop <= 1.0):
            raise InputError("p grid must lie inside [0, 1]")

    @property
    def base(self) -> float:
        return 2.0 if self.log_base == "2" else math.e

    def grid(self) -> np.ndarray:
        return np.linspace(self.p_start, self.p_stop, self.p_count)

    def optimizer(self, planar_default: bool) -> corr.OptimizerConfig:
        planar = planar_default if self.planar is None else self.planar
        return corr.OptimizerConfig(
            angle_tol=self.tol, planar=planar, seed=self.seed, base=self.base, starts=self.starts
        )


def fmt(x: float) -> str:
    """17 significant digits, positional notation (round-trips exactly)."""
    x = float(x) + 0.0
    if not math.isfinite(x):
        return str(x)
    if x == 0.0:
        return "0." + "0" * 16
    mantissa, exponent = f"{x:.16e}".split("e")
    sign = "-" if mantissa.startswith("-") else ""
    digits = mantissa.lstrip("-").replace(".", "")
    point = int(exponent) + 1
    if point <= 0:
        return f"{sign}0.{'0' * -point}{digits}"
    if point >= len(digits):
        return f"{sign}{digits}{'0' * (point - len(digits))}.0"
    return f"{sign}{digits[:point]}.{digits[point:]}"


def _json_value(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


class Emitter:
    """Writes header + rows as CSV or JSON lines with fixed formatting."""

    def __init__(self, stream, fmt_name: str, columns: list[str]):
        self.stream = stream
        self.fmt_name = fmt_name
        self.columns = columns
        if fmt_name == "csv":
            stream.write(",".join(columns) + "\n")

    def row(self, values) -> None:
        if self.fmt_name == "csv":
            self.stream.write(
                ",".join(str(v) if isinstance(v, (int, np.integer)) else fmt(v) for v in values) + "\n"
            )
        else:
            record = {c: _json_value(v if isinstance(v, (int, str, list)) else float(v)) for c, v in zip(self.columns, values)}
            self.stream.write(json.dumps(record, separators=(",", ":")) + "\n")


@contextlib.contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
    with fh:
        yield fh


SWEEP_COLUMNS = ["p", "c_b", "theta_opt", "i_ab", "discord", "f_balance"]


def cmd_sweep(cfg: RunConfig) -> int:
    records = ps.sweep(cfg.grid(), cfg.variant, cfg.optimizer(True))
    with _output(cfg.out) as fh:
        em = Emitter(fh, cfg.format, SWEEP_COLUMNS)
        for r in records:
            em.row([r.p, r.c_b_n2, r.theta_opt, r.i_ab, r.discord, r.f_balance])
    return EXIT_OK


def mc_columns(n: int, planar: bool) -> list[str]:
    cols = ["p", "trial"] + [f"theta{i}" for i in range(1, n + 1)]
    if not planar:
        cols += [f"phi{i}" for i in range(1, n + 1)]
    return cols + [f"r{i}" for i in range(1, n + 1)] + ["objective"]


def _angles(m: pv.RankOnePovm, planar: bool) -> list[float]:
    if planar:
        return [e.theta for e in m]
    polar = [pv.direction_angles(e.direction) for e in m]
    return [t for t, _ in polar] + [f for _, f in polar]


def cmd_mc(cfg: RunConfig) -> int:
    planar = True if cfg.planar is None else cfg.planar
    if cfg.outcomes == 4 and planar:
        raise InputError("--outcomes 4 requires --no-planar")
    with _output(cfg.out) as fh:
        em = Emitter(fh, cfg.format, mc_columns(cfg.outcomes, planar))
        for p in cfg.grid():
            state = ps.build_state(float(p), cfg.variant)
            samples = corr.monte_carlo(state, cfg.outcomes, cfg.trials, planar, cfg.seed, cfg.side, cfg.base)
            for s in samples:
                em.row([p, s.trial_index, *_angles(s.povm, planar), *s.povm.weights, s.objective])
    return EXIT_OK


def load_state_file(path: str) -> TwoQubitState:
    """Read ``{"dim": 4, "re": 4x4, "im": 4x4}``; raises InputError or InvalidStateError."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read state file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("dim") != 4:
        raise InputError("state file must be an object with dim = 4")
    try:
        re = np.array(doc["re"], dtype=float)
        im = np.array(doc.get("im", np.zeros((4, 4))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"state file entries are malformed: {exc}") from exc
    if re.shape != (4, 4) or im.shape != (4, 4):
        raise InputError(f"re and im must be 4x4 arrays, got {re.shape} and {im.shape}")
    return TwoQubitState(re + 1j * im)


def write_state_file(path: str, matrix: np.ndarray) -> None:
    m = np.asarray(matrix, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"dim": 4, "re": m.real.tolist(), "im": m.imag.tolist()}, fh)


def optimize_report(state: TwoQubitState, cfg: RunConfig) -> dict:
    config = cfg.optimizer(False)
    summary = corr.summarize(state, cfg.side, config)
    cc = summary.classical
    m = cc.optimal_povm
    stat = cc.stationarity_residual
    if math.isnan(stat) and all(e.direction[1] == 0.0 for e in m):
        stat = corr.stationarity_residual(state, m, cfg.side, config.base)
    return {
        "c_b": cc.value,
        "s_a": cc.marginal_entropy,
        "residual_entropy": cc.residual_entropy,
        "i_ab": summary.mutual_information,
        "discord": summary.discord,
        "stationarity_residual": stat,
        "n": len(m),
        "povm": [[e.weight, *pv.direction_angles(e.direction)] for e in m],
    }


def cmd_optimize(cfg: RunConfig) -> int:
    state = load_state_file(cfg.state_file)
    report = optimize_report(state, cfg)
    with _output(cfg.out) as fh:
        if cfg.format == "csv":
            n = report["n"]
            cols = ["c_b", "s_a", "residual_entropy", "i_ab", "discord", "stationarity_residual", "n"]
            for i in range(1, n + 1):
                cols += [f"r{i}", f"theta{i}", f"phi{i}"]
            em = Emitter(fh, "csv", cols)
            em.row([report[c] for c in cols[:6]] + [n] + [v for triple in report["povm"] for v in triple])
        else:
            doc = {k: _json_value(v) for k, v in report.items()}
            fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
    return EXIT_OK


def cmd_selftest(cfg: RunConfig) -> int:
    results = selftest.run(cases=100, seed=cfg.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "mc": cmd_mc, "optimize": cmd_optimize, "selftest": cmd_selftest}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p-start", type=float, default=0.0)
    common.add_argument("--p-stop", type=float, default=1.0)
    common.add_argument("--p-count", type=int, default=101)
    common.add_argument("--trials", type=int, default=1_000_000)
    common.add_argument("--outcomes", type=int, default=3, choices=(2, 3, 4))
    common.add_argument("--planar", action=argparse.BooleanOptionalAction, default=None,
                        help="restrict directions to the xz plane (default: on for sweep/mc, off for optimize)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-10, help="angle tolerance of the scalar refinement")
    common.add_argument("--log-base", choices=("2", "e"), default="2")
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--variant", choices=ps.VARIANTS, default="ours")
    common.add_argument("--side", choices=("A", "B"), default="B", help="measured subsystem")
    common.add_argument("--starts", type=int, default=32, help="multistart count for 3/4-outcome searches")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="povmdiscord", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sweep", parents=[common], help="C_B, I(A:B) and discord over p")
    sub.add_parser("mc", parents=[common], help="random-POVM objective samples")
    opt = sub.add_parser("optimize", parents=[common], help="measures for a state file")
    opt.add_argument("state_file")
    sub.add_parser("selftest", parents=[common], help="consistency checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    try:
        cfg = RunConfig(**fields)
        return COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidStateError as exc:
        print(f"error: invalid density matrix ({exc.invariant}): {exc}", file=sys.stderr)
        return EXIT_INVALID_STATE
    except (pv.ResampleCapError, ps.CrossCheckError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER


if __name__ == "__main__":
    sys.exit(main())
