"""Command-line front end.

Commands: ``monotone``, ``rates``, ``reproduce``, ``verify``, ``superchannel-probe``.
Output is CSV led by a ``#`` metadata line; identical arguments give
identical bytes.

Exit codes: 0 success, 1 a verification or reproduction row failed,
2 bad arguments or unreadable channel file, 3 solver failure,
4 dimension guard exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version

from .config import settings
from .errors import (ChanresError, DimensionGuardExceeded, MissingTarget, NumericalFailure, SolverFailure,
                     UnsupportedDims, UnsupportedTheory)
from .fileio import load_channel
from .monotones import CSV_FIELDS as MONOTONE_FIELDS, MEASURES, measure
from .rates import CSV_FIELDS as RATE_FIELDS, dilute_bounds, distill_bounds
from .superchannels import PROBE_MEASURES, monotonicity_probe
from .theories import THEORY_IDS, TARGETS, TheorySpec, get_target, make_theory
from .verify import SUITES, collapse_suite, monotonicity_suite, ordering_suite, qubit_theory, reproduce_table

EXIT_FAIL, EXIT_PARSE, EXIT_SOLVER, EXIT_GUARD = 1, 2, 3, 4


class UsageError(ChanresError):
    pass


@dataclass
class RunConfig:
    command: str
    theory: str | None = None
    measures: list = field(default_factory=list)
    epsilon: float = 0.0
    channel: str | None = None
    target: str | None = None
    task: str | None = None
    suite: str | None = None
    seed: int = 0
    out: str | None = None
    tol: float | None = None
    trials: int | None = None
    n_max: int = 2

    def __post_init__(self):
        if self.theory is not None and self.theory not in THEORY_IDS:
            raise UsageError(f"unknown theory {self.theory!r}; choose from {', '.join(THEORY_IDS)}")
        for m in self.measures:
            if m not in MEASURES:
                raise UsageError(f"unknown measure {m!r}; choose from {', '.join(MEASURES)}")
        if not 0.0 <= self.epsilon < 1.0:
            raise UsageError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.trials is not None and self.trials < 1:
            raise UsageError("--trials must be positive")


def _version() -> str:
    try:
        return version("chanres")
    except PackageNotFoundError:
        return "unknown"


def _meta(cfg: RunConfig) -> str:
    parts = [f"chanres={_version()}", f"command={cfg.command}", f"seed={cfg.seed}",
             f"solver_tol={settings.solver_tol:g}", f"accept_tol={settings.accept_tol:g}",
             f"snap_tol={settings.snap_tol:g}"]
    if cfg.tol is not None:
        parts.append(f"tol={cfg.tol:g}")
    return "# " + " ".join(parts) + "\n"


def _csv(cfg: RunConfig, fields, rows) -> str:
    buf = io.StringIO()
    buf.write(_meta(cfg))
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _channel_theory(cfg: RunConfig):
    if cfg.channel is None:
        raise UsageError("--channel is required")
    if cfg.theory is None:
        raise UsageError("--theory is required")
    try:
        chan, doc = load_channel(cfg.channel)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read channel file {cfg.channel}: {exc}") from exc
    split_in = tuple(doc.get("split_in") or (chan.dim_in,))
    split_out = tuple(doc.get("split_out") or (chan.dim_out,))
    if cfg.theory == "ent":
        if len(split_in) != 2 or len(split_out) != 2:
            raise UnsupportedDims("the ent theory needs split_in and split_out with two factors each")
        theory = make_theory("ent", split_in, split_out)
    else:
        theory = make_theory(cfg.theory, chan.dim_in, chan.dim_out)
    return chan.choi, theory


def cmd_monotone(cfg: RunConfig) -> tuple[str, int]:
    choi, theory = _channel_theory(cfg)
    if cfg.tol is not None:
        settings.accept_tol = cfg.tol
    names = cfg.measures or ["lr"]
    rows = []
    for name in names:
        rep = measure(name, choi, theory, cfg.epsilon, cfg.seed)
        row = rep.row(theory.token())
        row["flags"] = ";".join(_monotone_flags(rep, theory))
        rows.append(row)
        if name == "h":
            hi = dict(row, measure="h_hi", value=repr(float(rep.extras["hi"])), bound_kind="upper")
            rows.append(hi)
    return _csv(cfg, MONOTONE_FIELDS + ("flags",), rows), 0


def _monotone_flags(rep, theory: TheorySpec) -> list:
    flags = []
    if theory.relaxed:
        flags.append("relaxed-free-set")
    if rep.status != "optimal":
        flags.append(rep.status)
    if rep.extras.get("converged") is False:
        flags.append("seesaw-not-converged")
    return flags


def cmd_rates(cfg: RunConfig) -> tuple[str, int]:
    choi, theory = _channel_theory(cfg)
    if cfg.tol is not None:
        settings.accept_tol = cfg.tol
    target = get_target(cfg.theory, cfg.target)
    tasks = ["distill", "dilute"] if cfg.task in (None, "both") else [cfg.task]
    rows = []
    for task in tasks:
        fn = distill_bounds if task == "distill" else dilute_bounds
        rb = fn(choi, target, theory, cfg.epsilon, seed=cfg.seed)
        row = rb.row(theory.token(), target.key)
        row["bound_kind"] = "bracket"
        row["inputs"] = ";".join(f"{k}={_num(v)}:{kind}" for k, (v, kind) in rb.inputs.items())
        rows.append(row)
    return _csv(cfg, RATE_FIELDS + ("bound_kind", "inputs"), rows), 0


def _num(x: float) -> str:
    return "inf" if x == float("inf") else f"{x:.10g}"


def cmd_reproduce(cfg: RunConfig) -> tuple[str, int]:
    tol = 1e-5 if cfg.tol is None else cfg.tol
    targets = None
    if cfg.theory or cfg.target:
        targets = [k for k in TARGETS if (cfg.theory in (None, k[0])) and (cfg.target in (None, k[1]))]
    rows = reproduce_table(cfg.n_max, cfg.seed, tol, cfg.measures or None, targets)
    ok = all(r.passed for r in rows)
    fields = ("theory", "target", "measure", "n", "computed", "expected", "bound_kind", "passed")
    return _csv(cfg, fields, [r.row() for r in rows]), 0 if ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    if cfg.suite not in SUITES:
        raise UsageError(f"suite must be one of {', '.join(SUITES)}")
    tol = cfg.tol
    reports = []
    if cfg.suite == "collapse":
        if cfg.theory is None:
            raise UsageError("--theory is required")
        keys = [cfg.target] if cfg.target else [k for (t, k) in TARGETS if t == cfg.theory]
        for key in keys:
            reports.append(collapse_suite(get_target(cfg.theory, key), cfg.seed,
                                          **({"tol": tol} if tol is not None else {})))
    else:
        theories = [cfg.theory] if cfg.theory else list(THEORY_IDS)
        for tid in theories:
            th = qubit_theory(tid)
            kw = {} if tol is None else {"tol": tol}
            if cfg.suite == "ordering":
                eps = (0.0, cfg.epsilon) if cfg.epsilon > 0 else (0.0,)
                reports.append(ordering_suite(th, cfg.trials or 50, eps, cfg.seed, **kw))
            else:
                reports.append(monotonicity_suite(th, cfg.trials or 100, seed=cfg.seed,
                                                  measures=cfg.measures or PROBE_MEASURES, **kw))
    rows = [r for rep in reports for r in rep.rows()]
    ok = all(rep.passed for rep in reports)
    fields = ("suite", "theory", "property", "lhs", "rhs", "passed", "detail")
    return _csv(cfg, fields, rows), 0 if ok else EXIT_FAIL


def cmd_probe(cfg: RunConfig) -> tuple[str, int]:
    choi, theory = _channel_theory(cfg)
    names = cfg.measures or list(PROBE_MEASURES)
    tol = 1e-6 if cfg.tol is None else cfg.tol
    rows, ok = [], True
    for name in names:
        if name not in PROBE_MEASURES:
            raise UsageError(f"probes support {', '.join(PROBE_MEASURES)}")
        rep = monotonicity_probe(theory, name, choi, cfg.trials or 100, cfg.seed, tol)
        ok = ok and rep.passed
        worst = max(rep.values) if rep.values else float("-inf")
        rows.append({"theory": theory.token(), "measure": name, "base": _num(rep.base),
                     "worst_image": _num(worst), "bound_kind": "exact" if not theory.relaxed else "lower",
                     "trials": str(len(rep.values)), "violations": str(len(rep.violations)),
                     "passed": "pass" if rep.passed else "FAIL"})
    fields = ("theory", "measure", "base", "worst_image", "bound_kind", "trials", "violations", "passed")
    return _csv(cfg, fields, rows), 0 if ok else EXIT_FAIL


COMMANDS = {"monotone": cmd_monotone, "rates": cmd_rates, "reproduce": cmd_reproduce, "verify": cmd_verify,
            "superchannel-probe": cmd_probe}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chanres", description="Channel resource measures and rate bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, channel=False):
        sp.add_argument("--theory", choices=THEORY_IDS)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write CSV here instead of stdout")
        sp.add_argument("--tol", type=float, help="solver acceptance (monotone, rates) or comparison tolerance")
        if channel:
            sp.add_argument("--channel", required=True, help="channel JSON file")

    sp = sub.add_parser("monotone", help="evaluate measures of a channel")
    common(sp, channel=True)
    sp.add_argument("--measure", action="append", choices=MEASURES)
    sp.add_argument("--epsilon", type=float, default=0.0)

    sp = sub.add_parser("rates", help="distillation / dilution brackets")
    common(sp, channel=True)
    sp.add_argument("--target", help="registered target key (default: first for the theory)")
    sp.add_argument("--task", choices=("distill", "dilute", "both"), default="both")
    sp.add_argument("--epsilon", type=float, default=0.0)

    sp = sub.add_parser("reproduce", help="recompute the registered constants")
    common(sp)
    sp.add_argument("--target")
    sp.add_argument("--measure", action="append", choices=MEASURES)
    sp.add_argument("--n-max", type=int, default=2)

    sp = sub.add_parser("verify", help="run a property suite")
    sp.add_argument("suite", choices=SUITES)
    common(sp)
    sp.add_argument("--target")
    sp.add_argument("--measure", action="append", choices=PROBE_MEASURES)
    sp.add_argument("--epsilon", type=float, default=0.0, help="extra smoothing value for the ordering suite")
    sp.add_argument("--trials", type=int)

    sp = sub.add_parser("superchannel-probe", help="monotonicity under random free superchannels")
    common(sp, channel=True)
    sp.add_argument("--measure", action="append", choices=PROBE_MEASURES)
    sp.add_argument("--trials", type=int, default=100)
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(command=ns.command, theory=ns.theory, measures=list(getattr(ns, "measure", None) or []),
                     epsilon=getattr(ns, "epsilon", 0.0), channel=getattr(ns, "channel", None),
                     target=getattr(ns, "target", None), task=getattr(ns, "task", None),
                     suite=getattr(ns, "suite", None), seed=ns.seed, out=ns.out, tol=ns.tol,
                     trials=getattr(ns, "trials", None), n_max=getattr(ns, "n_max", 2))


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    saved = settings.accept_tol
    try:
        cfg = _config(ns)
        text, code = COMMANDS[cfg.command](cfg)
    except (UsageError, UnsupportedDims, UnsupportedTheory, MissingTarget) as exc:
        print(f"chanres: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (SolverFailure, NumericalFailure) as exc:
        print(f"chanres: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DimensionGuardExceeded as exc:
        print(f"chanres: dimension guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ChanresError as exc:
        print(f"chanres: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    finally:
        settings.accept_tol = saved
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
