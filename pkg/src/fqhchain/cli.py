"""Command-line front end: parameter sweeps, checks and enumeration dumps."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import bounds, checks
from .configspace import OPEN, PERIODIC, Lattice, unpack
from .groundstates import vmd_state
from .hamiltonian import ModelParams, physical_params
from .spectra import MAX_GAP_SITES, edge_mode_check, full_gap
from .tilings import enumerate_roots, equivalence_class

log = logging.getLogger(__name__)

TASKS = ("gap", "bounds", "verify", "enumerate", "edge")

GAP_COLUMNS = ("L", "boundary", "kappa", "lambda_re", "lambda_im", "gap", "kernel_dim", "argmin_N",
               "method", "f", "gamma_per", "mm_bound", "fsc_bound", "main_bound", "main_bound_liminf",
               "reference", "margin", "status")
BOUND_COLUMNS = ("L",) + bounds.BoundReport.CSV_COLUMNS
EDGE_COLUMNS = ("L", "kappa", "lambda_re", "lambda_im", "eigenvalue", "predicted", "deviation")

EPILOG = f"""CSV columns
  gap:    {", ".join(GAP_COLUMNS)}
  bounds: {", ".join(BOUND_COLUMNS)}
  edge:   {", ".join(EDGE_COLUMNS)}

exit codes: 0 pass, 1 check failure, 2 usage or config error
"""


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def parse_lambda(v) -> complex:
    if isinstance(v, bool):
        raise ConfigError(f"bad lambda {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(f"bad lambda {v!r}")


@dataclass
class SweepConfig:
    L: list = field(default_factory=lambda: [8, 10, 11, 12])
    boundary: str = PERIODIC
    kappa: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    lam: list = field(default_factory=lambda: [0.1, 0.5, 1.0])
    tasks: list = field(default_factory=lambda: list(TASKS))
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    alpha: float = 3.0
    period: int = 12
    truncation_j: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {"L", "boundary", "kappa", "lambda", "tasks", "out", "tolerances",
                 "alpha", "period", "truncation_j"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        c = cls()
        if "L" in d:
            c.L = d["L"]
        if "boundary" in d:
            c.boundary = d["boundary"]
        if "kappa" in d:
            c.kappa = d["kappa"]
        if "lambda" in d:
            c.lam = d["lambda"]
        for name in ("tasks", "out", "tolerances", "alpha", "period", "truncation_j"):
            if name in d:
                setattr(c, name, d[name])
        c.validate()
        return c

    def validate(self) -> None:
        for name in ("L", "kappa", "lam", "tasks"):
            v = getattr(self, name)
            if not isinstance(v, list) or not v:
                raise ConfigError(f"{name} must be a nonempty list")
        if any(not isinstance(x, int) or isinstance(x, bool) or x < 1 for x in self.L):
            raise ConfigError("L must list positive integers")
        if self.boundary not in (PERIODIC, OPEN):
            raise ConfigError(f"boundary must be {PERIODIC!r} or {OPEN!r}")
        if any(not isinstance(k, (int, float)) or isinstance(k, bool) or k < 0 for k in self.kappa):
            raise ConfigError("kappa must list nonnegative numbers")
        self.lam = [parse_lambda(v) for v in self.lam]
        bad = set(self.tasks) - set(TASKS)
        if bad:
            raise ConfigError(f"unknown tasks {sorted(bad)}")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be an object")

    def jobs(self):
        """Sorted (L, kappa, lam) triples."""
        return sorted(((L, float(k), l) for L in self.L for k in self.kappa for l in self.lam),
                      key=lambda t: (t[0], t[1], t[2].real, t[2].imag))


# --- per-job workers (top level so that they pickle) -------------------------


def gap_row(job, boundary: str, tol: float) -> list[str]:
    L, kappa, lam = job
    p = ModelParams(kappa, lam)
    head = [str(L), boundary, fmt(kappa), fmt(lam.real), fmt(lam.imag)]
    rep = bounds.bound_report(L, p)
    tail = [fmt(rep.f_value), fmt(rep.gamma_per), fmt(rep.martingale.value), fmt(rep.fsc.value),
            fmt(rep.main.value), fmt(rep.main_liminf.value)]
    try:
        res = full_gap(Lattice(L, boundary), p)
    except ValueError as exc:
        return head + ["", "", "", ""] + tail + ["", "", f"error: {exc}"]
    argmin = res.meta["argmin_block"]
    mid = [fmt(res.gap), str(res.kernel_dim), "" if argmin is None else str(argmin[0]), res.method]
    if boundary != PERIODIC:
        return head + mid + tail + ["", "", "n/a"]
    if rep.main.applicable:
        ref, b = "main_bound", rep.main.value
    elif rep.main_liminf.applicable:
        ref, b = "main_bound_liminf", rep.main_liminf.value
    else:
        return head + mid + tail + ["", "", "inapplicable"]
    if res.gap is None:
        return head + mid + tail + [ref, "", "gapless"]
    margin = res.gap - b
    return head + mid + tail + [ref, fmt(margin), "pass" if margin >= -tol else "fail"]


def bounds_row(job) -> list[str]:
    L, kappa, lam = job
    return [str(L)] + bounds.bound_report(L, ModelParams(kappa, lam)).row()


def edge_row(job) -> list[str]:
    L, kappa, lam = job
    e, pred = edge_mode_check(L, ModelParams(kappa, lam))
    return [str(L), fmt(kappa), fmt(lam.real), fmt(lam.imag), fmt(e), fmt(pred), fmt(abs(e - pred))]


def _map(fn, jobs, threads: int, *args):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, jobs, *[[a] * len(jobs) for a in args]))
    return [fn(j, *args) for j in jobs]


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


# --- commands -----------------------------------------------------------------


def cmd_gap(cfg: SweepConfig, threads: int = 1) -> tuple[str, int]:
    tol = float(cfg.tolerances.get("gap", 1e-9))
    for L in cfg.L:
        if L > MAX_GAP_SITES:
            log.warning("L = %d exceeds the gap guard; the row reports an error", L)
    rows = _map(gap_row, cfg.jobs(), threads, cfg.boundary, tol)
    status = 1 if any(r[-1] == "fail" for r in rows) else 0
    return _csv(GAP_COLUMNS, rows), status


def cmd_bounds(cfg: SweepConfig, threads: int = 1) -> tuple[str, int]:
    return _csv(BOUND_COLUMNS, _map(bounds_row, cfg.jobs(), threads)), 0


def cmd_edge(cfg: SweepConfig, threads: int = 1) -> tuple[str, int]:
    jobs = [j for j in cfg.jobs() if j[0] >= 6]
    if len(jobs) < len(cfg.jobs()):
        log.warning("edge mode needs L >= 6; shorter lengths skipped")
    return _csv(EDGE_COLUMNS, _map(edge_row, jobs, threads)), 0


def cmd_verify(cfg: SweepConfig, threads: int = 1) -> tuple[str, int]:
    results = checks.run_all(cfg.L, cfg.kappa, cfg.lam)
    failed = [r for r in results if r.status == checks.FAIL]
    summary = {"status": "fail" if failed else "pass", "checks": [r.as_dict() for r in results]}
    return json.dumps(summary, indent=2) + "\n", 1 if failed else 0


def cmd_enumerate(cfg: SweepConfig, threads: int = 1) -> tuple[str, int]:
    p = ModelParams(float(cfg.kappa[0]), cfg.lam[0])
    lines = []
    for L in sorted(cfg.L):
        lat = Lattice(L, cfg.boundary)
        roots = enumerate_roots(lat)
        lines.append(f"# L={L} boundary={cfg.boundary} roots={len(roots)}")
        for r in roots:
            cls = equivalence_class(r)
            psi = vmd_state(r, p)
            dimers = ",".join(str(t.n_dimers) for t in sorted(cls, key=lambda t: (t.n_dimers, t.bits)))
            lines.append(f"root {r} class_size={len(cls)} dimers={dimers}")
            for t in cls:
                a = psi.amps[t.bits]
                lines.append(f"  {unpack(t.bits, L)} {t} lam^{t.n_dimers} {fmt(a.real)} {fmt(a.imag)}")
    return "\n".join(lines) + "\n", 0


def cmd_physical_params(cfg: SweepConfig, threads: int = 1) -> tuple[str, int]:
    kappa, lam = physical_params(float(cfg.alpha), int(cfg.period), cfg.truncation_j)
    return _csv(("alpha", "period", "kappa", "lambda"),
                [[fmt(cfg.alpha), str(cfg.period), fmt(kappa), fmt(lam)]]), 0


COMMANDS = {
    "gap": cmd_gap, "bounds": cmd_bounds, "verify": cmd_verify, "enumerate": cmd_enumerate,
    "edge": cmd_edge, "physical-params": cmd_physical_params,
}


# --- argument handling -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fqhchain", description=__doc__, epilog=EPILOG,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="JSON sweep configuration")
    ap.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    ap.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes")
    ap.add_argument("--seed-check", action="store_true",
                    help="run twice and fail unless the outputs are byte-identical")
    ap.add_argument("--L", type=int, nargs="+", dest="L")
    ap.add_argument("--boundary", choices=(PERIODIC, OPEN))
    ap.add_argument("--kappa", type=float, nargs="+")
    ap.add_argument("--lambda", nargs="+", dest="lam", metavar="LAMBDA",
                    help="real or complex values such as 0.3 or 0.3+0.1j")
    ap.add_argument("--tasks", nargs="*")
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--period", type=int)
    ap.add_argument("--truncation-j", type=int, dest="truncation_j")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> SweepConfig:
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
    overrides = {"L": args.L, "boundary": args.boundary, "kappa": args.kappa, "lambda": args.lam,
                 "tasks": args.tasks, "out": args.out, "alpha": args.alpha, "period": args.period,
                 "truncation_j": args.truncation_j}
    d.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig.from_dict(d)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command in TASKS and args.command not in cfg.tasks:
        print(f"usage error: task {args.command!r} not enabled in the config", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("usage error: --threads must be positive", file=sys.stderr)
        return 2
    run = COMMANDS[args.command]
    try:
        text, status = run(cfg, args.threads)
        if args.seed_check:
            again, _ = run(cfg, args.threads)
            if again != text:
                print("seed check failed: outputs differ between runs", file=sys.stderr)
                status = 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
