"""``phdae`` command-line front end.

Exit codes: 0 on success, 1 on numerical failure or failed verification,
2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .appendix import MAX_VERIFY_STAGES, format_report, verify_appendix
from .collocation import NewtonConvergenceError
from .compare import METRICS, SchemaMismatchError, compare_runs, error_trend_slope
from .convergence import GROUPS, ReferenceError, ReferenceSpec, convergence_study
from .diagnostics import PCEnergyMonitor, PowerLedger, stage_dirac_residuals
from .ics import InitialStateError, load_initial_state
from .io import FrameWriter, fmt
from .model import as_model
from .params import ParameterError, SingularDenominatorError, load_params
from .simulation import IntegrationError, integrate, parse_method, steps_for
from .tableau import UnsupportedStagesError, format_tableau, gauss_tableau

__all__ = ["RunConfig", "load_run_config", "main", "build_parser", "run_simulation", "LONG_HORIZON"]

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
LONG_HORIZON = 10.0
DIAGNOSTICS = ("ledger", "dirac", "constraint")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    method: str = "gauss:1"
    h: float = 1e-4
    t_end: float = 1.0
    stride: int = 1
    params: str = "fbm-ssr"
    ics: str = "paper-ics"
    consistent: bool = False
    diagnostics: tuple = field(default_factory=tuple)

    def __post_init__(self):
        parse_method(self.method)
        if not self.h > 0:
            raise UsageError(f"h must be positive, got {self.h!r}")
        if not self.t_end > 0:
            raise UsageError(f"t_end must be positive, got {self.t_end!r}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise UsageError(f"stride must be a positive integer, got {self.stride!r}")
        bad = set(self.diagnostics) - set(DIAGNOSTICS)
        if bad:
            raise UsageError(f"unknown diagnostics {sorted(bad)}; choose from {DIAGNOSTICS}")

    @property
    def n_steps(self) -> int:
        return steps_for(self.t_end, self.h)


_KEYS = {"method": str, "h": float, "t_end": float, "stride": int, "params": str, "ics": str,
         "consistent": None, "diagnostics": None}
_ALIASES = {"t-end": "t_end", "output_stride": "stride", "params_preset": "params",
            "initial_state": "ics", "step": "h"}


def _coerce(key: str, value: str):
    if key == "consistent":
        v = value.strip().lower()
        if v not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
            raise UsageError(f"consistent must be a boolean, got {value!r}")
        return v in ("1", "true", "yes", "on")
    if key == "diagnostics":
        return tuple(d.strip() for d in value.replace(";", ",").split(",") if d.strip())
    try:
        return _KEYS[key](value.strip())
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def _pairs_to_config(pairs, base: RunConfig | None = None) -> RunConfig:
    kw = {}
    for k, v in pairs:
        key = _ALIASES.get(k.strip().lower(), k.strip().lower())
        if key not in _KEYS:
            raise UsageError(f"unknown config key {k!r}")
        kw[key] = _coerce(key, v)
    return replace(base, **kw) if base is not None else RunConfig(**kw)


def load_run_config(source: str) -> RunConfig:
    """A config file (``key = value`` lines, optional ``[run]`` header) or an
    inline ``key=value,key=value`` string."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise UsageError(f"{source}: {exc}") from exc
        if "run" not in cp:
            raise UsageError(f"{source}: missing [run] section")
        return _pairs_to_config(cp["run"].items())
    if "=" not in source:
        raise UsageError(f"config {source!r} is neither a file nor key=value pairs")
    pairs = []
    for item in source.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise UsageError(f"malformed config item {item!r}")
        pairs.append(item.split("=", 1))
    return _pairs_to_config(pairs)


# --- runners ------------------------------------------------------------------

@dataclass
class SimulationSummary:
    n_steps: int
    n_frames: int
    max_omega_err: float
    max_constraint: float
    newton_iterations: int
    max_dirac_relative: float | None = None
    energy_stats: dict | None = None
    ledger_path: str | None = None


def run_simulation(cfg: RunConfig, sink=None, ledger_path: str | None = None) -> tuple:
    """Integrate ``cfg``; returns ``(trajectory, summary)``."""
    model = as_model(load_params(cfg.params))
    method = parse_method(cfg.method)
    full, reduced = load_initial_state(cfg.ics, model, consistent=cfg.consistent)
    hooks = []
    ledger = dirac = energy = None
    if "ledger" in cfg.diagnostics or ledger_path:
        if method.reduced:
            ledger = PowerLedger(model, gauss_tableau(method.stages), cfg.h, cfg.stride)
            hooks.append(ledger)
        else:
            energy = PCEnergyMonitor(model, cfg.h)
            hooks.append(energy)
    if "dirac" in cfg.diagnostics:
        if not method.reduced:
            raise UsageError("dirac diagnostics need a collocation method")
        worst = [0.0]

        def dirac(rec):
            for r in stage_dirac_residuals(rec.stages, model):
                worst[0] = max(worst[0], r.relative)
        hooks.append(dirac)

    state0 = reduced if method.reduced else full
    traj = integrate(state0, cfg.h, cfg.n_steps, method, sink=sink, stride=cfg.stride, params=model,
                     on_step=hooks or None)
    if ledger is not None and ledger_path:
        ledger.write_csv(ledger_path)
    summary = SimulationSummary(
        n_steps=traj.n_steps,
        n_frames=len(traj.frames),
        max_omega_err=float(np.abs(traj.omega_err()).max()),
        max_constraint=traj.max_constraint,
        newton_iterations=traj.newton_iterations,
        max_dirac_relative=worst[0] if dirac is not None else None,
        energy_stats=energy.stats() if energy is not None else None,
        ledger_path=ledger_path if ledger is not None else None,
    )
    return traj, summary


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _cmd_simulate(args) -> int:
    base = load_run_config(args.config) if args.config else RunConfig()
    pairs = [(k, str(v)) for k, v in (("method", args.method), ("h", args.h), ("t_end", args.t_end),
                                        ("stride", args.stride), ("ics", args.ics), ("params", args.params))
             if v is not None]
    if args.consistent:
        pairs.append(("consistent", "true"))
    if args.diagnostics:
        pairs.append(("diagnostics", args.diagnostics))
    cfg = _pairs_to_config(pairs, base)
    if cfg.t_end > LONG_HORIZON and not args.long:
        raise UsageError(f"t_end={cfg.t_end:g} s exceeds {LONG_HORIZON:g} s; pass --long for long-horizon runs")
    ledger_path = None
    if args.ledger is not None:
        ledger_path = args.ledger or (f"{args.out}.ledger.csv" if args.out not in (None, "-") else "ledger.csv")
    fh, close = _open_out(args.out)
    try:
        _, s = run_simulation(cfg, FrameWriter(fh), ledger_path)
    finally:
        if close:
            fh.close()
    lines = [f"method={cfg.method} h={fmt(cfg.h)} steps={s.n_steps} frames={s.n_frames}",
             f"max |omega - omega_s| = {fmt(s.max_omega_err)}"]
    if "constraint" in cfg.diagnostics:
        lines.append(f"max constraint norm = {fmt(s.max_constraint)}")
        if parse_method(cfg.method).reduced:
            lines.append(f"newton iterations = {s.newton_iterations}")
    if s.max_dirac_relative is not None:
        lines.append(f"max relative Dirac residual = {fmt(s.max_dirac_relative)}")
    if s.energy_stats is not None:
        lines.append("energy residual " + " ".join(f"{k}={fmt(v)}" for k, v in s.energy_stats.items()))
    if s.ledger_path:
        lines.append(f"ledger written to {s.ledger_path}")
    print("\n".join(lines), file=sys.stderr)
    return EXIT_OK


def _cmd_convergence(args) -> int:
    try:
        h_list = [float(v) for v in args.h_list.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --h-list {args.h_list!r}") from exc
    ref_h = args.ref_h if args.ref_h is not None else min(h_list) / 4
    model = as_model(load_params(args.params))
    _, state0 = load_initial_state(args.ics, model, consistent=True)
    res = convergence_study(args.method, h_list, args.t_end, ReferenceSpec(args.ref_stages, ref_h),
                            state0=state0, params=model)
    print("h," + ",".join(GROUPS))
    for i, hk in enumerate(res.h):
        print(fmt(hk) + "," + ",".join(fmt(res.errors[g][i]) for g in GROUPS))
    print("slope," + ",".join(f"{res.slopes[g]:.4f}" for g in GROUPS))
    return EXIT_OK


def _cmd_compare(args) -> int:
    a, b = load_run_config(args.a), load_run_config(args.b)
    if (a.h, a.t_end, a.stride, a.ics) != (b.h, b.t_end, b.stride, b.ics):
        raise SchemaMismatchError("runs must share h, t_end, stride and initial state")
    model = as_model(load_params(a.params))
    ta, _ = run_simulation(a)
    tb, _ = run_simulation(b)
    cmp = compare_runs(ta.frames, tb.frames, args.metric, model)
    fh, close = _open_out(args.out)
    try:
        fh.write("t,discrepancy\n")
        for t, d in zip(cmp.t, cmp.discrepancy):
            fh.write(f"{fmt(t)},{fmt(d)}\n")
    finally:
        if close:
            fh.close()
    msg = f"metric={cmp.metric} max={fmt(cmp.max)} mean={fmt(cmp.mean)}"
    if cmp.t[-1] > args.trend_after + 1.0:
        msg += f" trend_slope(t>{args.trend_after:g})={error_trend_slope(cmp.t, cmp.discrepancy, args.trend_after):.6g}"
    print(msg, file=sys.stderr)
    return EXIT_OK


def _cmd_tableau(args) -> int:
    print(format_tableau(gauss_tableau(args.stages)))
    return EXIT_OK


def _cmd_verify_appendix(args) -> int:
    if not 1 <= args.max_stages <= MAX_VERIFY_STAGES:
        raise UsageError(f"--max-stages must be in [1, {MAX_VERIFY_STAGES}]")
    reports = [verify_appendix(s) for s in range(1, args.max_stages + 1)]
    print(format_report(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phdae", description="Synchronous generator pH-DAE integrators.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one configuration and emit CSV frames")
    sim.add_argument("--config", help="config file or inline key=value list")
    sim.add_argument("--method", help="pc1, pc2 or gauss:S")
    sim.add_argument("--h", type=float)
    sim.add_argument("--t-end", type=float, dest="t_end")
    sim.add_argument("--stride", type=int)
    sim.add_argument("--ics", help="paper-ics or a state file")
    sim.add_argument("--params", help="preset name or parameter file")
    sim.add_argument("--consistent", action="store_true", help="project the initial state onto the constraint")
    sim.add_argument("--diagnostics", help="comma list of ledger, dirac, constraint")
    sim.add_argument("--ledger", nargs="?", const="", default=None, metavar="PATH",
                     help="write the power ledger CSV (collocation) or energy residual stats (P-C)")
    sim.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    sim.add_argument("--long", action="store_true", help=f"allow t_end beyond {LONG_HORIZON:g} s")
    sim.set_defaults(func=_cmd_simulate)

    conv = sub.add_parser("convergence", help="order study against a fine collocation reference")
    conv.add_argument("--method", required=True)
    conv.add_argument("--h-list", required=True, dest="h_list", help="comma separated step sizes")
    conv.add_argument("--t-end", type=float, default=0.02, dest="t_end")
    conv.add_argument("--ref-stages", type=int, default=3, dest="ref_stages")
    conv.add_argument("--ref-h", type=float, default=None, dest="ref_h")
    conv.add_argument("--ics", default="paper-ics")
    conv.add_argument("--params", default="fbm-ssr")
    conv.set_defaults(func=_cmd_convergence)

    cmp = sub.add_parser("compare", help="frame-wise discrepancy between two runs")
    cmp.add_argument("--a", required=True, help="config file or inline key=value list")
    cmp.add_argument("--b", required=True)
    cmp.add_argument("--out", default="-")
    cmp.add_argument("--metric", choices=METRICS, default="omega")
    cmp.add_argument("--trend-after", type=float, default=5.0, dest="trend_after")
    cmp.set_defaults(func=_cmd_compare)

    tab = sub.add_parser("tableau", help="print the Gauss tableau")
    tab.add_argument("--stages", type=int, required=True)
    tab.set_defaults(func=_cmd_tableau)

    ver = sub.add_parser("verify-appendix", help="check the Gauss identities numerically")
    ver.add_argument("--max-stages", type=int, default=6, dest="max_stages")
    ver.set_defaults(func=_cmd_verify_appendix)
    return p


_USAGE_ERRORS = (UsageError, ParameterError, InitialStateError, UnsupportedStagesError, SchemaMismatchError,
                 FileNotFoundError, IsADirectoryError, PermissionError, ValueError)
_NUMERIC_ERRORS = (IntegrationError, NewtonConvergenceError, ReferenceError, np.linalg.LinAlgError,
                   ArithmeticError, FloatingPointError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SingularDenominatorError as exc:
        print(f"phdae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"phdae: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _USAGE_ERRORS as exc:
        print(f"phdae: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
