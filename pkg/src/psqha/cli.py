"""Batch command line: ``psqha [--out DIR] <subcommand> [flags]``.

Every run writes ``<out>/<name>.json`` (config echo plus result,
byte-identical for identical configs), ``<out>/<name>.meta.json``
(timestamp, wall time, versions) and CSV files for plotting.  Exit codes:
0 success, 1 validation error, 2 numerical-contract violation.
``PSQHA_THREADS`` caps BLAS threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .finite import FiniteOp, check_equivalences, random_finite_state
from .fock import (
    Slit,
    check_density,
    coherent_state,
    embed,
    number_state,
    operator_from_json,
    operator_to_json,
    projector,
    random_density,
)
from .grid import PSFunction, PSGrid
from .identities import run_identities
from .qconv import transform_table
from .tomography import (
    Bump,
    CovariantObservable,
    MeasurementRecord,
    indistinguishable_pair,
    outcome_density,
    reconstruct,
    sample_outcomes,
    trace_distance,
)
from .zeroset import (
    Grid1D,
    WienerPhi,
    build_T2,
    dyadic_zero_measure,
    locate_zero_circle,
    wiener_construction,
    zero_set_report,
)

log = logging.getLogger("psqha")

EXIT_OK, EXIT_INVALID, EXIT_CONTRACT = 0, 1, 2


class ContractViolation(ArithmeticError):
    """A numerical identity or tolerance promised by the library failed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    flags: dict
    out: str
    seed: int | None = None
    version: str = field(default=__version__)

    def to_json(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str | None) -> PSGrid:
    """``Q,P,nq,np``: half-widths and node counts."""
    if text is None:
        return PSGrid()
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError("--grid takes Q,P,nq,np")
    q, p = float(parts[0]), float(parts[1])
    return PSGrid(-q, q, -p, p, int(parts[2]), int(parts[3]))


def parse_state(text: str, cutoff: int):
    """vacuum | n=K | coherent:q,p | thermal:nbar | random:rank,levels,seed | slit:a | t2:n_max | file:path.

    Number states are exact at cutoff K+1; slit and t2 give exact generators
    rather than matrices.
    """
    if text == "vacuum":
        return projector(number_state(0, 1))
    if text.startswith("n="):
        k = int(text[2:])
        if k < 0:
            raise ValueError("number state index must be nonnegative")
        return projector(number_state(k, k + 1))
    kind, _, arg = text.partition(":")
    if kind == "coherent":
        q, p = (float(v) for v in arg.split(","))
        return projector(coherent_state((q + 1j * p) / math.sqrt(2), cutoff))
    if kind == "thermal":
        nbar = float(arg)
        if not nbar >= 0:
            raise ValueError("thermal occupation must be nonnegative")
        w = (nbar / (1 + nbar)) ** np.arange(cutoff)
        return np.diag(w / w.sum()).astype(complex)
    if kind == "random":
        rank, levels, seed = (int(v) for v in arg.split(","))
        return random_density(max(cutoff, levels), rank, levels, rng=seed)
    if kind == "slit":
        return Slit(float(arg))
    if kind == "t2":
        return ("t2", int(arg))
    if kind == "file":
        with open(arg) as fh:
            return operator_from_json(json.load(fh))
    raise ValueError(f"unrecognized state {text!r}")


def parse_observable(text: str, grid: PSGrid) -> CovariantObservable:
    """vacuum | n=K | slit:a | file:path."""
    if text == "vacuum":
        return CovariantObservable.vacuum(grid)
    if text.startswith("n="):
        return CovariantObservable.number(int(text[2:]), grid)
    kind, _, arg = text.partition(":")
    if kind == "slit":
        return CovariantObservable.slit(float(arg), grid)
    if kind == "file":
        with open(arg) as fh:
            return CovariantObservable(check_density(operator_from_json(json.load(fh))), grid, text)
    raise ValueError(f"unrecognized observable {text!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _write(out: Path, name: str, config: RunConfig, result: dict, t0: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = {"config": config.to_json(), "result": result}
    (out / f"{name}.json").write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")
    meta = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_seconds": round(time.perf_counter() - t0, 3),
        "numpy": np.__version__,
        "threads": os.environ.get("PSQHA_THREADS"),
    }
    (out / f"{name}.meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def _csv(out: Path, name: str, fn: PSFunction) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w") as fh:
        fn.to_csv(fh)


def _table_for(state, grid: PSGrid, cutoff: int):
    if isinstance(state, tuple) and state[0] == "t2":
        t2 = build_T2(WienerPhi(state[1]), projector(number_state(0, 1)), grid, cutoff=cutoff)
        return t2.exact_table(grid)
    return transform_table(state, grid)


def _dyadic_summary(dz) -> dict:
    return {
        "n_max": dz.n_max,
        "denominator": dz.denominator,
        "intervals": int(dz.starts.size),
        "complement_measure": dz.complement_measure,
        "tail": dz.tail,
        "measure_lower": dz.measure_lower,
        "measure_upper": dz.measure_upper,
        "measure_lower_float": float(dz.measure_lower),
    }


# --------------------------------------------------------------------------
# subcommands


def cmd_transform(args, out: Path, cfg: RunConfig, t0: float) -> int:
    grid = parse_grid(args.grid)
    table = _table_for(parse_state(args.state, args.cutoff), grid, args.cutoff)
    result = {
        "source_cutoff": table.source_cutoff,
        "at_origin": table.values.at_origin(),
        "boundary_max": table.values.boundary_max(),
    }
    try:
        result["zero_circles_r2"] = locate_zero_circle(table, all_roots=True)
    except ValueError as exc:
        result["zero_circles_r2"] = None
        result["zero_circle_note"] = str(exc)
    if args.full_json:
        result["table"] = table.to_json()
    _csv(out, "transform.csv", table.values)
    _write(out, "transform", cfg, result, t0)
    return EXIT_OK


def cmd_zeroset(args, out: Path, cfg: RunConfig, t0: float) -> int:
    grid = parse_grid(args.grid)
    table = _table_for(parse_state(args.state, args.cutoff), grid, args.cutoff)
    report = zero_set_report(table, args.epsilon, args.r_probe, args.levels)
    result = {"report": report.to_json()}
    if args.dyadic:
        result["dyadic"] = _dyadic_summary(dyadic_zero_measure(args.dyadic))
    _csv(out, "zeroset_abs.csv", PSFunction(grid, np.abs(table.values.values)))
    _write(out, "zeroset", cfg, result, t0)
    return EXIT_OK


def cmd_reconstruct(args, out: Path, cfg: RunConfig, t0: float) -> int:
    grid = parse_grid(args.grid)
    obs = parse_observable(args.observable, grid)
    state = parse_state(args.state, args.cutoff)
    if not isinstance(state, np.ndarray):
        raise ValueError("reconstruct needs a Fock-matrix state")
    rho = check_density(state)
    truth = outcome_density(rho, obs)
    if args.samples:
        record = sample_outcomes(rho, obs, args.samples, args.seed, density=truth)
    else:
        record = MeasurementRecord(grid, density=truth)
    res = reconstruct(record, obs, args.cutoff, args.reg_eps, args.method, args.projection)
    n = max(rho.shape[0], res.rho_hat.shape[0])
    dist = trace_distance(embed(res.rho_hat, n), embed(rho, n))
    result = {
        "rho_hat": operator_to_json(res.rho_hat),
        "raw": operator_to_json(res.raw),
        "diagnostics": res.diagnostics,
        "trace_distance_to_truth": dist,
    }
    _csv(out, "density_true.csv", truth)
    _csv(out, "density_reconstructed.csv", outcome_density(res.rho_hat, obs, check=False))
    _write(out, "reconstruct", cfg, result, t0)
    if args.max_trace_distance is not None and dist > args.max_trace_distance:
        raise ContractViolation(f"trace distance {dist:.3g} exceeds {args.max_trace_distance:g}")
    return EXIT_OK


def cmd_counterexample(args, out: Path, cfg: RunConfig, t0: float) -> int:
    grid = parse_grid(args.grid)
    obs = CovariantObservable.slit(args.a, grid)
    bump = Bump(args.q_center, args.q_width, args.p_width)
    r1, r2, report = indistinguishable_pair(obs, bump, args.eps, args.cutoff)
    result = {"report": report, "rho1": operator_to_json(r1), "rho2": operator_to_json(r2)}
    f1 = outcome_density(r1, obs, check=False).values
    f2 = outcome_density(r2, obs, check=False).values
    _csv(out, "density_difference.csv", PSFunction(grid, f1 - f2))
    _write(out, "counterexample", cfg, result, t0)
    return EXIT_OK


def cmd_wiener_build(args, out: Path, cfg: RunConfig, t0: float) -> int:
    grid_s = Grid1D(-args.s_range, args.s_range, args.points)
    grid_q = Grid1D(-args.q_range, args.q_range, args.points)
    wc = wiener_construction(args.n_max, grid_s, grid_q)
    dz = dyadic_zero_measure(args.measure_n_max or args.n_max)
    result = {
        "n_max": args.n_max,
        "phi_min": float(wc.phi.min()),
        "phi_hat_min": float(wc.phi_hat.min()),
        "phi_hat_zero": wc.model.phi_hat_zero,
        "dyadic": _dyadic_summary(dz),
        "measure_lower_at_least_half": dz.measure_lower >= Fraction(1, 2),
    }
    if args.intervals:
        result["dyadic"]["starts"] = dz.starts
        result["dyadic"]["ends"] = dz.ends
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "wiener.csv", "w") as fh:
        fh.write("s,phi_hat,q,phi\n")
        for row in zip(wc.s, wc.phi_hat, wc.q, wc.phi):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _write(out, "wiener", cfg, result, t0)
    if wc.phi.min() < -1e-12 or not result["measure_lower_at_least_half"]:
        raise ContractViolation("dyadic construction failed its positivity or measure bound")
    return EXIT_OK


def _finite_states(args, rng) -> list:
    if args.state.startswith("file:"):
        with open(args.state[5:]) as fh:
            doc = json.load(fh)
        return [FiniteOp.from_json(d) for d in (doc if isinstance(doc, list) else [doc])]
    if args.d < 2:
        raise ValueError("--d must be at least 2")
    return [random_finite_state(args.d, args.state, rng) for _ in range(args.trials)]


def cmd_finite_check(args, out: Path, cfg: RunConfig, t0: float) -> int:
    rng = np.random.default_rng(args.seed)
    states = _finite_states(args, rng)
    failures = []
    counts = {"empty_zero_set": 0, "nonempty_zero_set": 0}
    for T in states:
        rep = check_equivalences(T)
        counts["empty_zero_set" if rep["zero_set_empty"] else "nonempty_zero_set"] += 1
        if not rep["ok"]:
            failures.append(rep)
    result = {"trials": len(states), "failures": len(failures), "counts": counts, "failed_reports": failures[:10]}
    _write(out, "finite_check", cfg, result, t0)
    if failures:
        raise ContractViolation(f"{len(failures)} equivalence failures")
    return EXIT_OK


def cmd_identities(args, out: Path, cfg: RunConfig, t0: float) -> int:
    result = run_identities(args.trials, args.seed, parse_grid(args.grid), args.levels)
    _write(out, "identities", cfg, result, t0)
    bad = [k for k, ok in result["passed"].items() if not ok]
    if bad:
        raise ContractViolation("identity checks failed: " + ", ".join(bad))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psqha", description="Quantum harmonic analysis on phase space.")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, cutoff):
        sp.add_argument("--grid", default=None, help="Q,P,nq,np: half-widths and node counts (default 12,12,256,256)")
        sp.add_argument("--cutoff", type=int, default=cutoff)

    state_help = "vacuum | n=K | coherent:q,p | thermal:nbar | random:rank,levels,seed | slit:a | t2:n_max | file:path"

    sp = sub.add_parser("transform", help="Weyl transform table and zero circles of a state")
    sp.add_argument("--state", default="n=1", help=state_help)
    common(sp, 48)
    sp.add_argument("--full-json", action="store_true", help="embed the whole table in the JSON")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("zeroset", help="Z1/Z2/Z3 report for a state's transform")
    sp.add_argument("--state", default="n=1", help=state_help)
    common(sp, 128)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--r-probe", type=float, default=None)
    sp.add_argument("--levels", type=int, default=3)
    sp.add_argument("--dyadic", type=int, default=0, help="also summarize the dyadic zero set at this n_max")
    sp.set_defaults(func=cmd_zeroset)

    sp = sub.add_parser("reconstruct", help="simulate a measurement record and reconstruct the state")
    sp.add_argument("--observable", default="vacuum", help="vacuum | n=K | slit:a | file:path")
    sp.add_argument("--state", default="n=1", help=state_help)
    common(sp, 7)
    sp.add_argument("--samples", type=int, default=0, help="0 means the noiseless density")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--reg-eps", type=float, default=1e-4)
    sp.add_argument("--method", choices=("cutoff", "tikhonov"), default="cutoff")
    sp.add_argument("--projection", choices=("clip", "nearest"), default="clip")
    sp.add_argument("--max-trace-distance", type=float, default=None, help="exit 2 above this")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("counterexample", help="indistinguishable pair for a slit observable")
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--q-center", type=float, default=5.0)
    sp.add_argument("--q-width", type=float, default=0.5)
    sp.add_argument("--p-width", type=float, default=0.5)
    sp.add_argument("--eps", type=float, default=None)
    common(sp, 96)
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("wiener-build", help="dyadic construction with a positive-measure zero set")
    sp.add_argument("--n-max", type=int, default=6, help="terms in the sampled partial sum")
    sp.add_argument("--measure-n-max", type=int, default=20, help="terms in the exact measure bookkeeping")
    sp.add_argument("--points", type=int, default=2**16)
    sp.add_argument("--s-range", type=float, default=1.0)
    sp.add_argument("--q-range", type=float, default=64.0)
    sp.add_argument("--intervals", action="store_true", help="write every merged interval")
    sp.set_defaults(func=cmd_wiener_build)

    sp = sub.add_parser("finite-check", help="exact equivalences on Z_d x Z_d")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--state", default="random-mixed", help="maximally-mixed | basis | random-pure | random-mixed | file:path")
    sp.set_defaults(func=cmd_finite_check)

    sp = sub.add_parser("identities", help="random checks of the phase-space identities")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--levels", type=int, default=8)
    sp.add_argument("--grid", default=None)
    sp.set_defaults(func=cmd_identities)
    return p


def _limit_threads():
    n = os.environ.get("PSQHA_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(n)))


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "out", "verbose", "cmd")}
    cfg = RunConfig(args.cmd, flags, args.out, flags.get("seed"))
    t0 = time.perf_counter()
    try:
        limiter = _limit_threads()
    except ValueError:
        print("psqha: PSQHA_THREADS must be an integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args, Path(args.out), cfg, t0)
    except ArithmeticError as exc:
        print(f"psqha: numerical contract violated: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ValueError, IndexError, KeyError, OSError) as exc:
        print(f"psqha: {exc}", file=sys.stderr)
        return EXIT_INVALID
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


def main() -> None:
    sys.exit(run())
