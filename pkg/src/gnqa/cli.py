"""Command-line front end.

Subcommands: ``generate``, ``solve``, ``report``, ``sweep-p`` and
``spectrum``. Exit codes: 0 success, 2 usage or input error, 3 numerical
failure, 4 desk limit exceeded.

Traces are JSON lines, one object per iteration, always carrying the keys
``iter, objective, eta, step_norm, overlap, x`` (``null`` when not
applicable) plus solver-specific extras. ``objective`` is the Ising energy
<phi|H|phi>. A run also writes a JSON run record next to the trace.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ansatz
from .errors import DeskLimitExceeded, DimensionMismatch, GnqaError, InfeasibleSpec, ParseError
from .gnqa import GnqaConfig, default_transform, gnqa_solve
from .hilbert import build_diagonal
from .model import (IsingHamiltonian, QuboProblem, brute_force, check_desk, desk_limit,
                    hamiltonian_stats, to_ising, to_spin)
from .optimizers import SolverConfig, solve as classical_solve
from .problems import (FAMILIES, GeneratorSpec, generate, load, load_presets, problem_hash,
                       save)
from .transforms import eigen_distribution_report, parse_transform, resolve

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_DESK = 0, 2, 3, 4
METHODS = ("gnqa", "gnqa-fixed", "gd", "newton", "natgrad")
TRACE_KEYS = ("iter", "objective", "eta", "step_norm", "overlap", "x")
ACCURACY_NOTE = ("accuracy% = 100 * (L_init - L_final) / (L_init - L_opt), clamped to "
                 "[0, 100]; L is the Ising energy of the iterate, L_init at theta0")
REPORT_COLUMNS = ("family", "N", "solutions", "method", "iterations", "relative_error",
                  "accuracy", "verdict")


class UsageError(Exception):
    pass


# traces and records -------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def write_trace(records, path):
    """Write per-iteration records as JSON lines with the fixed keys first."""
    with open(path, "w") as fh:
        for rec in records:
            row = {k: _jsonable(rec.get(k)) for k in TRACE_KEYS}
            row.update({k: _jsonable(v) for k, v in rec.items()
                        if k not in row and k != "time"})
            fh.write(json.dumps(row) + "\n")


def read_trace(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def accuracy(l_init, l_final, l_opt) -> float:
    """Percentage of the initial-to-optimal gap closed, clamped to [0, 100]."""
    span = l_init - l_opt
    if span == 0:
        return 100.0 if l_final <= l_opt else 0.0
    return float(min(100.0, max(0.0, 100.0 * (l_init - l_final) / span)))


def relative_error(l_final, l_opt) -> float:
    gap = abs(l_final - l_opt)
    return gap / abs(l_opt) if l_opt != 0 else gap


# generate -----------------------------------------------------------------------

def _params(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        if "," in value and not value.lstrip().startswith("["):
            value = f"[{value}]"
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _write_instance(spec, note, out):
    inst = generate(spec)
    save(inst.problem, out)
    meta = {"family": spec.family, "size": spec.size, "seed": spec.seed,
            "n": inst.problem.n, "params": spec.params, "note": note,
            "constant": inst.meta.get("constant", 0.0)}
    _meta_path(out).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return out


def _meta_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def cmd_generate(args):
    if args.preset:
        presets = load_presets(args.presets_file)
        names = list(presets) if args.preset == "all" else [args.preset]
        unknown = [n for n in names if n not in presets]
        if unknown:
            raise UsageError(f"unknown preset {unknown[0]!r}; known: {', '.join(presets)}")
        if args.preset == "all":
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            for name in names:
                spec, note = presets[name]
                suffix = ".pubo" if spec.family == "sat3" else ".qubo"
                print(_write_instance(spec, note, outdir / f"{name}{suffix}"))
            return EXIT_OK
        spec, note = presets[names[0]]
    else:
        if args.family is None or args.size is None:
            raise UsageError("generate needs --family and --size, or --preset")
        spec = GeneratorSpec(args.family, args.size, args.seed, args.penalty,
                             _params(args.param))
        note = ""
    print(_write_instance(spec, note, Path(args.out)))
    return EXIT_OK


# solve --------------------------------------------------------------------------

def _load_instance(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"instance file {path} does not exist")
    problem = load(path)
    meta = {}
    if _meta_path(path).exists():
        meta = json.loads(_meta_path(path).read_text())
    return problem, meta


def _transform(args):
    t = parse_transform(args.transform)
    if t.rho is None and t.rel is None:
        t = replace(t, rel=args.rho_rel_err)
    return t


def _hamiltonian(problem):
    if isinstance(problem, QuboProblem):
        return to_ising(problem)
    return to_spin(problem)


def _x_string(x):
    return None if x is None else "".join(str(int(b)) for b in x)


def run_solve(path, method, *, transform=None, eta=None, max_iters=None, tol=None,
              verify=True, e0=None, seed=0, eval_mode="inner", trace_path=None,
              record_path=None):
    """Solve one instance file and return the run record (a dict)."""
    problem, meta = _load_instance(path)
    if transform is None:
        transform = default_transform()
    H = _hamiltonian(problem)
    n = problem.n
    can_verify = verify and n <= _limit()
    opt = None
    n_solutions = None
    lam0 = None
    if can_verify:
        bf = brute_force(problem)
        opt = bf.optimum
        n_solutions = int(len(bf.minimizers))
        lam0 = float(build_diagonal(H).d.min())

    config = {"method": method, "eta": eta, "max_iters": max_iters, "tol": tol, "seed": seed}
    if method in ("gnqa", "gnqa-fixed"):
        check_desk(n)
        kw = {"transform": transform, "eval_mode": eval_mode, "verify": can_verify}
        if max_iters is not None:
            kw["max_iters"] = max_iters
        if tol is not None:
            kw["obj_rel_tol"] = tol
        if eta is not None or method == "gnqa-fixed":
            kw["eta"] = 1.0 if eta is None else eta
        sol, trace = gnqa_solve(problem, GnqaConfig(**kw))
        config["transform"] = trace.transform
        config["eval_mode"] = eval_mode
        records = trace.records
        x = None if sol is None else sol.x
        status = trace.status
        wall = trace.wall_time
        if lam0 is None:
            lam0 = trace.lambda0
    else:
        if not isinstance(H, IsingHamiltonian):
            raise UsageError(f"method {method} needs a quadratic (.qubo) instance")
        if method == "natgrad" and e0 is None:
            if lam0 is not None:
                e0 = lam0
            else:
                _, _, var = hamiltonian_stats(H)
                e0 = -5.0 * math.sqrt(var)
        config["e0"] = e0
        kw = {"method": method, "eta": eta, "e0": e0, "seed": seed}
        if max_iters is not None:
            kw["max_iters"] = max_iters
        if tol is not None:
            kw["grad_tol"] = tol
        cfg = SolverConfig(**kw)
        theta, strace = classical_solve(H, cfg, lambda0=lam0)
        records = []
        for rec in strace.records:
            rec = dict(rec)
            rec.setdefault("overlap", None)
            rec.setdefault("x", None)
            records.append(rec)
        # ties round to 0, as the solver itself leaves them undecided
        c = np.cos(2.0 * theta)
        x = (c < -ansatz.ROUND_TOL).astype(np.uint8)
        unresolved = np.flatnonzero(np.abs(c) <= ansatz.ROUND_TOL)
        config["unresolved"] = unresolved.tolist()
        status = strace.status
        wall = records[-1]["time"]

    l_init = float(records[0]["objective"])
    l_final = float(records[-1]["objective"])
    verdict = "unverified"
    value = float(problem.evaluate(x)) if x is not None else None
    if can_verify and x is not None:
        gap = value - opt
        verdict = "optimal" if gap <= 1e-9 * max(1.0, abs(opt)) else f"suboptimal({gap:.6g})"
    record = {
        "instance": str(path),
        "instance_hash": problem_hash(problem),
        "family": meta.get("family"),
        "N": n,
        "solutions": n_solutions,
        "config": config,
        "status": status,
        "trace": None if trace_path is None else str(trace_path),
        "x": _x_string(x),
        "value": value,
        "optimum": opt,
        "verdict": verdict,
        "iterations": len(records) - 1,
        "objective_init": l_init,
        "objective_final": l_final,
        "lambda0": lam0,
        "relative_error": None if lam0 is None else relative_error(l_final, lam0),
        "accuracy": None if lam0 is None else accuracy(l_init, l_final, lam0),
        "wall_time": wall,
    }
    if trace_path is not None:
        write_trace(records, trace_path)
    if record_path is not None:
        Path(record_path).write_text(json.dumps(record, indent=1) + "\n")
    return record


def _limit():
    return desk_limit()


def _solve_job(job):
    path, kwargs = job
    return run_solve(path, **kwargs)


def cmd_solve(args):
    transform = _transform(args)
    base = {"transform": transform, "eta": args.eta, "max_iters": args.max_iters,
            "tol": args.tol, "verify": args.verify, "e0": args.e0, "seed": args.seed,
            "eval_mode": args.eval_mode}
    paths = [Path(p) for p in args.instances]
    if len(paths) > 1 and (args.trace or args.record):
        raise UsageError("--trace/--record take one instance; use --out-dir for several")
    jobs = []
    for p in paths:
        kw = dict(base, method=args.method)
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            stem = f"{p.stem}.{args.method}"
            kw["trace_path"] = out / f"{stem}.jsonl"
            kw["record_path"] = out / f"{stem}.json"
        else:
            kw["trace_path"] = args.trace
            kw["record_path"] = args.record
        jobs.append((p, kw))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_solve_job, jobs))
    else:
        records = [_solve_job(j) for j in jobs]
    for rec in records:
        print(json.dumps({k: rec[k] for k in ("instance", "status", "verdict", "iterations",
                                              "relative_error", "accuracy", "x")}))
    return EXIT_OK


# report -------------------------------------------------------------------------

def build_report(records):
    rows = []
    for rec in records:
        rows.append({
            "family": rec.get("family") or Path(rec["instance"]).stem,
            "N": rec["N"],
            "solutions": rec.get("solutions"),
            "method": rec["config"]["method"],
            "iterations": rec["iterations"],
            "relative_error": rec.get("relative_error"),
            "accuracy": rec.get("accuracy"),
            "verdict": rec["verdict"],
        })
    rows.sort(key=lambda r: (r["N"], r["family"], METHODS.index(r["method"])
                             if r["method"] in METHODS else 99))
    return rows


def _cell(v, key):
    if v is None:
        return ""
    if key == "relative_error":
        return f"{v:.1e}"
    if key == "accuracy":
        return f"{v:.1f}"
    return str(v)


def format_report(rows, fmt="markdown") -> str:
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(f"# {ACCURACY_NOTE}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([_cell(r[k], k) for k in REPORT_COLUMNS])
    else:
        buf.write("| " + " | ".join(REPORT_COLUMNS) + " |\n")
        buf.write("|" + "---|" * len(REPORT_COLUMNS) + "\n")
        for r in rows:
            buf.write("| " + " | ".join(_cell(r[k], k) for k in REPORT_COLUMNS) + " |\n")
        buf.write(f"\n{ACCURACY_NOTE}\n")
    return buf.getvalue()


def cmd_report(args):
    src = Path(args.directory)
    if not src.is_dir():
        raise UsageError(f"{src} is not a directory")
    records = []
    for p in sorted(src.glob("*.json")):
        if p.name.endswith(".meta.json"):
            continue
        data = json.loads(p.read_text())
        if "verdict" in data and "config" in data:
            records.append(data)
    if not records:
        raise UsageError(f"no run records in {src}")
    text = format_report(build_report(records), args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# sweep-p ------------------------------------------------------------------------

def cmd_sweep_p(args):
    problem, _ = _load_instance(args.instance)
    check_desk(problem.n)
    try:
        orders = [float(v) for v in args.p_list.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --p-list {args.p_list!r}") from None
    if not orders:
        raise UsageError("--p-list is empty")
    d = build_diagonal(_hamiltonian(problem)).d
    base = resolve(_transform(args), d)  # rho and sigma fixed across orders
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for p in orders:
        cfg = GnqaConfig(transform=replace(base, p=p))
        if args.max_iters is not None:
            cfg = replace(cfg, max_iters=args.max_iters)
        sol, trace = gnqa_solve(problem, cfg, diagonal=d)
        path = out / f"trace_p{p:g}.jsonl"
        write_trace(trace.records, path)
        print(json.dumps({"p": p, "iterations": trace.iterations, "status": trace.status,
                          "verdict": trace.verdict, "trace": str(path)}))
    return EXIT_OK


# spectrum -----------------------------------------------------------------------

def write_spectrum(report, n, fh):
    fh.write(f"# dominance={report.dominance!r}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("index", "x", "raw", "transformed"))
    for idx, raw, tv in zip(report.index, report.raw, report.transformed):
        bits = "".join(str((int(idx) >> k) & 1) for k in range(n))
        w.writerow((int(idx), bits, repr(float(raw)), repr(float(tv))))


def read_spectrum(path):
    """Parse a spectrum file back into (dominance, rows)."""
    with open(path) as fh:
        first = fh.readline()
        dominance = float(first.split("=", 1)[1])
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["index"] = int(r["index"])
        r["raw"] = float(r["raw"])
        r["transformed"] = float(r["transformed"])
    return dominance, rows


def cmd_spectrum(args):
    problem, _ = _load_instance(args.instance)
    check_desk(problem.n)
    d = build_diagonal(_hamiltonian(problem)).d
    t = None if args.transform in ("identity", "none") else _transform(args)
    report = eigen_distribution_report(None if t is None else resolve(t, d), d, args.top)
    if args.out:
        with open(args.out, "w") as fh:
            write_spectrum(report, problem.n, fh)
    else:
        write_spectrum(report, problem.n, sys.stdout)
    return EXIT_OK


# parser -------------------------------------------------------------------------

def _add_transform(p):
    p.add_argument("--transform", default="resolvent:8",
                   help="family:p[:rho=R|:rel=E][:norm=N] (default resolvent:8)")
    p.add_argument("--rho-rel-err", type=float, default=0.1,
                   help="relative error used to calibrate rho (default 0.1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="gnqa", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a benchmark instance")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--size", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--penalty", type=float)
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.add_argument("--preset", help="preset name, or 'all' to write every preset into --out")
    g.add_argument("--presets-file")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run a solver on instance files")
    s.add_argument("instances", nargs="+")
    s.add_argument("--method", choices=METHODS, default="gnqa")
    _add_transform(s)
    s.add_argument("--eta", type=float)
    s.add_argument("--max-iters", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--e0", type=float, help="ground-energy estimate for natgrad")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eval-mode", choices=("inner", "expectation"), default="inner")
    s.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--trace")
    s.add_argument("--record")
    s.add_argument("--out-dir")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("report", help="tabulate run records")
    r.add_argument("directory")
    r.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)

    w = sub.add_parser("sweep-p", help="run GNQA over several transform orders")
    w.add_argument("instance")
    w.add_argument("--p-list", default="2,4,8,16")
    _add_transform(w)
    w.add_argument("--max-iters", type=int)
    w.add_argument("--out-dir", required=True)
    w.set_defaults(func=cmd_sweep_p)

    e = sub.add_parser("spectrum", help="eigenvalue distribution after a transform")
    e.add_argument("instance")
    _add_transform(e)
    e.add_argument("--top", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DeskLimitExceeded as exc:
        print(f"gnqa: {exc}", file=sys.stderr)
        return EXIT_DESK
    except (UsageError, ParseError, InfeasibleSpec, DimensionMismatch, OSError) as exc:
        print(f"gnqa: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GnqaError, ArithmeticError) as exc:
        print(f"gnqa: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"gnqa: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
