"""``tristoch`` command line: construct, certify, census, sample, histogram.

Exit codes: 0 success / vertex, 1 not a vertex, 2 construction infeasible,
3 internal error (failed invariant, certifier disagreement, failed hard check),
4 unreadable input, 5 time budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .arrays import (ArrayFormatError, Cube, HalfArray, parse, serialize, validate_half_array,
                     validate_tristochastic)
from .certify import certificate_to_json, certify_half_vertex, certify_support_rank

EXIT_OK, EXIT_NOT_VERTEX, EXIT_INFEASIBLE, EXIT_INTERNAL, EXIT_PARSE, EXIT_BUDGET = range(6)

CENSUS_CHECKS = ("enumerate", "vertices", "latin", "permanent", "stirling", "cuckler-kahn", "ledger")
RANDOM_CHECKS = {"permanent", "cuckler-kahn"}


class Budget:
    """Wall-clock cap checked between jobs; it never alters what a job computes."""

    def __init__(self, ms: int | None):
        self.ms = ms
        self.start = time.monotonic()

    def exceeded(self) -> bool:
        return self.ms is not None and (time.monotonic() - self.start) * 1000 > self.ms


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def workers() -> int:
    raw = os.environ.get("TRISTOCH_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_jobs(fn, jobs: list, budget: Budget) -> tuple[list, bool]:
    """Results in job order; stops early (flagging partial) once the budget is spent."""
    out = []
    nw = min(workers(), len(jobs))
    if nw <= 1:
        for job in jobs:
            if budget.exceeded():
                return out, True
            out.append(fn(*job))
        return out, False
    with ProcessPoolExecutor(max_workers=nw) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        for fut in futures:
            out.append(fut.result())
            if budget.exceeded() and len(out) < len(futures):
                for f in futures:
                    f.cancel()
                return out, True
    return out, False


def effective_config(args) -> dict:
    """Settings that determine the content of the outputs (paths are left out)."""
    cfg = {"command": args.command, "version": __version__}
    for key in ("n", "seed", "count", "retries", "budget_ms", "format", "solver", "checks", "axis"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


# -- construct --------------------------------------------------------------------------

def construct_job(n: int, seed: int, retries: int, config: dict) -> dict:
    from .construct import ConstructionError, ConstructionInfeasible, construct_vertex
    cfg = dict(config, seed=seed)
    try:
        res = construct_vertex(n, seed=seed, retries=retries)
    except ConstructionInfeasible as exc:
        return {"status": "infeasible", "seed": seed, "stage": exc.stage, "reason": exc.reason,
                "files": {"failure.json": dumps({"config": cfg, "status": "infeasible",
                                                 "stage": exc.stage, "reason": exc.reason})}}
    except ConstructionError as exc:
        return {"status": "internal", "seed": seed, "stage": exc.stage, "reason": exc.reason,
                "files": {"failure.json": dumps({"config": cfg, "status": "internal",
                                                 "stage": exc.stage, "reason": exc.reason})}}
    graph = res.certificate
    rank = certify_support_rank(res.array)
    agree = graph.verdict == rank.verdict and graph.verify(res.array)
    cert = {"config": cfg, "verdict": graph.verdict if agree else "disagreement",
            "certifiers": {"graph": certificate_to_json(graph),
                           "support_rank": certificate_to_json(rank)}}
    log = res.log.to_json_obj()
    log["config"] = cfg
    log["checks"] = [[c.stage, c.name, c.passed, c.detail] for c in res.checks]
    if res.odd_cycle is not None:
        log["odd_cycle"] = [list(v) if isinstance(v, tuple) else v for v in res.odd_cycle.cycle]
    status = "vertex" if agree and graph.is_vertex else "internal"
    return {"status": status, "seed": seed, "support": len(res.array.support),
            "reason": "" if status == "vertex" else "certifiers disagree",
            "files": {"vertex.json": serialize(res.array, {"config": cfg}),
                      "stagelog.json": dumps(log),
                      "certificate.json": dumps(cert)}}


def cmd_construct(args) -> int:
    cfg = effective_config(args)
    seeds = args.seed
    out = Path(args.out)
    budget = Budget(args.budget_ms)
    jobs = [(args.n, s, args.retries, cfg) for s in seeds]
    results, partial = run_jobs(construct_job, jobs, budget)
    code = EXIT_OK
    for r in results:
        where = out if len(seeds) == 1 else out / f"seed-{r['seed']}"
        for name, text in r["files"].items():
            write_text(where / name, text)
        if r["status"] == "vertex":
            print(f"seed {r['seed']}: vertex, |supp| = {r['support']} -> {where}")
        else:
            print(f"seed {r['seed']}: {r['status']} at stage {r.get('stage', '-')}: {r['reason']}",
                  file=sys.stderr)
            code = max(code, EXIT_INTERNAL if r["status"] == "internal" else EXIT_INFEASIBLE)
    if partial:
        write_text(out / "partial.json", dumps({"config": cfg, "partial": True,
                                                "completed": [r["seed"] for r in results]}))
        print("time budget exceeded; results are partial", file=sys.stderr)
        return EXIT_BUDGET
    return code


# -- certify ------------------------------------------------------------------------------

def cmd_certify(args) -> int:
    cfg = effective_config(args)
    path = Path(args.file)
    try:
        text = path.read_text()
        arr = parse(text)
    except (OSError, UnicodeDecodeError, ArrayFormatError) as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    cfg["input_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    cube = arr.to_cube() if isinstance(arr, HalfArray) else arr
    bad = validate_tristochastic(cube)
    if bad is not True:
        print(f"{path} is not tristochastic: {bad.reason} {bad.line or bad.cell}", file=sys.stderr)
        return EXIT_PARSE
    half = arr if isinstance(arr, HalfArray) else (
        HalfArray.from_cube(cube) if cube.is_half_valued() else None)
    if half is not None and validate_half_array(half) is not True:
        half = None
    out = Path(args.out)
    rank = certify_support_rank(cube)
    certs = {"support_rank": certificate_to_json(rank)}
    verdict = rank.verdict
    if half is not None:
        graph = certify_half_vertex(half)
        files = None
        if graph.decomposition is not None:
            files = ("decomposition_A.json", "decomposition_B.json")
            for name, part in zip(files, graph.decomposition):
                write_text(out / name, serialize(part, {"config": cfg}))
        certs["graph"] = certificate_to_json(graph, files)
        ok = graph.verify(cube) and rank.verify(cube)
        if graph.verdict != rank.verdict or not ok:
            verdict = "disagreement"
    write_text(out / "certificate.json", dumps({"config": cfg, "verdict": verdict, "certifiers": certs}))
    print(f"{path}: {verdict}")
    if verdict == "disagreement":
        return EXIT_INTERNAL
    return EXIT_OK if verdict == "vertex" else EXIT_NOT_VERTEX


# -- census -------------------------------------------------------------------------------

def _census_check(name: str, n: int, seed: int | None, count: int) -> dict:
    import numpy as np
    from . import census
    from .graphs import BipartiteGraph

    if name == "enumerate":
        tagged = census.enumerate_H(n)
        return {"hard": True, "passed": all(t.agree for t in tagged),
                "members": len(tagged), "vertices": sum(t.graph_vertex for t in tagged),
                "agree": sum(t.agree for t in tagged)}
    if name == "vertices":
        verts = census.enumerate_vertices_exhaustive(n)
        latin = {Cube.from_latin_square(L) for L in census.latin_squares(n)}
        integral = sum(all(v == 1 for v in c.entries.values()) for c in verts)
        return {"hard": True, "passed": latin <= set(verts), "vertices": len(verts),
                "integral_vertices": integral, "latin_squares": len(latin)}
    if name == "latin":
        return {"hard": False, "passed": True,
                "counts": {str(m): census.latin_square_count(m) for m in range(1, min(n, 5) + 1)}}
    if name == "stirling":
        failures = [m for m in range(2, 201) if not census.stirling_sandwich_check(m)]
        return {"hard": True, "passed": not failures, "range": [2, 200], "failures": failures}
    if name == "permanent":
        rng = np.random.default_rng(seed)
        rows, failures, total = [], 0, 0
        for m in range(2, 8):
            for d in range(2, m + 1):
                bad = 0
                for _ in range(count):
                    M = census.random_regular_biadjacency(m, d, rng)
                    bad += not census.permanent_sandwich_check(M, d).holds
                rows.append({"m": m, "d": d, "instances": count, "failures": bad})
                failures += bad
                total += count
        structured = []
        for m in range(2, 8):
            structured.append(("K_mm", m, census.permanent_sandwich_check(np.ones((m, m), dtype=int), m)))
        for lengths in ([2], [3], [4], [5], [6], [7], [2, 2], [2, 3], [3, 3], [2, 5], [3, 4], [2, 2, 3]):
            M = census.cycles_biadjacency(lengths)
            structured.append((f"cycles{lengths}", M.shape[0], census.permanent_sandwich_check(M, 2)))
        sfail = sum(not r.holds for _, _, r in structured)
        return {"hard": True, "passed": failures == 0 and sfail == 0, "random": rows,
                "random_failures": failures, "random_total": total,
                "structured": [{"case": c, "m": m, "per": r.value, "lower": r.lower, "upper": r.upper,
                                "holds": r.holds} for c, m, r in structured]}
    if name == "cuckler-kahn":
        rng = np.random.default_rng(seed)
        rows, failures = [], 0
        for m in range(3, 9):
            for _ in range(count):
                while True:
                    p = rng.uniform(0.5, 0.9)
                    M = (rng.random((m, m)) < p).astype(int)
                    if 2 * min(M.sum(0).min(), M.sum(1).min()) >= m:
                        break
                r = census.cuckler_kahn_check(BipartiteGraph.from_matrix(M))
                failures += not r.holds
                rows.append({"m": m, "d": r.min_degree, "count": r.count, "bound": r.bound,
                             "holds": r.holds})
        return {"hard": True, "passed": failures == 0, "slack": 1.0, "graphs": len(rows),
                "failures": failures, "rows": rows}
    if name == "ledger":
        led = census.choice_ledger(n)
        return {"hard": False, "passed": True, **led.to_json_obj()}
    raise ValueError(name)


def _applicable(name: str, n: int) -> bool:
    return {"enumerate": n <= 4, "vertices": n <= 3, "latin": True,
            "ledger": n >= 24}.get(name, True)


def cmd_census(args) -> int:
    names = args.checks or [c for c in CENSUS_CHECKS if _applicable(c, args.n)]
    for c in names:
        if not _applicable(c, args.n):
            print(f"check {c!r} is not available for n={args.n}", file=sys.stderr)
            return EXIT_PARSE
    if RANDOM_CHECKS & set(names) and args.seed is None:
        print("randomized checks need an explicit --seed", file=sys.stderr)
        return EXIT_PARSE
    args.checks = names
    cfg = effective_config(args)
    seed = args.seed[0] if args.seed else None
    count = args.count if args.count is not None else 100
    budget = Budget(args.budget_ms)
    results, partial = run_jobs(_census_check, [(c, args.n, seed, count) for c in names], budget)
    report = {"config": cfg, "partial": partial, "checks": dict(zip(names, results))}
    out = Path(args.out)
    if args.format == "csv":
        write_text(out / "census.csv", _census_csv(args.n, report["checks"]))
    else:
        write_text(out / "census.json", dumps(report))
    failed = [c for c, r in report["checks"].items() if r["hard"] and not r["passed"]]
    for c, r in report["checks"].items():
        print(f"{c}: {'pass' if r['passed'] else 'FAIL'}")
    if partial:
        print("time budget exceeded; results are partial", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_INTERNAL if failed else EXIT_OK


def _census_csv(n: int, checks: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "check", "key", "value"])
    for name, r in checks.items():
        for key, v in r.items():
            if not isinstance(v, (list, dict)):
                w.writerow([n, name, key, v])
    return buf.getvalue()


# -- sample / histogram ---------------------------------------------------------------------

def sample_job(n: int, seed: int, solver: str, config: dict) -> dict:
    from .lp import sample_vertex
    rec = sample_vertex(n, seed, solver=solver)
    cfg = dict(config, seed=seed)
    meta = rec.to_json_obj()
    return {"record": meta,
            "vertex": serialize(rec.vertex, {"config": cfg, "sample": meta}),
            "certificate": dumps({"config": cfg, "verdict": rec.certificate.verdict,
                                  "certifiers": {"support_rank": certificate_to_json(rec.certificate)}})}


def cmd_sample(args) -> int:
    if not args.seed:
        print("sample needs an explicit --seed", file=sys.stderr)
        return EXIT_PARSE
    count = args.count if args.count is not None else len(args.seed)
    seeds = list(args.seed) if len(args.seed) > 1 else [args.seed[0] + t for t in range(count)]
    cfg = effective_config(args)
    out = Path(args.out)
    budget = Budget(args.budget_ms)
    results, partial = run_jobs(sample_job, [(args.n, s, args.solver, cfg) for s in seeds], budget)
    records = []
    for s, r in zip(seeds, results):
        vfile = f"vertices/seed-{s}.json"
        cfile = f"certificates/seed-{s}.json"
        write_text(out / vfile, r["vertex"])
        write_text(out / cfile, r["certificate"])
        records.append(dict(r["record"], vertex_file=vfile, certificate_file=cfile))
    dv = [r["distinct_values"] for r in records]
    manifest = {"config": cfg, "partial": partial, "seeds": seeds[:len(records)], "samples": records,
                "mean_distinct_values": sum(dv) / len(dv) if dv else None}
    write_text(out / "manifest.json", dumps(manifest))
    print(f"{len(records)} certified vertices -> {out / 'manifest.json'}")
    if partial:
        print("time budget exceeded; results are partial", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_histogram(args) -> int:
    from .lp import histogram_rows, line_support_histogram
    path = Path(args.manifest)
    try:
        manifest = json.loads(path.read_text())
        cubes = [parse((path.parent / s["vertex_file"]).read_text()) for s in manifest["samples"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"cannot read manifest {path}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if not cubes:
        print("manifest lists no samples", file=sys.stderr)
        return EXIT_PARSE
    n = cubes[0].n
    hist = line_support_histogram(cubes, args.axis)
    cfg = dict(effective_config(args), source=manifest.get("config"))
    if args.format == "json":
        text = dumps({"config": cfg, "n": n, "axis": args.axis, "num_samples": len(cubes),
                      "counts": {str(k): v for k, v in hist.items()}})
    else:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(cfg, sort_keys=True, separators=(",", ":")) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "axis", "support_size", "count", "num_samples"])
        w.writerows(histogram_rows(n, args.axis, hist, len(cubes)))
        text = buf.getvalue()
    if args.out:
        write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tristoch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=False):
        sp.add_argument("--seed", type=int, action="append", required=seed_required,
                        help="RNG seed; repeat for several independent runs")
        sp.add_argument("--budget-ms", type=int, default=None, help="wall-clock cap (exit 5 when exceeded)")

    c = sub.add_parser("construct", help="build a {0,1/2}-valued vertex")
    c.add_argument("-n", type=int, required=True)
    common(c, seed_required=True)
    c.add_argument("--out", default=".")
    c.add_argument("--retries", type=int, default=64)
    c.add_argument("--format", choices=["json"], default="json")

    v = sub.add_parser("certify", help="certify an array file")
    v.add_argument("file")
    v.add_argument("--out", default=".")
    v.add_argument("--format", choices=["json"], default="json")

    s = sub.add_parser("census", help="exact counts and bound checks")
    s.add_argument("-n", type=int, required=True)
    common(s)
    s.add_argument("--checks", type=lambda t: [x for x in t.split(",") if x], default=None,
                   help="comma-separated subset of " + ",".join(CENSUS_CHECKS))
    s.add_argument("--count", type=int, default=None, help="random instances per size (default 100)")
    s.add_argument("--out", default=".")
    s.add_argument("--format", choices=["json", "csv"], default="json")

    m = sub.add_parser("sample", help="LP-sampled certified vertices")
    m.add_argument("-n", type=int, required=True)
    common(m, seed_required=True)
    m.add_argument("--count", type=int, default=None)
    m.add_argument("--solver", choices=["auto", "simplex", "highs"], default="auto")
    m.add_argument("--out", default=".")
    m.add_argument("--format", choices=["json"], default="json")

    h = sub.add_parser("histogram", help="line support-size histogram of a sample manifest")
    h.add_argument("manifest")
    h.add_argument("--axis", choices=["row", "column", "shaft"], default="row")
    h.add_argument("--out", default=None)
    h.add_argument("--format", choices=["json", "csv"], default="csv")
    return p


COMMANDS = {"construct": cmd_construct, "certify": cmd_certify, "census": cmd_census,
            "sample": cmd_sample, "histogram": cmd_histogram}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    if getattr(args, "checks", None):
        unknown = [c for c in args.checks if c not in CENSUS_CHECKS]
        if unknown:
            print(f"unknown checks: {', '.join(unknown)}", file=sys.stderr)
            return EXIT_PARSE
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
