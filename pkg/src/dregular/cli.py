"""Command-line surface: graph sampling, resolvent reports, local
resampling, and the Monte-Carlo experiment runner.

Experiments write a CSV (one row per record, complex values split into
re/im columns) plus a JSON manifest carrying the config, a content hash,
and the in-run band checks.  Files are written to a ``.partial`` path and
renamed atomically, so an interrupted run never leaves a truncated final
file.  The exit status is nonzero iff a band check failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import experiments as ex
from .config import DEFAULTS, EXPERIMENTS, ConfigError, ExperimentConfig, make_config, parse_config
from .graphs import Parameters, RegularGraph
from .kernels import SpectralPoint, stieltjes_semicircle
from .resampling import (
    apply as apply_switch,
    exchangeability_test,
    propose,
    second_eigenvalue,
    woodbury_f,
)
from .resolvent import NormalizedAdjacency, local_law_error, q_of, resolvent
from .samplers import SamplerConfig, sample, stream


def _atomic_write(path: str, text: str) -> None:
    partial = path + ".partial"
    with open(partial, "w", encoding="ascii") as fh:
        fh.write(text)
    os.replace(partial, path)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def write_csv(path: str, header: str, rows) -> str:
    text = header + "\n" + "\n".join(rows) + ("\n" if rows else "")
    _atomic_write(path, text)
    return _sha256(text)


def write_manifest(path: str, cfg: ExperimentConfig, outputs: dict, report: dict,
                   checks: dict) -> None:
    config_dict = cfg.as_dict()
    manifest = {
        "config": config_dict,
        "config_hash": _sha256(json.dumps(config_dict, sort_keys=True)),
        "outputs": outputs,
        "report": report,
        "checks": checks,
    }
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------


def _run_esd(cfg: ExperimentConfig, outdir: str):
    rows = []
    report = {}
    for n in cfg.n_list:
        res = ex.esd_experiment(n, cfg.d, cfg.samples, cfg.seed, model=cfg.model)
        report[str(n)] = {"ks_distance": res["ks_distance"],
                          "mass_outside": res["mass_outside"]}
        edges = res["bin_edges"]
        for k, count in enumerate(res["counts"]):
            rows.append(",".join([
                str(n), str(cfg.d), str(cfg.seed),
                repr(float(edges[k])), repr(float(edges[k + 1])), str(int(count)),
            ]))
    header = "n,d,seed,bin_lo,bin_hi,count"
    ks_final = report[str(max(cfg.n_list))]["ks_distance"]
    checks = {"ks_below_0.05_at_largest_n": ks_final < 0.05}
    if len(cfg.n_list) > 1:
        ks_first = report[str(min(cfg.n_list))]["ks_distance"]
        checks["ks_decreasing"] = ks_final < ks_first
    return header, rows, report, checks


def _run_sce(cfg: ExperimentConfig, outdir: str):
    grid = cfg.z_grid or (make_config(name="sce", n_list=cfg.n_list, d=cfg.d,
                                      z_grid="edge:1.0").z_grid)
    z_of_n = lambda n: [r.evaluate(n, cfg.d) for r in grid]
    records, aggregates = ex.self_consistent_scan(
        cfg.n_list, cfg.d, cfg.ell, z_of_n, cfg.samples, cfg.seed,
        frak_c=cfg.frak_c, model=cfg.model)
    rows = [r.csv_row() for r in records]
    report = {"aggregates": _jsonable(aggregates)}
    n_max = max(cfg.n_list)
    final = [a for a in aggregates if a["n"] == n_max]
    checks = {
        "qy_finer_than_q_msc_at_largest_n": all(
            a["median_abs_qy"] <= a["median_abs_q_msc"] for a in final),
    }
    return ex.DiagnosticRecord.CSV_HEADER, rows, report, checks


def _run_loop(cfg: ExperimentConfig, outdir: str):
    results = ex.loop_equation_probe(
        cfg.n_list, cfg.d, cfg.ell, cfg.samples, cfg.seed,
        kappa=cfg.kappa, frak_c=cfg.frak_c, model=cfg.model)
    rows = []
    for res in results:
        rows.extend(r.csv_row() for r in res["records"])
    report = {
        str(res["n"]): _jsonable({k: v for k, v in res.items() if k != "records"})
        for res in results
    }
    last = results[-1]
    checks = {"loop_cancels_at_largest_n": last["cancellation_ratio"] < 0.5}
    return ex.DiagnosticRecord.CSV_HEADER, rows, report, checks


def _run_edge(cfg: ExperimentConfig, outdir: str):
    rows = []
    report = {}
    checks = {}
    for n in cfg.n_list:
        res = ex.edge_fluctuations(n, cfg.d, cfg.samples, cfg.seed, model=cfg.model)
        rows.extend(r.csv_row() for r in res["records"])
        report[str(n)] = _jsonable({k: v for k, v in res.items() if k != "records"})
    largest = report[str(max(cfg.n_list))]
    checks["frac_below_2_in_band"] = 0.65 <= largest["frac_below_2"] <= 0.95
    checks["frac_ramanujan_in_band"] = 0.50 <= largest["frac_ramanujan"] <= 0.85
    checks["edge_correlation_small"] = abs(largest["corr_edges"]) < 0.2
    return ex.EdgeSample.CSV_HEADER, rows, report, checks


def _run_exch(cfg: ExperimentConfig, outdir: str):
    n = max(cfg.n_list)
    scfg = SamplerConfig(n=n, d=cfg.d, model=cfg.model, seed=cfg.seed)
    params = Parameters(n=n, d=cfg.d, frak_c=cfg.frak_c, frak_g=cfg.frak_g,
                        ell=cfg.ell, radius=cfg.radius)
    res = exchangeability_test(scfg, params, second_eigenvalue, cfg.samples)
    rows = [",".join([str(n), str(cfg.d), str(cfg.seed), str(k)])
            for k in range(cfg.samples)]
    header = "n,d,seed,sample"
    report = _jsonable(res)
    checks = {
        "ks_pvalue_above_0.01": res["ks_pvalue"] > 0.01,
        "paired_pvalue_above_0.01": res["paired_pvalue"] > 0.01,
    }
    return header, rows, report, checks


_RUNNERS = {"esd": _run_esd, "sce": _run_sce, "loop": _run_loop,
            "edge": _run_edge, "exch": _run_exch}


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns 0 iff every band check passed."""
    outdir = cfg.out
    os.makedirs(outdir, exist_ok=True)
    header, rows, report, checks = _RUNNERS[cfg.name](cfg, outdir)
    csv_path = os.path.join(outdir, f"{cfg.name}.csv")
    digest = write_csv(csv_path, header, rows)
    manifest_path = os.path.join(outdir, f"{cfg.name}.manifest.json")
    write_manifest(manifest_path, cfg, {os.path.basename(csv_path): digest},
                   report, checks)
    for name, ok in checks.items():
        print(f"check {name}: {'pass' if ok else 'FAIL'}")
    print(f"wrote {csv_path} and {manifest_path}")
    return 0 if all(checks.values()) else 1


# ---------------------------------------------------------------------------
# Plain subcommands
# ---------------------------------------------------------------------------


def _cmd_sample(args) -> int:
    cfg = SamplerConfig(n=args.n, d=args.d, model=args.model, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    for m in range(args.count):
        g = sample(cfg, stream(args.seed, m))
        path = os.path.join(args.out, f"graph-{m:04d}.txt")
        _atomic_write(path, g.to_text())
    print(f"wrote {args.count} graph(s) to {args.out}")
    return 0


def _cmd_resolvent(args) -> int:
    g = RegularGraph.load(args.graph)
    point = SpectralPoint(complex(args.z_re, args.z_im))
    h = NormalizedAdjacency(g)
    cache = resolvent(h, point)
    rng = stream(args.seed, 0)
    wanted = [tok.strip() for tok in args.report.split(",") if tok.strip()]
    out = {"n": g.n, "d": g.d, "z": {"re": point.z.real, "im": point.z.imag}}
    gm = cache.matrix
    if "ward" in wanted:
        rows = rng.integers(0, g.n, size=min(10, g.n))
        resid = [abs(np.sum(np.abs(gm[i]) ** 2) - gm[i, i].imag / point.eta) for i in rows]
        out["ward_max_residual"] = float(max(resid))
    if "rowsum" in wanted:
        rows = rng.integers(0, g.n, size=min(10, g.n))
        expect = 1.0 / (g.d / np.sqrt(g.d - 1.0) - point.z)
        resid = [abs(np.sum(gm[i]) - expect) for i in rows]
        out["rowsum_max_residual"] = float(max(resid))
    if "q" in wanted:
        q = q_of(cache)
        msc = stieltjes_semicircle(point)
        out["q"] = {"re": q.real, "im": q.imag}
        out["abs_q_minus_msc"] = abs(q - msc)
    if "locallaw" in wanted:
        out["local_law"] = local_law_error(cache, g, radius=args.radius,
                                           sample_pairs=args.pairs,
                                           rng=stream(args.seed, 1))
    text = json.dumps(_jsonable(out), indent=2, sort_keys=True)
    if args.out:
        _atomic_write(args.out, text + "\n")
    else:
        print(text)
    return 0


def _cmd_resample(args) -> int:
    g = RegularGraph.load(args.graph)
    params = Parameters(n=g.n, d=g.d, ell=args.ell, radius=args.radius)
    riso = args.isolation_radius if args.isolation_radius else None
    s = propose(g, args.o, params, stream(args.seed, 0), isolation_radius=riso)
    switched = apply_switch(g, s)
    if args.emit == "graph":
        text = switched.to_text()
    else:
        report = {
            "center": s.center,
            "ell": s.ell,
            "mu": s.mu,
            "admissible": len(s.admissible_indices),
            "degrees_preserved": all(
                len(switched.neighbors(v)) == g.d for v in range(g.n)),
        }
        try:
            sw = woodbury_f(g, s, SpectralPoint(2j))
            report["woodbury_identity_residual"] = sw.identity_residual
        except Exception as exc:  # geometry too tangled: report, don't fail
            report["woodbury_identity_residual"] = None
            report["woodbury_skip_reason"] = str(exc)
        text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_experiment(args) -> int:
    if args.config:
        cfg = parse_config(args.config)
        if args.name and args.name != cfg.name:
            raise ConfigError(
                f"experiment name {args.name!r} does not match config name {cfg.name!r}")
    else:
        kwargs = {"name": args.name, "d": args.d}
        kwargs["n_list"] = tuple(int(tok) for tok in args.n_list.replace(",", " ").split())
        for key in ("model", "seed", "samples", "ell", "frak_c", "frak_g",
                    "kappa", "out"):
            val = getattr(args, key)
            if val is not None:
                kwargs[key] = val
        if args.z_grid:
            kwargs["z_grid"] = args.z_grid
        cfg = make_config(**kwargs)
    return run(cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dregular",
        description="spectral simulation toolkit for random d-regular graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw d-regular graphs to edge-list files")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--model", default="uniform_pairing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", default="graphs")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("resolvent", help="resolvent identity report for one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--z-re", type=float, required=True)
    p.add_argument("--z-im", type=float, required=True)
    p.add_argument("--report", default="ward,rowsum,q")
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_resolvent)

    p = sub.add_parser("resample", help="one local resampling around a vertex")
    p.add_argument("--graph", required=True)
    p.add_argument("--o", type=int, default=0)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--radius", type=int, default=0)
    p.add_argument("--isolation-radius", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit", choices=("graph", "report"), default="report")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_resample)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment")
    p.add_argument("name", nargs="?", choices=EXPERIMENTS)
    p.add_argument("--config", default=None)
    p.add_argument("--n-list", dest="n_list", default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--ell", type=int, default=None)
    p.add_argument("--frak-c", dest="frak_c", type=float, default=None)
    p.add_argument("--frak-g", dest="frak_g", type=float, default=None)
    p.add_argument("--z-grid", dest="z_grid", default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "experiment" and not args.config:
        if not args.name or not args.n_list or args.d is None:
            parser.error("experiment needs either --config or name, --n-list and --d")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
