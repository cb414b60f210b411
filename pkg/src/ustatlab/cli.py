"""Experiment runner: config parsing, seed management, CSV emission.

Subcommands
-----------
``path``        simulate normalized statistic paths (CSV: seed, mode, k, n, value)
``conditions``  evaluate one family of summability criteria
                (CSV: condition, k, term, err, partial_sum; verdict line)
``verify``      run one of the inequality verifiers (CSV of margins)
``series``      evaluate the random-series criteria (CSV of terms; verdict)
``cn``          truncation constants (CSV: n, c_n, residual, method)
``regularity``  certify a normalizing sequence (CSV of per-check rows)

Every run is reproducible from the config plus master seed: work is cut
into tasks, task i draws its randomness from
``SeedSequence(master_seed, spawn_key=(i,))``, and results are reduced
in task order, so the emitted CSV is byte-identical for any worker
count.  CSVs carry a header row and a trailing ``# key=value`` metadata
block recording the config hash and master seed.

Config files are JSON objects whose keys mirror the long flags, e.g.::

    {"experiment": "conditions", "theorem": 1, "dist": "pareto:1.0",
     "gamma": "poly:2", "kmax": 12, "budget": 100000, "seed": 7}

Flags given on the command line override config fields.  Exit status is
0 on completion, 2 when every produced verdict is inconclusive, 1 on
validation errors.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import conditions as cond
from . import engine, inequalities, model, series, truncation

__all__ = ["main", "build_parser"]

_VERSION = "0.1.0"


# --------------------------------------------------------------------------
# spec-string parsing
# --------------------------------------------------------------------------

def _split_spec(spec: str):
    parts = str(spec).split(":")
    return parts[0], parts[1:]


def dist_from_spec(spec: str) -> model.Distribution:
    name, args = _split_spec(spec)
    if name == "pareto":
        if not args:
            raise ValueError("pareto needs a tail exponent, e.g. pareto:1.0")
        return model.make_distribution("pareto", p=float(args[0]))
    if name == "point":
        return model.make_distribution("point", value=float(args[0]) if args else 0.0)
    return model.make_distribution(name)


def gamma_from_spec(spec: str) -> model.NormalizingSequence:
    name, args = _split_spec(spec)
    if name == "poly":
        return model.make_normalizer("poly", exponent=float(args[0]))
    if name == "const":
        return model.make_normalizer("const", value=float(args[0]) if args else 1.0)
    raise ValueError(f"unknown normalizer spec {spec!r} (use poly:<a> or const:<c>)")


def kernel_from_spec(spec: str) -> model.Kernel:
    name, args = _split_spec(spec)
    if not args:
        raise ValueError(f"kernel spec {spec!r} needs an arity, e.g. product:2")
    arity = int(args[0])
    params = {}
    if name == "sum_product" and len(args) > 1:
        params["weight"] = float(args[1])
    if name == "indicator_threshold" and len(args) > 1:
        params["threshold"] = float(args[1])
    return model.make_kernel(name, arity, **params)


def family_from_spec(spec: str, dim: int, cutoff: Optional[int]) -> series.KernelFamily:
    name, args = _split_spec(spec)
    params = {}
    if name == "geometric" and args:
        params["rate"] = float(args[0])
    if name == "constant" and args:
        params["box"] = int(args[0])
    if name in ("diagonal", "reciprocal") and cutoff:
        params["cutoff"] = cutoff
    fam = series.make_family(name, arity=dim, **params)
    if cutoff is not None and name not in ("diagonal", "reciprocal"):
        fam = series.KernelFamily(
            arity=fam.arity, cutoff=min(cutoff, fam.cutoff or cutoff),
            evaluate=fam.evaluate, coefficient=fam.coefficient,
            separable=fam.separable, tail_bound=fam.tail_bound, label=fam.label,
        )
    return fam


# --------------------------------------------------------------------------
# tasks
# --------------------------------------------------------------------------

def _task_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _execute_task(payload: dict) -> list:
    """Run one task; must stay top-level so worker processes can pickle it."""
    kind = payload["kind"]
    rng = _task_rng(payload["master_seed"], payload["index"])
    if kind == "path":
        kernel = kernel_from_spec(payload["kernel"])
        dist = dist_from_spec(payload["dist"])
        seq = gamma_from_spec(payload["gamma"])
        diag = engine.run_path(
            kernel, dist, seq, payload["mode"], payload["kmax"], rng,
            check_regularity=payload["check_regularity"],
        )
        return [(payload["path_id"], payload["mode"], k, n, v)
                for (_, _, k, n, v) in diag.rows()]
    if kind == "product_tails_k":
        dist = dist_from_spec(payload["dist"])
        seq = gamma_from_spec(payload["gamma"])
        rep = cond.product_tail_terms(
            dist, seq, payload["d"], payload["l"], [payload["k"]],
            estimator=payload["estimator"], budget=payload["budget"], rng=rng,
        )
        return [(rep.condition, payload["k"], float(rep.terms[0]), float(rep.errs[0]))]
    if kind == "exceedance_k":
        kernel = kernel_from_spec(payload["kernel"])
        dist = dist_from_spec(payload["dist"])
        seq = gamma_from_spec(payload["gamma"])
        rep = cond.exceedance_terms(
            kernel, dist, seq, [payload["k"]], replicates=payload["replicates"],
            mode=payload["mode"], budget=payload["budget"], rng=rng,
        )
        return [(rep.condition, payload["k"], float(rep.terms[0]), float(rep.errs[0]))]
    if kind == "two_dim_k":
        kernel = kernel_from_spec(payload["kernel"])
        dist = dist_from_spec(payload["dist"])
        seq = gamma_from_spec(payload["gamma"])
        r1, r2 = cond.two_dim_terms(
            kernel, dist, seq, [payload["k"]], budget=payload["budget"],
            inner_budget=payload["inner_budget"], rng=rng,
        )
        return [
            (r1.condition, payload["k"], float(r1.terms[0]), float(r1.errs[0])),
            (r2.condition, payload["k"], float(r2.terms[0]), float(r2.errs[0])),
        ]
    if kind == "section_k":
        dist = dist_from_spec(payload["dist"])
        a, b = payload["a"], payload["b"]

        def predicate(pts):
            ax = np.abs(pts[..., 0])
            ay = np.abs(pts[..., 1])
            return ((ax < a) & (ay < b)) | ((ax < b) & (ay < a))

        decomp = cond.section_decomposition(
            predicate, dist, payload["d"], payload["k"],
            budget=payload["budget"], replicates=payload["replicates"], rng=rng,
        )
        rows = []
        for subset, (term, err) in sorted(decomp.section_terms.items(),
                                          key=lambda kv: sorted(kv[0])):
            label = "section-event[" + ",".join(str(s + 1) for s in sorted(subset)) + "]"
            rows.append((label, payload["k"], term, err))
        rows.append(("core-mass", payload["k"], decomp.core_term[0], decomp.core_term[1]))
        return rows
    if kind == "cn":
        dist = dist_from_spec(payload["dist"])
        sol = truncation.solve_cn(dist, payload["n"], rng=rng)
        return [(sol.n, sol.c_n, sol.residual, sol.method)]
    if kind == "verify_trial":
        return _verify_trial(payload, rng)
    if kind == "series_run":
        dim = payload["dim"]
        fam = family_from_spec(payload["family"], dim, payload["cutoff"])
        dists = [dist_from_spec(payload["dist"])] * dim
        if dim == 1:
            rep = series.multi_dim_series_check(
                fam, dists, replicates=payload["replicates"],
                budget=payload["budget"], rng=rng)
        elif dim == 2:
            rep = series.two_dim_series_check(
                fam, dists[0], dists[1], replicates=payload["replicates"],
                budget=payload["budget"], rng=rng)
        else:
            rep = series.multi_dim_series_check(
                fam, dists, replicates=payload["replicates"],
                budget=payload["budget"], rng=rng)
        rows = [tuple(r) for r in rep.rows()]
        return [("__verdict__", rep.verdict, rep.summary())] + rows
    if kind == "regularity":
        seq = gamma_from_spec(payload["gamma"])
        rep = model.certify_regularity(seq, payload["d"], payload["kmax"])
        return [
            ("monotone", "pass" if rep.monotone else "fail", ""),
            ("doubling", "pass" if rep.doubling else "fail", repr(rep.doubling_c)),
            ("dyadic-tail", "pass" if rep.dyadic_tail else "fail",
             repr(rep.tail_c) + ";ratio=" + repr(rep.tail_ratio)),
            ("hard-failure", rep.hard_failure or "none", ""),
        ]
    raise ValueError(f"unknown task kind {kind!r}")


def _verify_trial(payload: dict, rng) -> list:
    lemma = payload["lemma"]
    if lemma == "d1max":
        rows = []
        for q in np.linspace(0.001, 0.9, payload.get("points", 20)):
            for n in range(1, payload.get("nmax", 100) + 1):
                chk = inequalities.max_inequality_exact_iid(float(q), n)
                lo_m, hi_m = chk.margins
                rows.append(("d1max", f"q={q:.6g},n={n}", lo_m, hi_m, int(chk.holds)))
        return rows
    if lemma == "intro":
        rows = []
        for n in (1, 10, 100, 1000, 10000):
            ex = inequalities.intro_example_exact(payload.get("a", 1.0),
                                                  payload.get("b", 0.001), n)
            rows.append(("intro", f"n={n}", ex.p_hit, ex.product_bound, ex.sum_bound))
        return rows
    if lemma in ("lemma1", "lemma2"):
        mode = "decoupled" if lemma == "lemma1" else "coupled"
        d = payload["d"]
        n = int(rng.integers(max(4, d), payload.get("nmax", 32) + 1))
        inst = inequalities.rectangle_instance(d, n, mode=mode, rng=rng)
        res = inequalities.verify_moment_bounds(
            inst, replicates=payload.get("replicates", 10_000), rng=rng,
            check_hypotheses=False,  # rectangle construction guarantees them
        )
        return [(lemma, inst.label, res.moment_margin, res.moment_sigma,
                 res.pz_margin, res.pz_sigma,
                 int(res.moment_violated or res.pz_violated))]
    if lemma == "section":
        d = payload["d"]
        n = payload.get("n", 8)
        box = inequalities.BoxSet.cube(2.0 / n, d)  # marginal measure 1/n each
        res = inequalities.verify_section_bound(
            box, model.uniform_pm1(), n, d, mode="both",
            replicates=payload.get("replicates", 4000), rng=rng,
        )
        m = res.margins()
        return [("section", f"d={d},n={n}", m.get("decoupled", math.nan),
                 m.get("coupled", math.nan), int(res.hypothesis_ok))]
    raise ValueError(f"unknown lemma {lemma!r}")


def _run_tasks(tasks: list, workers: int) -> list:
    if workers <= 1:
        return [_execute_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_task, tasks))


# --------------------------------------------------------------------------
# CSV emission
# --------------------------------------------------------------------------

def _format_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _write_csv(path: Optional[str], header: list, rows: list, meta: dict) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_format_cell(v) for v in row) + "\n")
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _config_hash(cfg: dict) -> str:
    # workers and output path are execution details, not experiment identity
    payload = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # validation problems must exit 1 (2 is reserved for inconclusive runs)
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps a flag given before the subcommand from being
    # clobbered by the subparser's defaults
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON config file; flags override its fields")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed (default 0)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                        help="worker processes")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="CSV output path (default stdout)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    p = _Parser(prog="ustatlab", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter,
                parents=[common])
    sub = p.add_subparsers(dest="experiment")

    sp = sub.add_parser("path", parents=[common], help="simulate statistic paths")
    sp.add_argument("--dist", default=None)
    sp.add_argument("--kernel", default=None)
    sp.add_argument("--gamma", default=None)
    sp.add_argument("--mode", default=None, help="A|Apr|B|Bpr|MAX or 'all'")
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--paths", type=int, default=None, help="number of independent paths")
    sp.add_argument("--allow-irregular", action="store_true", default=None)

    sc = sub.add_parser("conditions", parents=[common], help="evaluate summability criteria")
    sc.add_argument("--theorem", type=int, choices=(1, 2, 3, 4), default=None)
    sc.add_argument("--dist", default=None)
    sc.add_argument("--kernel", default=None)
    sc.add_argument("--gamma", default=None)
    sc.add_argument("--d", type=int, default=None)
    sc.add_argument("--kmax", type=int, default=None)
    sc.add_argument("--kmin", type=int, default=None)
    sc.add_argument("--budget", type=int, default=None)
    sc.add_argument("--replicates", type=int, default=None)
    sc.add_argument("--mode", default=None, help="coupled|decoupled (theorem 2)")
    sc.add_argument("--a", type=float, default=None, help="theorem-3 target wing width")
    sc.add_argument("--b", type=float, default=None, help="theorem-3 target wing width")

    sv = sub.add_parser("verify", parents=[common], help="run an inequality verifier")
    sv.add_argument("--lemma", choices=("d1max", "lemma1", "lemma2", "section", "intro"),
                    default=None)
    sv.add_argument("--d", type=int, default=None)
    sv.add_argument("--trials", type=int, default=None)
    sv.add_argument("--replicates", type=int, default=None)
    sv.add_argument("--n", type=int, default=None)
    sv.add_argument("--a", type=float, default=None)
    sv.add_argument("--b", type=float, default=None)

    ss = sub.add_parser("series", parents=[common], help="evaluate random-series criteria")
    ss.add_argument("--dim", type=int, default=None)
    ss.add_argument("--family", default=None)
    ss.add_argument("--dist", default=None)
    ss.add_argument("--cutoff", type=int, default=None)
    ss.add_argument("--budget", type=int, default=None)
    ss.add_argument("--replicates", type=int, default=None)

    sn = sub.add_parser("cn", parents=[common], help="truncation constants")
    sn.add_argument("--dist", default=None)
    sn.add_argument("--n", default=None, help="comma-separated sizes")
    sn.add_argument("--kmax", type=int, default=None, help="use sizes 2^1..2^kmax")

    sr = sub.add_parser("regularity", parents=[common], help="certify a normalizing sequence")
    sr.add_argument("--gamma", default=None)
    sr.add_argument("--d", type=int, default=None)
    sr.add_argument("--kmax", type=int, default=None)
    return p


_DEFAULTS = {
    "seed": 0, "workers": 1, "out": None,
    "dist": "rademacher", "kernel": "product:2", "gamma": "poly:2",
    "mode": None, "kmax": 8, "kmin": 1, "paths": 4, "budget": 10_000,
    "replicates": 64, "d": 2, "trials": 200, "n": None, "theorem": 1,
    "family": "geometric", "dim": 2, "cutoff": 30, "lemma": "d1max",
    "a": 0.3, "b": 0.01, "allow_irregular": False,
}


def _merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except FileNotFoundError:
            raise _ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as e:
            raise _ConfigError(
                f"malformed config {args.config} at line {e.lineno}, "
                f"column {e.colno}: {e.msg}"
            )
        if not isinstance(loaded, dict):
            raise _ConfigError("config must be a JSON object")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in ("config",):
            continue
        if value is not None:
            cfg[key] = value
    if cfg.get("experiment") is None:
        raise _ConfigError("no experiment given (subcommand or config 'experiment')")
    return cfg


class _ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# subcommand drivers
# --------------------------------------------------------------------------

def _drive_path(cfg: dict) -> tuple[list, list, list]:
    kernel_from_spec(cfg["kernel"])  # validate early
    dist_from_spec(cfg["dist"])
    gamma_from_spec(cfg["gamma"])
    modes = list(engine.MODES) if cfg["mode"] in (None, "all") else [cfg["mode"]]
    for m in modes:
        if m not in engine.MODES:
            raise _ConfigError(f"unknown mode {m!r}; expected one of {engine.MODES}")
    tasks = []
    index = 0
    for path_id in range(cfg["paths"]):
        for mode in modes:
            tasks.append(dict(
                kind="path", index=index, master_seed=cfg["seed"],
                dist=cfg["dist"], kernel=cfg["kernel"], gamma=cfg["gamma"],
                mode=mode, kmax=cfg["kmax"], path_id=path_id,
                check_regularity=not cfg["allow_irregular"],
            ))
            index += 1
    results = _run_tasks(tasks, cfg["workers"])
    rows = [row for chunk in results for row in chunk]
    return ["seed", "mode", "k", "n", "value"], rows, []


def _drive_conditions(cfg: dict) -> tuple[list, list, list]:
    ks = list(range(cfg["kmin"], cfg["kmax"] + 1))
    theorem = int(cfg["theorem"])
    tasks = []
    index = 0
    if theorem == 1:
        dist = dist_from_spec(cfg["dist"])
        estimator = "quadrature" if (dist.tail is not None and
                                     dist.tail_inverse is not None) else "monte-carlo"
        for l in range(1, cfg["d"] + 1):
            for k in ks:
                tasks.append(dict(kind="product_tails_k", index=index,
                                  master_seed=cfg["seed"], dist=cfg["dist"],
                                  gamma=cfg["gamma"], d=cfg["d"], l=l, k=k,
                                  estimator=estimator, budget=cfg["budget"]))
                index += 1
    elif theorem == 2:
        mode = cfg["mode"] or "coupled"
        for k in ks:
            tasks.append(dict(kind="exceedance_k", index=index,
                              master_seed=cfg["seed"], kernel=cfg["kernel"],
                              dist=cfg["dist"], gamma=cfg["gamma"], k=k,
                              replicates=cfg["replicates"],
                              budget=min(cfg["budget"], 4096), mode=mode))
            index += 1
    elif theorem == 3:
        for k in ks:
            tasks.append(dict(kind="section_k", index=index,
                              master_seed=cfg["seed"], dist=cfg["dist"],
                              d=cfg["d"], k=k, a=cfg["a"], b=cfg["b"],
                              budget=min(cfg["budget"], 8192),
                              replicates=cfg["replicates"]))
            index += 1
    else:
        for k in ks:
            tasks.append(dict(kind="two_dim_k", index=index,
                              master_seed=cfg["seed"], kernel=cfg["kernel"],
                              dist=cfg["dist"], gamma=cfg["gamma"], k=k,
                              budget=cfg["budget"],
                              inner_budget=min(cfg["budget"], 4096)))
            index += 1
    results = _run_tasks(tasks, cfg["workers"])
    flat = [row for chunk in results for row in chunk]

    by_condition: dict = {}
    for (name, k, term, err) in flat:
        by_condition.setdefault(name, []).append((k, term, err))
    rows = []
    verdicts = []
    for name in sorted(by_condition):
        entries = sorted(by_condition[name])
        terms = np.array([t for (_, t, _) in entries])
        errs = np.array([e for (_, _, e) in entries])
        if len(terms) >= 6:
            verdict = cond.summability_verdict(terms, errs)
        else:
            verdict = cond.INCONCLUSIVE
        verdicts.append((name, verdict))
        run = 0.0
        for (k, t, e) in entries:
            run += t
            rows.append((name, k, t, e, run))
    summary = [f"verdict[{name}] = {v}" for name, v in verdicts]
    overall = cond.combine_verdicts(*[v for _, v in verdicts])
    summary.append(f"verdict[overall] = {overall}")
    return ["condition", "k", "term", "err", "partial_sum"], rows, summary


def _drive_verify(cfg: dict) -> tuple[list, list, list]:
    lemma = cfg["lemma"]
    tasks = []
    if lemma in ("lemma1", "lemma2"):
        for i in range(cfg["trials"]):
            tasks.append(dict(kind="verify_trial", index=i, master_seed=cfg["seed"],
                              lemma=lemma, d=cfg["d"],
                              replicates=cfg["replicates"]))
        header = ["lemma", "instance", "moment_margin", "moment_sigma",
                  "pz_margin", "pz_sigma", "violated"]
    elif lemma == "section":
        tasks = [dict(kind="verify_trial", index=0, master_seed=cfg["seed"],
                      lemma="section", d=cfg["d"], n=cfg["n"] or 8,
                      replicates=cfg["replicates"])]
        header = ["lemma", "instance", "decoupled_margin", "coupled_margin",
                  "hypothesis_ok"]
    elif lemma == "intro":
        tasks = [dict(kind="verify_trial", index=0, master_seed=cfg["seed"],
                      lemma="intro", a=cfg["a"], b=cfg["b"])]
        header = ["lemma", "instance", "p_hit", "product_bound", "sum_bound"]
    else:
        tasks = [dict(kind="verify_trial", index=0, master_seed=cfg["seed"],
                      lemma="d1max")]
        header = ["lemma", "instance", "lower_margin", "upper_margin", "holds"]
    results = _run_tasks(tasks, cfg["workers"])
    rows = [row for chunk in results for row in chunk]
    bad = [r for r in rows if header[-1] in ("violated",) and r[-1]]
    summary = [f"{lemma}: {len(rows)} rows, {len(bad)} violations"]
    return header, rows, summary


def _drive_series(cfg: dict) -> tuple[list, list, list]:
    tasks = [dict(kind="series_run", index=0, master_seed=cfg["seed"],
                  dim=cfg["dim"], family=cfg["family"], dist=cfg["dist"] or "uniform",
                  cutoff=cfg["cutoff"], budget=cfg["budget"],
                  replicates=cfg["replicates"])]
    results = _run_tasks(tasks, cfg["workers"])
    rows = []
    summary = []
    for row in results[0]:
        if row[0] == "__verdict__":
            summary.append(row[2])
            summary.append(f"verdict[overall] = {row[1]}")
        else:
            rows.append(row)
    return ["condition", "index", "term", "err", "partial_sum"], rows, summary


def _drive_cn(cfg: dict) -> tuple[list, list, list]:
    if cfg["n"]:
        sizes = [int(s) for s in str(cfg["n"]).split(",")]
    else:
        sizes = [2**k for k in range(1, (cfg["kmax"] or 8) + 1)]
    tasks = [dict(kind="cn", index=i, master_seed=cfg["seed"],
                  dist=cfg["dist"], n=n) for i, n in enumerate(sizes)]
    results = _run_tasks(tasks, cfg["workers"])
    rows = [row for chunk in results for row in chunk]
    return ["n", "c_n", "residual", "method"], rows, []


def _drive_regularity(cfg: dict) -> tuple[list, list, list]:
    tasks = [dict(kind="regularity", index=0, master_seed=cfg["seed"],
                  gamma=cfg["gamma"], d=cfg["d"], kmax=max(cfg["kmax"], 2))]
    results = _run_tasks(tasks, cfg["workers"])
    rows = results[0]
    failed = [r for r in rows if r[1] == "fail"]
    summary = [f"regularity: {'pass' if not failed else 'FAIL'} for {cfg['gamma']}"
               f" (d={cfg['d']}, n <= 2^{cfg['kmax']})"]
    return ["check", "status", "detail"], rows, summary


_DRIVERS = {
    "path": _drive_path,
    "conditions": _drive_conditions,
    "verify": _drive_verify,
    "series": _drive_series,
    "cn": _drive_cn,
    "regularity": _drive_regularity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        driver = _DRIVERS.get(cfg["experiment"])
        if driver is None:
            raise _ConfigError(f"unknown experiment {cfg['experiment']!r}")
        header, rows, summary = driver(cfg)
    except (_ConfigError, ValueError) as e:
        print(f"ustatlab: error: {e}", file=sys.stderr)
        return 1
    meta = {
        "config_hash": _config_hash(cfg),
        "seed": cfg["seed"],
        "tool": f"ustatlab {_VERSION}",
    }
    _write_csv(cfg["out"], header, rows, meta)
    stream = sys.stdout if cfg["out"] else sys.stderr
    for line in summary:
        print(line, file=stream)
    verdict_lines = [s for s in summary if s.startswith("verdict[")]
    if verdict_lines:
        verdicts = [s.rsplit("= ", 1)[1] for s in verdict_lines]
        if all(v == cond.INCONCLUSIVE for v in verdicts):
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
