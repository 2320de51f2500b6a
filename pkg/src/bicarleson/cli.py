"""Command line entry point: eval, symbols, decompose, verify, experiment, bench."""
from __future__ import annotations

import csv
import functools
import json
import os
import sys

import click
import numpy as np

from .budgets import ConfigurationError, use_budget_file

OUT_ENV = "BICARLESON_OUT"


def _common(fn):
    @click.option("--grid-size", "grid_size", type=int, default=None, help="Grid size N (power of two).")
    @click.option("--seed", type=int, default=None, help="Master seed (default: config value or 0).")
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON config file.")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                  help=f"Output directory (default ${OUT_ENV} or ./bicarleson-out).")
    @click.option("--budget-file", type=click.Path(dir_okay=False), default=None, help="Alternative budgets JSON.")
    @functools.wraps(fn)
    def wrapper(grid_size, seed, config_path, out_dir, budget_file, **kw):
        use_budget_file(budget_file)
        cfg = {}
        if config_path:
            try:
                with open(config_path) as fh:
                    cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise click.ClickException(f"cannot read config {config_path}: {exc}")
            if not isinstance(cfg, dict):
                raise click.ClickException("config must be a JSON object")
        out = out_dir or os.environ.get(OUT_ENV) or "bicarleson-out"
        if seed is None and fn.__name__ != "verify":
            seed = int(cfg.get("seed", 0))
        try:
            return fn(grid_size=grid_size, seed=seed, cfg=cfg, out=out, config_path=config_path, **kw)
        except ConfigurationError as exc:
            raise click.ClickException(str(exc))
        finally:
            use_budget_file(None)
    return wrapper


def _n(grid_size, cfg, default=64) -> int:
    n = grid_size or cfg.get("grid_size", default)
    if n < 2 or n & (n - 1):
        raise click.ClickException("grid size must be a power of two")
    return int(n)


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True, default=str))


def _csv(path: str, rows: list[dict]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


@click.group()
def main():
    """Discrete bi-Carleson operators, symbols, tiles and stopping-time checks."""


@main.command("eval")
@click.option("--operator", type=click.Choice(["carleson", "bht", "bicarleson"]), default=None)
@_common
def eval_cmd(grid_size, seed, cfg, out, config_path, operator):
    """Apply an operator to data from the config (or random data) and write output.csv."""
    from .grid import CutoffFunction, GridFunction, Spectrum, forward_transform
    from .operators import bht_apply, bicarleson_apply, carleson_apply

    n = _n(grid_size, cfg)
    op = operator or cfg.get("operator", "bicarleson")
    rng = np.random.default_rng(seed)

    def data(key):
        if key in cfg:
            v = np.asarray(cfg[key], dtype=float)
            if v.ndim == 2:
                v = v[:, 0] + 1j * v[:, 1]
            if v.shape != (n,):
                raise click.ClickException(f"{key} must have {n} samples")
            return forward_transform(GridFunction(v))
        return Spectrum(rng.normal(size=n) + 1j * rng.normal(size=n))

    f1, f2 = data("f1"), data("f2")
    cut = CutoffFunction(np.asarray(cfg["cutoff"])) if "cutoff" in cfg else CutoffFunction(
        rng.integers(-n // 2, n // 2 + 1, size=n))
    if op == "carleson":
        g = carleson_apply(f1, cut)
    elif op == "bht":
        g = bht_apply(f1, f2)
    else:
        g = bicarleson_apply(f1, f2, cut)
    rows = [{"k": k, "re": repr(float(z.real)), "im": repr(float(z.imag))} for k, z in enumerate(g.samples)]
    _csv(os.path.join(out, "output.csv"), rows)
    _emit({"operator": op, "n": n, "l2": g.l2(), "out": os.path.join(out, "output.csv")})


@main.command()
@click.option("--cutoff", "cutoffs", type=int, multiple=True, help="Cutoff n (repeatable).")
@_common
def symbols(grid_size, seed, cfg, out, config_path, cutoffs):
    """Build m', m'', m''' and verify the decomposition and regime values."""
    from .symbols import decompose_cone, m_doubleprime_regime, m_prime_regime

    n = _n(grid_size, cfg)
    cuts = list(cutoffs) or cfg.get("cutoffs", [0, n // 8, n // 4])
    report = []
    os.makedirs(out, exist_ok=True)
    for c in cuts:
        d = decompose_cone(n, int(c))
        total = d.m_prime.values + d.m_doubleprime.values + d.m_tripleprime.values
        rp, rpp = m_prime_regime(n, c), m_doubleprime_regime(n, c)
        report.append({
            "cutoff": c,
            "identity_exact": bool(np.array_equal(total, d.chi.values)),
            "m_prime_regime_err": float(np.abs(d.m_prime.values[rp] - 1).max()) if rp.any() else 0.0,
            "m_doubleprime_regime_err": float(np.abs(d.m_doubleprime.values[rpp] - 1).max()) if rpp.any() else 0.0,
        })
        for name, s in (("m_prime", d.m_prime), ("m_doubleprime", d.m_doubleprime), ("m_tripleprime", d.m_tripleprime)):
            np.savetxt(os.path.join(out, f"{name}_n{c}.csv"), s.values, delimiter=",", fmt="%.17g")
    _emit(report)
    if not all(r["identity_exact"] for r in report):
        sys.exit(1)


@main.command()
@click.option("--tiles", type=int, default=12, show_default=True)
@click.option("--j", type=click.IntRange(1, 3), default=1, show_default=True)
@_common
def decompose(grid_size, seed, cfg, out, config_path, tiles, j):
    """Partition a random tri-tile collection into size levels with tree covers."""
    from .decomp import partition_levels
    from .harness import _random_tritiles
    from .tiles import dumps

    n = _n(grid_size, cfg, 32)
    rng = np.random.default_rng(seed)
    Q = _random_tritiles(n, cfg.get("tiles", tiles), rng)
    a = rng.normal(size=len(Q)) + 1j * rng.normal(size=len(Q))
    part = partition_levels(Q, a, j)
    rows = []
    for lv in part.levels:
        rows.append({"n": lv.n, "tiles": len(lv.members), "trees": len(lv.cover), "size": repr(lv.size),
                     "counting": repr(lv.counting), "counting_ratio": repr(lv.counting_ratio)})
    _csv(os.path.join(out, "levels.csv"), rows)
    with open(os.path.join(out, "collection.json"), "w") as fh:
        fh.write(dumps(Q))
    _emit({"energy": part.energy, "size": part.size, "levels": rows})


@main.command()
@_common
def verify(grid_size, seed, cfg, out, config_path):
    """Run the end-to-end pipeline; exit status 1 if any assertion fails."""
    from .harness import PipelineError, parse_config, pipeline_run

    if config_path:
        with open(config_path) as fh:
            text = fh.read()
    else:
        from importlib import resources

        text = resources.files("bicarleson").joinpath("data/smoke.json").read_text()
    try:
        conf = parse_config(text)
    except ConfigurationError as exc:
        raise click.ClickException(str(exc))
    if grid_size:
        conf["grid_size"] = grid_size
    if seed is not None:
        conf["seed"] = seed
    try:
        summary = pipeline_run(conf, out)
    except PipelineError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    _emit({"status": summary["status"], "passed": summary["passed"], "failed": summary["failed"], "out": out})


@main.command()
@click.option("--form", type=click.Choice(["carleson", "prime", "doubleprime"]), default="carleson")
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--alpha", type=str, default=None, help="Comma separated exponents (default: the standard sweep).")
@_common
def experiment(grid_size, seed, cfg, out, config_path, form, trials, alpha):
    """Restricted-type sweeps; writes one CSV row per trial and a JSON summary."""
    from fractions import Fraction

    from .budgets import budget
    from .harness import restricted_type_experiment, segment_sweep, vertex_sweep, write_reports

    n = _n(grid_size, cfg)
    trials = cfg.get("trials", trials)
    if alpha:
        reps = [restricted_type_experiment(form, tuple(Fraction(x) for x in alpha.split(",")), trials, seed, n)]
    elif form == "carleson":
        reps = segment_sweep(9, trials=trials, seed=seed, n=n)
    else:
        reps = vertex_sweep(form, trials=trials, seed=seed, n=n)
    write_reports(reps, out, f"experiment_{form}")
    b = budget(f"experiment-{form}")
    res = [{**r.summary(), "budget": b, "within_budget": r.max <= b} for r in reps]
    _emit(res)
    if not all(r["within_budget"] and r["majority"] for r in res):
        sys.exit(1)


@main.command()
@click.option("--repeats", type=int, default=3, show_default=True)
@_common
def bench(grid_size, seed, cfg, out, config_path, repeats):
    """Time the direct oracle against the FFT fast path."""
    from .operators import benchmark

    sizes = (grid_size,) if grid_size else tuple(cfg.get("sizes", (32, 64, 128)))
    os.makedirs(out, exist_ok=True)
    rows = benchmark(sizes, repeats, seed, os.path.join(out, "bench.csv"))
    _emit(rows)


if __name__ == "__main__":
    main()
