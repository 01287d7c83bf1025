"""Command-line surface: derive, bracket, table, cumcoef, edgeworth,
debias, simulate, errata, catalog.

Exit codes: 0 success, 2 validation error (bad flags, unknown functional
or key, degenerate input), 3 engine error (derivative unavailable,
non-monotone expansion, oracle failure).
"""

from __future__ import annotations

import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import __version__
from .asymptotics import (DegenerateVariance, ExpansionNonmonotone, Variant,
                          bias_correction, cumulant_coeffs, debias_estimate,
                          edgeworth_cdf, edgeworth_model, edgeworth_quantile)
from .brackets import evaluate_bracket, parse_key
from .gateaux import DerivativeUnavailable, derivative, format_deriv
from .partitions import ProfileError
from .poly import format_poly

VALIDATION_EXIT = 2
ENGINE_EXIT = 3

_ENGINE_ERRORS = (DerivativeUnavailable, ExpansionNonmonotone, ProfileError)


def _ledger_version() -> str:
    from .functionals import closed_forms
    return str(closed_forms().get("version", "?"))


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _get_entry(name: str):
    from .functionals import catalog_names, get_entry
    try:
        return get_entry(name)
    except KeyError:
        _fail(VALIDATION_EXIT,
              f"unknown functional {name!r}; catalog: "
              + ", ".join(catalog_names()))


def _parse_moments(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            _fail(VALIDATION_EXIT,
                  f"bad moment assignment {item!r}; expected name=value")
        name, _, val = item.partition("=")
        try:
            out[name.strip()] = float(Fraction(val.strip()))
        except (ValueError, ZeroDivisionError):
            _fail(VALIDATION_EXIT, f"bad moment value {val!r}")
    if not out:
        _fail(VALIDATION_EXIT, "no moments supplied")
    return out


def _read_data(path: str) -> list[float]:
    rows: list[float] = []
    try:
        with open(path, newline="") as fh:
            for line in csv.reader(fh):
                if not line or not line[0].strip():
                    continue
                cell = line[0].strip()
                if cell.lower() in ("x", "value", "sample"):
                    continue   # header
                rows.append(float(cell))
    except OSError as exc:
        _fail(VALIDATION_EXIT, f"cannot read data file: {exc}")
    except ValueError as exc:
        _fail(VALIDATION_EXIT, f"bad data value: {exc}")
    if len(rows) < 2:
        _fail(VALIDATION_EXIT, "need at least 2 data values")
    return rows


def _moments_from_data(data: list[float], r_max: int) -> dict[str, float]:
    n = len(data)
    mean = sum(data) / n
    vals = {"mu": mean}
    for r in range(2, max(r_max, 2) + 1):
        vals[f"mu{r}"] = sum((x - mean) ** r for x in data) / n
    return vals


def _needed_order(*polys) -> int:
    return max((s.order for p in polys for s in p.symbols()
                if s.kind == "central"), default=2)


def _emit(payload: dict, fmt: str, text_lines: list[str]) -> None:
    if fmt == "json":
        click.echo(json.dumps(payload, indent=2, default=str))
    else:
        for line in text_lines:
            click.echo(line)


@click.group()
@click.version_option(
    __version__, message=("momenta %(version)s "
                          f"(errata ledger v{_ledger_version()})"))
def main() -> None:
    """Symbolic von Mises calculus for smooth functions of moments."""


@main.command()
@click.option("--functional", "name", required=True)
@click.option("--order", "order", required=True, type=int)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
def derive(name: str, order: int, fmt: str) -> None:
    """Print the order-r von Mises derivative of a catalog functional."""
    entry = _get_entry(name)
    if order < 1 or order > 8:
        _fail(VALIDATION_EXIT, "derivative order must be in 1..8")
    try:
        expr = derivative(entry.spec, order)
    except _ENGINE_ERRORS as exc:
        _fail(ENGINE_EXIT, str(exc))
    text = format_deriv(expr)
    _emit({"schema": "momenta/derive/1", "functional": name,
           "order": order, "derivative": text}, fmt, [text])


@main.command()
@click.option("--functional", "name", required=True)
@click.option("--key", "key_text", required=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
def bracket(name: str, key_text: str, fmt: str) -> None:
    """Evaluate a bracket function [K]_T as an exact moment polynomial."""
    entry = _get_entry(name)
    try:
        key = parse_key(key_text)
    except (ValueError, KeyError) as exc:
        _fail(VALIDATION_EXIT, f"bad bracket key {key_text!r}: {exc}")
    tags = {f.tag for f in key.factors}
    try:
        if tags == {"T"}:
            poly = evaluate_bracket(entry.spec, key)
        elif entry.tags:
            poly = evaluate_bracket(dict(entry.tags), key)
        else:
            _fail(VALIDATION_EXIT,
                  f"functional {name!r} has no mixed-bracket tags for "
                  f"key {key_text!r}")
    except _ENGINE_ERRORS as exc:
        _fail(ENGINE_EXIT, str(exc))
    text = format_poly(poly)
    _emit({"schema": "momenta/bracket/1", "functional": name,
           "key": key.text(), "value": text}, fmt, [text])


@main.command()
@click.option("--appendix-b", "appendix_b_flag", is_flag=True, required=True)
@click.option("--nmax", type=int, default=7)
@click.option("--errata", "errata_flag", is_flag=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json", "csv"]),
              default="text")
def table(appendix_b_flag: bool, nmax: int, errata_flag: bool,
          fmt: str) -> None:
    """Regenerate the bracket table, diffed against the transcription."""
    from .appendix_b import diff_table, errata_report
    from .report import rows_to_csv_text
    if nmax < 2 or nmax > 7:
        _fail(VALIDATION_EXIT, "--nmax must be in 2..7")
    if errata_flag:
        rep = errata_report(nmax)
        if fmt == "json":
            click.echo(json.dumps(rep, indent=2, default=str))
        else:
            click.echo(f"counts: {rep['counts']}")
            for c in rep["count_report"]:
                click.echo(f"  N={c['N']}: regenerated {c['regenerated']} "
                           f"(claimed {c['claimed']}), mean-free "
                           f"{c['regenerated_mean_free']} "
                           f"(claimed {c['claimed_mean_free']})")
            for row in rep["rows"]:
                verdict = row.get("verdict", {})
                click.echo(f"  N={row['N']} [{row['key']}] {row['status']}"
                           + (f" winner={verdict.get('winner')}"
                              if verdict else ""))
        return
    rows = [{"N": d.N, "key": d.key_text, "status": d.status,
             "engine": format_poly(d.engine_value)
             if d.engine_value is not None else "",
             "paper": format_poly(d.paper_value)
             if d.paper_value is not None else ""}
            for d in diff_table(nmax)]
    if fmt == "json":
        click.echo(json.dumps({"schema": "momenta/table/1", "nmax": nmax,
                               "rows": rows}, indent=2))
    elif fmt == "csv":
        click.echo(rows_to_csv_text(rows), nl=False)
    else:
        for r in rows:
            click.echo(f"N={r['N']} [{r['key']}] {r['status']}: "
                       f"{r['engine']}")


@main.command()
@click.option("--functional", "name", required=True)
@click.option("--order", "order", type=int, default=3)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
def cumcoef(name: str, order: int, fmt: str) -> None:
    """Cumulant coefficients a_ri as exact moment polynomials."""
    entry = _get_entry(name)
    if order not in (1, 2, 3):
        _fail(VALIDATION_EXIT, "--order must be 1, 2 or 3")
    try:
        cc = cumulant_coeffs(entry.spec, order)
    except _ENGINE_ERRORS as exc:
        _fail(ENGINE_EXIT, str(exc))
    polys = {k: format_poly(v) for k, v in cc.present().items()}
    _emit({"schema": "momenta/cumcoef/1", "name": name, "order": order,
           "polys": polys}, fmt,
          [f"{k} = {v}" for k, v in polys.items()])


@main.command()
@click.option("--functional", "name", required=True)
@click.option("--dist", "dist_text", default=None)
@click.option("--moments", "moments_text", default=None)
@click.option("--n", "n", required=True, type=int)
@click.option("--quantile", "alpha", type=float, default=None)
@click.option("--x", "xs", type=float, multiple=True)
@click.option("--order", "order", type=int, default=2)
@click.option("--format", "fmt", type=click.Choice(["text", "json", "csv"]),
              default="text")
def edgeworth(name: str, dist_text: str | None, moments_text: str | None,
              n: int, alpha: float | None, xs: tuple[float, ...],
              order: int, fmt: str) -> None:
    """Edgeworth CDF (or quantile) of the standardized statistic Y_n."""
    entry = _get_entry(name)
    if (dist_text is None) == (moments_text is None):
        _fail(VALIDATION_EXIT, "supply exactly one of --dist / --moments")
    if n < 2:
        _fail(VALIDATION_EXIT, "--n must be >= 2")
    if order not in (0, 1, 2):
        _fail(VALIDATION_EXIT, "--order must be 0, 1 or 2")
    try:
        cc = cumulant_coeffs(entry.spec, order=min(order + 1, 3))
    except _ENGINE_ERRORS as exc:
        _fail(ENGINE_EXIT, str(exc))
    needed = _needed_order(*cc.present().values())
    if dist_text is not None:
        from .montecarlo import parse_source
        try:
            values = parse_source(dist_text).moment_values(needed)
        except ValueError as exc:
            _fail(VALIDATION_EXIT, str(exc))
    else:
        values = _parse_moments(moments_text)
    try:
        model = edgeworth_model(cc, values, order=order)
    except DegenerateVariance as exc:
        _fail(VALIDATION_EXIT, str(exc))
    except KeyError as exc:
        _fail(VALIDATION_EXIT, f"missing moment value: {exc}")
    if alpha is not None:
        if not 0.0 < alpha < 1.0:
            _fail(VALIDATION_EXIT, "--quantile must be in (0, 1)")
        try:
            q = edgeworth_quantile(model, alpha, n)
        except ExpansionNonmonotone as exc:
            _fail(ENGINE_EXIT, str(exc))
        _emit({"schema": "momenta/edgeworth/1", "functional": name, "n": n,
               "alpha": alpha, "quantile": q}, fmt, [repr(q)])
        return
    grid = list(xs) if xs else [x / 2.0 for x in range(-6, 7)]
    rows = [{"x": x, "cdf": float(edgeworth_cdf(model, x, n)),
             "in_range": bool(edgeworth_cdf(model, x, n).in_range)}
            for x in grid]
    if fmt == "csv":
        from .report import rows_to_csv_text
        click.echo(rows_to_csv_text(rows), nl=False)
    else:
        _emit({"schema": "momenta/edgeworth/1", "functional": name, "n": n,
               "rows": rows}, fmt,
              [f"x={r['x']:g} cdf={r['cdf']:.10f}"
               + ("" if r["in_range"] else " (out of range)") for r in rows])


@main.command()
@click.option("--functional", "name", required=True)
@click.option("--variant", type=click.Choice(["power", "factorial"]),
              required=True)
@click.option("--order", "order", required=True, type=int)
@click.option("--data", "data_path", default=None)
@click.option("--moments", "moments_text", default=None)
@click.option("--n", "n_opt", type=int, default=None,
              help="sample size (required with --moments)")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
def debias(name: str, variant: str, order: int, data_path: str | None,
           moments_text: str | None, n_opt: int | None, fmt: str) -> None:
    """Bias-reduced estimate of a catalog functional."""
    entry = _get_entry(name)
    if order not in (1, 2, 3):
        _fail(VALIDATION_EXIT, "--order must be 1, 2 or 3")
    if (data_path is None) == (moments_text is None):
        _fail(VALIDATION_EXIT, "supply exactly one of --data / --moments")
    try:
        bc = bias_correction(entry.spec, order, variant)
        vp = entry.spec.value_poly()
    except _ENGINE_ERRORS as exc:
        _fail(ENGINE_EXIT, str(exc))
    needed = _needed_order(vp, *bc.terms)
    if data_path is not None:
        data = _read_data(data_path)
        n = len(data)
        values = _moments_from_data(data, needed)
    else:
        if n_opt is None:
            _fail(VALIDATION_EXIT, "--n is required with --moments")
        n = n_opt
        values = _parse_moments(moments_text)
    if values.get("mu2", 0.0) <= 0.0:
        _fail(VALIDATION_EXIT, "degenerate input: plug-in mu_2 is not "
              "positive (constant data?)")
    if n < order + 1:
        _fail(VALIDATION_EXIT, f"sample size {n} too small for order {order}")
    try:
        value = float(vp.evaluate(values))
        est = debias_estimate(bc, value, values, n)
    except _ENGINE_ERRORS as exc:
        _fail(ENGINE_EXIT, str(exc))
    except (KeyError, ZeroDivisionError) as exc:
        _fail(VALIDATION_EXIT, f"cannot evaluate at supplied moments: {exc}")
    _emit({"schema": "momenta/debias/1", "functional": name,
           "variant": variant, "order": order, "n": n,
           "plugin": value, "estimate": est}, fmt,
          [f"plugin  = {value!r}", f"estimate = {est!r}"])


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_dir", default=".")
@click.option("--format", "fmt", type=click.Choice(["csv", "svg"]),
              default="svg", help="svg renders the chart from the CSV too")
def simulate(config_path: str, out_dir: str, fmt: str) -> None:
    """Run a simulation experiment from a JSON config; emits CSV (and SVG)."""
    from .montecarlo import ExperimentConfig, figure41_experiment, \
        skewness_cdf_experiment
    from .report import render_bias_svg, rows_to_csv_text, write_bias_csv
    try:
        cfg = ExperimentConfig.from_json(Path(config_path).read_text())
    except OSError as exc:
        _fail(VALIDATION_EXIT, f"cannot read config: {exc}")
    except (ValueError, TypeError) as exc:
        _fail(VALIDATION_EXIT, f"bad config: {exc}")
    seed_env = os.environ.get("MOMENTA_SEED")
    if seed_env is not None:
        try:
            cfg = ExperimentConfig(**{**cfg.__dict__, "seed": int(seed_env)})
        except ValueError:
            _fail(VALIDATION_EXIT, f"bad MOMENTA_SEED {seed_env!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "figure41":
        rows = figure41_experiment(cfg)
        csv_path = out / "bias.csv"
        write_bias_csv(rows, csv_path)
        click.echo(f"wrote {csv_path}")
        if fmt == "svg":
            svg_path = out / "bias.svg"
            render_bias_svg(csv_path, svg_path)
            click.echo(f"wrote {svg_path}")
    elif cfg.kind == "skewness_cdf":
        grid = cfg.grid or tuple(x / 4.0 for x in range(-12, 13))
        rows = skewness_cdf_experiment(cfg.n_grid[0], cfg.replications,
                                       grid, cfg.seed)
        csv_path = out / "skewness_cdf.csv"
        with csv_path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for r in rows:
                w.writerow(r)
        click.echo(f"wrote {csv_path}")
    else:
        _fail(VALIDATION_EXIT, f"unknown experiment kind {cfg.kind!r}")


@main.command()
@click.option("--nmax", type=int, default=7)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
@click.pass_context
def errata(ctx, nmax: int, fmt: str) -> None:
    """Shorthand for `table --appendix-b --errata`."""
    ctx.invoke(table, appendix_b_flag=True, nmax=nmax, errata_flag=True,
               fmt=fmt)


@main.command()
def catalog() -> None:
    """List the functionals available to the other subcommands."""
    from .functionals import catalog_names, get_entry
    for name in catalog_names():
        click.echo(f"{name}: {get_entry(name).description}")


if __name__ == "__main__":
    main()
