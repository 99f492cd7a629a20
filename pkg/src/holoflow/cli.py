"""Command-line front end: verification sweeps, table dumps, state evaluation.

Exit status contract: 0 = every check passed, 1 = violations found,
2 = usage or configuration error.  All numbers are emitted as exact "p/q"
strings; --decimal adds a rounded column without ever replacing the exact
one.  Output is deterministic byte-for-byte for a fixed configuration and
seed: reports are sorted canonically no matter how many workers ran.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from .cells import Cell, boundary, box_cells, format_cell
from .operators import CubicalFamilyOp, SphereOp, operator_from_json
from .poly import LinearIdeal, Polynomial, ideal_from_cubes, parse_polynomial
from .states import (
    covariance_csv_rows,
    covariance_window,
    exp_state,
    format_lambda_poly,
    psd_probe,
    verify_sphere,
    ym_moment,
)
from .verify import (
    ResidualReport,
    base_plaquettes,
    child_interaction_sum,
    compat_sweep,
    default_cubes,
    gauge_sweep,
    violations,
    welldefined_property,
)


@click.group()
def main():
    """Exact verification of invariant second-order operators on holonomy algebras."""


# -- shared option handling ---------------------------------------------------


def _parse_areas(text: str) -> list[Fraction]:
    try:
        return [Fraction(part.strip()) for part in text.split(",") if part.strip()]
    except (ValueError, ZeroDivisionError):
        raise click.UsageError(f"bad areas {text!r}; expected fractions like 1/2,1/4,1/4")


def _resolve_operator(op_text: str | None, d: int, scale: int, areas: str | None):
    spec = None
    if op_text:
        op_text = op_text.strip()
        if op_text.startswith("{"):
            try:
                spec = json.loads(op_text)
            except json.JSONDecodeError as e:
                raise click.UsageError(f"bad operator JSON: {e}")
        elif os.path.exists(op_text):
            try:
                spec = json.loads(Path(op_text).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise click.UsageError(f"cannot read operator spec {op_text!r}: {e}")
        elif op_text == "cubical":
            spec = {"variant": "cubical", "d": d, "scale": scale}
        elif op_text == "alt3":
            spec = {"variant": "alt3", "scale": scale}
        elif op_text == "sphere":
            if not areas:
                raise click.UsageError("--op sphere needs --areas")
            spec = {"variant": "sphere", "areas": [str(a) for a in _parse_areas(areas)]}
        else:
            raise click.UsageError(f"unrecognized operator spec {op_text!r}")
    elif areas:
        spec = {"variant": "sphere", "areas": [str(a) for a in _parse_areas(areas)]}
    else:
        spec = {"variant": "cubical", "d": d, "scale": scale}
    try:
        return operator_from_json(spec)
    except (ValueError, KeyError, TypeError) as e:
        raise click.UsageError(f"invalid operator spec: {e}")


def _parse_scales(text: str) -> list[int]:
    try:
        out = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"bad scales {text!r}; expected integers like -1,0,1")
    if not out:
        raise click.UsageError("empty scales list")
    return out


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _decimal_column(value: Fraction, digits: int) -> str:
    return f"{float(value):.{digits}f}"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _render_verify(command: str, op, config: dict, reports: list[ResidualReport],
                   sites: int, fmt: str, decimal: int | None) -> tuple[str, int]:
    bad = violations(reports)
    if fmt == "json":
        payload = {
            "command": command,
            "operator": op.to_json(),
            "config": config,
            "summary": {"sites": sites, "violations": len(bad)},
            "violations": [r.to_json() for r in bad],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        header = ["condition", "site", "value"] + (["decimal"] if decimal is not None else [])
        rows = [header]
        for r in bad:
            row = [r.condition, " ".join(r.site), str(r.value)]
            if decimal is not None:
                row.append(_decimal_column(r.value, decimal))
            rows.append(row)
        text = _csv_text(rows)
    else:
        lines = []
        for r in bad:
            row = f"FAIL {r.condition} {' '.join(r.site)} -> {r.value}"
            if decimal is not None:
                row += f" ({_decimal_column(r.value, decimal)})"
            lines.append(row)
        lines.append(f"checked {sites} sites: {len(bad)} violations")
        text = "\n".join(lines) + "\n"
    return text, (1 if bad else 0)


_OP_OPT = click.option("--op", "op_text", default=None,
                       help="Operator: inline JSON, a JSON file, or cubical|alt3|sphere.")
_D_OPT = click.option("--d", "d", type=int, default=3, show_default=True,
                      help="Ambient dimension for cubical operators.")
_SCALE_OPT = click.option("--scale", type=int, default=0, show_default=True,
                          help="Lattice scale for cubical operators.")
_FMT_OPT = click.option("--format", "fmt", type=click.Choice(["text", "json", "csv"]),
                        default="text", show_default=True)
_OUT_OPT = click.option("--out", default=None, type=click.Path(dir_okay=False, writable=True),
                        help="Write output to a file instead of stdout.")
_JOBS_OPT = click.option("--jobs", type=int, default=1, envvar="HOLOFLOW_JOBS",
                         show_default=True, help="Parallel workers for sweeps.")
_DEC_OPT = click.option("--decimal", type=int, default=None,
                        help="Add a column rounded to this many digits.")
_SEED_OPT = click.option("--seed", type=int, default=0, show_default=True)


def _require_lattice_op(op):
    if isinstance(op, SphereOp):
        raise click.UsageError("this command needs a lattice operator; use sphere-check")
    return op


def _cubes_for(op, scale: int) -> list[Cell]:
    if isinstance(op, CubicalFamilyOp):
        return default_cubes(op.d, scale)
    cells = [v for v in op.variables() if isinstance(v, Cell)]
    if not cells:
        return []
    d = cells[0].ambient_dim
    lo = tuple(min(c.coords[i] for c in cells) for i in range(d))
    hi = tuple(max(c.coords[i] for c in cells) for i in range(d))
    return sorted(box_cells(cells[0].scale, lo, hi, dim=3), key=Cell.sort_key)


# -- commands -----------------------------------------------------------------


@main.command("verify-invariance")
@_OP_OPT
@_D_OPT
@_SCALE_OPT
@click.option("--window", type=click.IntRange(min=1), default=6, show_default=True,
              help="Max-norm site radius around each representative 3-cell.")
@click.option("--scales", default="0", show_default=True,
              help="Comma-separated lattice scales to sweep.")
@_FMT_OPT
@_OUT_OPT
@_JOBS_OPT
@_DEC_OPT
def verify_invariance(op_text, d, scale, window, scales, fmt, out, jobs, decimal):
    """Sweep gauge residuals over (3-cell, plaquette) sites; exit 0 iff all vanish."""
    op = _require_lattice_op(_resolve_operator(op_text, d, scale, None))
    scale_list = _parse_scales(scales)
    reports: list[ResidualReport] = []
    sites = 0
    for s in scale_list:
        scoped = op.with_scale(s) if isinstance(op, CubicalFamilyOp) else op
        swept = gauge_sweep(scoped, _cubes_for(scoped, s), window, jobs=jobs)
        sites += len(swept)
        reports.extend(swept)
    config = {"window": window, "scales": scale_list}
    text, status = _render_verify("verify-invariance", op, config, reports, sites, fmt, decimal)
    _emit(text, out)
    if status:
        sys.exit(status)


@main.command("verify-compat")
@_OP_OPT
@_D_OPT
@_SCALE_OPT
@click.option("--window", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--scales", default="0", show_default=True,
              help="Coarse scales; each is checked against the next finer one.")
@_FMT_OPT
@_OUT_OPT
@_JOBS_OPT
@_DEC_OPT
def verify_compat(op_text, d, scale, window, scales, fmt, out, jobs, decimal):
    """Check coefficient consistency between consecutive scales; exit 0 iff exact."""
    op = _require_lattice_op(_resolve_operator(op_text, d, scale, None))
    if not isinstance(op, CubicalFamilyOp):
        raise click.UsageError("compatibility sweeps need a coefficient family operator")
    scale_list = _parse_scales(scales)
    reports: list[ResidualReport] = []
    for s in scale_list:
        scoped = op.with_scale(s)
        reports.extend(compat_sweep(scoped, base_plaquettes(op.d, s), window, jobs=jobs))
    prefix = ""
    if fmt == "text" and op.d == 3:
        coarse = op.with_scale(-1)
        p = Cell(-1, (1, 1, 0))
        lines = ["cross-scale interaction sums at scale -1 (each equals 4x its scale-0 value):"]
        for label, q in (("(1,0,0)", (2, 1, 1)), ("(2,1,1)", (4, 3, 3)), ("(2,2,1)", (4, 5, 3))):
            total = child_interaction_sum(coarse, p, Cell(-1, q))
            lines.append(f"  sum over children for ({format_cell(p)}, {format_cell(Cell(-1, q))})"
                         f" [offset {label}] = {total}")
        prefix = "\n".join(lines) + "\n"
    config = {"window": window, "scales": scale_list}
    text, status = _render_verify("verify-compat", op, config, reports, len(reports), fmt, decimal)
    _emit(prefix + text, out)
    if status:
        sys.exit(status)


@main.command("sphere-check")
@click.option("--areas", required=True, help="Plaquette areas, e.g. 1/2,1/4,1/4.")
@click.option("--max-degree", type=int, default=4, show_default=True)
@_FMT_OPT
@_OUT_OPT
def sphere_check(areas, max_degree, fmt, out):
    """Compare the exponential state with Gaussian moments, monomial by monomial."""
    try:
        report = verify_sphere(_parse_areas(areas), max_degree)
    except ValueError as e:
        raise click.UsageError(str(e))
    if fmt == "json":
        text = json.dumps({"command": "sphere-check", **report.to_json()},
                          indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        rows = [["monomial", "exp_state", "ym_moment", "equal"]]
        for item in report.items:
            rows.append([item.monomial, format_lambda_poly(item.exp_state),
                         format_lambda_poly(item.ym_moment), str(item.equal).lower()])
        text = _csv_text(rows)
    else:
        lines = []
        for item in report.items:
            flag = "ok" if item.equal else "MISMATCH"
            lines.append(f"{item.monomial}: exp={format_lambda_poly(item.exp_state)}"
                         f" ym={format_lambda_poly(item.ym_moment)} {flag}")
        n_bad = len(report.mismatches)
        lines.append(f"checked {len(report.items)} monomials: {n_bad} mismatches")
        text = "\n".join(lines) + "\n"
    _emit(text, out)
    if not report.all_equal:
        sys.exit(1)


@main.command("tables")
@_OP_OPT
@_D_OPT
@_SCALE_OPT
@click.option("--range", "radius", type=click.IntRange(min=1), default=3, show_default=True,
              help="Max-norm radius of dumped interactions around the base plaquette.")
@_FMT_OPT
@_OUT_OPT
def tables(op_text, d, scale, radius, fmt, out):
    """Dump the coefficient table rows (p, q, value) around the base plaquette."""
    op = _require_lattice_op(_resolve_operator(op_text, d, scale, None))
    if isinstance(op, CubicalFamilyOp):
        p = op.base_plaquette()
        a_value = op.coeff_a(p)
    else:
        cells = [v for v in op.variables() if isinstance(v, Cell)]
        if not cells:
            raise click.UsageError("explicit operator has no lattice variables to dump")
        p = cells[0]
        a_value = op.coeff_a(p)
    rows = [(format_cell(p), format_cell(q), str(v)) for q, v in op.support(p, radius)]
    rows.sort()
    if fmt == "json":
        payload = {"command": "tables", "operator": op.to_json(),
                   "base": format_cell(p), "a": str(a_value), "rows": [list(r) for r in rows]}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = _csv_text([["p", "q", "value"]] + [list(r) for r in rows])
    else:
        lines = [f"a({format_cell(p)}) = {a_value}"]
        lines += [f"b({r[0]}, {r[1]}) = {r[2]}" for r in rows]
        text = "\n".join(lines) + "\n"
    _emit(text, out)


@main.command("moments")
@_OP_OPT
@_D_OPT
@_SCALE_OPT
@click.option("--areas", default=None, help="Plaquette areas for sphere operators.")
@click.option("--poly", "poly_text", required=True,
              help='Polynomial literal, e.g. "x1^2*x2^2" or "x[1,1,0]@0^2".')
@_FMT_OPT
@_OUT_OPT
def moments(op_text, d, scale, areas, poly_text, fmt, out):
    """Evaluate the exponential state of a polynomial, exact in the coupling."""
    op = _resolve_operator(op_text, d, scale, areas)
    try:
        f = parse_polynomial(poly_text)
    except ValueError as e:
        raise click.UsageError(str(e))
    payload: dict = {"command": "moments", "operator": op.to_json(), "poly": poly_text}
    equal = True
    if isinstance(op, SphereOp):
        try:
            series = exp_state(op.to_euclidean(), f)
            pairing = ym_moment(op.areas, f)
        except ValueError as e:
            raise click.UsageError(str(e))
        equal = series == pairing
        payload.update({"exp_state": series.to_json(), "ym_moment": pairing.to_json(),
                        "equal": equal})
        body = (f"exp_state = {format_lambda_poly(series)}\n"
                f"ym_moment = {format_lambda_poly(pairing)}\n"
                f"equal: {str(equal).lower()}\n")
    else:
        try:
            series = exp_state(op, f, LinearIdeal.trivial())
        except ValueError as e:
            raise click.UsageError(str(e))
        payload["moment"] = series.to_json()
        body = f"moment = {format_lambda_poly(series)}\n"
    if fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        series_map = payload.get("moment", payload.get("exp_state", {}))
        text = _csv_text([["degree", "coeff"]] + [[k, v] for k, v in sorted(
            series_map.items(), key=lambda kv: int(kv[0]))])
    else:
        text = body
    _emit(text, out)
    if not equal:
        sys.exit(1)


@main.command("covariance")
@_OP_OPT
@_D_OPT
@_SCALE_OPT
@click.option("--window", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--psd", is_flag=True, help="Also probe leading principal minor signs.")
@_FMT_OPT
@_OUT_OPT
@_DEC_OPT
def covariance(op_text, d, scale, window, psd, fmt, out, decimal):
    """Second-moment matrix of the holonomies over a window of plaquettes."""
    op = _require_lattice_op(_resolve_operator(op_text, d, scale, None))
    if not isinstance(op, CubicalFamilyOp):
        raise click.UsageError("covariance windows need a coefficient family operator")
    cov = covariance_window(op, window)
    probe = psd_probe(cov) if psd else None
    if fmt == "csv":
        if psd:
            raise click.UsageError("--psd output is text or json")
        header = ["row", "col", "value"] + (["decimal"] if decimal is not None else [])
        rows = [header]
        for r, c, v in covariance_csv_rows(cov):
            row = [r, c, v]
            if decimal is not None:
                row.append(_decimal_column(Fraction(v), decimal))
            rows.append(row)
        text = _csv_text(rows)
    elif fmt == "json":
        payload = {
            "command": "covariance",
            "operator": op.to_json(),
            "window": window,
            "variables": [format_cell(p) for p in cov.variables],
            "entries": [[r, c, v] for r, c, v in covariance_csv_rows(cov)],
        }
        if probe is not None:
            payload["psd"] = probe.to_json()
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"{cov.size} plaquettes in window {window} at scale {op.scale}"]
        if probe is not None:
            signs = ",".join(str(s) for s in probe.signs)
            lines.append(f"leading principal minor signs: {signs}")
            lines.append(f"all nonnegative: {str(probe.nonnegative).lower()}")
        else:
            lines += [f"{r},{c} = {v}" for r, c, v in covariance_csv_rows(cov)]
        text = "\n".join(lines) + "\n"
    _emit(text, out)


@main.command("welldefined")
@_OP_OPT
@_D_OPT
@_SCALE_OPT
@click.option("--areas", default=None, help="Plaquette areas for sphere operators.")
@click.option("--window", type=click.IntRange(min=1), default=1, show_default=True,
              help="Half-width of the 3-cell box generating the constraint ideal.")
@click.option("--trials", type=int, default=100, show_default=True)
@_SEED_OPT
@_FMT_OPT
@_OUT_OPT
def welldefined(op_text, d, scale, areas, window, trials, seed, fmt, out):
    """Check reduce(L(f_c * g)) = 0 on seeded random g; exit 0 iff all vanish."""
    op = _resolve_operator(op_text, d, scale, areas)
    if isinstance(op, SphereOp):
        constraint = Polynomial.linear({i: 1 for i in range(1, op.n + 1)})
        ideal = LinearIdeal([constraint])
    else:
        if isinstance(op, CubicalFamilyOp):
            cubes = sorted(box_cells(op.scale, (-window,) * op.d, (window,) * op.d, dim=3),
                           key=Cell.sort_key)
        else:
            cubes = _cubes_for(op, 0)
        cubes = [c for c in cubes if all(op.has_var(q) for q in boundary(c).cells())]
        if not cubes:
            raise click.UsageError("no 3-cells with all faces inside the operator universe")
        ideal = ideal_from_cubes(cubes)
    reports = welldefined_property(op, ideal, trials=trials, seed=seed)
    config = {"trials": trials, "seed": seed, "generators": len(ideal.generators)}
    text, status = _render_verify("welldefined", op, config, reports, len(reports), fmt, None)
    _emit(text, out)
    if status:
        sys.exit(status)


if __name__ == "__main__":
    main()
