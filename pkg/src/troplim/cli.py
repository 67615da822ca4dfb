"""Command-line front end.

Thin orchestration over the library: every command parses its inputs, calls
one or two library functions, and emits CSV, JSON, or SVG.  Options can come
from flags, an INI-style config file, or the TROPLIM_SEED environment
variable; flags win, then the file, then the environment.

Exit codes: 0 success, 1 failed check, 2 usage or parse error.
"""

from __future__ import annotations

import configparser
import json
import os
import sys
from fractions import Fraction

import click
import numpy as np

from .amoeba import (DirectionCloud, EmptySampleError, PointCloud,
                     SamplerConfig, amoeba_at, estimate_limit_directions,
                     ingest_points, sample_members, sweep_directions,
                     write_direction_cloud, write_point_cloud)
from .dequantize import (NonPositiveFormulaError, dequantize_formula,
                         sandwich_constant, tropical_formula_to_str)
from .exact import (ConeSpec, ExhaustionFailedError, VerifyGrid,
                    assemble_exact, verify_exactness)
from .formula import (Atom, And, Exists, Forall, Formula, Not, Or,
                      ParameterEnvironment, ParseError, formula_to_str,
                      free_variables, parse_formula)
from .geometry import (NewtonData, PolyhedralComplex, dual_fan,
                       tropical_formula_cells)
from .puiseux import (instantiate, lambda_membership_hypersurface,
                      initial_form, parse_puiseux_file, parse_rational_vector)
from . import fixtures as fixtures_mod
from . import plots

_CONTEXT = dict(help_option_names=["-h", "--help"])


# ---------------------------------------------------------------------------
# Option parsing
# ---------------------------------------------------------------------------

def _fail_usage(message: str):
    raise click.UsageError(message)


def _parse_schedule(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        _fail_usage("--t-schedule expects 't0,ratio,count'")
    try:
        return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError:
        _fail_usage(f"bad --t-schedule value {text!r}")


def _parse_box(text: str) -> tuple:
    pairs = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            _fail_usage("--box expects 'lo,hi' pairs separated by ';'")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError:
            _fail_usage(f"bad --box value {text!r}")
    return tuple(pairs)


def _read_source_text(source: str) -> str:
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read()
    return source


def _parse_formula_arg(source: str) -> Formula:
    text = _read_source_text(source)
    try:
        return parse_formula(text.strip())
    except ParseError as exc:
        _fail_usage(f"cannot parse formula: {exc}")


def _load_input(source: str):
    """Formula text, a formula file, or a .csv point cloud."""
    if source.lower().endswith(".csv"):
        if not os.path.exists(source):
            _fail_usage(f"no such file: {source}")
        try:
            return ingest_points(source)
        except ValueError as exc:
            _fail_usage(f"bad point CSV: {exc}")
    return _parse_formula_arg(source)


def _parse_env(params: tuple) -> ParameterEnvironment | None:
    if not params:
        return None
    values = {}
    for item in params:
        name, sep, raw = item.partition("=")
        if not sep:
            _fail_usage("--param expects name=value")
        try:
            values[name.strip()] = float(Fraction(raw.strip()))
        except (ValueError, ZeroDivisionError):
            _fail_usage(f"bad --param value {item!r}")
    return ParameterEnvironment(values)


def _sampler_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None, help="INI config; [sampler] section"),
        click.option("--t-schedule", "t_schedule", default=None,
                     help="geometric schedule 't0,ratio,count'"),
        click.option("--samples", type=int, default=None,
                     help="samples per schedule entry"),
        click.option("--box", default=None,
                     help="log10 box 'lo,hi' or 'lo1,hi1;lo2,hi2;...'"),
        click.option("--seed", type=int, default=None, help="RNG seed"),
        click.option("--param", "params", multiple=True,
                     help="parameter value name=value (repeatable)"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(config_path, t_schedule, samples, box, seed) -> SamplerConfig:
    values: dict = {}
    if config_path:
        parser = configparser.ConfigParser()
        try:
            parser.read(config_path)
        except configparser.Error as exc:
            _fail_usage(f"bad config file: {exc}")
        if parser.has_section("sampler"):
            section = parser["sampler"]
            try:
                if "t_schedule" in section:
                    values["t_schedule"] = _parse_schedule(section["t_schedule"])
                if "samples" in section:
                    values["samples_per_t"] = section.getint("samples")
                if "box" in section:
                    values["box"] = _parse_box(section["box"])
                if "seed" in section:
                    values["seed"] = section.getint("seed")
                for key in ("eta0", "eta_decay", "radius_threshold",
                            "cluster_tol"):
                    if key in section:
                        values[key] = section.getfloat(key)
            except ValueError as exc:
                _fail_usage(f"bad config value: {exc}")
    env_seed = os.environ.get("TROPLIM_SEED")
    if env_seed is not None and "seed" not in values:
        try:
            values["seed"] = int(env_seed)
        except ValueError:
            _fail_usage(f"bad TROPLIM_SEED value {env_seed!r}")
    if t_schedule is not None:
        values["t_schedule"] = _parse_schedule(t_schedule)
    if samples is not None:
        values["samples_per_t"] = samples
    if box is not None:
        values["box"] = _parse_box(box)
    if seed is not None:
        values["seed"] = seed
    try:
        return SamplerConfig(**values)
    except ValueError as exc:
        _fail_usage(f"bad sampler settings: {exc}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _atoms_of(f: Formula) -> list:
    if isinstance(f, Atom):
        return [f]
    if isinstance(f, Not):
        return _atoms_of(f.item)
    if isinstance(f, (And, Or)):
        out = []
        for item in f.items:
            out.extend(_atoms_of(item))
        return out
    if isinstance(f, (Exists, Forall)):
        return _atoms_of(f.body)
    return []


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group(context_settings=_CONTEXT)
@click.version_option(package_name="troplim", prog_name="troplim")
def main() -> None:
    """Logarithmic limit sets of semi-algebraic sets: dequantization,
    amoeba sampling, tropical cells, dual fans, and series arithmetic."""


@main.command()
@click.argument("source")
@click.option("--param", "params", multiple=True,
              help="parameter value name=value (repeatable)")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
@click.option("--out", type=click.Path(), default=None)
def dequantize(source, params, fmt, out) -> None:
    """Print the (max,+) limit formula and per-atom growth constants."""
    f = _parse_formula_arg(source)
    env = _parse_env(params)
    try:
        tf = dequantize_formula(f)
    except NonPositiveFormulaError as exc:
        _fail_usage(str(exc))
    trop = tropical_formula_to_str(tf)
    rows = []
    for i, atom in enumerate(_atoms_of(f)):
        try:
            lhs_c = sandwich_constant(atom.lhs, env)
            rhs_c = sandwich_constant(atom.rhs, env)
        except KeyError as exc:
            _fail_usage(f"missing parameter value: {exc}")
        rows.append({"atom": formula_to_str(atom), "lhs_constant": lhs_c,
                     "rhs_constant": rhs_c})
    if fmt == "json":
        _emit(json.dumps({"tropical": trop, "atoms": rows}, indent=2), out)
        return
    lines = [trop]
    for row in rows:
        lines.append(f"  {row['atom']}:  C(lhs) = {row['lhs_constant']:g},"
                     f"  C(rhs) = {row['rhs_constant']:g}")
    _emit("\n".join(lines), out)


@main.command()
@click.argument("source")
@click.option("--t", "t_value", type=float, default=1e-4,
              help="scale parameter in (0,1)")
@_sampler_options
@click.option("--format", "fmt", type=click.Choice(["csv", "svg", "json"]),
              default="csv")
@click.option("--out", type=click.Path(), default=None)
def amoeba(source, t_value, config_path, t_schedule, samples, box, seed,
           params, fmt, out) -> None:
    """Sample members and map them to the scale-t amoeba."""
    if not (0.0 < t_value < 1.0):
        _fail_usage("--t must lie strictly between 0 and 1")
    cfg = _build_config(config_path, t_schedule, samples, box, seed)
    env = _parse_env(params)
    data = _load_input(source)
    if isinstance(data, PointCloud):
        cloud = data
    else:
        try:
            cloud = sample_members(data, env, cfg)
        except EmptySampleError:
            click.echo("no sample point satisfied the formula", err=True)
            sys.exit(1)
    mapped = amoeba_at(cloud, t_value)
    if fmt == "svg":
        if not out:
            _fail_usage("--format svg needs --out")
        plots.plot_amoeba(mapped, out)
        return
    if fmt == "json":
        _emit(json.dumps({"t": t_value,
                          "points": mapped.points.tolist()}, indent=2), out)
        return
    if out:
        write_point_cloud(mapped, out)
    else:
        import io
        buf = io.StringIO()
        write_point_cloud(mapped, buf)
        click.echo(buf.getvalue(), nl=False)


@main.command("limit-set")
@click.argument("source")
@_sampler_options
@click.option("--format", "fmt", type=click.Choice(["csv", "svg", "json"]),
              default="csv")
@click.option("--out", type=click.Path(), default=None)
def limit_set(source, config_path, t_schedule, samples, box, seed, params,
              fmt, out) -> None:
    """Estimate the limit direction set along the t schedule."""
    cfg = _build_config(config_path, t_schedule, samples, box, seed)
    env = _parse_env(params)
    data = _load_input(source)
    try:
        est = estimate_limit_directions(data, cfg, env)
    except EmptySampleError:
        click.echo("no sample point satisfied the formula; empty set",
                   err=True)
        est = DirectionCloud(np.zeros((0, 1)), origin_member=False)
    click.echo(f"{len(est.vectors)} direction(s), origin_member="
               f"{est.origin_member}", err=True)
    if fmt == "svg":
        if not out:
            _fail_usage("--format svg needs --out")
        plots.plot_directions(est, out)
        return
    if fmt == "json":
        _emit(json.dumps({"origin_member": est.origin_member,
                          "directions": est.vectors.tolist()}, indent=2), out)
        return
    if out:
        write_direction_cloud(est, out)
    else:
        import io
        buf = io.StringIO()
        write_direction_cloud(est, buf)
        click.echo(buf.getvalue(), nl=False)


@main.command()
@click.argument("source")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json")
@click.option("--out", type=click.Path(), default=None)
def cells(source, fmt, out) -> None:
    """Enumerate the polyhedral cells of the dequantized formula."""
    f = _parse_formula_arg(source)
    try:
        tf = dequantize_formula(f)
    except NonPositiveFormulaError as exc:
        _fail_usage(str(exc))
    n = max(free_variables(f), default=-1) + 1
    if n == 0:
        _fail_usage("formula has no variables")
    complex_ = tropical_formula_cells(tf, n)
    if fmt == "csv":
        lines = ["cell,relation,constant," +
                 ",".join(f"c{i+1}" for i in range(n))]
        for ci, cell in enumerate(complex_.cells):
            for con in cell.constraints:
                lines.append(f"{ci},{con.rel},{con.const}," +
                             ",".join(str(v) for v in con.coeffs))
        _emit("\n".join(lines), out)
        return
    _emit(complex_.to_json(), out)


@main.command("dual-fan")
@click.argument("source", required=False)
@click.option("--support", default=None,
              help="integer exponent rows 'a1,a2;b1,b2;...'")
@click.option("--weights", default=None,
              help="rational weights 'w1,w2,...' (default all 0)")
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "svg"]),
              default="json")
@click.option("--out", type=click.Path(), default=None)
def dual_fan_cmd(source, support, weights, fmt, out) -> None:
    """Dual fan of a weighted support, as cells or unit directions."""
    if source:
        try:
            data = json.loads(_read_source_text(source))
            supp = [tuple(int(v) for v in row) for row in data["support"]]
            wts = [Fraction(str(w)) for w in
                   data.get("weights", [0] * len(supp))]
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            _fail_usage(f"bad support JSON: {exc}")
    elif support:
        try:
            supp = [tuple(int(v) for v in chunk.split(","))
                    for chunk in support.split(";")]
            wts = (list(parse_rational_vector(weights)) if weights
                   else [Fraction(0)] * len(supp))
        except ValueError as exc:
            _fail_usage(f"bad --support/--weights: {exc}")
    else:
        _fail_usage("need a JSON source or --support")
    try:
        nd = NewtonData.make(supp, wts)
    except ValueError as exc:
        _fail_usage(str(exc))
    fan = dual_fan(nd)
    if fmt == "json":
        _emit(fan.to_json(), out)
        return
    pts = fixtures_mod.fan_sphere_points(fan)
    if fmt == "svg":
        if not out:
            _fail_usage("--format svg needs --out")
        plots.plot_directions(DirectionCloud(pts, origin_member=True), out)
        return
    lines = [",".join(f"x{i+1}" for i in range(pts.shape[1] if pts.size else
                                               nd.dim))]
    for row in pts:
        lines.append(",".join(repr(float(v)) for v in row))
    _emit("\n".join(lines), out)


@main.command("puiseux-eval")
@click.argument("source")
@click.option("--t", "t_value", type=float, default=None,
              help="instantiate the family at this t")
@click.option("--lam", "lams", multiple=True,
              help="direction 'l1,l2,...' to test for membership (repeatable)")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
@click.option("--out", type=click.Path(), default=None)
def puiseux_eval(source, t_value, lams, fmt, out) -> None:
    """Instantiate a series-coefficient polynomial and test directions."""
    text = _read_source_text(source)
    try:
        poly = parse_puiseux_file(text)
    except ValueError as exc:
        _fail_usage(f"bad series file: {exc}")
    report: dict = {"support": [list(w) for w in poly.support]}
    if t_value is not None:
        if not (0.0 < t_value < 1.0):
            _fail_usage("--t must lie strictly between 0 and 1")
        inst = instantiate(poly, t_value)
        report["t"] = t_value
        report["coefficients"] = [
            {"omega": list(w), "value": inst[w]} for w in sorted(inst)]
    if lams:
        checks = []
        for raw in lams:
            try:
                lam = tuple(float(Fraction(p)) for p in raw.split(","))
            except (ValueError, ZeroDivisionError):
                _fail_usage(f"bad --lam value {raw!r}")
            if len(lam) != poly.dim:
                _fail_usage(f"--lam needs {poly.dim} coordinates")
            verdict = lambda_membership_hypersurface(poly, lam)
            init = initial_form(poly, lam)
            checks.append({"lambda": list(lam), "membership": verdict,
                           "initial_support": [list(w) for w in sorted(init)]})
        report["membership"] = checks
    if fmt == "json":
        _emit(json.dumps(report, indent=2), out)
        return
    lines = [f"support: {report['support']}"]
    for row in report.get("coefficients", []):
        lines.append(f"  omega {tuple(row['omega'])}: {row['value']:.12g}")
    for row in report.get("membership", []):
        lines.append(f"  lambda {tuple(row['lambda'])}: {row['membership']}"
                     f" (initial support {row['initial_support']})")
    _emit("\n".join(lines), out)


@main.command()
@click.argument("source", required=False)
@click.option("--t", "t_value", type=float, default=1e-6,
              help="family parameter for root tracking")
@click.option("--lam", "lams", multiple=True,
              help="direction to test; default -1 and 0 for the built-in")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
@click.option("--out", type=click.Path(), default=None)
def patchwork(source, t_value, lams, fmt, out) -> None:
    """Track positive roots of a one-parameter family toward their limit."""
    if not (0.0 < t_value < 1.0):
        _fail_usage("--t must lie strictly between 0 and 1")
    if source:
        try:
            poly = parse_puiseux_file(_read_source_text(source))
        except ValueError as exc:
            _fail_usage(f"bad series file: {exc}")
        lam_list = list(lams)
    else:
        poly = fixtures_mod.patchwork_polynomial()
        lam_list = list(lams) if lams else ["-1", "0"]
    report: dict = {"t": t_value}
    if poly.dim == 1:
        inst = instantiate(poly, t_value)
        degree = max(w[0] for w in inst)
        coeffs = [inst.get((d,), 0.0) for d in range(degree, -1, -1)]
        roots = np.roots(coeffs)
        positive = sorted(float(r.real) for r in roots
                          if abs(r.imag) < 1e-9 * max(1.0, abs(r.real))
                          and r.real > 0)
        scale = np.log(1.0 / t_value)
        report["positive_roots"] = positive
        report["root_logs"] = [float(np.log(r) / scale) for r in positive]
    checks = []
    for raw in lam_list:
        try:
            lam = tuple(float(Fraction(p)) for p in str(raw).split(","))
        except (ValueError, ZeroDivisionError):
            _fail_usage(f"bad --lam value {raw!r}")
        if len(lam) != poly.dim:
            _fail_usage(f"--lam needs {poly.dim} coordinates")
        checks.append({"lambda": list(lam),
                       "membership": lambda_membership_hypersurface(poly, lam)})
    report["membership"] = checks
    if fmt == "json":
        _emit(json.dumps(report, indent=2), out)
        return
    lines = []
    if "positive_roots" in report:
        for r, lg in zip(report["positive_roots"], report["root_logs"]):
            lines.append(f"positive root {r:.12g}: log_(1/t) = {lg:.6f}")
        if not report["positive_roots"]:
            lines.append("no positive real roots at this t")
    for row in checks:
        lines.append(f"lambda {tuple(row['lambda'])}: {row['membership']}")
    _emit("\n".join(lines), out)


@main.command()
@click.argument("source")
@click.option("--cover", "cover_path", type=click.Path(exists=True),
              required=True, help="JSON list of cone descriptions")
@click.option("--points", "points_path", type=click.Path(exists=True),
              default=None, help="member CSV; sampled when omitted")
@click.option("--h", "h_value", default=None,
              help="fixed exceptional threshold (rational); else descent")
@click.option("--target", "target_path", type=click.Path(exists=True),
              default=None, help="complex JSON to verify against")
@_sampler_options
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text")
@click.option("--out", type=click.Path(), default=None)
def exact(source, cover_path, points_path, h_value, target_path, config_path,
          t_schedule, samples, box, seed, params, fmt, out) -> None:
    """Assemble an exactly-dequantizing description and optionally verify."""
    f = _parse_formula_arg(source)
    env = _parse_env(params)
    cfg = _build_config(config_path, t_schedule, samples, box, seed)
    with open(cover_path, "r", encoding="utf-8") as fh:
        try:
            cover = ConeSpec.list_from_json(fh.read())
        except (ValueError, KeyError, TypeError) as exc:
            _fail_usage(f"bad cover JSON: {exc}")
    cloud = None
    if points_path:
        try:
            cloud = ingest_points(points_path)
        except ValueError as exc:
            _fail_usage(f"bad point CSV: {exc}")
    h = None
    if h_value is not None:
        try:
            h = Fraction(h_value)
        except (ValueError, ZeroDivisionError):
            _fail_usage(f"bad --h value {h_value!r}")
        if not (0 < h):
            _fail_usage("--h must be positive")
    try:
        asm = assemble_exact(f, cover, h=h, cloud=cloud, env=env, cfg=cfg)
    except EmptySampleError:
        click.echo("no sample point satisfied the formula", err=True)
        sys.exit(1)
    except ExhaustionFailedError as exc:
        click.echo(f"exhaustion check failed: {exc}", err=True)
        sys.exit(1)
    report: dict = {
        "psi": formula_to_str(asm.formula),
        "thresholds": [str(h) for h in asm.thresholds],
        "exhaustion": [{"inside": r.inside_count, "total": r.total,
                        "h": str(r.h)} for r in asm.reports],
    }
    failed = False
    if target_path:
        with open(target_path, "r", encoding="utf-8") as fh:
            try:
                target = PolyhedralComplex.from_json(fh.read())
            except (ValueError, KeyError, TypeError) as exc:
                _fail_usage(f"bad target JSON: {exc}")
        ver = verify_exactness(asm.formula, target, VerifyGrid())
        report["verify"] = {"disagreements": ver.disagreements,
                           "total": ver.total}
        failed = ver.disagreements > 0
    if fmt == "json":
        _emit(json.dumps(report, indent=2), out)
    else:
        lines = [report["psi"],
                 "thresholds: " + ", ".join(report["thresholds"])]
        for i, r in enumerate(report["exhaustion"]):
            lines.append(f"  cone {i}: {r['inside']}/{r['total']} inside at"
                         f" h = {r['h']}")
        if "verify" in report:
            lines.append(f"verify: {report['verify']['disagreements']}"
                         f"/{report['verify']['total']} grid disagreements")
        _emit("\n".join(lines), out)
    if failed:
        sys.exit(1)


@main.command("paper-suite")
@click.option("--only", default=None,
              help="fixture name or prefix (e.g. 'circle')")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="directory for summary and per-fixture direction CSVs")
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "svg"]),
              default="csv")
def paper_suite(only, out_dir, fmt) -> None:
    """Run every worked-example check and report pass/fail."""
    try:
        results = fixtures_mod.run_suite(only)
    except KeyError as exc:
        _fail_usage(str(exc.args[0]))
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"{status}  {r.name:<{width}s}  {r.detail}")
    ok = all(r.passed for r in results)
    click.echo(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        summary_rows = [(r.name, "pass" if r.passed else "fail", r.detail)
                        for r in results]
        if fmt == "json":
            path = os.path.join(out_dir, "summary.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump({"results": [
                    {"name": n, "status": s, "detail": d}
                    for n, s, d in summary_rows]}, fh, indent=2)
        else:
            path = os.path.join(out_dir, "summary.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("name,status,detail\n")
                for n, s, d in summary_rows:
                    fh.write(f"{n},{s},\"{d}\"\n")
        for r in results:
            if r.directions is None:
                continue
            write_direction_cloud(
                r.directions, os.path.join(out_dir, f"{r.name}_directions.csv"))
            if fmt == "svg" and (r.directions.vectors.size == 0
                                 or r.directions.vectors.shape[1] == 2):
                plots.plot_directions(
                    r.directions, os.path.join(out_dir, f"{r.name}.svg"),
                    title=r.name)
    if not ok:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port) -> None:
    """Run the HTTP service wrapping the library."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
