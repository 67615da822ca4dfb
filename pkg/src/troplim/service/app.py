"""FastAPI application: one endpoint per core operation.

Each handler validates with the schemas module, delegates to the library,
and maps parse/semantic input errors to 422 responses.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from fastapi import FastAPI, HTTPException

from ..amoeba import (EmptySampleError, SamplerConfig, ingest_points,
                      sample_members, sweep_directions)
from ..dequantize import (NonPositiveFormulaError, dequantize_formula,
                          sandwich_constant, tropical_formula_to_str)
from ..exact import (ConeSpec, ExhaustionFailedError, VerifyGrid,
                     assemble_exact, verify_exactness)
from ..formula import (Atom, And, Exists, Forall, Not, Or,
                       ParameterEnvironment, ParseError, formula_to_str,
                       free_variables, parse_formula)
from ..geometry import (NewtonData, Polyhedron, PolyhedralComplex, dual_fan,
                        tropical_formula_cells)
from ..puiseux import (initial_form, instantiate,
                       lambda_membership_hypersurface, parse_puiseux_file)
from ..fixtures import fan_sphere_points, patchwork_polynomial
from . import schemas


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=422, detail=message)


def _parse(formula_text: str):
    try:
        return parse_formula(formula_text.strip())
    except ParseError as exc:
        raise _bad_request(f"cannot parse formula: {exc}")


def _env(params: dict | None) -> ParameterEnvironment | None:
    return ParameterEnvironment(dict(params)) if params else None


def _config(overrides: schemas.SamplerOverrides | None) -> SamplerConfig:
    values: dict = {}
    if overrides is not None:
        if overrides.box is not None:
            values["box"] = tuple(tuple(pair) for pair in overrides.box)
        if overrides.samples is not None:
            values["samples_per_t"] = overrides.samples
        if overrides.t_schedule is not None:
            values["t_schedule"] = tuple(overrides.t_schedule)
        if overrides.seed is not None:
            values["seed"] = overrides.seed
    try:
        return SamplerConfig(**values)
    except ValueError as exc:
        raise _bad_request(f"bad sampler settings: {exc}")


def _atoms_of(f) -> list:
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


def _cell_rows(complex_: PolyhedralComplex) -> list[schemas.CellRows]:
    return [schemas.CellRows(constraints=[
        schemas.ConstraintRow(**row) for row in cell.to_obj()])
        for cell in complex_.cells]


def create_app() -> FastAPI:
    app = FastAPI(title="troplim", version="0.1.0",
                  description="Logarithmic limit sets of semi-algebraic sets")

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok")

    @app.post("/dequantize", response_model=schemas.DequantizeResponse)
    def dequantize(req: schemas.DequantizeRequest) -> schemas.DequantizeResponse:
        f = _parse(req.formula)
        env = _env(req.params)
        try:
            tf = dequantize_formula(f)
        except NonPositiveFormulaError as exc:
            raise _bad_request(str(exc))
        atoms = []
        for atom in _atoms_of(f):
            try:
                atoms.append(schemas.AtomConstants(
                    atom=formula_to_str(atom),
                    lhs_constant=sandwich_constant(atom.lhs, env),
                    rhs_constant=sandwich_constant(atom.rhs, env)))
            except KeyError as exc:
                raise _bad_request(f"missing parameter value: {exc}")
        return schemas.DequantizeResponse(
            tropical=tropical_formula_to_str(tf), atoms=atoms)

    @app.post("/limit-set", response_model=schemas.LimitSetResponse)
    def limit_set(req: schemas.LimitSetRequest) -> schemas.LimitSetResponse:
        if (req.formula is None) == (req.points_csv is None):
            raise _bad_request("provide exactly one of formula, points_csv")
        cfg = _config(req.sampler)
        if req.points_csv is not None:
            try:
                source = ingest_points(req.points_csv)
            except ValueError as exc:
                raise _bad_request(f"bad point CSV: {exc}")
        else:
            source = _parse(req.formula)
        try:
            sweep = sweep_directions(source, cfg, _env(req.params))
        except EmptySampleError:
            sweep = []
        except ValueError as exc:
            raise _bad_request(str(exc))
        nonempty = [entry for entry in sweep if entry[1].origin_member]
        if not nonempty:
            return schemas.LimitSetResponse(
                origin_member=False, directions=[],
                per_t=[schemas.PerTEntry(t=t, count=len(dc.vectors))
                       for t, dc in sweep],
                empty_sample=True)
        est = nonempty[-1][1]
        return schemas.LimitSetResponse(
            origin_member=est.origin_member,
            directions=est.vectors.tolist(),
            per_t=[schemas.PerTEntry(t=t, count=len(dc.vectors))
                   for t, dc in sweep])

    @app.post("/cells", response_model=schemas.CellsResponse)
    def cells(req: schemas.CellsRequest) -> schemas.CellsResponse:
        f = _parse(req.formula)
        try:
            tf = dequantize_formula(f)
        except NonPositiveFormulaError as exc:
            raise _bad_request(str(exc))
        n = max(free_variables(f), default=-1) + 1
        if n == 0:
            raise _bad_request("formula has no variables")
        complex_ = tropical_formula_cells(tf, n)
        return schemas.CellsResponse(dimension=n, cells=_cell_rows(complex_))

    @app.post("/dual-fan", response_model=schemas.DualFanResponse)
    def dual_fan_route(req: schemas.DualFanRequest) -> schemas.DualFanResponse:
        try:
            weights = ([Fraction(w) for w in req.weights] if req.weights
                       else [Fraction(0)] * len(req.support))
            nd = NewtonData.make([tuple(row) for row in req.support], weights)
        except (ValueError, ZeroDivisionError) as exc:
            raise _bad_request(str(exc))
        fan = dual_fan(nd)
        sphere = fan_sphere_points(fan).tolist() if nd.dim == 2 else None
        return schemas.DualFanResponse(cells=_cell_rows(fan),
                                       sphere_points=sphere)

    @app.post("/puiseux-eval", response_model=schemas.PuiseuxEvalResponse)
    def puiseux_eval(req: schemas.PuiseuxEvalRequest) -> schemas.PuiseuxEvalResponse:
        try:
            poly = parse_puiseux_file(req.text)
        except ValueError as exc:
            raise _bad_request(f"bad series text: {exc}")
        coefficients = None
        if req.t is not None:
            inst = instantiate(poly, req.t)
            coefficients = [schemas.CoefficientEntry(omega=list(w),
                                                     value=inst[w])
                            for w in sorted(inst)]
        membership = None
        if req.lambdas:
            membership = []
            for lam in req.lambdas:
                if len(lam) != poly.dim:
                    raise _bad_request(
                        f"lambda needs {poly.dim} coordinates")
                init = initial_form(poly, tuple(lam))
                membership.append(schemas.MembershipEntry(
                    lam=list(lam),
                    membership=lambda_membership_hypersurface(poly,
                                                              tuple(lam)),
                    initial_support=[list(w) for w in sorted(init)]))
        return schemas.PuiseuxEvalResponse(
            support=[list(w) for w in poly.support],
            coefficients=coefficients, membership=membership)

    @app.post("/patchwork", response_model=schemas.PatchworkResponse)
    def patchwork(req: schemas.PatchworkRequest) -> schemas.PatchworkResponse:
        if req.text is not None:
            try:
                poly = parse_puiseux_file(req.text)
            except ValueError as exc:
                raise _bad_request(f"bad series text: {exc}")
            lambdas = req.lambdas or []
        else:
            poly = patchwork_polynomial()
            lambdas = req.lambdas if req.lambdas else [[-1.0], [0.0]]
        roots = logs = None
        if poly.dim == 1:
            inst = instantiate(poly, req.t)
            degree = max(w[0] for w in inst)
            coeffs = [inst.get((d,), 0.0) for d in range(degree, -1, -1)]
            candidates = np.roots(coeffs)
            roots = sorted(float(r.real) for r in candidates
                           if abs(r.imag) < 1e-9 * max(1.0, abs(r.real))
                           and r.real > 0)
            scale = float(np.log(1.0 / req.t))
            logs = [float(np.log(r) / scale) for r in roots]
        membership = []
        for lam in lambdas:
            if len(lam) != poly.dim:
                raise _bad_request(f"lambda needs {poly.dim} coordinates")
            init = initial_form(poly, tuple(lam))
            membership.append(schemas.MembershipEntry(
                lam=list(lam),
                membership=lambda_membership_hypersurface(poly, tuple(lam)),
                initial_support=[list(w) for w in sorted(init)]))
        return schemas.PatchworkResponse(positive_roots=roots,
                                         root_logs=logs,
                                         membership=membership)

    @app.post("/exact", response_model=schemas.ExactResponse)
    def exact(req: schemas.ExactRequest) -> schemas.ExactResponse:
        f = _parse(req.formula)
        try:
            cover = [ConeSpec.make(body.B, body.normals)
                     for body in req.cover]
        except (ValueError, ZeroDivisionError) as exc:
            raise _bad_request(f"bad cover: {exc}")
        h = None
        if req.h is not None:
            try:
                h = Fraction(req.h)
            except (ValueError, ZeroDivisionError):
                raise _bad_request(f"bad h value {req.h!r}")
            if not h > 0:
                raise _bad_request("h must be positive")
        cloud = None
        if req.points_csv is not None:
            try:
                cloud = ingest_points(req.points_csv)
            except ValueError as exc:
                raise _bad_request(f"bad point CSV: {exc}")
        try:
            asm = assemble_exact(f, cover, h=h, cloud=cloud,
                                 env=_env(req.params),
                                 cfg=_config(req.sampler))
        except EmptySampleError:
            raise _bad_request("no sample point satisfied the formula")
        except ExhaustionFailedError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        verify = None
        if req.target is not None:
            target = PolyhedralComplex.make([
                Polyhedron.from_obj([row.model_dump()
                                     for row in cell.constraints])
                for cell in req.target])
            rep = verify_exactness(asm.formula, target, VerifyGrid())
            verify = schemas.VerifyRow(disagreements=rep.disagreements,
                                       total=rep.total)
        return schemas.ExactResponse(
            psi=formula_to_str(asm.formula),
            thresholds=[str(t) for t in asm.thresholds],
            exhaustion=[schemas.ExhaustionRow(inside=r.inside_count,
                                              total=r.total, h=str(r.h))
                        for r in asm.reports],
            verify=verify)

    return app


app = create_app()
