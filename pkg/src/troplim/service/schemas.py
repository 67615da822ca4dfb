"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SamplerOverrides(BaseModel):
    box: list[tuple[float, float]] | None = None
    samples: int | None = Field(default=None, ge=1)
    t_schedule: tuple[float, float, int] | None = None
    seed: int | None = None


class DequantizeRequest(BaseModel):
    formula: str
    params: dict[str, float] | None = None


class AtomConstants(BaseModel):
    atom: str
    lhs_constant: float
    rhs_constant: float


class DequantizeResponse(BaseModel):
    tropical: str
    atoms: list[AtomConstants]


class LimitSetRequest(BaseModel):
    formula: str | None = None
    points_csv: str | None = None
    params: dict[str, float] | None = None
    sampler: SamplerOverrides | None = None


class PerTEntry(BaseModel):
    t: float
    count: int


class LimitSetResponse(BaseModel):
    origin_member: bool
    directions: list[list[float]]
    per_t: list[PerTEntry]
    empty_sample: bool = False


class CellsRequest(BaseModel):
    formula: str


class ConstraintRow(BaseModel):
    coeffs: list[float]
    const: float
    rel: str


class CellRows(BaseModel):
    constraints: list[ConstraintRow]


class CellsResponse(BaseModel):
    dimension: int
    cells: list[CellRows]


class DualFanRequest(BaseModel):
    support: list[list[int]]
    weights: list[str] | None = None


class DualFanResponse(BaseModel):
    cells: list[CellRows]
    sphere_points: list[list[float]] | None = None


class PuiseuxEvalRequest(BaseModel):
    text: str
    t: float | None = Field(default=None, gt=0.0, lt=1.0)
    lambdas: list[list[float]] | None = None


class CoefficientEntry(BaseModel):
    omega: list[int]
    value: float


class MembershipEntry(BaseModel):
    lam: list[float]
    membership: str
    initial_support: list[list[int]]


class PuiseuxEvalResponse(BaseModel):
    support: list[list[int]]
    coefficients: list[CoefficientEntry] | None = None
    membership: list[MembershipEntry] | None = None


class PatchworkRequest(BaseModel):
    text: str | None = None
    t: float = Field(default=1e-6, gt=0.0, lt=1.0)
    lambdas: list[list[float]] | None = None


class PatchworkResponse(BaseModel):
    positive_roots: list[float] | None = None
    root_logs: list[float] | None = None
    membership: list[MembershipEntry]


class ConeSpecBody(BaseModel):
    B: list[list[str]]
    normals: list[list[str]] = Field(default_factory=list)


class ExactRequest(BaseModel):
    formula: str
    cover: list[ConeSpecBody]
    h: str | None = None
    points_csv: str | None = None
    target: list[CellRows] | None = None
    params: dict[str, float] | None = None
    sampler: SamplerOverrides | None = None


class ExhaustionRow(BaseModel):
    inside: int
    total: int
    h: str


class VerifyRow(BaseModel):
    disagreements: int
    total: int


class ExactResponse(BaseModel):
    psi: str
    thresholds: list[str]
    exhaustion: list[ExhaustionRow]
    verify: VerifyRow | None = None


class HealthResponse(BaseModel):
    status: str
