"""Sampling of semi-algebraic sets and estimation of logarithmic limit sets.

The pipeline: draw low-discrepancy points in a log10 box, map through 10^v to
the positive orthant, keep points satisfying the formula (equality atoms are
thickened relatively by eta and sharpened by bisection along sign-change
segments), map the survivors through Log_{1/t}, drop points with norm below
the radius threshold, normalize to the sphere, and cluster greedily.

Direction estimates use the deepest t of the schedule; the per-t sweep is
kept for the cone-invariance report.  Directions of a fixed point do not
depend on t, so merging across the sweep would re-introduce the bias of the
shallow scales instead of averaging it away.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .dequantize import eval_classical, eval_formula_classical
from .formula import And, Atom, Exists, Forall, Formula, Not, Or, free_variables
from .geometry import PolyhedralComplex, complex_on_sphere

__all__ = [
    "PointCloud", "DirectionCloud", "SamplerConfig", "EmptySampleError",
    "sample_members", "ingest_points", "amoeba_at",
    "estimate_limit_directions", "sweep_directions", "cluster_directions",
    "hausdorff_directions", "geodesic_to_complex", "check_cone_invariance",
    "project",
    "read_point_cloud", "write_point_cloud",
    "read_direction_cloud", "write_direction_cloud",
]

REFINE_RESIDUAL = 1e-12
_REFINE_ITERS = 110


class EmptySampleError(RuntimeError):
    """No point of the sample satisfied the formula."""


@dataclass(eq=False)
class PointCloud:
    """Points of a set, either in (R_{>0})^n or already in log space."""
    points: np.ndarray
    space: str = "classical"
    t: float | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            self.points = self.points.reshape(-1, 1) if self.points.size else self.points.reshape(0, 1)
        if self.space not in ("classical", "log"):
            raise ValueError("space must be 'classical' or 'log'")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("coordinates must be finite")
        if self.space == "classical" and self.points.size and not np.all(self.points > 0):
            raise ValueError("classical points must be strictly positive")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(eq=False)
class DirectionCloud:
    """Unit vectors approximating A_0 on the sphere, plus the origin flag
    (0 belongs to the limit set exactly when the set is non-empty)."""
    vectors: np.ndarray
    origin_member: bool = False

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2:
            self.vectors = self.vectors.reshape(-1, 1) if self.vectors.size else self.vectors.reshape(0, 1)
        if len(self.vectors):
            norms = np.linalg.norm(self.vectors, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("direction vectors must be unit length")
            self.vectors = self.vectors / norms[:, None]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class SamplerConfig:
    """box is in log10 units, one (lo, hi) pair per coordinate (a single pair
    broadcasts); t_schedule is geometric (t0, ratio, count)."""
    box: tuple = ((-12.0, 3.0),)
    samples_per_t: int = 200_000
    t_schedule: tuple = (0.1, 0.1, 6)
    eta0: float = 0.05
    eta_decay: float = 0.25
    radius_threshold: float = 0.5
    cluster_tol: float = 0.02
    seed: int = 0
    refine: bool = True
    max_refine_pairs: int = 20_000

    def __post_init__(self):
        t0, ratio, count = self.t_schedule
        if not (0 < t0 < 1 and 0 < ratio < 1 and int(count) >= 1):
            raise ValueError("t_schedule must be (t0, ratio, count) with t0, ratio in (0,1)")
        if self.eta0 <= 0 or self.radius_threshold <= 0:
            raise ValueError("eta0 and radius_threshold must be positive")

    def schedule(self) -> tuple:
        t0, ratio, count = self.t_schedule
        return tuple(t0 * ratio ** k for k in range(int(count)))

    def eta_at(self, t: float) -> float:
        return self.eta0 * t ** self.eta_decay

    def box_for(self, n: int) -> np.ndarray:
        box = self.box
        if len(box) == 2 and np.isscalar(box[0]):
            box = (box,)
        if len(box) == 1:
            box = box * n
        if len(box) != n:
            raise ValueError(f"box has {len(box)} coordinate ranges, need {n}")
        arr = np.array([[float(lo), float(hi)] for lo, hi in box])
        if np.any(arr[:, 0] >= arr[:, 1]):
            raise ValueError("box ranges must have lo < hi")
        return arr

    def box_check(self, n: int) -> str | None:
        """The box must reach past R*log10(1/t) at the shallowest t, else
        every direction gets truncated by the radius filter."""
        extent = np.abs(self.box_for(n)).max()
        need = self.radius_threshold * math.log10(1.0 / self.schedule()[0])
        if extent < need:
            return (f"box extent {extent:g} is below the radius threshold "
                    f"{need:g} at the largest t")
        return None


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _formula_dim(f: Formula, cfg: SamplerConfig) -> int:
    n = max(free_variables(f), default=-1) + 1
    box = cfg.box
    if not (len(box) == 2 and np.isscalar(box[0])) and len(box) > n:
        n = len(box)
    return max(n, 1)

def _check_quantifier_free(f: Formula) -> None:
    if isinstance(f, (Exists, Forall)):
        raise ValueError("membership sampling needs a quantifier-free formula")
    if isinstance(f, Not):
        _check_quantifier_free(f.item)
    elif isinstance(f, (And, Or)):
        for g in f.items:
            _check_quantifier_free(g)


def _sobol_logs(n: int, count: int, box: np.ndarray, seed) -> np.ndarray:
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non power-of-two counts
        unit = sampler.random(count)
    return box[:, 0] + unit * (box[:, 1] - box[:, 0])


def _eq_atoms(f: Formula) -> list[Atom]:
    if isinstance(f, Atom):
        return [f] if f.rel == "eq" else []
    if isinstance(f, Not):
        return _eq_atoms(f.item)
    if isinstance(f, (And, Or)):
        out = []
        for g in f.items:
            out.extend(_eq_atoms(g))
        return out
    return []


def _eq_residual(atom: Atom, X: np.ndarray, env) -> tuple[np.ndarray, np.ndarray]:
    u = eval_classical(atom.lhs, X, env)
    v = eval_classical(atom.rhs, X, env)
    return u - v, np.maximum(u, v)


def _refine_on_atom(f: Formula, atom: Atom, logs: np.ndarray, env,
                    eta: float, cfg: SamplerConfig, rng) -> np.ndarray:
    """Bisect sign-change segments of one equality atom down to a relative
    residual of REFINE_RESIDUAL; return accepted classical points."""
    g, _ = _eq_residual(atom, 10.0 ** logs, env)
    pos = np.nonzero(g > 0)[0]
    neg = np.nonzero(g < 0)[0]
    count = min(len(pos), len(neg), cfg.max_refine_pairs)
    if count == 0:
        return np.zeros((0, logs.shape[1]))
    pos = rng.permutation(pos)[:count]
    neg = rng.permutation(neg)[:count]
    lo, hi = logs[pos].copy(), logs[neg].copy()
    for _ in range(_REFINE_ITERS):
        mid = 0.5 * (lo + hi)
        gm, _ = _eq_residual(atom, 10.0 ** mid, env)
        up = gm > 0
        lo[up] = mid[up]
        hi[~up] = mid[~up]
    mid = 0.5 * (lo + hi)
    X = 10.0 ** mid
    gm, scale = _eq_residual(atom, X, env)
    ok = np.abs(gm) <= REFINE_RESIDUAL * np.maximum(scale, 1e-300)
    # the bisected atom sits at ~1e-12 relative residual, which can be far
    # below the thickening at deep t; judge the rest of the formula at a
    # floor tolerance instead
    ok &= eval_formula_classical(f, X, env, eta=max(eta, 1e-9))
    return X[ok]


def sample_members(f: Formula, env=None, cfg: SamplerConfig = SamplerConfig(),
                   eta: float | None = None, dim: int | None = None,
                   seed_stream=None) -> PointCloud:
    """Accepted points of {x > 0 | f(x)} inside the config box.

    Inequality atoms are tested exactly; equality atoms relatively thickened
    by eta (default cfg.eta0) and additionally refined by bisection between
    accepted-sign pairs.  Raises EmptySampleError when nothing is accepted.
    """
    _check_quantifier_free(f)
    n = dim if dim is not None else _formula_dim(f, cfg)
    box = cfg.box_for(n)
    eta = cfg.eta0 if eta is None else eta
    if seed_stream is None:
        seed_stream = np.random.SeedSequence(cfg.seed)
    sob_seed, pair_seed = seed_stream.spawn(2)
    logs = _sobol_logs(n, cfg.samples_per_t, box, np.random.default_rng(sob_seed))
    X = 10.0 ** logs
    atoms = _eq_atoms(f)
    if cfg.refine and atoms:
        # thickening alone admits points whose residual is relatively tiny but
        # which sit far (in log distance) from any true member; keep only
        # essentially-exact hits plus bisection-certified points, falling back
        # to the thickened capture when the variety grazes without sign change
        accepted = [X[eval_formula_classical(f, X, env, eta=1e-9)]]
        rng = np.random.default_rng(pair_seed)
        for atom in atoms:
            accepted.append(_refine_on_atom(f, atom, logs, env, eta, cfg, rng))
        pts = np.vstack(accepted)
        if not len(pts):
            pts = X[eval_formula_classical(f, X, env, eta=eta)]
    else:
        pts = X[eval_formula_classical(f, X, env, eta=eta)]
    if not len(pts):
        raise EmptySampleError("no sample point satisfied the formula")
    return PointCloud(pts, "classical")


def ingest_points(source) -> PointCloud:
    """Accept a classical cloud from CSV (path or text), ndarray, or an
    existing PointCloud; coordinates must be > 0."""
    if isinstance(source, PointCloud):
        cloud = source
    elif isinstance(source, np.ndarray) or (
        isinstance(source, (list, tuple)) and source and not isinstance(source[0], str)
    ):
        cloud = PointCloud(np.asarray(source, dtype=float), "classical")
    else:
        cloud = read_point_cloud(source)
    if cloud.space != "classical":
        raise ValueError("ingested clouds must be classical (positive) points")
    return cloud


def amoeba_at(cloud: PointCloud, t: float) -> PointCloud:
    """Componentwise log_{1/t} = (-1/ln t) * ln, sending the cloud to the
    scale-t amoeba."""
    if not (0.0 < t < 1.0):
        raise ValueError("t must lie in (0,1)")
    if cloud.space != "classical":
        raise ValueError("amoeba_at expects a classical cloud")
    L = math.log(1.0 / t)
    return PointCloud(np.log(cloud.points) / L, "log", t=t)


# ---------------------------------------------------------------------------
# Directions
# ---------------------------------------------------------------------------

def _raw_directions(log_cloud: PointCloud, cfg: SamplerConfig) -> np.ndarray:
    pts = log_cloud.points
    if not len(pts):
        return np.zeros((0, log_cloud.dim))
    norms = np.linalg.norm(pts, axis=1)
    keep = norms >= cfg.radius_threshold
    return pts[keep] / norms[keep, None]


def cluster_directions(dirs: np.ndarray, tol: float) -> np.ndarray:
    """Greedy seed-ball clustering in first-seen order; centers are
    normalized member means."""
    if not len(dirs):
        return dirs
    cos_tol = math.cos(tol)
    unassigned = np.ones(len(dirs), dtype=bool)
    centers = []
    while unassigned.any():
        i = int(np.argmax(unassigned))
        sims = dirs @ dirs[i]
        members = unassigned & (sims >= cos_tol)
        mean = dirs[members].mean(axis=0)
        nrm = np.linalg.norm(mean)
        centers.append(dirs[i] if nrm < 1e-12 else mean / nrm)
        unassigned &= ~members
    return np.array(centers)


def _clouds_for_schedule(source, cfg: SamplerConfig, env):
    """Yield (t, classical cloud or None) over the schedule."""
    root = np.random.SeedSequence(cfg.seed)
    streams = root.spawn(len(cfg.schedule()))
    for t, stream in zip(cfg.schedule(), streams):
        if isinstance(source, PointCloud):
            yield t, source
        else:
            try:
                yield t, sample_members(source, env, cfg, eta=cfg.eta_at(t),
                                        seed_stream=stream)
            except EmptySampleError:
                yield t, None


def sweep_directions(source, cfg: SamplerConfig = SamplerConfig(),
                     env=None) -> list:
    """Per-t direction clouds [(t, DirectionCloud), ...], deepest last."""
    if isinstance(source, PointCloud) and source.space != "classical":
        raise ValueError("sweeps start from classical clouds")
    out = []
    for t, cloud in _clouds_for_schedule(source, cfg, env):
        if cloud is None or not len(cloud):
            out.append((t, DirectionCloud(np.zeros((0, _sweep_dim(source, cfg))), False)))
            continue
        dirs = _raw_directions(amoeba_at(cloud, t), cfg)
        centers = cluster_directions(dirs, cfg.cluster_tol)
        out.append((t, DirectionCloud(centers, True)))
    return out


def _sweep_dim(source, cfg) -> int:
    if isinstance(source, PointCloud):
        return source.dim
    return _formula_dim(source, cfg)


def estimate_limit_directions(source, cfg: SamplerConfig = SamplerConfig(),
                              env=None) -> DirectionCloud:
    """Limit directions from the deepest schedule entry with samples.

    source is either a quantifier-free Formula or a classical PointCloud.
    origin_member records whether any sample existed at all.
    """
    sweep = sweep_directions(source, cfg, env)
    any_points = [dc for _, dc in sweep if dc.origin_member]
    if not any_points:
        raise EmptySampleError("no schedule entry produced samples")
    deepest = any_points[-1]
    return DirectionCloud(deepest.vectors, True)


# ---------------------------------------------------------------------------
# Metrics and reports
# ---------------------------------------------------------------------------

def _min_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    cosm = np.clip(A @ B.T, -1.0, 1.0)
    return np.arccos(cosm.max(axis=1))


def geodesic_to_complex(dirs: np.ndarray, K: PolyhedralComplex) -> np.ndarray:
    """Angle from each unit vector to K's trace on the sphere, via projection
    onto each cone (the projection of a unit vector onto a convex cone has
    norm cos(angle))."""
    dirs = np.asarray(dirs, dtype=float)
    if not len(K.cells):
        return np.full(len(dirs), np.pi)
    best = np.full(len(dirs), np.inf)
    for cell in K.cells:
        for c in cell.constraints:
            if c.const != 0:
                raise ValueError("geodesic distance needs conical cells")
        _, proj = cell.project_many(dirs)
        ang = np.arccos(np.clip(np.linalg.norm(proj, axis=1), 0.0, 1.0))
        best = np.minimum(best, ang)
    return best


def hausdorff_directions(a: DirectionCloud, b) -> float:
    """Symmetric geodesic Hausdorff distance in radians; b is a
    DirectionCloud or a conical PolyhedralComplex (compared through its
    intersection with the sphere)."""
    A = a.vectors
    if isinstance(b, PolyhedralComplex):
        B = complex_on_sphere(b)
        if A.shape[1] != (B.shape[1] if len(B) else A.shape[1]):
            raise ValueError("dimension mismatch")
        if not len(A) and not len(B):
            return 0.0
        if not len(A) or not len(B):
            return math.inf
        fwd = float(geodesic_to_complex(A, b).max())
        bwd = float(_min_angles(B, A).max())
        return max(fwd, bwd)
    B = b.vectors
    if len(A) and len(B) and A.shape[1] != B.shape[1]:
        raise ValueError("dimension mismatch")
    if not len(A) and not len(B):
        return 0.0
    if not len(A) or not len(B):
        return math.inf
    return max(float(_min_angles(A, B).max()), float(_min_angles(B, A).max()))


def check_cone_invariance(per_t: Sequence) -> dict:
    """Successive Hausdorff gaps of a per-t sweep; distances should shrink
    as t deepens if the estimate is stabilizing on a cone."""
    entries = [(t, dc) for t, dc in per_t]
    if len(entries) < 2:
        return {"note": "insufficient data", "pairs": []}
    pairs = []
    for (t1, d1), (t2, d2) in zip(entries, entries[1:]):
        pairs.append((t1, t2, hausdorff_directions(d1, d2)))
    finite = [d for _, _, d in pairs if math.isfinite(d)]
    nonincreasing = all(x >= y - 1e-12 for x, y in zip(finite, finite[1:]))
    return {"pairs": pairs, "nonincreasing": nonincreasing,
            "note": "" if nonincreasing else "gaps grew as t decreased"}


def project(obj, coords: Sequence[int]):
    """Coordinate projection of a cloud (either space) or direction cloud.
    Projected directions that collapse to zero are dropped into the origin
    flag, matching the cone picture."""
    coords = list(coords)
    if not coords:
        raise ValueError("coordinate subset must be non-empty")
    if isinstance(obj, PointCloud):
        return PointCloud(obj.points[:, coords], obj.space, t=obj.t)
    if isinstance(obj, DirectionCloud):
        sub = obj.vectors[:, coords]
        norms = np.linalg.norm(sub, axis=1) if len(sub) else np.zeros(0)
        keep = norms > 1e-7
        origin = obj.origin_member or bool(len(sub) and (~keep).any())
        kept = sub[keep] / norms[keep, None] if keep.any() else np.zeros((0, len(coords)))
        return DirectionCloud(kept, origin)
    raise TypeError("project expects a PointCloud or DirectionCloud")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_text(path, text: str) -> None:
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def write_point_cloud(cloud: PointCloud, path) -> None:
    meta = f"# kind={cloud.space}"
    if cloud.t is not None:
        meta += f" t={_fmt(cloud.t)}"
    lines = [meta, ",".join(f"x{i+1}" for i in range(cloud.dim))]
    for row in cloud.points:
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def write_direction_cloud(cloud: DirectionCloud, path) -> None:
    lines = [f"# origin_member={'true' if cloud.origin_member else 'false'}",
             ",".join(f"x{i+1}" for i in range(cloud.dim))]
    for row in cloud.vectors:
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def _read_lines(source) -> list[str]:
    text = str(source)
    if "\n" not in text and os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    return text.splitlines()


def _parse_csv(source):
    meta: dict[str, str] = {}
    rows = []
    width = None
    for lineno, raw in enumerate(_read_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for part in line[1:].split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k] = v
            continue
        cells = [c.strip() for c in line.split(",")]
        if all(c and (c[0].isalpha()) for c in cells):
            continue  # header row
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed row {line!r}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError(f"line {lineno}: expected {width} columns")
        rows.append(row)
    return meta, np.array(rows) if rows else np.zeros((0, width or 1))


def read_point_cloud(source) -> PointCloud:
    meta, pts = _parse_csv(source)
    kind = meta.get("kind", "classical")
    t = float(meta["t"]) if "t" in meta else None
    if kind == "classical" and pts.size and not np.all(pts > 0):
        bad = np.argwhere(~(pts > 0))[0]
        raise ValueError(f"non-positive coordinate in row {int(bad[0]) + 1}")
    return PointCloud(pts, kind, t=t)


def read_direction_cloud(source) -> DirectionCloud:
    meta, pts = _parse_csv(source)
    origin = meta.get("origin_member", "false").lower() in ("true", "1", "yes")
    return DirectionCloud(pts, origin)
