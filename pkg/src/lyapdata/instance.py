"""The JSON problem-instance format: one self-contained file per experiment.

Top-level keys: ``n``, ``Q``, exactly one of ``dataset`` / ``generator``,
``prior``, optional ``tolerances`` and ``seed``.  Matrices are row-major
nested arrays.  See the README for the full schema and examples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sysmodel import (
    BoundedAffinePrior,
    Dataset,
    PriorKnowledge,
    SubspaceActionPrior,
    UnconstrainedPrior,
)
from .trajgen import estimate_derivatives, simulate_trajectory

PRIOR_TYPES = ("bounded_affine", "subspace_action", "unconstrained")


class InstanceError(ValueError):
    """Schema violation in a problem-instance file, anchored when possible."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Tolerances:
    rank_tol: float = 1e-9
    gap_tol: float = 1e-8
    agree_tol: float = 1e-6

    def __post_init__(self):
        for name in ("rank_tol", "gap_tol", "agree_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a positive finite number")


@dataclass(frozen=True)
class GeneratorSpec:
    """Simulation recipe: dynamics matrix, initial state, sample times."""

    matrix: np.ndarray
    x0: np.ndarray
    times: np.ndarray


@dataclass(frozen=True)
class ProblemInstance:
    n: int
    Q: np.ndarray
    prior: PriorKnowledge
    dataset: Dataset | None = None
    generator: GeneratorSpec | None = None
    tolerances: Tolerances = Tolerances()
    seed: int = 0

    def __post_init__(self):
        if (self.dataset is None) == (self.generator is None):
            raise ValueError("exactly one of dataset / generator must be present")


class _Context:
    """Carries the raw text so errors can point at the offending line."""

    def __init__(self, path: str, raw: str):
        self.path = path
        self.raw = raw

    def line_of(self, key: str) -> int | None:
        idx = self.raw.find(f'"{key}"')
        if idx < 0:
            return None
        return self.raw.count("\n", 0, idx) + 1

    def fail(self, key: str | None, message: str):
        line = self.line_of(key) if key else None
        raise InstanceError(message, self.path, line)


def _as_float(ctx: _Context, obj, key: str) -> float:
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        ctx.fail(key, f"'{key}' must be a number, got {type(obj).__name__}")
    return float(obj)


def _as_vector(ctx: _Context, obj, key: str, length: int | None = None) -> np.ndarray:
    if not isinstance(obj, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj
    ):
        ctx.fail(key, f"'{key}' must be a flat array of numbers")
    v = np.asarray(obj, dtype=float)
    if length is not None and v.size != length:
        ctx.fail(key, f"'{key}' has length {v.size}, expected {length}")
    return v


def _as_matrix(ctx: _Context, obj, key: str,
               rows: int | None = None, cols: int | None = None) -> np.ndarray:
    if (not isinstance(obj, list) or not obj
            or not all(isinstance(row, list) for row in obj)):
        ctx.fail(key, f"'{key}' must be a nested array of numbers (list of rows)")
    width = len(obj[0])
    for row in obj:
        if len(row) != width or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in row
        ):
            ctx.fail(key, f"'{key}' rows must all contain {width} numbers")
    M = np.asarray(obj, dtype=float)
    if rows is not None and M.shape != (rows, cols):
        ctx.fail(key, f"'{key}' has shape {M.shape[0]}x{M.shape[1]}, expected {rows}x{cols}")
    if not np.all(np.isfinite(M)):
        ctx.fail(key, f"'{key}' contains non-finite entries")
    return M


def _parse_prior(ctx: _Context, obj, n: int) -> PriorKnowledge:
    if not isinstance(obj, dict):
        ctx.fail("prior", "'prior' must be an object with a 'type' field")
    kind = obj.get("type")
    if kind not in PRIOR_TYPES:
        ctx.fail("type", f"prior type must be one of {PRIOR_TYPES}, got {kind!r}")
    try:
        if kind == "unconstrained":
            return UnconstrainedPrior()
        if kind == "subspace_action":
            Y = _as_matrix(ctx, obj.get("vectors"), "vectors")
            G = _as_matrix(ctx, obj.get("images"), "images")
            if Y.shape[0] != n:
                ctx.fail("vectors", f"'vectors' must have {n} rows")
            return SubspaceActionPrior(vectors=Y, images=G)
        base = _as_matrix(ctx, obj.get("base"), "base", n, n)
        raw_dirs = obj.get("directions", [])
        raw_bounds = obj.get("bounds", [])
        if not isinstance(raw_dirs, list) or not isinstance(raw_bounds, list):
            ctx.fail("directions", "'directions' and 'bounds' must be arrays")
        directions = tuple(
            _as_matrix(ctx, D, f"directions[{k}]", n, n) for k, D in enumerate(raw_dirs)
        )
        bounds = []
        for k, b in enumerate(raw_bounds):
            if not isinstance(b, list) or len(b) != 2:
                ctx.fail("bounds", f"'bounds[{k}]' must be a [lo, hi] pair (null = unbounded)")
            lo = None if b[0] is None else _as_float(ctx, b[0], f"bounds[{k}]")
            hi = None if b[1] is None else _as_float(ctx, b[1], f"bounds[{k}]")
            bounds.append((lo, hi))
        return BoundedAffinePrior(base=base, directions=directions, bounds=tuple(bounds))
    except ValueError as exc:
        if isinstance(exc, InstanceError):
            raise
        ctx.fail("prior", f"invalid prior: {exc}")


def _parse_dataset(ctx: _Context, obj, n: int) -> Dataset:
    if not isinstance(obj, dict) or not isinstance(obj.get("samples"), list):
        ctx.fail("dataset", "'dataset' must be an object with a 'samples' array")
    samples = obj["samples"]
    if not samples:
        ctx.fail("samples", "'samples' must be nonempty")
    times, states, derivs = [], [], []
    has_dx = None
    for k, s in enumerate(samples):
        if not isinstance(s, dict):
            ctx.fail("samples", f"'samples[{k}]' must be an object with 't' and 'x'")
        times.append(_as_float(ctx, s.get("t"), "t"))
        states.append(_as_vector(ctx, s.get("x"), "x", n))
        dx_here = "dx" in s
        if has_dx is None:
            has_dx = dx_here
        elif has_dx != dx_here:
            ctx.fail("samples", "either every sample carries 'dx' or none does")
        if dx_here:
            derivs.append(_as_vector(ctx, s.get("dx"), "dx", n))
    exact = obj.get("exact", False)
    if not isinstance(exact, bool):
        ctx.fail("exact", "'exact' must be a boolean")
    if exact and not has_dx:
        ctx.fail("exact", "'exact' requires derivative samples")
    try:
        return Dataset(
            times=np.asarray(times),
            states=np.stack(states),
            derivs=np.stack(derivs) if has_dx else None,
            exact=exact,
        )
    except ValueError as exc:
        ctx.fail("samples", f"invalid dataset: {exc}")


def _parse_generator(ctx: _Context, obj, n: int) -> GeneratorSpec:
    if not isinstance(obj, dict):
        ctx.fail("generator", "'generator' must be an object with 'A', 'x0', 'times'")
    A = _as_matrix(ctx, obj.get("A"), "A", n, n)
    x0 = _as_vector(ctx, obj.get("x0"), "x0", n)
    times = _as_vector(ctx, obj.get("times"), "times")
    if times.size == 0:
        ctx.fail("times", "'times' must be nonempty")
    if times[0] < 0.0 or (times.size > 1 and np.any(np.diff(times) <= 0.0)):
        ctx.fail("times", "'times' must be nonnegative and strictly increasing")
    return GeneratorSpec(matrix=A, x0=x0, times=times)


def parse_instance(raw: str, path: str = "<instance>") -> ProblemInstance:
    """Parse and validate an instance document from its JSON text."""
    ctx = _Context(path, raw)
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    if not isinstance(doc, dict):
        ctx.fail(None, "instance document must be a JSON object")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        ctx.fail("n", "'n' must be a positive integer")
    Q = _as_matrix(ctx, doc.get("Q"), "Q", n, n)
    if ("dataset" in doc) == ("generator" in doc):
        ctx.fail(None, "exactly one of 'dataset' / 'generator' must be present")
    dataset = _parse_dataset(ctx, doc["dataset"], n) if "dataset" in doc else None
    generator = _parse_generator(ctx, doc["generator"], n) if "generator" in doc else None
    if "prior" not in doc:
        ctx.fail(None, "'prior' is required")
    prior = _parse_prior(ctx, doc["prior"], n)
    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        ctx.fail("tolerances", "'tolerances' must be an object")
    known = {"rank_tol", "gap_tol", "agree_tol"}
    unknown = set(tols) - known
    if unknown:
        ctx.fail("tolerances", f"unknown tolerance keys: {sorted(unknown)}")
    try:
        tolerances = Tolerances(**{k: _as_float(ctx, v, k) for k, v in tols.items()})
    except ValueError as exc:
        if isinstance(exc, InstanceError):
            raise
        ctx.fail("tolerances", str(exc))
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        ctx.fail("seed", "'seed' must be an integer")
    return ProblemInstance(n=n, Q=Q, prior=prior, dataset=dataset,
                           generator=generator, tolerances=tolerances, seed=seed)


def load_instance(path) -> ProblemInstance:
    """Read and validate a problem-instance file."""
    p = Path(path)
    try:
        raw = p.read_text()
    except OSError as exc:
        raise InstanceError(f"cannot read instance file: {exc}", str(p)) from exc
    return parse_instance(raw, str(p))


def parse_system_spec(raw: str, path: str = "<spec>") -> ProblemInstance:
    """Parse a simulation spec into a generator-mode instance.

    The spec must provide ``A``, ``x0`` and ``times`` (either at top level
    or inside a ``generator`` object).  ``Q`` defaults to the identity and
    ``prior`` to unconstrained so the simulated instance is immediately
    usable by the other commands; ``n``, ``tolerances`` and ``seed`` are
    carried through when present.
    """
    ctx = _Context(path, raw)
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    if not isinstance(doc, dict):
        ctx.fail(None, "system spec must be a JSON object")
    source = doc.get("generator", doc)
    if not isinstance(source, dict) or "A" not in source:
        ctx.fail(None, "system spec needs 'A', 'x0' and 'times'")
    A = _as_matrix(ctx, source.get("A"), "A")
    if A.shape[0] != A.shape[1]:
        ctx.fail("A", f"'A' must be square, got {A.shape[0]}x{A.shape[1]}")
    n = doc.get("n", A.shape[0])
    if n != A.shape[0]:
        ctx.fail("n", f"'n' is {n} but 'A' is {A.shape[0]}x{A.shape[1]}")
    generator = _parse_generator(ctx, {"A": source.get("A"), "x0": source.get("x0"),
                                       "times": source.get("times")}, n)
    Q = (_as_matrix(ctx, doc["Q"], "Q", n, n) if "Q" in doc else np.eye(n))
    prior = (_parse_prior(ctx, doc["prior"], n) if "prior" in doc
             else UnconstrainedPrior())
    tols = doc.get("tolerances", {})
    if not isinstance(tols, dict):
        ctx.fail("tolerances", "'tolerances' must be an object")
    try:
        tolerances = Tolerances(**{k: _as_float(ctx, v, k) for k, v in tols.items()})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        ctx.fail("tolerances", str(exc))
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        ctx.fail("seed", "'seed' must be an integer")
    return ProblemInstance(n=n, Q=Q, prior=prior, generator=generator,
                           tolerances=tolerances, seed=seed)


def resolve_dataset(inst: ProblemInstance) -> Dataset:
    """Materialize the instance's dataset.

    Generator specs are simulated with exact derivatives.  Inline datasets
    without derivatives get second-order finite-difference estimates and are
    flagged approximate.
    """
    if inst.generator is not None:
        return simulate_trajectory(inst.generator.matrix, inst.generator.x0,
                                   inst.generator.times)
    ds = inst.dataset
    if ds.derivs is None:
        ds = estimate_derivatives(ds)
    return ds


def prior_to_dict(pk: PriorKnowledge) -> dict:
    if isinstance(pk, UnconstrainedPrior):
        return {"type": "unconstrained"}
    if isinstance(pk, SubspaceActionPrior):
        return {"type": "subspace_action",
                "vectors": pk.vectors.tolist(), "images": pk.images.tolist()}
    if isinstance(pk, BoundedAffinePrior):
        bounds = [[None if not np.isfinite(lo) else lo,
                   None if not np.isfinite(hi) else hi] for lo, hi in pk.bounds]
        return {"type": "bounded_affine", "base": pk.base.tolist(),
                "directions": [D.tolist() for D in pk.directions], "bounds": bounds}
    raise TypeError(f"unsupported prior knowledge type: {type(pk).__name__}")


def dataset_to_dict(ds: Dataset) -> dict:
    samples = []
    for k in range(ds.sample_count):
        entry = {"t": float(ds.times[k]), "x": ds.states[k].tolist()}
        if ds.derivs is not None:
            entry["dx"] = ds.derivs[k].tolist()
        samples.append(entry)
    return {"samples": samples, "exact": ds.exact}


def instance_to_dict(inst: ProblemInstance) -> dict:
    doc: dict = {"n": inst.n, "Q": inst.Q.tolist()}
    if inst.dataset is not None:
        doc["dataset"] = dataset_to_dict(inst.dataset)
    else:
        doc["generator"] = {"A": inst.generator.matrix.tolist(),
                            "x0": inst.generator.x0.tolist(),
                            "times": inst.generator.times.tolist()}
    doc["prior"] = prior_to_dict(inst.prior)
    doc["tolerances"] = {"rank_tol": inst.tolerances.rank_tol,
                         "gap_tol": inst.tolerances.gap_tol,
                         "agree_tol": inst.tolerances.agree_tol}
    doc["seed"] = inst.seed
    return doc
