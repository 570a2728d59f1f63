"""Deterministic box-constrained global optimization.

A dividing-rectangles (DIRECT) global search over the unit-normalized free
dimensions, followed by bound-constrained local refinement (projected
quasi-Newton with central finite-difference gradients) from the best few
evaluated points. Everything is deterministic: no randomness, ties broken by
creation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

GRAD_REL_STEP = 1e-6


@dataclass(frozen=True)
class Box:
    """Axis-aligned bounds with optionally fixed (frozen) dimensions.

    Fixed dimensions keep their value in every point the objective sees;
    the search runs over the free dimensions only.
    """

    lower: np.ndarray
    upper: np.ndarray
    fixed_mask: np.ndarray

    @classmethod
    def of(cls, bounds: Sequence[tuple[float, float]],
           fixed: Mapping[int, float] | None = None) -> "Box":
        n = len(bounds)
        lower = np.array([b[0] for b in bounds], dtype=float)
        upper = np.array([b[1] for b in bounds], dtype=float)
        mask = np.zeros(n, dtype=bool)
        for i, value in (fixed or {}).items():
            lower[i] = upper[i] = float(value)
            mask[i] = True
        # zero-width dimensions carry no search freedom
        mask |= lower == upper
        bad = np.nonzero(~mask & (lower > upper))[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"lower > upper in dimension {i}: "
                             f"[{lower[i]}, {upper[i]}]")
        return cls(lower=lower, upper=upper, fixed_mask=mask)

    @property
    def n_dims(self) -> int:
        return len(self.lower)

    @property
    def n_free(self) -> int:
        return int((~self.fixed_mask).sum())

    @property
    def free_indices(self) -> np.ndarray:
        return np.nonzero(~self.fixed_mask)[0]

    @property
    def free_lower(self) -> np.ndarray:
        return self.lower[~self.fixed_mask]

    @property
    def free_upper(self) -> np.ndarray:
        return self.upper[~self.fixed_mask]

    def embed(self, free_values: np.ndarray) -> np.ndarray:
        """Full-space point from free-dimension values (fixed dims filled in)."""
        x = self.lower.copy()
        x[~self.fixed_mask] = free_values
        return x

    def extract_free(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)[~self.fixed_mask]

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol)
                    and np.all(x <= self.upper + atol))


@dataclass(frozen=True)
class OptimizerConfig:
    """Budgets and tolerances for the global + local search."""

    max_direct_iterations: int = 50
    max_function_evaluations: int = 10_000
    max_rectangle_divisions: int = 10_000
    min_rectangle_size: float = 0.01
    refine_constraint_tolerance: float = 1e-10
    refine_optimality_tolerance: float = 1e-10
    refine_max_iterations: int = 2000
    refine_start_count: int = 3
    po_epsilon: float = 1e-4

    def __post_init__(self) -> None:
        for name in ("max_direct_iterations", "max_function_evaluations",
                     "max_rectangle_divisions", "min_rectangle_size",
                     "refine_constraint_tolerance",
                     "refine_optimality_tolerance", "refine_max_iterations",
                     "refine_start_count", "po_epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in (
            "max_direct_iterations", "max_function_evaluations",
            "max_rectangle_divisions", "min_rectangle_size",
            "refine_constraint_tolerance", "refine_optimality_tolerance",
            "refine_max_iterations", "refine_start_count", "po_epsilon")}


@dataclass
class OptimizationResult:
    best_point: np.ndarray
    best_value: float
    evaluations: int
    trace: list[float] = field(default_factory=list)
    refinement_improved: bool = False


class _BudgetExhausted(Exception):
    pass


class _Recorder:
    """Wraps the objective: archives every evaluation, enforces a budget."""

    def __init__(self, f: Callable, limit: int | None = None):
        self.f = f
        self.limit = limit
        self.archive: list[tuple[float, int, np.ndarray]] = []

    @property
    def count(self) -> int:
        return len(self.archive)

    def __call__(self, x: np.ndarray) -> float:
        if self.limit is not None and self.count >= self.limit:
            raise _BudgetExhausted
        value = float(self.f(x))
        self.archive.append((value, self.count, np.array(x, dtype=float)))
        return value

    def best(self) -> tuple[float, np.ndarray]:
        value, _, x = min(self.archive, key=lambda rec: (rec[0], rec[1]))
        return value, x


class _Rect:
    """One hyper-rectangle of the normalized search space.

    Side lengths are powers of one third, stored as integer trisection
    levels so size classes compare exactly. The measure is the half-diagonal.
    """

    __slots__ = ("center", "levels", "value", "index", "measure")

    def __init__(self, center: tuple, levels: tuple, value: float, index: int):
        self.center = center
        self.levels = levels
        self.value = value
        self.index = index
        self.measure = _half_diagonal(levels)

    def update_levels(self, levels: tuple) -> None:
        self.levels = levels
        self.measure = _half_diagonal(levels)


def _half_diagonal(levels: tuple) -> float:
    # summed in sorted-level order so equal size classes get equal floats
    return 0.5 * math.sqrt(sum(9.0 ** -k for k in sorted(levels)))


def _select_potentially_optimal(rects: list[_Rect], f_min: float,
                                epsilon: float, min_size: float) -> list[_Rect]:
    """Lower-convex-hull selection with relative slack against the incumbent.

    One representative per size class (lowest value, then lowest index);
    classes smaller than ``min_size`` are not selectable but still constrain
    the hull. Returns the selected rectangles ordered by index.
    """
    by_class: dict[tuple, _Rect] = {}
    for r in rects:
        key = tuple(sorted(r.levels))
        cur = by_class.get(key)
        if cur is None or (r.value, r.index) < (cur.value, cur.index):
            by_class[key] = r
    reps = sorted(by_class.values(), key=lambda r: (r.measure, r.value, r.index))

    selected: list[_Rect] = []
    for rj in reps:
        if rj.measure < min_size:
            continue
        dj, fj = rj.measure, rj.value
        left = -math.inf
        right = math.inf
        dominated = False
        for ri in reps:
            if ri is rj:
                continue
            di, fi = ri.measure, ri.value
            if di < dj:
                slope = (fj - fi) / (dj - di)
                if slope > left:
                    left = slope
            elif di > dj:
                slope = (fi - fj) / (di - dj)
                if slope < right:
                    right = slope
            elif (fi, ri.index) < (fj, rj.index):
                dominated = True
                break
        if dominated or left > right:
            continue
        if right < math.inf:
            if f_min != 0.0:
                if (f_min - fj) + dj * right < epsilon * abs(f_min):
                    continue
            elif fj > dj * right:
                continue
        selected.append(rj)
    selected.sort(key=lambda r: r.index)
    return selected


def direct_search(f: Callable[[np.ndarray], float], box: Box,
                  cfg: OptimizerConfig | None = None) -> OptimizationResult:
    """Dividing-rectangles global search over ``box``.

    Starts from the box center, then repeatedly trisects potentially optimal
    rectangles along their longest sides until an iteration, evaluation or
    division budget is hit, or no selectable rectangle of at least the
    critical size remains. Every evaluated point lies inside the box.
    """
    result, _ = _direct_search(f, box, cfg or OptimizerConfig())
    return result


def _direct_search(f: Callable, box: Box, cfg: OptimizerConfig):
    n = box.n_free
    if n == 0:
        raise ValueError("box has no free dimensions")
    recorder = _Recorder(f, limit=cfg.max_function_evaluations)
    flo = box.free_lower
    width = box.free_upper - flo

    def eval_center(z: tuple) -> float:
        return recorder(box.embed(flo + np.asarray(z) * width))

    center = (0.5,) * n
    f0 = eval_center(center)
    best_value = f0
    rects = [_Rect(center, (0,) * n, f0, 0)]
    next_index = 1
    divisions = 0
    trace = [best_value]

    for _ in range(cfg.max_direct_iterations):
        if (recorder.count >= cfg.max_function_evaluations
                or divisions >= cfg.max_rectangle_divisions):
            break
        selected = _select_potentially_optimal(
            rects, best_value, cfg.po_epsilon, cfg.min_rectangle_size)
        if not selected:
            break
        stop = False
        for rect in selected:
            kmin = min(rect.levels)
            long_dims = [i for i, k in enumerate(rect.levels) if k == kmin]
            if recorder.count + 2 * len(long_dims) > cfg.max_function_evaluations:
                stop = True
                break
            delta = 3.0 ** -(kmin + 1)
            samples = []
            for i in long_dims:
                zp = list(rect.center)
                zp[i] += delta
                zm = list(rect.center)
                zm[i] -= delta
                fp = eval_center(tuple(zp))
                fm = eval_center(tuple(zm))
                samples.append((min(fp, fm), i, tuple(zp), fp, tuple(zm), fm))
                if fp < best_value:
                    best_value = fp
                if fm < best_value:
                    best_value = fm
            # divide along the most promising dimension first so the better
            # new centers land in the larger child rectangles
            samples.sort(key=lambda s: (s[0], s[1]))
            levels = list(rect.levels)
            for _w, i, zp, fp, zm, fm in samples:
                if divisions >= cfg.max_rectangle_divisions:
                    stop = True
                    break
                levels[i] += 1
                frozen = tuple(levels)
                rects.append(_Rect(zp, frozen, fp, next_index))
                rects.append(_Rect(zm, frozen, fm, next_index + 1))
                next_index += 2
                divisions += 1
            rect.update_levels(tuple(levels))
            if stop:
                break
        trace.append(best_value)
        if stop:
            break

    value, x = recorder.best()
    result = OptimizationResult(best_point=x, best_value=value,
                                evaluations=recorder.count, trace=trace)
    return result, recorder.archive


def _box_gradient(g: Callable, z: np.ndarray, lower: np.ndarray,
                  upper: np.ndarray) -> np.ndarray:
    """Central-difference gradient with the stencil kept inside the bounds."""
    grad = np.zeros_like(z)
    for i in range(len(z)):
        h = GRAD_REL_STEP * max(abs(z[i]), 1.0)
        hp = min(h, upper[i] - z[i])
        hm = min(h, z[i] - lower[i])
        if hp + hm <= 0.0:
            continue
        zp = z.copy()
        zp[i] += hp
        zm = z.copy()
        zm[i] -= hm
        grad[i] = (g(zp) - g(zm)) / (hp + hm)
    return grad


def local_refine(f: Callable[[np.ndarray], float], box: Box, start,
                 cfg: OptimizerConfig | None = None, *,
                 max_evaluations: int | None = None) -> OptimizationResult:
    """Bound-constrained local descent from ``start``.

    Projected quasi-Newton (L-BFGS-B) with central finite-difference
    gradients evaluated strictly inside the box. Never returns a value worse
    than ``f(start)``; if no improvement is found the start point is returned
    with ``refinement_improved=False``.
    """
    cfg = cfg or OptimizerConfig()
    start = np.asarray(start, dtype=float)
    if not box.contains(start, atol=1e-12):
        raise ValueError("start point lies outside the box")
    if box.n_free == 0:
        raise ValueError("box has no free dimensions")
    recorder = _Recorder(f, limit=max_evaluations)
    flo = box.free_lower
    fup = box.free_upper

    def g(z: np.ndarray) -> float:
        return recorder(box.embed(np.clip(z, flo, fup)))

    z0 = box.extract_free(start)
    try:
        f_start = g(z0)
        _scipy_minimize(
            g, z0, jac=lambda z: _box_gradient(g, z, flo, fup),
            method="L-BFGS-B", bounds=list(zip(flo, fup)),
            options={"maxiter": cfg.refine_max_iterations,
                     "gtol": cfg.refine_optimality_tolerance,
                     "ftol": 1e-16})
    except _BudgetExhausted:
        pass
    if not recorder.archive:
        return OptimizationResult(best_point=start, best_value=math.inf,
                                  evaluations=0, trace=[])
    f_start = recorder.archive[0][0]
    best_value, best_x = recorder.best()
    improved = best_value < f_start
    if not improved:
        best_value, best_x = f_start, start
    return OptimizationResult(
        best_point=np.clip(best_x, box.lower, box.upper),
        best_value=best_value, evaluations=recorder.count,
        trace=[f_start, best_value], refinement_improved=improved)


def optimize(f: Callable[[np.ndarray], float], box: Box,
             cfg: OptimizerConfig | None = None) -> OptimizationResult:
    """Global search followed by local refinement.

    Runs the dividing-rectangles search, then refines from the best
    ``cfg.refine_start_count`` distinct evaluated points, all under one
    shared evaluation budget. Deterministic for fixed inputs.
    """
    cfg = cfg or OptimizerConfig()
    direct_result, archive = _direct_search(f, box, cfg)
    used = direct_result.evaluations
    best_value = direct_result.best_value
    best_point = direct_result.best_point
    trace = list(direct_result.trace)

    starts: list[np.ndarray] = []
    seen: set[bytes] = set()
    for value, _, x in sorted(archive, key=lambda rec: (rec[0], rec[1])):
        key = x.tobytes()
        if key in seen:
            continue
        seen.add(key)
        starts.append(x)
        if len(starts) == cfg.refine_start_count:
            break

    improved = False
    for x0 in starts:
        remaining = cfg.max_function_evaluations - used
        if remaining <= 0:
            break
        res = local_refine(f, box, x0, cfg, max_evaluations=remaining)
        used += res.evaluations
        if res.best_value < best_value:
            best_value = res.best_value
            best_point = res.best_point
            improved = True
        trace.append(best_value)
    return OptimizationResult(best_point=best_point, best_value=best_value,
                              evaluations=used, trace=trace,
                              refinement_improved=improved)
