"""Ground-state solver, coupling sweep, and sequence diagnostics.

The solver minimizes J over the constraint set by projected descent: each
step solves A r = J'(u) with the problem operator A (so r is the gradient in
the problem inner product), backtracks along u - s r, and re-projects onto
the constraint set.  Multi-start over a smoothed well bump plus random
positive fields approximates minimality.  The coupling sweep solves the well
problem once, then the weighted problem over an increasing grid with warm
starts, reporting levels, distances, and outside-well mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import cg as _scipy_cg

from . import variational as _var
from .calculus import bump_field, gradient_form, laplacian, w22_norm_sq
from .errors import (
    ConvergenceError,
    InitializerError,
    InputError,
    NoProjectionError,
    ParameterError,
)
from .fields import Field
from .lattice import BALL
from .variational import MODE_DIRICHLET, MODE_FULL, ProblemSpec

INIT_WELL_BUMP = "well-bump"
INIT_RANDOM_POSITIVE = "random-positive"
INIT_SUPPLIED = "supplied"
_INITIALIZERS = (INIT_WELL_BUMP, INIT_RANDOM_POSITIVE, INIT_SUPPLIED)

_MIN_STEP = 1.0e-14


@dataclass(frozen=True)
class SolverConfig:
    """Descent, linear-solve, and restart parameters."""

    max_iterations: int = 400
    residual_tol: float = 1.0e-8
    nehari_tol: float = 1.0e-10
    cg_tol: float = 1.0e-10
    cg_max_iterations: int = 5000
    shrink: float = 0.5
    sufficient_decrease: float = 1.0e-4
    initializer: str = INIT_WELL_BUMP
    initial_field: Optional[Field] = None
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in ("residual_tol", "nehari_tol", "cg_tol"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < self.shrink < 1.0:
            raise ParameterError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not 0.0 < self.sufficient_decrease < 1.0:
            raise ParameterError(f"sufficient_decrease must lie in (0, 1), got {self.sufficient_decrease}")
        if self.max_iterations < 1 or self.cg_max_iterations < 1:
            raise ParameterError("iteration limits must be >= 1")
        if self.restarts < 0:
            raise ParameterError(f"restarts must be >= 0, got {self.restarts}")
        if self.initializer not in _INITIALIZERS:
            raise ParameterError(f"initializer must be one of {_INITIALIZERS}, got {self.initializer!r}")
        if self.initializer == INIT_SUPPLIED and self.initial_field is None:
            raise ParameterError("supplied initializer requires initial_field")

    def as_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "residual_tol": self.residual_tol,
            "nehari_tol": self.nehari_tol,
            "cg_tol": self.cg_tol,
            "cg_max_iterations": self.cg_max_iterations,
            "shrink": self.shrink,
            "sufficient_decrease": self.sufficient_decrease,
            "initializer": self.initializer,
            "restarts": self.restarts,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    energy: float
    norm_sq: float
    nehari_defect: float
    dual_residual: float
    step: float


@dataclass(frozen=True)
class SolveResult:
    """Converged minimizer with its level and per-iteration history."""

    u: Field
    level: float
    dual_residual: float
    nehari_defect: float
    iterations: int
    converged: bool
    history: Tuple[IterationRecord, ...]
    start_labels: Tuple[str, ...]
    start_levels: Tuple[float, ...]
    start_index: int


def apply_quadratic_operator(u: Field, prob: ProblemSpec) -> Field:
    """A u for A = Delta^2 - Delta + weight; u' A u equals the squared norm."""
    _var._require_admissible(u, prob)
    if prob.mode == MODE_FULL:
        return Field(prob.window, prob.operator_matrix() @ u.values)
    free = prob.free_indices()
    out = np.zeros(prob.window.count)
    out[free] = prob.operator_matrix() @ u.values[free]
    return Field(prob.window, out)


def cg_solve(rhs: Field, prob: ProblemSpec, cfg: SolverConfig) -> Field:
    """Solve A r = rhs on the free sites by diagonally preconditioned CG."""
    _var._check_window(rhs, prob)
    free = prob.free_indices()
    b = rhs.values[free]
    b_norm = float(np.linalg.norm(b))
    out = np.zeros(prob.window.count)
    if b_norm == 0.0:
        return Field(prob.window, out)
    matrix = prob.operator_matrix()
    precond = diags(1.0 / prob.operator_diagonal())
    x, info = _scipy_cg(matrix, b, rtol=cfg.cg_tol, atol=0.0, maxiter=cfg.cg_max_iterations, M=precond)
    if info != 0:
        residual = float(np.linalg.norm(matrix @ x - b)) / b_norm
        raise ConvergenceError(
            f"linear solve stalled after {cfg.cg_max_iterations} iterations "
            f"(relative residual {residual:.3e})",
            residual=residual,
        )
    out[free] = x
    return Field(prob.window, out)


def _mask_to_free(values: np.ndarray, prob: ProblemSpec) -> np.ndarray:
    if prob.mode == MODE_FULL:
        return values
    out = np.zeros_like(values)
    free = prob.free_indices()
    out[free] = values[free]
    return out


def _well_bump_start(prob: ProblemSpec) -> Field:
    bump = bump_field(prob.window, prob.well, smoothing_time=1.0)
    return Field(prob.window, _mask_to_free(bump.values, prob))


def _random_positive_start(prob: ProblemSpec, rng: np.random.Generator) -> Field:
    values = rng.random(prob.window.count)
    return Field(prob.window, _mask_to_free(values, prob))


def _descend(prob: ProblemSpec, cfg: SolverConfig, u0: Field) -> SolveResult:
    """Projected descent from one start; raises on projection or convergence failure."""
    _, u = _var.nehari_project(u0, prob)
    two_p = 2.0 * prob.p
    history = []
    for it in range(1, cfg.max_iterations + 1):
        a = _var.norm_sq(u, prob)
        d_pair = _var.nonlocal_term(u, prob)
        level = 0.5 * a - d_pair / two_p
        defect = a - d_pair
        grad = _var.euler_lagrange_residual(u, prob)
        direction = cg_solve(grad, prob, cfg)
        slope = float(grad.values @ direction.values)
        dual = math.sqrt(max(slope, 0.0))
        if dual <= cfg.residual_tol * math.sqrt(a) and abs(defect) <= cfg.nehari_tol * a:
            history.append(IterationRecord(it, level, a, defect, dual, 0.0))
            return SolveResult(
                u=u,
                level=level,
                dual_residual=dual,
                nehari_defect=defect,
                iterations=it,
                converged=True,
                history=tuple(history),
                start_labels=(),
                start_levels=(),
                start_index=0,
            )
        step = 1.0
        accepted = None
        # near the minimizer the required decrease c*s*slope drops below the
        # round-off of the energy itself; the allowance keeps the line search
        # from rejecting the (locally contractive) full step on pure noise
        noise = 64.0 * np.finfo(float).eps * (1.0 + abs(level))
        while step >= _MIN_STEP:
            trial = Field(prob.window, u.values - step * direction.values)
            try:
                _, candidate = _var.nehari_project(trial, prob)
            except NoProjectionError:
                step *= cfg.shrink
                continue
            if _var.energy(candidate, prob) <= level - cfg.sufficient_decrease * step * slope + noise:
                accepted = candidate
                break
            step *= cfg.shrink
        if accepted is None:
            history.append(IterationRecord(it, level, a, defect, dual, 0.0))
            raise ConvergenceError(
                f"line search stagnated at iteration {it} "
                f"(relative dual residual {dual / math.sqrt(a):.3e})",
                residual=dual / math.sqrt(a),
                history=tuple(history),
            )
        history.append(IterationRecord(it, level, a, defect, dual, step))
        u = accepted
    raise ConvergenceError(
        f"no convergence within {cfg.max_iterations} iterations",
        residual=history[-1].dual_residual / math.sqrt(history[-1].norm_sq),
        history=tuple(history),
    )


def ground_state(
    prob: ProblemSpec,
    cfg: SolverConfig,
    extra_starts: Sequence[Field] = (),
) -> SolveResult:
    """Least-level minimizer over the configured starts.

    Runs projected descent from the primary initializer, ``cfg.restarts``
    random positive fields, and any extra starts, and returns the converged
    run with the least level; per-start levels are recorded in the result.
    """
    rng = np.random.default_rng(cfg.seed)
    starts = []
    if cfg.initializer == INIT_SUPPLIED:
        first = cfg.initial_field
        _var._check_window(first, prob)
        starts.append(("supplied", Field(prob.window, _mask_to_free(first.values, prob))))
    elif cfg.initializer == INIT_RANDOM_POSITIVE:
        starts.append(("random-positive-0", _random_positive_start(prob, rng)))
    else:
        starts.append((INIT_WELL_BUMP, _well_bump_start(prob)))
    for k in range(cfg.restarts):
        starts.append((f"random-positive-{k + 1}", _random_positive_start(prob, rng)))
    for k, extra in enumerate(extra_starts):
        _var._check_window(extra, prob)
        starts.append((f"extra-{k}", Field(prob.window, _mask_to_free(extra.values, prob))))

    outcomes = []
    projection_failures = []
    convergence_failures = []
    for label, u0 in starts:
        try:
            outcomes.append((label, _descend(prob, cfg, u0)))
        except NoProjectionError as exc:
            projection_failures.append((label, exc))
        except ConvergenceError as exc:
            convergence_failures.append((label, exc))
    if not outcomes:
        if not convergence_failures:
            raise InitializerError("every start has vanishing pair energy; no admissible initial field")
        label, exc = convergence_failures[-1]
        raise ConvergenceError(
            f"no start converged ({len(convergence_failures)} stalled, "
            f"{len(projection_failures)} inadmissible); last failure [{label}]: {exc}",
            residual=exc.residual,
            history=exc.history,
        )

    labels = tuple(label for label, _ in outcomes)
    levels = tuple(res.level for _, res in outcomes)
    best_pos = min(range(len(outcomes)), key=lambda i: levels[i])
    best = outcomes[best_pos][1]
    return replace(best, start_labels=labels, start_levels=levels, start_index=best_pos)


def sign_aligned_distance(u: Field, ref: Field) -> float:
    """W^{2,2} distance to ref, minimized over the sign of u."""
    direct = w22_norm_sq(u - ref)
    flipped = w22_norm_sq(Field(u.window, -u.values) - ref)
    return math.sqrt(min(direct, flipped))


@dataclass(frozen=True)
class SweepRow:
    lam: float
    converged: bool
    level: Optional[float]
    w22_distance: Optional[float]
    outside_mass: Optional[float]
    iterations: Optional[int]
    dual_residual: Optional[float]


@dataclass(frozen=True)
class SweepVerdicts:
    """Monotonicity and limit checks over the converged sweep rows."""

    level_nondecreasing: Optional[bool]
    level_at_most_well: Optional[bool]
    distance_decreasing: Optional[bool]
    outside_mass_decreasing: Optional[bool]
    final_level_rel_gap: Optional[float]
    final_distance_rel: Optional[float]


@dataclass(frozen=True)
class ConvergenceReport:
    lambda_grid: Tuple[float, ...]
    rows: Tuple[SweepRow, ...]
    well_level: float
    well_result: SolveResult
    verdicts: SweepVerdicts
    all_converged: bool


def _sweep_verdicts(rows: Sequence[SweepRow], well_level: float, ref_norm: float) -> SweepVerdicts:
    done = [r for r in rows if r.converged]
    if not done:
        return SweepVerdicts(None, None, None, None, None, None)
    levels = [r.level for r in done]
    dists = [r.w22_distance for r in done]
    masses = [r.outside_mass for r in done]
    pairs = list(zip(levels, levels[1:]))
    return SweepVerdicts(
        level_nondecreasing=all(b >= a - 1.0e-8 for a, b in pairs),
        level_at_most_well=all(lvl <= well_level for lvl in levels),
        distance_decreasing=all(b < a for a, b in zip(dists, dists[1:])),
        outside_mass_decreasing=all(b < a for a, b in zip(masses, masses[1:])),
        final_level_rel_gap=abs(levels[-1] - well_level) / abs(well_level),
        final_distance_rel=dists[-1] / ref_norm,
    )


def lambda_sweep(base: ProblemSpec, lambda_grid: Sequence[float], cfg: SolverConfig) -> ConvergenceReport:
    """Solve the well problem once, then the weighted problem over the grid.

    Each coupling is solved with the well solution and the previous solution
    as extra starts, which warm-starts the descent and keeps the reported
    levels at or below the well level.  A failed row is marked and the sweep
    continues.
    """
    grid = tuple(float(x) for x in lambda_grid)
    if not grid:
        raise InputError("coupling grid is empty")
    if any(x <= 0.0 for x in grid):
        raise InputError("couplings must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("coupling grid must be strictly increasing")

    well_prob = replace(base, mode=MODE_DIRICHLET, lam=None)
    well_result = ground_state(well_prob, cfg)
    u_ref = well_result.u
    ref_norm = math.sqrt(w22_norm_sq(u_ref))

    rows = []
    previous = None
    for lam in grid:
        prob = replace(base, mode=MODE_FULL, lam=lam)
        extras = (u_ref,) if previous is None else (u_ref, previous)
        try:
            res = ground_state(prob, cfg, extra_starts=extras)
        except (ConvergenceError, InitializerError):
            rows.append(SweepRow(lam, False, None, None, None, None, None))
            continue
        previous = res.u
        a_vals = prob.potential.values_on(prob.window)
        outside = float((a_vals * res.u.values) @ res.u.values)
        rows.append(
            SweepRow(
                lam=lam,
                converged=True,
                level=res.level,
                w22_distance=sign_aligned_distance(res.u, u_ref),
                outside_mass=outside,
                iterations=res.iterations,
                dual_residual=res.dual_residual,
            )
        )
    rows = tuple(rows)
    return ConvergenceReport(
        lambda_grid=grid,
        rows=rows,
        well_level=well_result.level,
        well_result=well_result,
        verdicts=_sweep_verdicts(rows, well_result.level, ref_norm),
        all_converged=all(r.converged for r in rows),
    )


@dataclass(frozen=True)
class SequenceDiagnostics:
    """Identity drift and norm-limit check along the iteration history."""

    level: float
    identity_drift: float
    norm_limit_rel_error: float


def palais_smale_monitor(result: SolveResult, prob: ProblemSpec) -> SequenceDiagnostics:
    """Check J - (1/(2p)) (J'(u), u) = (1/2 - 1/(2p)) ||u||^2 along the history.

    The identity is algebraic, so its drift measures only round-off in the
    recorded values; at convergence the squared norm must match
    2 p m / (p - 1).
    """
    if not result.history:
        raise InputError("empty iteration history")
    p = prob.p
    factor = 0.5 - 1.0 / (2.0 * p)
    drift = 0.0
    for rec in result.history:
        lhs = rec.energy - rec.nehari_defect / (2.0 * p)
        rhs = factor * rec.norm_sq
        drift = max(drift, abs(lhs - rhs) / max(1.0, abs(rhs)))
    final = result.history[-1]
    target = 2.0 * p * result.level / (p - 1.0)
    return SequenceDiagnostics(
        level=result.level,
        identity_drift=drift,
        norm_limit_rel_error=abs(final.norm_sq - target) / abs(target),
    )


@dataclass(frozen=True)
class SplittingRow:
    shift: Tuple[int, ...]
    distance: int
    norm_defect: float
    nonlocal_defect: float


def _shape_reach(window, coords: np.ndarray) -> int:
    if coords.size == 0:
        return 0
    if window.shape == BALL:
        return int(np.abs(coords).sum(axis=1).max())
    return int(np.abs(coords).max())


def brezis_lieb_probe(
    u: Field,
    v: Field,
    shifts: Sequence[Sequence[int]],
    prob: ProblemSpec,
) -> Tuple[SplittingRow, ...]:
    """Splitting defects of norms and pair energy under translations of v.

    For each shift z the probe forms u_z = u + v(. - z) and tabulates the
    pointwise-summed defect of the squared W^{2,2} norm (exactly zero once
    the difference stencils of u and the moved v are disjoint) and the pair
    energy defect |D(u_z) - D(u_z - u) - D(u)|, which decays like the kernel
    as the shift grows.
    """
    _var._check_window(u, prob)
    _var._check_window(v, prob)
    v_support = v.support().as_array().reshape(-1, prob.dim)
    v_reach = _shape_reach(prob.window, v_support)
    d_u = _var.nonlocal_term(u, prob)
    lap_u = laplacian(u)
    gam_u = gradient_form(u, u)
    rows = []
    for shift in shifts:
        offset = np.asarray(shift, dtype=np.int64)
        if offset.shape != (prob.dim,):
            raise InputError(f"shift {shift!r} must have {prob.dim} coordinates")
        moved_support = v_support + offset
        margin = prob.window.radius - _shape_reach(prob.window, moved_support)
        if margin < v_reach:
            raise InputError(
                f"shift {tuple(int(c) for c in offset)} leaves margin {margin}, "
                f"need at least the support reach {v_reach}"
            )
        vz = v.translated(offset)
        combined = u + vz
        d_vz = _var.nonlocal_term(vz, prob)
        d_comb = _var.nonlocal_term(combined, prob)
        lap_c, lap_v = laplacian(combined), laplacian(vz)
        gam_c, gam_v = gradient_form(combined, combined), gradient_form(vz, vz)
        norm_defect = float(
            (lap_c.values**2 - lap_v.values**2 - lap_u.values**2).sum()
            + (gam_c.values - gam_v.values - gam_u.values).sum()
            + (combined.values**2 - vz.values**2 - u.values**2).sum()
        )
        rows.append(
            SplittingRow(
                shift=tuple(int(c) for c in offset),
                distance=int(np.abs(offset).sum()),
                norm_defect=norm_defect,
                nonlocal_defect=abs(d_comb - d_vz - d_u),
            )
        )
    return tuple(rows)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def result_to_dict(result: SolveResult) -> dict:
    return {
        "level": result.level,
        "dual_residual": result.dual_residual,
        "nehari_defect": result.nehari_defect,
        "iterations": result.iterations,
        "converged": result.converged,
        "start_labels": list(result.start_labels),
        "start_levels": list(result.start_levels),
        "start_index": result.start_index,
        "history": [
            {
                "iteration": rec.iteration,
                "energy": rec.energy,
                "norm_sq": rec.norm_sq,
                "nehari_defect": rec.nehari_defect,
                "dual_residual": rec.dual_residual,
                "step": rec.step,
            }
            for rec in result.history
        ],
    }


def report_to_dict(report: ConvergenceReport) -> dict:
    return {
        "lambda_grid": list(report.lambda_grid),
        "well_level": report.well_level,
        "all_converged": report.all_converged,
        "rows": [
            {
                "lambda": row.lam,
                "converged": row.converged,
                "m_lambda": row.level,
                "w22_dist": row.w22_distance,
                "outside_mass": row.outside_mass,
                "iterations": row.iterations,
                "residual": row.dual_residual,
            }
            for row in report.rows
        ],
        "verdicts": {
            "level_nondecreasing": report.verdicts.level_nondecreasing,
            "level_at_most_well": report.verdicts.level_at_most_well,
            "distance_decreasing": report.verdicts.distance_decreasing,
            "outside_mass_decreasing": report.verdicts.outside_mass_decreasing,
            "final_level_rel_gap": report.verdicts.final_level_rel_gap,
            "final_distance_rel": report.verdicts.final_distance_rel,
        },
        "well_result": result_to_dict(report.well_result),
    }


def _csv_cell(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def sweep_csv(report: ConvergenceReport) -> str:
    """Flat table of the sweep with a footer recording the well level."""
    lines = ["lambda,m_lambda,w22_dist,outside_mass,iterations,residual"]
    for row in report.rows:
        lines.append(
            ",".join(
                _csv_cell(cell)
                for cell in (
                    row.lam,
                    row.level,
                    row.w22_distance,
                    row.outside_mass,
                    row.iterations,
                    row.dual_residual,
                )
            )
        )
    lines.append(f"# m_omega = {report.well_level!r}")
    return "\n".join(lines) + "\n"
