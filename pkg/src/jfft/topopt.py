"""Phase-field regularized inverse homogenization.

Finds a pixel density that matches target homogenized stresses under the
three canonical macroscopic loads, regularized by a phase-field term that
drives the layout toward two phases with diffuse interfaces.  The driver is
a plain limited-memory BFGS with backtracking line search; every objective
evaluation solves the three cell problems from the zero initial guess and
records the inner PCG iteration counts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import MANDEL_DIM, Grid, ScalarField, make_grid
from .material import MaterialModel, isotropic_material
from .operators import make_operator, assemble_rhs, total_strain
from .preconditioners import GreenOperator, assemble_green, build_preconditioner
from .solver import (CONVERGED, DEFAULT_ETA_CG, DEFAULT_LAMBDA0,
                     DEFAULT_MAX_ITER, DEFAULT_MU0, SolverAbortError, pcg)

log = logging.getLogger(__name__)

#: Densities below this are lifted before solving so the operator stays
#: positive semi-definite with a usable right-hand side.
DENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class TopOptConfig:
    """Inputs of one optimization run; see the README for the JSON keys."""

    n: int
    eta_pf: float = 0.01
    k_target: float = 0.025
    mu_target: float = 0.15
    lambda0: float = DEFAULT_LAMBDA0
    mu0: float = DEFAULT_MU0
    lbfgs_memory: int = 10
    max_outer: int = 200
    objective_tol: float = 0.0
    seed: int = 0
    preconditioner: str = "green-jacobi"
    measure: tuple[str, ...] = ()
    eta_cg: float = DEFAULT_ETA_CG
    max_iter: int = DEFAULT_MAX_ITER
    lengths: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.eta_pf <= 0.0:
            raise ValueError("interface parameter must be positive")
        if self.lbfgs_memory < 1:
            raise ValueError("L-BFGS memory must be at least 1")


@dataclass
class OptHistory:
    """Per-outer-iteration record; index 0 is the initial point."""

    objective: list[float] = field(default_factory=list)
    stress_part: list[float] = field(default_factory=list)
    phase_part: list[float] = field(default_factory=list)
    inner_iterations: list[dict[str, list[int]]] = field(default_factory=list)
    status: str = ""


def target_stiffness(k_target: float, mu_target: float) -> MaterialModel:
    """Target Mandel stiffness from bulk and shear moduli (3D convention)."""
    return isotropic_material(k_target - 2.0 * mu_target / 3.0, mu_target)


def target_stress(k_target: float, mu_target: float, eps_bar) -> np.ndarray:
    """Target homogenized stress for one macroscopic load."""
    return target_stiffness(k_target, mu_target).stiffness @ np.asarray(eps_bar)


@dataclass(frozen=True)
class TopOptProblem:
    cfg: TopOptConfig
    grid: Grid
    material: MaterialModel
    green: GreenOperator
    targets: np.ndarray  # (3, 3): target stress per canonical load


def make_problem(cfg: TopOptConfig) -> TopOptProblem:
    grid = make_grid(cfg.n, cfg.lengths)
    material = isotropic_material(cfg.lambda0, cfg.mu0)
    green = assemble_green(grid, material)
    c_target = target_stiffness(cfg.k_target, cfg.mu_target).stiffness
    targets = np.stack([c_target @ e for e in np.eye(MANDEL_DIM)])
    return TopOptProblem(cfg, grid, material, green, targets)


def _solve_load_cases(problem: TopOptProblem, rho: ScalarField,
                      preconditioner: str):
    """Equilibrate the three canonical loads from the zero initial guess.

    Returns the per-load total strains (3, 3, 2, n, n), the homogenized
    stress matrix (3, 3), and PCG iteration counts.  The stresses come from
    the energy bilinear form of the load strains, which agrees with the
    plain stress average at exact solutions but is quadratically (instead
    of linearly) accurate in the iterative solution error, so the line
    search of the optimizer is not poisoned by solver noise.
    """
    cfg = problem.cfg
    op = make_operator(rho, problem.material)
    precond = build_preconditioner(preconditioner, op, problem.green)
    n = problem.grid.n
    strains = np.empty((MANDEL_DIM, MANDEL_DIM, 2, n, n))
    counts = []
    for gamma, load in enumerate(np.eye(MANDEL_DIM)):
        rhs = assemble_rhs(op, load)
        report = pcg(op, rhs, precond, problem.green,
                     eta=cfg.eta_cg, max_iter=cfg.max_iter)
        if (report.terminated != CONVERGED
                and report.residual_history[-1] > 1e3 * cfg.eta_cg):
            raise SolverAbortError(
                f"load case {gamma}: iteration cap {cfg.max_iter} reached with "
                f"squared Green norm {report.residual_history[-1]:.3e}")
        strains[gamma] = total_strain(op, report.solution, load).values
        counts.append(report.iterations)
    sigma_bar = _stress_matrix(problem, strains, rho.values)
    return strains, sigma_bar, counts


def _strain_pairings(problem: TopOptProblem, strains: np.ndarray) -> np.ndarray:
    """Per-pixel energy pairings ``sum_t eps_c^T C0 eps_g`` of the loads."""
    c_eps = np.einsum("mk,gktij->gmtij", problem.material.stiffness, strains)
    return np.einsum("cmtij,gmtij->gcij", strains, c_eps)


def _stress_matrix(problem: TopOptProblem, strains: np.ndarray,
                   rho: np.ndarray) -> np.ndarray:
    weight = problem.grid.pixel_size[0] * problem.grid.pixel_size[1] / 2.0
    pairings = _strain_pairings(problem, strains)
    return (weight / problem.grid.cell_volume) * np.einsum(
        "gcij,ij->gc", pairings, rho)


def _phase_field_parts(cfg: TopOptConfig, grid: Grid, rho: np.ndarray):
    """Phase-field energy and its exact discrete gradient.

    The gradient-penalty term uses periodic forward differences on the
    pixel lattice; integrals are pixel sums times pixel area.
    """
    dx1, dx2 = grid.pixel_size
    area = dx1 * dx2
    d1 = (np.roll(rho, -1, axis=0) - rho) / dx1
    d2 = (np.roll(rho, -1, axis=1) - rho) / dx2
    f_grad = cfg.eta_pf * area * float((d1 ** 2 + d2 ** 2).sum())
    well = rho ** 2 * (1.0 - rho) ** 2
    f_well = area / cfg.eta_pf * float(well.sum())
    g_grad = -2.0 * cfg.eta_pf * area * (
        (d1 - np.roll(d1, 1, axis=0)) / dx1 + (d2 - np.roll(d2, 1, axis=1)) / dx2)
    g_well = (area / cfg.eta_pf) * 2.0 * rho * (1.0 - rho) * (1.0 - 2.0 * rho)
    return f_grad + f_well, g_grad + g_well


@dataclass
class Evaluation:
    value: float
    stress_part: float
    phase_part: float
    gradient: np.ndarray
    inner_counts: list[int]


def _clamped_density(problem: TopOptProblem, rho: np.ndarray) -> ScalarField:
    clamped = int((rho < DENSITY_FLOOR).sum())
    if clamped:
        log.info("lifting %d pixels to the density floor %.0e",
                 clamped, DENSITY_FLOOR)
    return ScalarField(problem.grid,
                       np.maximum(rho, DENSITY_FLOOR), site="pixel")


def _stress_gradient(problem: TopOptProblem, strains: np.ndarray,
                     mismatch: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Exact derivative of the stress mismatch part at one density iterate.

    The adjoint of each load case is a combination of the load solutions
    themselves (the loads span the Mandel basis), which folds the explicit
    and implicit terms into one pairing of strains.  Pixels sitting below
    the solve floor contribute nothing: the evaluated objective is constant
    in them.
    """
    weight = problem.grid.pixel_size[0] * problem.grid.pixel_size[1] / 2.0
    scale = 2.0 * weight / problem.grid.cell_volume
    pairings = _strain_pairings(problem, strains)
    grad = scale * np.einsum("gc,gcij->ij", mismatch, pairings)
    grad[rho < DENSITY_FLOOR] = 0.0
    return grad


def evaluate(problem: TopOptProblem, rho: np.ndarray,
             preconditioner: str | None = None) -> Evaluation:
    """Objective value, parts, and gradient at one density iterate.

    The stress-mismatch gradient combines the explicit per-pixel term with
    the implicit one through the displacement solutions.  Because the loads
    are the canonical Mandel basis, each adjoint state is a linear
    combination of the already-computed load solutions, so no extra solves
    are needed.
    """
    cfg = problem.cfg
    kind = preconditioner or cfg.preconditioner
    rho_solve = _clamped_density(problem, rho)
    strains, sigma_bar, counts = _solve_load_cases(problem, rho_solve, kind)

    mismatch = sigma_bar - problem.targets
    f_stress = float((mismatch ** 2).sum())
    g_stress = _stress_gradient(problem, strains, mismatch, rho)
    f_phase, g_phase = _phase_field_parts(cfg, problem.grid, rho)
    return Evaluation(f_stress + f_phase, f_stress, f_phase,
                      g_stress + g_phase, counts)


def objective(problem: TopOptProblem, rho: ScalarField):
    """Objective value with its stress-mismatch / phase-field breakdown."""
    ev = evaluate(problem, rho.values)
    return ev.value, {"stress": ev.stress_part, "phase_field": ev.phase_part}


def gradient(problem: TopOptProblem, rho: ScalarField) -> np.ndarray:
    """Per-pixel derivative of the objective."""
    return evaluate(problem, rho.values).gradient


def _measured_counts(problem: TopOptProblem, rho: np.ndarray,
                     kinds) -> dict[str, list[int]]:
    rho_solve = _clamped_density(problem, rho)
    out = {}
    for kind in kinds:
        out[kind] = _solve_load_cases(problem, rho_solve, kind)[2]
    return out


def _two_loop_direction(grad: np.ndarray, s_hist, y_hist) -> np.ndarray:
    """Standard L-BFGS two-loop recursion for the descent direction."""
    q = grad.copy()
    alphas = []
    for s, y, rho_sy in reversed(list(zip(s_hist, y_hist, _rhos(s_hist, y_hist)))):
        a = rho_sy * np.vdot(s, q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.vdot(s, y) / np.vdot(y, y)
    for (s, y, rho_sy), a in zip(zip(s_hist, y_hist, _rhos(s_hist, y_hist)),
                                 reversed(alphas)):
        b = rho_sy * np.vdot(y, q)
        q += (a - b) * s
    return -q


def _rhos(s_hist, y_hist):
    return [1.0 / np.vdot(s, y) for s, y in zip(s_hist, y_hist)]


_ARMIJO_C1 = 1e-4
_MIN_STEP = 1e-14


def _backtrack(problem: TopOptProblem, x: np.ndarray, ev: Evaluation,
               direction: np.ndarray, slope: float, first: bool):
    """Halving Armijo line search; returns (trial point, evaluation) or
    (None, None) when no acceptable step remains."""
    step = 1.0 / max(1.0, float(np.linalg.norm(ev.gradient))) if first else 1.0
    while step >= _MIN_STEP:
        trial = x + step * direction
        candidate = evaluate(problem, trial)
        if candidate.value <= ev.value + _ARMIJO_C1 * step * slope:
            return trial, candidate
        step *= 0.5
    return None, None


def lbfgs_minimize(cfg: TopOptConfig, callback=None,
                   rho0: ScalarField | None = None):
    """Run the optimization from seeded uniform-noise initial densities.

    Records objective parts and per-load inner PCG counts for the driving
    preconditioner and every extra one in ``cfg.measure`` at each accepted
    iterate.  Returns the final density and the history; on a failed line
    search the best-so-far density is returned with a matching status.
    ``rho0`` overrides the random start, e.g. to continue a previous run.
    """
    problem = make_problem(cfg)
    if rho0 is not None:
        if rho0.grid.n != cfg.n:
            raise ValueError("initial density lives on the wrong grid")
        x = rho0.values.copy()
    else:
        rng = np.random.default_rng(cfg.seed)
        x = rng.uniform(0.0, 1.0, size=(cfg.n, cfg.n))

    extra = tuple(k for k in cfg.measure if k != cfg.preconditioner)
    history = OptHistory()

    def record(ev: Evaluation, point: np.ndarray):
        counts = {cfg.preconditioner: ev.inner_counts}
        if extra:
            counts.update(_measured_counts(problem, point, extra))
        history.objective.append(ev.value)
        history.stress_part.append(ev.stress_part)
        history.phase_part.append(ev.phase_part)
        history.inner_iterations.append(counts)

    ev = evaluate(problem, x)
    record(ev, x)
    if callback is not None:
        callback(0, ScalarField(problem.grid, x.copy(), site="pixel"))

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    history.status = "max-outer"
    for outer in range(1, cfg.max_outer + 1):
        direction = _two_loop_direction(ev.gradient, s_hist, y_hist)
        slope = float(np.vdot(direction, ev.gradient))
        if slope >= 0.0:
            direction = -ev.gradient
            slope = -float(np.vdot(ev.gradient, ev.gradient))
        if slope == 0.0:
            history.status = "stationary"
            break

        trial, ev_new = _backtrack(problem, x, ev, direction, slope,
                                   first=not s_hist)
        if ev_new is None and s_hist:
            # quasi-Newton direction unusable; drop the memory and retry
            # along steepest descent before giving up
            s_hist.clear()
            y_hist.clear()
            direction = -ev.gradient
            slope = float(np.vdot(direction, ev.gradient))
            trial, ev_new = _backtrack(problem, x, ev, direction, slope,
                                       first=True)
        if ev_new is None:
            history.status = "line-search-failure"
            break

        s = trial - x
        y = ev_new.gradient - ev.gradient
        sy = float(np.vdot(s, y))
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > cfg.lbfgs_memory:
                s_hist.pop(0)
                y_hist.pop(0)

        decrease = ev.value - ev_new.value
        x = trial
        ev = ev_new
        record(ev, x)
        if callback is not None:
            callback(outer, ScalarField(problem.grid, x.copy(), site="pixel"))
        if decrease <= 0.0:
            # Armijo accepted a step whose decrease underflowed: stuck
            history.status = "stationary"
            break
        if cfg.objective_tol > 0.0 and decrease <= cfg.objective_tol * max(
                1.0, abs(ev.value)):
            history.status = "converged"
            break

    return ScalarField(problem.grid, x, site="pixel"), history
