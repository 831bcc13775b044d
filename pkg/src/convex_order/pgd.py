"""Projected gradient descent on the cone of matrices dominating a bound.

Computes ``argmin bw2(cov_nu, S)`` over ``{S : S >= cov_mu}`` with the two
Frobenius cone projections, and recovers the dominated-side projection from
the dominating one.  Iterations, initialization and the cone projection
follow the positive-part construction; the descent is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .linalg import (
    EIG_TOL,
    _rebuild,
    default_rank_tol,
    positive_part,
    psd_eigen,
    sym,
    sym_eigen,
)


@dataclass(frozen=True)
class PgdConfig:
    """Knobs for the projected gradient descent.

    ``step_size=None`` picks a crude curvature-based default from the
    spectra of the two inputs.  ``step_schedule`` may supply a
    non-increasing sequence ``i -> eta_i`` (1-based) overriding the
    constant step.  Backtracking halves the step within an iteration
    whenever the objective would increase.
    """

    step_size: float | None = None
    step_schedule: Callable[[int], float] | None = None
    max_iter: int = 10_000
    residual_tol: float = 1e-8  # scaled by (1 + ||cov_nu||_F)
    decrease_tol: float = 0.0  # extra stop: relative objective decrease below this
    reg_factor: float = 1e-10  # eps_reg = reg_factor * tr(cov_nu)
    max_backtracks: int = 60


@dataclass
class PgdTrace:
    """Per accepted iteration: objective, gradient norm, cone violation,
    step size actually taken."""

    objective: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    cone_violation: list[float] = field(default_factory=list)
    step_size: list[float] = field(default_factory=list)


class PgdOutcome(NamedTuple):
    covariance: np.ndarray
    objective: float
    iterations: int
    residual: float
    converged: bool
    stop_reason: str


def frobenius_project_above(matrix: np.ndarray, lower: np.ndarray) -> np.ndarray:
    """Frobenius projection of ``matrix`` onto ``{S : S >= lower}``.

    ``matrix + (lower - matrix)^+``; always PSD when ``lower`` is.
    """
    m = sym(matrix)
    return sym(m + positive_part(sym(lower) - m))


def frobenius_project_below(
    matrix: np.ndarray, upper: np.ndarray
) -> tuple[np.ndarray, bool]:
    """Frobenius projection of ``matrix`` onto ``{S : S <= upper}``.

    ``matrix - (matrix - upper)^+``.  The result can leave the PSD cone, so
    it is returned together with a flag telling whether it stayed inside
    (up to the usual eigenvalue slack).
    """
    m = sym(matrix)
    projected = sym(m - positive_part(m - sym(upper)))
    vals, _ = sym_eigen(projected)
    scale = 1.0 + (float(np.abs(vals).max()) if vals.size else 0.0)
    return projected, bool(vals[-1] >= -EIG_TOL * scale)


class _Objective:
    """bw2(cov_nu, .) with the decomposition of cov_nu precomputed."""

    def __init__(self, cov_nu: np.ndarray):
        self.cov_nu = sym(cov_nu)
        vals, vecs = psd_eigen(self.cov_nu)
        if vals[-1] <= default_rank_tol(vals):
            raise ValueError(
                "pgd_project_above needs a positive definite target; "
                "route singular targets through the rank reduction first"
            )
        self.trace_nu = float(np.trace(self.cov_nu))
        self.half = _rebuild(np.sqrt(vals), vecs)
        self.eye = np.eye(self.cov_nu.shape[0])

    def value(self, s: np.ndarray) -> float:
        inner_vals, _ = psd_eigen(sym(self.half @ s @ self.half))
        return float(
            self.trace_nu + np.trace(s) - 2.0 * np.sum(np.sqrt(inner_vals))
        )

    def gradient(self, s: np.ndarray) -> np.ndarray:
        inner_vals, inner_vecs = psd_eigen(sym(self.half @ s @ self.half))
        floor = default_rank_tol(inner_vals)
        safe = np.maximum(inner_vals, max(floor, np.finfo(float).tiny))
        inv_half = _rebuild(1.0 / np.sqrt(safe), inner_vecs)
        return sym(self.eye - self.half @ inv_half @ self.half)


def default_step_size(cov_nu: np.ndarray, cov_mu: np.ndarray, reg: float) -> float:
    """Crude curvature bound: the gradient's inverse square root is
    controlled by the spectra entering it.

    The lower-bound spectrum is floored by the target's smallest eigenvalue:
    the initializer dominates the target, so iterates never start below it,
    and without the floor a singular ``cov_mu`` would collapse the step to
    the regularization scale and stall the descent.  Backtracking still
    halves the step whenever the objective would increase.
    """
    nu_vals, _ = psd_eigen(sym(cov_nu))
    mu_vals, _ = psd_eigen(sym(cov_mu))
    lo_nu = float(nu_vals[-1])
    hi_nu = float(nu_vals[0])
    lo = max(float(mu_vals[-1]), lo_nu) + reg
    return 0.5 * np.sqrt(lo_nu) / (1.0 + np.sqrt(hi_nu) / np.sqrt(lo))


def pgd_project_above(
    cov_nu: np.ndarray,
    cov_mu: np.ndarray,
    config: PgdConfig | None = None,
) -> tuple[PgdOutcome, PgdTrace]:
    """Minimize ``bw2(cov_nu, S)`` over ``{S >= cov_mu}`` by projected descent.

    ``cov_nu`` must be positive definite (``cov_mu`` may be singular: the
    initializer dominates ``cov_nu`` and near-singular iterates are
    regularized before the gradient evaluation).  Stops when the
    projected-step residual falls below ``residual_tol * (1 + ||cov_nu||_F)``
    or after ``max_iter`` iterations, whichever comes first.
    """
    cfg = config or PgdConfig()
    nu = sym(cov_nu)
    mu = sym(cov_mu)
    objective = _Objective(nu)
    reg = cfg.reg_factor * float(np.trace(nu))
    if cfg.step_schedule is not None:
        schedule = cfg.step_schedule
    else:
        eta0 = cfg.step_size if cfg.step_size is not None else default_step_size(
            nu, mu, reg
        )
        schedule = lambda i: eta0  # noqa: E731

    s = frobenius_project_above(nu, mu)
    f = objective.value(s)
    res_scale = 1.0 + float(np.linalg.norm(nu))
    trace = PgdTrace()
    residual = np.inf
    converged = False
    reason = "max_iter"
    iterations = 0

    for i in range(1, cfg.max_iter + 1):
        iterations = i
        s_eval = s
        min_eig = float(np.linalg.eigvalsh(s)[0])
        if min_eig < reg:
            s_eval = sym(s + reg * np.eye(s.shape[0]))
        grad = objective.gradient(s_eval)
        grad_norm = float(np.linalg.norm(grad))

        eta = float(schedule(i))
        candidate = frobenius_project_above(s - eta * grad, mu)
        residual = float(np.linalg.norm(s - candidate))
        if residual <= cfg.residual_tol * res_scale:
            converged = True
            reason = "residual"
            break

        f_cand = objective.value(candidate)
        accepted = False
        slack = 1e-12 * (1.0 + abs(f))
        for _ in range(cfg.max_backtracks):
            if f_cand <= f + slack:
                accepted = True
                break
            eta *= 0.5
            candidate = frobenius_project_above(s - eta * grad, mu)
            f_cand = objective.value(candidate)
        if not accepted:
            reason = "stalled"
            break

        decrease = f - f_cand
        s = candidate
        f = f_cand
        viol = float(np.linalg.eigvalsh(sym(s - mu))[0])
        trace.objective.append(f_cand)
        trace.grad_norm.append(grad_norm)
        trace.cone_violation.append(max(0.0, -viol))
        trace.step_size.append(eta)
        if cfg.decrease_tol > 0.0 and decrease <= cfg.decrease_tol * (1.0 + abs(f)):
            reason = "decrease"
            break

    outcome = PgdOutcome(
        covariance=s,
        objective=f,
        iterations=iterations,
        residual=residual,
        converged=converged,
        stop_reason=reason,
    )
    return outcome, trace
