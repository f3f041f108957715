"""Constrained entropic updating and its named special cases.

The core operation minimizes a weighted sum of deviations from prior
states plus a constraint functional, over a model of states:

    arginf over q of  Σ_k w_k · D-term(ω_k, q)  +  F(q)

The optimization variable sits in the deviation's second slot by default
(``slot="second"``); Bayes, maximum entropy, and maximum likelihood use the
first slot, where the minimizer is the familiar exponential tilt of the
prior.  Outcomes follow a three-way taxonomy: ``solved`` (minimizer found,
with dual multipliers and a KKT residual), ``overdetermined`` (no feasible
state, or no finite objective value on the feasible set), and
``undetermined`` (several minimizers, all returned as witnesses).

Solver dispatch:

* KL-type deviation, first slot, affine constraints: Newton on the strictly
  convex dual, with Armijo backtracking.
* squared-norm Bregman deviation, affine constraints: cyclic projections
  with Dykstra correction vectors onto the hyperplanes and the cone.
* everything else: damped projected gradient descent (Barzilai–Borwein
  steps, Armijo safeguard, Dykstra projection onto the feasible set).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import nnls

from .algebra import FiniteBooleanAlgebra, JointAlgebra, indicator
from .divergence import FIRST, SECOND, Divergence, deviation, gradient_in
from .errors import AlgebraMismatch, DomainError, InternalError, NoConvergence
from .evidence import (
    ConstraintFunctional,
    FiniteSet,
    MomentEquality,
    Normalization,
    PriorWeighting,
    SoftPenalty,
    bayes_constraints,
)
from .state import (
    CONE,
    EXPFAM,
    SIMPLEX,
    InformationModel,
    InformationState,
    cone_model,
    evaluate,
    param_to_state,
    model_contains,
)

SOLVED = "solved"
OVERDETERMINED = "overdetermined"
UNDETERMINED = "undetermined"

WELL_POSED = "well_posed"


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and caps shared by every solver.

    ``tol`` is the dual gradient / KKT target, ``feas_tol`` decides
    feasibility, ``tie_tol`` and ``witness_gap`` govern when two minimizers
    count as distinct, and ``slot`` picks which deviation argument is
    optimized.
    """

    tol: float = 1e-10
    feas_tol: float = 1e-8
    max_iter: int = 200
    tie_tol: float = 1e-9
    witness_gap: float = 1e-4
    slot: str = SECOND
    seed: int = 0

    def __post_init__(self):
        if self.slot not in (FIRST, SECOND):
            raise DomainError("slot must be 'first' or 'second'")


@dataclass(frozen=True)
class InferenceProblem:
    """A deviation, a prior weighting, constraints, a current state, a model."""

    divergence: Divergence
    weighting: PriorWeighting
    constraints: ConstraintFunctional
    state: InformationState
    model: InformationModel | None = None
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        model = self.model or cone_model(self.state.algebra)
        object.__setattr__(self, "model", model)
        alg = self.state.algebra
        if self.constraints.algebra != alg or model.algebra != alg:
            raise AlgebraMismatch("problem components live on different algebras")
        for s, _ in self.weighting.components:
            if s.algebra != alg:
                raise AlgebraMismatch("weighting component on a different algebra")

    @property
    def algebra(self) -> FiniteBooleanAlgebra:
        return self.state.algebra


@dataclass(frozen=True)
class InferenceOutcome:
    """Result of an update: solved / overdetermined / undetermined."""

    status: str
    state: InformationState | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    certificate: float | None = None
    witnesses: tuple[InformationState, ...] | None = None
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def solved(cls, state, duals, objective, **diag) -> InferenceOutcome:
        return cls(SOLVED, state=state, duals=np.asarray(duals, float),
                   objective=float(objective), diagnostics=diag)

    @classmethod
    def overdetermined(cls, certificate, **diag) -> InferenceOutcome:
        return cls(OVERDETERMINED, certificate=float(certificate), diagnostics=diag)

    @classmethod
    def undetermined(cls, witnesses, objective=None, **diag) -> InferenceOutcome:
        return cls(UNDETERMINED, witnesses=tuple(witnesses),
                   objective=None if objective is None else float(objective),
                   diagnostics=diag)


@dataclass(frozen=True)
class Diagnosis:
    """Well-posedness verdict with a certificate."""

    status: str  # well_posed | overdetermined | undetermined
    certificate: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# prior bookkeeping


def _prior_components(problem: InferenceProblem) -> list[tuple[InformationState, float]]:
    if problem.weighting.kind == "dirac":
        return [(problem.state, 1.0)]
    return list(problem.weighting.components)


def _collapse_priors(
    D: Divergence, slot: str, priors: list[tuple[InformationState, float]]
) -> tuple[np.ndarray, float] | None:
    """Replace a mixture of priors by a single equivalent prior where exact.

    Returns (weights, total weight) or None when no exact collapse exists.
    For KL-type deviations the barycenter is arithmetic in the second slot
    and geometric in the first; the squared-norm deviation is symmetric and
    collapses arithmetically in both slots.
    """
    total = sum(w for _, w in priors)
    if len(priors) == 1:
        return priors[0][0].weights.copy(), total
    arith = sum(w * s.weights for s, w in priors) / total
    if D.is_kl_like:
        if slot == SECOND:
            return arith, total
        with np.errstate(divide="ignore"):
            logs = sum(w * np.log(s.weights) for s, w in priors) / total
        return np.exp(logs), total
    if D.kind == "bregman" and D.fn.name == "squared_norm":
        return arith, total
    return None


def _term_value(D: Divergence, slot: str, prior: InformationState, q: InformationState) -> float:
    return deviation(D, prior, q) if slot == SECOND else deviation(D, q, prior)


def _full_objective(problem: InferenceProblem, q: InformationState) -> float:
    priors = _prior_components(problem)
    val = sum(w * _term_value(problem.divergence, problem.options.slot, s, q)
              for s, w in priors)
    for t in problem.constraints.soft_terms():
        val += t.weight * (float(t.inner.f @ q.weights) - t.inner.c) ** 2
    return float(val)


# ---------------------------------------------------------------------------
# Newton solver for KL-type deviations with affine constraints (first slot)


def _newton_dual(
    log_prior: np.ndarray,
    A: np.ndarray,
    c: np.ndarray,
    options: SolverOptions,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Minimize h(λ) = Σ exp(log_prior + Aᵀλ) − cᵀλ; the primal is the tilt.

    Returns (q, λ, iterations).  Raises :class:`NoConvergence` with a
    boundary diagnostic when the iteration cap is hit.
    """

    def value(lam: np.ndarray) -> float:
        z = log_prior + A.T @ lam
        if z.size and z.max() > 700.0:
            return float("inf")
        return float(np.exp(z).sum() - c @ lam)

    def primal(lam: np.ndarray) -> np.ndarray:
        return np.exp(log_prior + A.T @ lam)

    lam = np.zeros(A.shape[0])
    f = value(lam)
    for it in range(options.max_iter):
        q = primal(lam)
        g = A @ q - c
        if np.linalg.norm(g) <= options.tol:
            return q, lam, it
        H = (A * q) @ A.T
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(H, -g, rcond=None)[0]
        if not np.all(np.isfinite(d)) or g @ d >= 0:
            d = -g
        # Armijo backtracking, factor 0.5, c = 1e-4.
        t, gd = 1.0, g @ d
        for _ in range(80):
            fn = value(lam + t * d)
            if fn <= f + 1e-4 * t * gd:
                break
            t *= 0.5
        else:
            break
        lam = lam + t * d
        f = fn
    q = primal(lam)
    g = A @ q - c
    if np.linalg.norm(g) <= options.tol:
        return q, lam, options.max_iter
    raise NoConvergence(
        "dual Newton hit its iteration cap; the moment target may lie on the "
        "boundary of the achievable set",
        {
            "iterations": options.max_iter,
            "grad_norm": float(np.linalg.norm(g)),
            "dual_norm": float(np.linalg.norm(lam, np.inf)),
            "boundary_suspected": bool(np.linalg.norm(lam, np.inf) > 30.0),
        },
    )


# ---------------------------------------------------------------------------
# Dykstra cyclic projections


def _dykstra(
    y: np.ndarray,
    projections: Sequence[Callable[[np.ndarray], np.ndarray]],
    tol: float = 5e-13,
    max_cycles: int = 50000,
) -> np.ndarray:
    """Project y onto the intersection of convex sets by cyclic projections
    with Dykstra correction vectors."""
    x = y.copy()
    corrections = [np.zeros_like(y) for _ in projections]
    scale = 1.0 + float(np.linalg.norm(y, np.inf))
    for _ in range(max_cycles):
        shift = 0.0
        for j, proj in enumerate(projections):
            z = proj(x + corrections[j])
            corrections[j] = x + corrections[j] - z
            shift = max(shift, float(np.linalg.norm(z - x, np.inf)))
            x = z
        if shift <= tol * scale:
            break
    return x


def _hyperplane_projection(f: np.ndarray, c: float) -> Callable[[np.ndarray], np.ndarray]:
    nn = float(f @ f)
    if nn == 0.0:
        raise DomainError("zero moment vector")
    return lambda x: x - ((f @ x - c) / nn) * f


def _cone_clip(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


# ---------------------------------------------------------------------------
# projected descent fallback


def _projected_descent(
    value: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray | None],
    project: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    options: SolverOptions,
    max_iter: int = 20000,
) -> tuple[np.ndarray, int, float]:
    """Damped projected gradient descent with Barzilai–Borwein steps.

    ``grad`` may return None at boundary points; the step is then shrunk.
    Returns (x, iterations, stationarity residual).
    """
    x = project(x0)
    g = grad(x)
    if g is None:
        x = project(0.5 * (x + x0) + 1e-8)
        g = grad(x)
        if g is None:
            raise NoConvergence("could not find an interior starting point", {})
    f = value(x)
    step = 1.0 / (1.0 + float(np.linalg.norm(g)))
    resid = float("inf")
    for it in range(max_iter):
        xn = project(x - step * g)
        d = xn - x
        dnorm = float(np.linalg.norm(d, np.inf))
        resid = dnorm / max(step, 1e-300)
        if dnorm <= 1e-16 * (1.0 + float(np.linalg.norm(x, np.inf))):
            return x, it, resid
        fn = value(xn)
        shrink = 0
        while (not np.isfinite(fn) or fn > f + 1e-4 * (g @ d)) and shrink < 70:
            step *= 0.5
            xn = project(x - step * g)
            d = xn - x
            fn = value(xn)
            shrink += 1
        if shrink >= 70:
            return x, it, resid
        gn = grad(xn)
        if gn is None:
            step *= 0.5
            continue
        s, yv = xn - x, gn - g
        sy = float(s @ yv)
        step = float(s @ s) / sy if sy > 1e-18 else min(step * 4.0, 1e8)
        x, g, f = xn, gn, fn
        # stationarity: displacement of a unit-step projected gradient
        probe = project(x - g)
        resid = float(np.linalg.norm(probe - x, np.inf))
        if resid <= options.tol * 10:
            return x, it + 1, resid
    return x, max_iter, resid


# ---------------------------------------------------------------------------
# the core operation


def update(problem: InferenceProblem) -> InferenceOutcome:
    """Minimize the weighted deviation plus constraints over the model."""
    opts = problem.options
    F = problem.constraints
    D = problem.divergence

    fs = F.finite_set()
    if fs is not None:
        return _solve_finite_set(problem, fs)

    if problem.model.kind == EXPFAM:
        return _solve_over_family(problem)

    priors = _prior_components(problem)
    A, c = F.affine_rows()
    if problem.model.kind == SIMPLEX and not any(
        isinstance(t, Normalization) for t in F.terms
    ):
        A = np.vstack([A, np.ones(problem.algebra.n)])
        c = np.append(c, 1.0)

    support = F.support_mask()
    indicators = F.indicators()
    softs = F.soft_terms()
    if not support.any():
        return InferenceOutcome.overdetermined(
            1.0, reason="support constraints exclude every atom")

    # A deviation with an infinite slope cannot move mass onto atoms the
    # prior does not carry (first slot), nor keep feasible states finite
    # when the support constraint cuts prior mass (second slot).
    infinite_slope = D.is_kl_like or (
        D.kind == "csiszar" and D.fn.slope_at_inf is None
    ) or (D.kind == "bregman" and D.fn.positive_domain)
    if infinite_slope and opts.slot == SECOND and not support.all():
        lost = sum(w * float(s.weights[~support].sum()) for s, w in priors)
        if lost > 0:
            return InferenceOutcome.overdetermined(
                lost, reason="every feasible state has infinite deviation "
                "from the prior (support constraint cuts prior mass)")

    if indicators:
        if not support.all():
            raise DomainError(
                "named convex-set constraints cannot be combined with "
                "support constraints")
        return _solve_fallback(problem, priors, A, c, support)

    collapsed = _collapse_priors(D, opts.slot, priors)

    # Reduce onto the allowed support; first-slot infinite-slope deviations
    # additionally pin q to the prior's own support.
    S = support.copy()
    if collapsed is not None and infinite_slope and opts.slot == FIRST:
        S &= collapsed[0] > 0
    elif infinite_slope and opts.slot == FIRST:
        for s, _ in priors:
            S &= s.weights > 0

    if A.shape[0] or not S.all():
        residual = _feasibility_residual(A[:, S] if A.shape[0] else A, c)
        if residual > opts.feas_tol:
            return InferenceOutcome.overdetermined(residual, reason="empty feasible set")

    if not A.shape[0] and S.all() and not softs:
        return _solve_unconstrained(problem, priors, collapsed)

    if softs or collapsed is None:
        return _solve_fallback(problem, priors, A, c, support)

    prior_w, weight = collapsed

    if D.is_kl_like and opts.slot == FIRST:
        return _solve_kl_first(problem, prior_w, weight, A, c, S)
    if D.is_kl_like and opts.slot == SECOND and _rows_are_normalization_only(A, c):
        q = np.where(S, prior_w, 0.0)
        mass = q.sum()
        q = q / mass
        state = InformationState(problem.algebra, q)
        return InferenceOutcome.solved(
            state, [weight * (mass - 1.0)], _full_objective(problem, state),
            solver="closed_form_normalize", kkt_residual=0.0)
    if D.kind == "bregman" and D.fn.name == "squared_norm":
        return _solve_squared_dykstra(problem, prior_w, weight, A, c, S)
    return _solve_fallback(problem, priors, A, c, support)


def _rows_are_normalization_only(A: np.ndarray, c: np.ndarray) -> bool:
    if A.shape[0] != 1:
        return False
    return bool(np.all(A[0] == 1.0) and c[0] == 1.0)


def _feasibility_residual(A: np.ndarray, c: np.ndarray) -> float:
    """min ‖Aq − c‖₂ over q ≥ 0, the existence phase of the taxonomy."""
    if A.shape[0] == 0:
        return 0.0
    if A.shape[1] == 0:
        return float(np.linalg.norm(c))
    try:
        _, resid = nnls(A, c)
    except RuntimeError:
        return float("inf")
    return float(resid)


def _feasible_point(A: np.ndarray, c: np.ndarray, n: int, S: np.ndarray) -> np.ndarray:
    """A nonnegative point approximately satisfying the reduced system."""
    full = np.zeros(n)
    if A.shape[0] == 0:
        full[S] = 1.0
        return full
    x, _ = nnls(A[:, S], c)
    full[S] = x
    return full


def _solve_unconstrained(problem, priors, collapsed) -> InferenceOutcome:
    if collapsed is not None:
        w, _ = collapsed
        state = InformationState(problem.algebra, w)
        return InferenceOutcome.solved(
            state, np.zeros(0), _full_objective(problem, state),
            solver="closed_form_barycenter", kkt_residual=0.0)
    # Csiszár mixtures have no closed-form barycenter; descend.
    A = np.zeros((0, problem.algebra.n))
    return _solve_fallback(problem, priors, A, np.zeros(0),
                           np.ones(problem.algebra.n, dtype=bool))


def _solve_kl_first(problem, prior_w, weight, A, c, S) -> InferenceOutcome:
    if not np.any(prior_w[S] > 0):
        return InferenceOutcome.overdetermined(
            _feasibility_residual(A[:, S], c) if A.shape[0] else 1.0,
            reason="prior carries no mass on the feasible support")
    Ssub = S & (prior_w > 0)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior_w[Ssub])
    q_sub, lam, iters = _newton_dual(log_prior, A[:, Ssub], c, problem.options)
    q = np.zeros(problem.algebra.n)
    q[Ssub] = q_sub
    state = InformationState(problem.algebra, q)
    feas = float(np.linalg.norm(A @ q - c, np.inf)) if A.shape[0] else 0.0
    # The collapsed objective is `weight` times the unit-weight one the dual
    # Newton solves, so the true multipliers carry that factor.
    return InferenceOutcome.solved(
        state, weight * lam, _full_objective(problem, state),
        solver="newton_dual", iterations=iters, kkt_residual=feas)


def _solve_squared_dykstra(problem, prior_w, weight, A, c, S) -> InferenceOutcome:
    projections = [_hyperplane_projection(A[j], c[j]) for j in range(A.shape[0])]
    if not S.all():
        def zero_off(x, mask=S):
            out = x.copy()
            out[~mask] = 0.0
            return out
        projections.append(zero_off)
    projections.append(_cone_clip)
    q = _dykstra(prior_w, projections)
    q[np.abs(q) < 1e-15] = 0.0
    if not np.any(q > 0):
        return InferenceOutcome.overdetermined(
            float(np.linalg.norm(prior_w)), reason="projection collapsed to zero mass")
    state = InformationState(problem.algebra, q)
    grad = 2.0 * weight * (q - prior_w)
    lam, stat = _recover_duals(A, q, grad)
    feas = float(np.linalg.norm(A @ q - c, np.inf)) if A.shape[0] else 0.0
    return InferenceOutcome.solved(
        state, lam, _full_objective(problem, state),
        solver="dykstra", kkt_residual=max(stat, feas))


def _recover_duals(A, q, grad) -> tuple[np.ndarray, float]:
    """Least-squares multipliers from stationarity on the inactive atoms."""
    if A.shape[0] == 0:
        return np.zeros(0), float(np.linalg.norm(grad, np.inf))
    inactive = q > 1e-12
    Ai = A[:, inactive]
    lam, *_ = np.linalg.lstsq(Ai.T, grad[inactive], rcond=None)
    stat = float(np.linalg.norm(Ai.T @ lam - grad[inactive], np.inf))
    return lam, stat


def _solve_fallback(problem, priors, A, c, support) -> InferenceOutcome:
    """Damped projected descent on the summed objective."""
    opts = problem.options
    D = problem.divergence
    n = problem.algebra.n
    softs = problem.constraints.soft_terms()
    indicators = problem.constraints.indicators()

    S = support.copy()
    infinite_slope = D.is_kl_like or (
        D.kind == "csiszar" and D.fn.slope_at_inf is None
    ) or (D.kind == "bregman" and D.fn.positive_domain)
    if infinite_slope and opts.slot == FIRST:
        for s, _ in priors:
            S &= s.weights > 0

    projections: list[Callable[[np.ndarray], np.ndarray]] = []
    for j in range(A.shape[0]):
        projections.append(_hyperplane_projection(A[j], c[j]))
    if not S.all():
        def zero_off(x, mask=S):
            out = x.copy()
            out[~mask] = 0.0
            return out
        projections.append(zero_off)
    for ind in indicators:
        projections.append(ind.project)
    projections.append(_cone_clip)

    def project(x: np.ndarray) -> np.ndarray:
        return _dykstra(x, projections, tol=1e-13)

    def value(x: np.ndarray) -> float:
        try:
            st = InformationState(problem.algebra, np.maximum(x, 0.0))
        except DomainError:
            return float("inf")
        return _full_objective(problem, st)

    def grad(x: np.ndarray) -> np.ndarray | None:
        try:
            st = InformationState(problem.algebra, np.maximum(x, 0.0))
        except DomainError:
            return None
        g = np.zeros(n)
        try:
            for s, w in priors:
                if opts.slot == SECOND:
                    g += w * gradient_in(D, SECOND, s, st)
                else:
                    g += w * gradient_in(D, FIRST, st, s)
        except Exception:
            return None
        for t in softs:
            g += 2.0 * t.weight * (float(t.inner.f @ x) - t.inner.c) * t.inner.f
        if not S.all():
            g[~S] = 0.0
        return g

    x0 = _feasible_point(A, c, n, S)
    if infinite_slope and opts.slot == FIRST:
        # nudge strictly inside the prior support, then re-project
        x0 = np.where(S, np.maximum(x0, 1e-6), 0.0)
    x, iters, resid = _projected_descent(value, grad, project, x0, opts)
    x[np.abs(x) < 1e-15] = 0.0
    if not np.any(x > 0):
        return InferenceOutcome.overdetermined(
            1.0, reason="descent collapsed to zero mass")
    if resid > 1e-6:
        raise NoConvergence(
            "projected descent stalled above tolerance",
            {"iterations": iters, "stationarity": resid})
    state = InformationState(problem.algebra, x)
    g = grad(x)
    lam, stat = (np.zeros(A.shape[0]), resid) if g is None else _recover_duals(A, x, g)
    feas = float(np.linalg.norm(A @ x - c, np.inf)) if A.shape[0] else 0.0
    if problem.model.kind != CONE and not model_contains(problem.model, state, 1e-6):
        raise InternalError("fallback left the model")
    return InferenceOutcome.solved(
        state, lam, _full_objective(problem, state),
        solver="projected_descent", iterations=iters,
        kkt_residual=max(resid, feas))


def _solve_finite_set(problem, fs: FiniteSet) -> InferenceOutcome:
    """Exact minimization over an explicit finite candidate set."""
    opts = problem.options
    rest = ConstraintFunctional(
        problem.constraints.algebra,
        tuple(t for t in problem.constraints.terms if not isinstance(t, FiniteSet)),
    )
    feasible = []
    best_violation = float("inf")
    for cand in fs.candidates:
        viol = _hard_violation(rest, cand)
        if problem.model.kind == SIMPLEX:
            viol = max(viol, abs(float(cand.weights.sum()) - 1.0))
        best_violation = min(best_violation, viol)
        if viol <= opts.feas_tol:
            feasible.append(cand)
    if not feasible:
        return InferenceOutcome.overdetermined(
            best_violation, reason="no candidate satisfies the hard constraints")
    values = [_full_objective(problem, cand) for cand in feasible]
    best = min(values)
    winners = [s for s, v in zip(feasible, values) if v - best <= opts.tie_tol]
    clusters: list[InformationState] = []
    for s in sorted(winners, key=lambda s: tuple(s.weights)):
        if all(
            float(np.linalg.norm(s.weights - t.weights, np.inf)) > opts.witness_gap
            for t in clusters
        ):
            clusters.append(s)
    if len(clusters) == 1:
        return InferenceOutcome.solved(
            clusters[0], np.zeros(0), best, solver="enumeration", kkt_residual=0.0)
    return InferenceOutcome.undetermined(
        clusters, objective=best, solver="enumeration")


def _hard_violation(F: ConstraintFunctional, q: InformationState) -> float:
    """Worst hard-term violation, as a magnitude rather than an indicator."""
    w = q.weights
    worst = 0.0
    for t in F.terms:
        if isinstance(t, MomentEquality):
            worst = max(worst, abs(float(t.f @ w) - t.c))
        elif isinstance(t, Normalization):
            worst = max(worst, abs(float(w.sum()) - 1.0))
        elif hasattr(t, "allowed"):
            off = np.ones(F.algebra.n, dtype=bool)
            off[sorted(t.allowed)] = False
            worst = max(worst, float(w[off].sum()))
        elif hasattr(t, "contains"):
            worst = max(worst, 0.0 if t.contains(w, 1e-10) else 1.0)
    return worst


def _solve_over_family(problem, theta0: np.ndarray | None = None) -> InferenceOutcome:
    """Updating over an exponential-family model by descent in θ.

    Hard constraints other than normalization (which family states satisfy
    by construction) are rejected: the family is not a convex subset of the
    cone, so the convex machinery above does not apply.
    """
    F = problem.constraints
    hard = [t for t in F.terms if not isinstance(t, SoftPenalty)]
    if any(not isinstance(t, Normalization) for t in hard):
        raise DomainError(
            "constrained updates over exponential-family models are not "
            "supported; constrain over the cone or simplex instead")
    model = problem.model
    opts = problem.options

    def value(theta: np.ndarray) -> float:
        try:
            st = param_to_state(model, theta)
        except Exception:
            return float("inf")
        return _full_objective(problem, st)

    def grad(theta: np.ndarray) -> np.ndarray | None:
        h = 1e-6
        g = np.zeros(len(theta))
        for i in range(len(theta)):
            e = np.zeros(len(theta))
            e[i] = h
            a, b = value(theta + e), value(theta - e)
            if not (np.isfinite(a) and np.isfinite(b)):
                return None
            g[i] = (a - b) / (2 * h)
        return g

    start = np.zeros(model.k) if theta0 is None else np.asarray(theta0, float)
    theta, iters, resid = _projected_descent(
        value, grad, lambda x: x, start, opts, max_iter=2000)
    state = param_to_state(model, theta)
    return InferenceOutcome.solved(
        state, theta, _full_objective(problem, state),
        solver="family_descent", iterations=iters, kkt_residual=resid)


# ---------------------------------------------------------------------------
# named special cases


def maxent_linear(
    omega: InformationState,
    moments: Sequence[MomentEquality],
    include_normalization: bool = True,
    options: SolverOptions | None = None,
) -> InferenceOutcome:
    """KL projection of ω onto affine moment constraints: the exponential tilt.

    The solved state has the form ω·exp(Σ λ_j f_j), with the multipliers
    reported as duals in term order (moments first, then normalization).
    """
    terms: list = list(moments)
    if include_normalization:
        terms.append(Normalization())
    problem = InferenceProblem(
        divergence=Divergence.kl(),
        weighting=PriorWeighting.dirac(),
        constraints=ConstraintFunctional(omega.algebra, tuple(terms)),
        state=omega,
        options=replace(options or SolverOptions(), slot=FIRST),
    )
    return update(problem)


def condition(state: InformationState, event) -> InformationState:
    """Classical conditioning: restrict to the event and renormalize."""
    mass = evaluate(state, event)
    if mass <= 0:
        raise DomainError("conditioning on an event of zero mass")
    return InformationState(state.algebra, state.weights * indicator(event) / mass)


def _theta_posterior(
    joint: JointAlgebra, conditioned: InformationState, observed: str
) -> InformationState:
    theta_alg = FiniteBooleanAlgebra(joint.theta_labels)
    idx = sorted(joint.row(observed).members)
    return InformationState(theta_alg, conditioned.weights[idx])


def bayes_rule_direct(
    joint: JointAlgebra, prior: InformationState, observed: str
) -> InferenceOutcome:
    """Conditioning by direct arithmetic: the oracle the solver must match."""
    row = joint.row(observed)
    mass = evaluate(prior, row)
    if mass <= 0:
        return InferenceOutcome.overdetermined(
            1.0, reason="conditioning on an event of zero prior mass")
    post = _theta_posterior(joint, condition(prior, row), observed)
    return InferenceOutcome(
        SOLVED, state=post, duals=np.zeros(0),
        objective=None, diagnostics={"solver": "direct"})


def bayes_update(
    joint: JointAlgebra,
    prior: InformationState,
    observed: str,
    options: SolverOptions | None = None,
) -> InferenceOutcome:
    """Conditioning as entropic updating: KL projection onto the observed row."""
    problem = InferenceProblem(
        divergence=Divergence.kl(),
        weighting=PriorWeighting.dirac(),
        constraints=bayes_constraints(joint, observed),
        state=prior,
        options=replace(options or SolverOptions(), slot=FIRST),
    )
    out = update(problem)
    if out.status != SOLVED:
        return out
    post = _theta_posterior(joint, out.state, observed)
    return InferenceOutcome(
        SOLVED, state=post, duals=out.duals, objective=out.objective,
        diagnostics={**out.diagnostics, "joint_weights": out.state.weights.tolist()})


def mle(
    model: InformationModel,
    counts: Sequence[int],
    options: SolverOptions | None = None,
) -> np.ndarray:
    """Maximum-likelihood natural parameters by moment matching.

    Solves the same dual problem as :func:`maxent_linear` with the model's
    base as prior and the empirical means of the sufficient statistics as
    targets; the moment multipliers are the estimate.
    """
    if model.kind != EXPFAM:
        raise DomainError("mle requires an exponential-family model")
    cnt = np.asarray(counts, dtype=float)
    if cnt.shape != (model.algebra.n,) or np.any(cnt < 0):
        raise DomainError("counts must be a nonnegative vector over atoms")
    total = cnt.sum()
    if total <= 0:
        raise DomainError("counts must not be all zero")
    emp = model.suffstats @ (cnt / total)
    prior = InformationState(model.algebra, np.asarray(model.base))
    moments = [MomentEquality(model.suffstats[j], emp[j]) for j in range(model.k)]
    out = maxent_linear(prior, moments, include_normalization=True, options=options)
    if out.status == OVERDETERMINED:
        raise NoConvergence(
            "empirical means are not attainable by the family",
            {"certificate": out.certificate})
    return np.asarray(out.duals[: model.k])


def diagnose_wellposedness(problem: InferenceProblem) -> Diagnosis:
    """Existence and uniqueness audit for an inference problem.

    Existence runs a feasibility phase (least residual over the model);
    uniqueness is analytic for strictly convex deviations over convex
    feasible sets, and multi-start otherwise.
    """
    opts = problem.options
    F = problem.constraints
    fs = F.finite_set()
    if fs is not None:
        out = _solve_finite_set(problem, fs)
        if out.status == OVERDETERMINED:
            return Diagnosis(OVERDETERMINED, {"residual": out.certificate})
        if out.status == UNDETERMINED:
            return Diagnosis(
                UNDETERMINED,
                {"witnesses": [w.weights.tolist() for w in out.witnesses]})
        return Diagnosis(WELL_POSED, {
            "reason": "unique minimizer over the finite candidate set",
            "state": out.state.weights.tolist()})

    A, c = F.affine_rows()
    if problem.model.kind == SIMPLEX and not any(
        isinstance(t, Normalization) for t in F.terms
    ):
        A = np.vstack([A, np.ones(problem.algebra.n)])
        c = np.append(c, 1.0)
    support = F.support_mask()
    if not support.any():
        return Diagnosis(OVERDETERMINED, {"residual": 1.0,
                                          "reason": "empty support"})
    residual = _feasibility_residual(A[:, support] if A.shape[0] else A, c)
    if residual > opts.feas_tol:
        return Diagnosis(OVERDETERMINED, {"residual": residual})

    if problem.model.kind != EXPFAM:
        D = problem.divergence
        infinite_slope = D.is_kl_like or (
            D.kind == "csiszar" and D.fn.slope_at_inf is None
        ) or (D.kind == "bregman" and D.fn.positive_domain)
        if infinite_slope and opts.slot == SECOND and not support.all():
            lost = sum(w * float(s.weights[~support].sum())
                       for s, w in _prior_components(problem))
            if lost > 0:
                return Diagnosis(OVERDETERMINED, {
                    "residual": lost,
                    "reason": "objective is infinite on the whole feasible set"})
        return Diagnosis(WELL_POSED, {
            "reason": "strictly convex deviation over a convex, closed "
            "feasible set"})

    # Non-convex model: multi-start restarts from a fixed seed list.
    results = []
    for i in range(16):
        rng = np.random.default_rng(opts.seed + i)
        theta0 = rng.normal(size=problem.model.k)
        out = _solve_over_family(problem, theta0=theta0)
        results.append((out.objective, out.state))
    best = min(v for v, _ in results)
    clusters: list[InformationState] = []
    for v, st in sorted(results, key=lambda p: tuple(p[1].weights)):
        if v - best > opts.tie_tol:
            continue
        if all(float(np.linalg.norm(st.weights - t.weights, np.inf)) > opts.witness_gap
               for t in clusters):
            clusters.append(st)
    if len(clusters) > 1:
        return Diagnosis(UNDETERMINED, {
            "witnesses": [s.weights.tolist() for s in clusters],
            "note": "multi-start detection over a non-convex model is heuristic"})
    return Diagnosis(WELL_POSED, {"reason": "all restarts agree",
                                  "note": "heuristic (non-convex model)"})
