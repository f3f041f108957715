"""Information states and information models.

A state is a nonnegative weight vector over the atoms of an algebra: a
positive finite integral.  Normalization is deliberately optional — the
total mass is just another evaluable quantity, and constraints may or may
not pin it to 1.  Models are families of states: the full positive cone,
the probability simplex, or an exponential family with a fixed base and
sufficient statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .algebra import AlgebraElement, FiniteBooleanAlgebra, indicator
from .errors import AlgebraMismatch, DomainError, InternalError

CONE = "cone"
SIMPLEX = "simplex"
EXPFAM = "expfam"


@dataclass(frozen=True, eq=False)
class InformationState:
    """Nonnegative atom weights with positive total mass."""

    algebra: FiniteBooleanAlgebra
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.ndim != 1 or w.shape[0] != self.algebra.n:
            raise DomainError(
                f"expected {self.algebra.n} weights, got shape {w.shape}"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise DomainError("a state needs positive total mass")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, InformationState)
            and self.algebra == other.algebra
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"InformationState({list(self.weights)})"

    def scaled(self, c: float) -> InformationState:
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return InformationState(self.algebra, self.weights * c)


def evaluate(omega: InformationState, a: AlgebraElement) -> float:
    """ω applied to the indicator of ``a``: the mass ω puts on the event."""
    if omega.algebra != a.algebra:
        raise AlgebraMismatch("state and element live on different algebras")
    return float(omega.weights @ indicator(a))


def total_mass(omega: InformationState) -> float:
    return float(omega.weights.sum())


def normalize(omega: InformationState) -> InformationState:
    return InformationState(omega.algebra, omega.weights / omega.weights.sum())


def uniform_state(algebra: FiniteBooleanAlgebra) -> InformationState:
    return InformationState(algebra, np.full(algebra.n, 1.0 / algebra.n))


@dataclass(frozen=True)
class InformationModel:
    """A family of states: ``cone``, ``simplex``, or an exponential family.

    For the exponential family, ``base`` is a strictly positive reference
    state and ``suffstats`` is a (k, n) matrix whose rows, together with the
    constant vector, must be linearly independent (identifiability).
    ``domain`` optionally bounds each natural parameter as (lo, hi) pairs.
    """

    kind: str
    algebra: FiniteBooleanAlgebra
    base: np.ndarray | None = None
    suffstats: np.ndarray | None = None
    domain: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in (CONE, SIMPLEX, EXPFAM):
            raise DomainError(f"unknown model kind {self.kind!r}")
        if self.kind != EXPFAM:
            if self.base is not None or self.suffstats is not None:
                raise DomainError(f"{self.kind} models take no base/suffstats")
            return
        base = np.asarray(self.base, dtype=float)
        F = np.atleast_2d(np.asarray(self.suffstats, dtype=float))
        if base.shape != (self.algebra.n,) or np.any(base <= 0):
            raise DomainError("exponential family base must be strictly positive")
        if F.shape[1] != self.algebra.n:
            raise DomainError("sufficient statistics must have one column per atom")
        stacked = np.vstack([np.ones(self.algebra.n), F])
        if np.linalg.matrix_rank(stacked, tol=1e-10) < F.shape[0] + 1:
            raise DomainError(
                "sufficient statistics must be linearly independent of each "
                "other and of the constant vector"
            )
        base = base.copy()
        F = F.copy()
        base.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "suffstats", F)
        if self.domain is not None:
            lo = np.asarray(self.domain[0], dtype=float)
            hi = np.asarray(self.domain[1], dtype=float)
            if lo.shape != (F.shape[0],) or hi.shape != (F.shape[0],):
                raise DomainError("domain bounds must match the parameter count")
            object.__setattr__(self, "domain", (lo, hi))

    @property
    def k(self) -> int:
        if self.kind != EXPFAM:
            raise DomainError("only exponential families have parameters")
        return self.suffstats.shape[0]  # type: ignore[union-attr]


def cone_model(algebra: FiniteBooleanAlgebra) -> InformationModel:
    return InformationModel(CONE, algebra)


def simplex_model(algebra: FiniteBooleanAlgebra) -> InformationModel:
    return InformationModel(SIMPLEX, algebra)


def exponential_family(
    algebra: FiniteBooleanAlgebra,
    base: Sequence[float] | np.ndarray,
    suffstats: Sequence[Sequence[float]] | np.ndarray,
    domain: tuple[Sequence[float], Sequence[float]] | None = None,
) -> InformationModel:
    dom = None
    if domain is not None:
        dom = (np.asarray(domain[0], float), np.asarray(domain[1], float))
    return InformationModel(
        EXPFAM, algebra, np.asarray(base, float), np.asarray(suffstats, float), dom
    )


def param_to_state(model: InformationModel, theta: Sequence[float]) -> InformationState:
    """The normalized state base·exp(θ·f)/Z, computed in log space."""
    if model.kind != EXPFAM:
        raise DomainError("param_to_state requires an exponential family")
    th = np.asarray(theta, dtype=float)
    if th.shape != (model.k,):
        raise DomainError(f"expected {model.k} parameters, got shape {th.shape}")
    if not np.all(np.isfinite(th)):
        raise DomainError("parameters must be finite")
    if model.domain is not None:
        lo, hi = model.domain
        if np.any(th < lo) or np.any(th > hi):
            raise DomainError("parameter outside the model's domain")
    z = np.log(model.base) + model.suffstats.T @ th
    w = np.exp(z - logsumexp(z))
    # Guard against total underflow on extreme tilts.
    s = w.sum()
    if not np.isfinite(s) or s <= 0:
        raise InternalError("normalization underflowed")
    return InformationState(model.algebra, w / s)


def model_contains(
    model: InformationModel, omega: InformationState, tol: float = 1e-10
) -> bool:
    """Membership test for a state in a model.

    Cone: any valid state.  Simplex: unit mass.  Exponential family: the
    log-weights lie in span{1, f_1..f_k} (so any positive scaling of a family
    member also passes).
    """
    if omega.algebra != model.algebra:
        raise AlgebraMismatch("state and model live on different algebras")
    if model.kind == CONE:
        return True
    if model.kind == SIMPLEX:
        return abs(total_mass(omega) - 1.0) <= tol
    if np.any(omega.weights <= 0):
        return False
    logw = np.log(omega.weights) - np.log(model.base)
    basis = np.vstack([np.ones(model.algebra.n), model.suffstats]).T
    resid = logw - basis @ np.linalg.lstsq(basis, logw, rcond=None)[0]
    return float(np.linalg.norm(resid, np.inf)) <= tol
