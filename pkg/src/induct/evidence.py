"""Evidence: constraint functionals and relative prior weightings.

A constraint functional is a sum of terms.  Hard terms evaluate to 0 when
satisfied and +∞ when violated beyond a fixed tolerance; soft terms are
finite penalties.  The feasible set is the intersection of the hard terms'
sets.  Prior weightings are finitely supported measures over states: a
Dirac mass at the problem's current state, or a finite mixture of Dirac
masses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import FiniteBooleanAlgebra, JointAlgebra
from .errors import AlgebraMismatch, DomainError
from .state import InformationState, total_mass

HARD_TOL = 1e-10


@dataclass(frozen=True)
class MomentEquality:
    """Hard term ⟨f, q⟩ = c."""

    f: np.ndarray
    c: float

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float).copy()
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True)
class Normalization:
    """Hard term: total mass equals 1."""


@dataclass(frozen=True)
class Support:
    """Hard term: all mass on the allowed atoms."""

    allowed: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(int(i) for i in self.allowed))


@dataclass(frozen=True)
class ConvexIndicator:
    """Hard term: membership in a named convex set.

    ``contains(weights, tol)`` decides membership; ``project(weights)`` is the
    Euclidean projection, used by the descent fallback.
    """

    name: str
    contains: Callable[[np.ndarray, float], bool]
    project: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SoftPenalty:
    """Finite term: weight · (⟨f, q⟩ − c)² for an inner moment equality."""

    inner: MomentEquality
    weight: float

    def __post_init__(self):
        if self.weight < 0:
            raise DomainError("penalty weight must be nonnegative")


@dataclass(frozen=True)
class FiniteSet:
    """Hard term: q is one of finitely many candidate states.

    Not convex; it exists so that non-unique inference problems (several
    exact minimizers) can be posed and diagnosed by enumeration.
    """

    candidates: tuple[InformationState, ...]

    def __post_init__(self):
        if not self.candidates:
            raise DomainError("a finite candidate set needs at least one state")
        object.__setattr__(self, "candidates", tuple(self.candidates))


def _project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(w) + 1) > css)[0][-1]
    return np.maximum(w - css[rho] / (rho + 1.0), 0.0)


NAMED_CONVEX_SETS: dict[str, ConvexIndicator] = {
    "probability_simplex": ConvexIndicator(
        "probability_simplex",
        contains=lambda w, tol: bool(
            np.all(w >= -tol) and abs(w.sum() - 1.0) <= tol
        ),
        project=_project_simplex,
    ),
    "unit_box": ConvexIndicator(
        "unit_box",
        contains=lambda w, tol: bool(np.all(w >= -tol) and np.all(w <= 1 + tol)),
        project=lambda w: np.clip(w, 0.0, 1.0),
    ),
}

Term = MomentEquality | Normalization | Support | ConvexIndicator | SoftPenalty | FiniteSet


@dataclass(frozen=True)
class ConstraintFunctional:
    """A sum of constraint terms over one algebra."""

    algebra: FiniteBooleanAlgebra
    terms: tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if isinstance(t, MomentEquality) and t.f.shape != (self.algebra.n,):
                raise DomainError("moment vector length must equal the atom count")
            if isinstance(t, Support) and t.allowed and max(t.allowed) >= self.algebra.n:
                raise DomainError("support indices out of range")
            if isinstance(t, FiniteSet):
                for s in t.candidates:
                    if s.algebra != self.algebra:
                        raise AlgebraMismatch("candidate on a different algebra")

    def affine_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """All moment/normalization terms as a stacked system A q = c."""
        rows, rhs = [], []
        for t in self.terms:
            if isinstance(t, MomentEquality):
                rows.append(t.f)
                rhs.append(t.c)
            elif isinstance(t, Normalization):
                rows.append(np.ones(self.algebra.n))
                rhs.append(1.0)
        if not rows:
            return np.zeros((0, self.algebra.n)), np.zeros(0)
        return np.vstack(rows), np.asarray(rhs, dtype=float)

    def support_mask(self) -> np.ndarray:
        """Boolean mask of atoms allowed by every support term."""
        mask = np.ones(self.algebra.n, dtype=bool)
        for t in self.terms:
            if isinstance(t, Support):
                m = np.zeros(self.algebra.n, dtype=bool)
                m[sorted(t.allowed)] = True
                mask &= m
        return mask

    def finite_set(self) -> FiniteSet | None:
        sets = [t for t in self.terms if isinstance(t, FiniteSet)]
        if not sets:
            return None
        if len(sets) > 1:
            raise DomainError("at most one finite candidate set per functional")
        return sets[0]

    def indicators(self) -> list[ConvexIndicator]:
        return [t for t in self.terms if isinstance(t, ConvexIndicator)]

    def soft_terms(self) -> list[SoftPenalty]:
        return [t for t in self.terms if isinstance(t, SoftPenalty)]

    def has_hard_terms(self) -> bool:
        return any(not isinstance(t, SoftPenalty) for t in self.terms)


def evaluate_constraints(
    F: ConstraintFunctional, q: InformationState, tol: float = HARD_TOL
) -> float:
    """Value of the functional at q: soft penalties, or +∞ on any hard violation."""
    if q.algebra != F.algebra:
        raise AlgebraMismatch("state and constraints live on different algebras")
    w = q.weights
    value = 0.0
    for t in F.terms:
        if isinstance(t, MomentEquality):
            if abs(float(t.f @ w) - t.c) > tol:
                return float("inf")
        elif isinstance(t, Normalization):
            if abs(total_mass(q) - 1.0) > tol:
                return float("inf")
        elif isinstance(t, Support):
            off = np.ones(F.algebra.n, dtype=bool)
            off[sorted(t.allowed)] = False
            if float(w[off].sum()) > tol:
                return float("inf")
        elif isinstance(t, ConvexIndicator):
            if not t.contains(w, tol):
                return float("inf")
        elif isinstance(t, FiniteSet):
            if min(
                float(np.linalg.norm(w - s.weights, np.inf)) for s in t.candidates
            ) > tol:
                return float("inf")
        else:
            value += t.weight * (float(t.inner.f @ w) - t.inner.c) ** 2
    return value


def bayes_constraints(joint: JointAlgebra, observed: str) -> ConstraintFunctional:
    """Evidence for conditioning a joint state on an observed x-label.

    Normalization plus support on the observed row — the hard-constraint
    form whose multipliers the solver recovers as duals.
    """
    row = joint.row(observed)  # raises DomainError on unknown labels
    return ConstraintFunctional(
        joint.algebra, (Normalization(), Support(frozenset(row.members)))
    )


@dataclass(frozen=True)
class PriorWeighting:
    """A finitely supported weighting over initial states.

    ``dirac`` puts unit mass on the problem's current state; ``mixture``
    spreads strictly positive masses over finitely many states.
    """

    kind: str
    components: tuple[tuple[InformationState, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("dirac", "mixture"):
            raise DomainError(f"unknown weighting kind {self.kind!r}")
        if self.kind == "dirac" and self.components:
            raise DomainError("a Dirac weighting carries no components")
        if self.kind == "mixture":
            if not self.components:
                raise DomainError("a mixture needs at least one component")
            if any(w <= 0 for _, w in self.components):
                raise DomainError("mixture weights must be strictly positive")
            algebras = {s.algebra for s, _ in self.components}
            if len(algebras) > 1:
                raise AlgebraMismatch("mixture components on different algebras")

    @classmethod
    def dirac(cls) -> PriorWeighting:
        return cls("dirac")

    @classmethod
    def mixture(
        cls, components: Sequence[tuple[InformationState, float]]
    ) -> PriorWeighting:
        return cls("mixture", tuple((s, float(w)) for s, w in components))


def weighting_eval(
    E: PriorWeighting, phi: InformationState, omega: InformationState
) -> float:
    """Discrete mass E puts on ``phi`` given current state ``omega``."""
    if phi.algebra != omega.algebra:
        raise AlgebraMismatch("states live on different algebras")
    if E.kind == "dirac":
        return 1.0 if phi == omega else 0.0
    return sum(w for s, w in E.components if s == phi)
