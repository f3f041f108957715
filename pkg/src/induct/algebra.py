"""Finite atomic boolean algebras and their elements.

An algebra is determined by an ordered tuple of distinct atom labels; an
element is the join of a subset of atoms, stored canonically as the set of
atom indices.  This makes equality exact and every lattice operation a set
operation.  ``indicator`` embeds elements into {0,1}^n, which is where
states evaluate them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import AlgebraMismatch, DomainError, EmptyQuotient


@dataclass(frozen=True)
class FiniteBooleanAlgebra:
    """The powerset algebra over an ordered tuple of atom labels."""

    atoms: tuple[str, ...]

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if len(atoms) == 0:
            raise DomainError("an algebra needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise DomainError("atom labels must be distinct")

    @property
    def n(self) -> int:
        return len(self.atoms)

    def element(self, members: Iterable[int | str]) -> AlgebraElement:
        """Build the element joining the given atoms (indices or labels)."""
        idx = set()
        for m in members:
            if isinstance(m, str):
                try:
                    idx.add(self.atoms.index(m))
                except ValueError:
                    raise DomainError(f"unknown atom label {m!r}") from None
            else:
                if not 0 <= m < self.n:
                    raise DomainError(f"atom index {m} out of range for n={self.n}")
                idx.add(int(m))
        return AlgebraElement(self, frozenset(idx))

    def atom(self, i: int | str) -> AlgebraElement:
        return self.element([i])

    @property
    def top(self) -> AlgebraElement:
        return AlgebraElement(self, frozenset(range(self.n)))

    @property
    def bottom(self) -> AlgebraElement:
        return AlgebraElement(self, frozenset())


@dataclass(frozen=True)
class AlgebraElement:
    """An element of a :class:`FiniteBooleanAlgebra`, as a set of atom indices."""

    algebra: FiniteBooleanAlgebra
    members: frozenset[int]

    def __post_init__(self):
        members = frozenset(int(i) for i in self.members)
        object.__setattr__(self, "members", members)
        if members and (min(members) < 0 or max(members) >= self.algebra.n):
            raise DomainError("member index out of range for the parent algebra")

    def __and__(self, other: AlgebraElement) -> AlgebraElement:
        return meet(self, other)

    def __or__(self, other: AlgebraElement) -> AlgebraElement:
        return join(self, other)

    def __invert__(self) -> AlgebraElement:
        return complement(self)

    def labels(self) -> tuple[str, ...]:
        return tuple(self.algebra.atoms[i] for i in sorted(self.members))


def _require_same_algebra(a: AlgebraElement, b: AlgebraElement) -> None:
    if a.algebra != b.algebra:
        raise AlgebraMismatch("elements belong to different algebras")


def meet(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """a ∧ b: intersection of atom sets."""
    _require_same_algebra(a, b)
    return AlgebraElement(a.algebra, a.members & b.members)


def join(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """a ∨ b: union of atom sets."""
    _require_same_algebra(a, b)
    return AlgebraElement(a.algebra, a.members | b.members)


def complement(a: AlgebraElement) -> AlgebraElement:
    """¬a: the remaining atoms."""
    return AlgebraElement(a.algebra, frozenset(range(a.algebra.n)) - a.members)


def indicator(a: AlgebraElement) -> np.ndarray:
    """The 0/1 vector over atoms picking out ``a``'s members."""
    v = np.zeros(a.algebra.n)
    v[sorted(a.members)] = 1.0
    return v


def quotient_by_null(
    alg: FiniteBooleanAlgebra, null_atoms: Iterable[int]
) -> tuple[FiniteBooleanAlgebra, dict[int, int | None]]:
    """Drop a set of null atoms, returning the surviving algebra and index map.

    The map sends each old atom index to its new index, or ``None`` when the
    atom was quotiented away.  At least one atom must survive.
    """
    null = {int(i) for i in null_atoms}
    if null and (min(null) < 0 or max(null) >= alg.n):
        raise DomainError("null atom index out of range")
    survivors = [i for i in range(alg.n) if i not in null]
    if not survivors:
        raise EmptyQuotient("every atom was declared null")
    index_map: dict[int, int | None] = {i: None for i in null}
    index_map.update({old: new for new, old in enumerate(survivors)})
    quotient = FiniteBooleanAlgebra(tuple(alg.atoms[i] for i in survivors))
    return quotient, index_map


def map_element(
    a: AlgebraElement,
    quotient: FiniteBooleanAlgebra,
    index_map: Mapping[int, int | None],
) -> AlgebraElement:
    """Push an element through a quotient's index map."""
    members = {index_map[i] for i in a.members if index_map[i] is not None}
    return AlgebraElement(quotient, frozenset(members))  # type: ignore[arg-type]


JOINT_SEP = ":"


@dataclass(frozen=True)
class JointAlgebra:
    """Product algebra over pairs (x, θ), with atoms labeled ``x:θ`` row-major.

    Conditional-probability tables live here as joint states; rows select
    values of x, columns select values of θ.
    """

    x_labels: tuple[str, ...]
    theta_labels: tuple[str, ...]
    algebra: FiniteBooleanAlgebra = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "x_labels", tuple(self.x_labels))
        object.__setattr__(self, "theta_labels", tuple(self.theta_labels))
        for lab in self.x_labels + self.theta_labels:
            if JOINT_SEP in lab:
                raise DomainError(f"label {lab!r} may not contain {JOINT_SEP!r}")
        atoms = tuple(
            f"{x}{JOINT_SEP}{t}" for x in self.x_labels for t in self.theta_labels
        )
        object.__setattr__(self, "algebra", FiniteBooleanAlgebra(atoms))

    def index(self, x: str, theta: str) -> int:
        return self._x_index(x) * len(self.theta_labels) + self._theta_index(theta)

    def _x_index(self, x: str) -> int:
        try:
            return self.x_labels.index(x)
        except ValueError:
            raise DomainError(f"unknown x label {x!r}") from None

    def _theta_index(self, theta: str) -> int:
        try:
            return self.theta_labels.index(theta)
        except ValueError:
            raise DomainError(f"unknown theta label {theta!r}") from None

    def row(self, x: str) -> AlgebraElement:
        """The event {x} × Θ."""
        i = self._x_index(x)
        k = len(self.theta_labels)
        return self.algebra.element(range(i * k, (i + 1) * k))

    def column(self, theta: str) -> AlgebraElement:
        """The event X × {θ}."""
        j = self._theta_index(theta)
        k = len(self.theta_labels)
        return self.algebra.element(range(j, self.algebra.n, k))
