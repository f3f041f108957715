"""Information deviations: extended Kullback–Leibler, Bregman, and Csiszár families.

All three families are driven by named scalar convex functions carrying
analytic derivatives up to third order, so downstream code (solvers, the
geometry module) never has to differentiate numerically through a deviation.

Boundary conventions, fixed once here:
  0·log 0 := 0,   x·log(x/0) := +∞ for x > 0,
  and for Csiszár, lim_{v→0} v·f(w/v) := w · lim_{t→∞} f(t)/t.
With those, support constraints are exact rather than approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AlgebraMismatch, BoundaryError, DomainError, InternalError
from .state import InformationState

_NEGATIVE_SLACK = 1e-9  # below this, a "divergence" has violated convexity

FIRST = "first"
SECOND = "second"

# Smoothing width for the smoothed total-variation f; f''(1) = 1/(2·eps).
TV_SMOOTH_EPS = 0.1


@dataclass(frozen=True)
class ConvexScalar:
    """A named scalar convex function with analytic derivatives.

    ``value`` must accept 0 when ``defined_at_zero`` and return the limit
    value there; derivatives are only ever requested on the open positive
    axis (or all of R when ``positive_domain`` is False).
    """

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray]
    positive_domain: bool = True
    zero_value: float | None = None  # value(0) as a limit, None if +inf
    slope_at_inf: float | None = None  # lim value(t)/t, None means +inf


def _xlogx_minus_x(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos]) - x[pos]
    return out


def _kl_f_value(t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)  # f(0) = 1
    pos = t > 0
    out[pos] = t[pos] * np.log(t[pos]) - t[pos] + 1.0
    return out


def _tv_value(t):
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.sqrt((t - 1.0) ** 2 + TV_SMOOTH_EPS**2) - TV_SMOOTH_EPS)


def _tv_d1(t):
    t = np.asarray(t, dtype=float)
    return 0.5 * (t - 1.0) / np.sqrt((t - 1.0) ** 2 + TV_SMOOTH_EPS**2)


def _tv_d2(t):
    t = np.asarray(t, dtype=float)
    return 0.5 * TV_SMOOTH_EPS**2 / ((t - 1.0) ** 2 + TV_SMOOTH_EPS**2) ** 1.5


def _tv_d3(t):
    t = np.asarray(t, dtype=float)
    return -1.5 * TV_SMOOTH_EPS**2 * (t - 1.0) / ((t - 1.0) ** 2 + TV_SMOOTH_EPS**2) ** 2.5


GENERATORS: dict[str, ConvexScalar] = {
    "squared_norm": ConvexScalar(
        "squared_norm",
        value=lambda x: np.asarray(x, float) ** 2,
        d1=lambda x: 2.0 * np.asarray(x, float),
        d2=lambda x: np.full_like(np.asarray(x, float), 2.0),
        d3=lambda x: np.zeros_like(np.asarray(x, float)),
        positive_domain=False,
        zero_value=0.0,
    ),
    "neg_entropy": ConvexScalar(
        "neg_entropy",
        value=_xlogx_minus_x,
        d1=lambda x: np.log(np.asarray(x, float)),
        d2=lambda x: 1.0 / np.asarray(x, float),
        d3=lambda x: -1.0 / np.asarray(x, float) ** 2,
        positive_domain=True,
        zero_value=0.0,
    ),
}

# Every shipped f has f(1) = 0 and f'(1) = 0, so each Csiszár term is
# nonnegative even between unnormalized states.
CSISZAR_FUNCTIONS: dict[str, ConvexScalar] = {
    "kl": ConvexScalar(
        "kl",
        value=_kl_f_value,
        d1=lambda t: np.log(np.asarray(t, float)),
        d2=lambda t: 1.0 / np.asarray(t, float),
        d3=lambda t: -1.0 / np.asarray(t, float) ** 2,
        zero_value=1.0,
        slope_at_inf=None,
    ),
    "chi2": ConvexScalar(
        "chi2",
        value=lambda t: 0.5 * (np.asarray(t, float) - 1.0) ** 2,
        d1=lambda t: np.asarray(t, float) - 1.0,
        d2=lambda t: np.ones_like(np.asarray(t, float)),
        d3=lambda t: np.zeros_like(np.asarray(t, float)),
        zero_value=0.5,
        slope_at_inf=None,
    ),
    "total_variation_smoothed": ConvexScalar(
        "total_variation_smoothed",
        value=_tv_value,
        d1=_tv_d1,
        d2=_tv_d2,
        d3=_tv_d3,
        zero_value=0.5 * (np.sqrt(1.0 + TV_SMOOTH_EPS**2) - TV_SMOOTH_EPS),
        slope_at_inf=0.5,
    ),
}

KL = "kl"
BREGMAN = "bregman"
CSISZAR = "csiszar"


@dataclass(frozen=True)
class Divergence:
    """A deviation functional on pairs of states.

    ``kl`` is the extended (unnormalized) Kullback–Leibler deviation
    Σ w·log(w/v) − w + v, which restricts to the standard KL on the simplex
    and equals the Bregman deviation of ``neg_entropy``.
    """

    kind: str
    fn: ConvexScalar | None = None

    def __post_init__(self):
        if self.kind not in (KL, BREGMAN, CSISZAR):
            raise DomainError(f"unknown divergence kind {self.kind!r}")
        if self.kind == KL and self.fn is not None:
            raise DomainError("the KL deviation takes no generator")
        if self.kind != KL and self.fn is None:
            raise DomainError(f"{self.kind} needs a scalar convex function")

    @classmethod
    def kl(cls) -> Divergence:
        return cls(KL)

    @classmethod
    def bregman(cls, generator: str | ConvexScalar) -> Divergence:
        if isinstance(generator, str):
            try:
                generator = GENERATORS[generator]
            except KeyError:
                raise DomainError(f"unknown Bregman generator {generator!r}") from None
        return cls(BREGMAN, generator)

    @classmethod
    def csiszar(cls, f: str | ConvexScalar) -> Divergence:
        if isinstance(f, str):
            try:
                f = CSISZAR_FUNCTIONS[f]
            except KeyError:
                raise DomainError(f"unknown Csiszár function {f!r}") from None
        return cls(CSISZAR, f)

    @property
    def is_kl_like(self) -> bool:
        """True when this deviation is numerically the extended KL."""
        return (
            self.kind == KL
            or (self.kind == BREGMAN and self.fn.name == "neg_entropy")
            or (self.kind == CSISZAR and self.fn.name == "kl")
        )

    @property
    def is_bregman_family(self) -> bool:
        return self.kind in (KL, BREGMAN) or self.is_kl_like


def _check_pair(omega: InformationState, phi: InformationState) -> None:
    if omega.algebra != phi.algebra:
        raise AlgebraMismatch("states live on different algebras")


def _kl_value(w: np.ndarray, v: np.ndarray) -> float:
    if np.any((w > 0) & (v == 0)):
        return float("inf")
    out = v - w  # includes the 0·log0 rows exactly
    both = (w > 0) & (v > 0)
    out = out.astype(float)
    out[both] += w[both] * np.log(w[both] / v[both])
    return float(out.sum())


def _bregman_value(gen: ConvexScalar, w: np.ndarray, v: np.ndarray) -> float:
    if gen.positive_domain:
        if np.any((v == 0) & (w > 0)):
            return float("inf")  # the tangent slope at 0 is -inf
        pos = v > 0
        val = float(gen.value(w).sum() - gen.value(v[pos]).sum())
        val -= float(gen.d1(v[pos]) @ (w[pos] - v[pos]))
        if gen.zero_value is not None:
            val -= gen.zero_value * np.count_nonzero(~pos)
        return val
    return float(gen.value(w).sum() - gen.value(v).sum() - gen.d1(v) @ (w - v))


def _csiszar_value(f: ConvexScalar, w: np.ndarray, v: np.ndarray) -> float:
    pos = v > 0
    val = float((v[pos] * f.value(w[pos] / v[pos])).sum())
    boundary = (~pos) & (w > 0)
    if np.any(boundary):
        if f.slope_at_inf is None:
            return float("inf")
        val += f.slope_at_inf * float(w[boundary].sum())
    return val


def deviation(D: Divergence, omega: InformationState, phi: InformationState) -> float:
    """D(ω, φ) ∈ [0, ∞]; zero exactly when ω = φ."""
    _check_pair(omega, phi)
    w, v = omega.weights, phi.weights
    if D.kind == KL:
        val = _kl_value(w, v)
    elif D.kind == BREGMAN:
        val = _bregman_value(D.fn, w, v)
    else:
        val = _csiszar_value(D.fn, w, v)
    if val < 0:
        if val < -_NEGATIVE_SLACK:
            raise InternalError(f"deviation came out negative ({val}); broken generator")
        val = 0.0
    return val


def gradient_in(
    D: Divergence, slot: str, omega: InformationState, phi: InformationState
) -> np.ndarray:
    """Partial derivatives of D(ω, φ) in the chosen argument's weights.

    Raises :class:`BoundaryError` where the derivative is unbounded (zero
    weights against a log-type deviation).
    """
    _check_pair(omega, phi)
    if slot not in (FIRST, SECOND):
        raise DomainError(f"slot must be 'first' or 'second', got {slot!r}")
    w, v = omega.weights, phi.weights
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if D.kind == KL:
            g = np.log(w / v) if slot == FIRST else 1.0 - w / v
        elif D.kind == BREGMAN:
            gen = D.fn
            g = gen.d1(w) - gen.d1(v) if slot == FIRST else -gen.d2(v) * (w - v)
        else:
            f = D.fn
            t = w / v
            g = f.d1(t) if slot == FIRST else f.value(t) - t * f.d1(t)
    if not np.all(np.isfinite(g)):
        raise BoundaryError(
            f"{D.kind} deviation has an unbounded {slot}-slot derivative "
            "at a boundary state"
        )
    return g
