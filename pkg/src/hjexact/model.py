"""Catalog of harmonic action functions S(x, t) with closed-form derivatives.

Every family evaluates S, grad S, dS/dt and the Laplacian of S analytically.
Evaluation is vectorized: ``coords`` is an array of shape ``(dim, ...)`` and
every returned quantity broadcasts over the trailing shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import DimensionMismatch, SingularPoint
from .timecoef import TimeCoefficient


@dataclass(frozen=True)
class PhysConsts:
    hbar: float = 1.0
    m: float = 1.0
    e: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    def to_json(self) -> dict:
        return {"hbar": self.hbar, "m": self.m, "e": self.e, "c": self.c}


@dataclass
class ActionEval:
    S: np.ndarray
    gradS: np.ndarray
    dSdt: np.ndarray
    lapS: np.ndarray


@dataclass(frozen=True)
class ConservedOperatorSpec:
    """``O(t) = a(t) (-i hbar d/dx_axis) + b(t) x_axis + c(t)`` with a known eigenvalue."""

    axis: int
    a: TimeCoefficient
    b: TimeCoefficient
    c: TimeCoefficient
    eigenvalue: float
    label: str = ""

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not getattr(self, name).is_real:
                raise ValueError(f"operator weight {name} must be real-valued")

    def shifted(self, offset: int) -> "ConservedOperatorSpec":
        return ConservedOperatorSpec(
            self.axis + offset, self.a, self.b, self.c, self.eigenvalue, self.label
        )


def _coords(coords, dim: int) -> np.ndarray:
    X = np.asarray(coords, dtype=float)
    if X.ndim == 0 or X.shape[0] != dim:
        raise DimensionMismatch(
            f"expected {dim} coordinate component(s), got shape {X.shape}"
        )
    return X


class HarmonicFamily:
    """Base for action functions; subclasses are frozen dataclasses."""

    tag: ClassVar[str] = ""
    dim: ClassVar[int] = 0
    harmonic: ClassVar[bool] = True

    def evaluate(self, coords, t: float, consts: PhysConsts) -> ActionEval:
        raise NotImplementedError

    def conserved_operators(self, consts: PhysConsts) -> list[ConservedOperatorSpec]:
        return []

    def params_json(self) -> dict:
        raise NotImplementedError

    @property
    def ndim(self) -> int:
        return self.dim


# -- one dimension -----------------------------------------------------------


@dataclass(frozen=True)
class Free1D(HarmonicFamily):
    """S = P x - P**2 t / 2m."""

    P: float = 0.0
    tag: ClassVar[str] = "Free1D"
    dim: ClassVar[int] = 1

    def evaluate(self, coords, t, consts):
        (x,) = _coords(coords, 1)
        P, m = self.P, consts.m
        S = P * x - P**2 * t / (2 * m)
        grad = np.full((1,) + x.shape, P, dtype=float)
        dSdt = np.full(x.shape, -(P**2) / (2 * m))
        return ActionEval(S, grad, dSdt, np.zeros(x.shape))

    def conserved_operators(self, consts):
        one, zero = TimeCoefficient.constant(1.0), TimeCoefficient()
        return [ConservedOperatorSpec(0, one, zero, zero, self.P, "p")]

    def params_json(self):
        return {"P": self.P}


@dataclass(frozen=True)
class ConstantForce1D(HarmonicFamily):
    """S = (Ft + P) x - (Ft + P)**3 / 6mF, potential -F x."""

    F: float = 1.0
    P: float = 0.0
    tag: ClassVar[str] = "ConstantForce1D"
    dim: ClassVar[int] = 1

    def __post_init__(self):
        if self.F == 0:
            raise ValueError("ConstantForce1D requires F != 0; use Free1D")

    def evaluate(self, coords, t, consts):
        (x,) = _coords(coords, 1)
        F, m = self.F, consts.m
        alpha = F * t + self.P
        S = alpha * x - alpha**3 / (6 * m * F)
        grad = np.broadcast_to(np.asarray(alpha, dtype=float), x.shape)[None].copy()
        dSdt = F * x - alpha**2 / (2 * m)
        return ActionEval(S, grad, dSdt, np.zeros(x.shape))

    def conserved_operators(self, consts):
        one, zero = TimeCoefficient.constant(1.0), TimeCoefficient()
        c = TimeCoefficient.monomial(-self.F, 1)
        return [ConservedOperatorSpec(0, one, zero, c, self.P, "p - F t")]

    def params_json(self):
        return {"F": self.F, "P": self.P}


@dataclass(frozen=True)
class GrowingForce1D(HarmonicFamily):
    """S = (k t**2/2 + P) x - (k**2 t**5/20 + k P t**3/3 + P**2 t) / 2m, potential -k t x."""

    k: float = 1.0
    P: float = 0.0
    tag: ClassVar[str] = "GrowingForce1D"
    dim: ClassVar[int] = 1

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("GrowingForce1D requires k != 0; use Free1D")

    def evaluate(self, coords, t, consts):
        (x,) = _coords(coords, 1)
        k, P, m = self.k, self.P, consts.m
        alpha = k * t**2 / 2 + P
        beta = -(k**2 * t**5 / 20 + k * P * t**3 / 3 + P**2 * t) / (2 * m)
        S = alpha * x + beta
        grad = np.broadcast_to(np.asarray(alpha, dtype=float), x.shape)[None].copy()
        dSdt = k * t * x - alpha**2 / (2 * m)
        return ActionEval(S, grad, dSdt, np.zeros(x.shape))

    def conserved_operators(self, consts):
        one, zero = TimeCoefficient.constant(1.0), TimeCoefficient()
        c = TimeCoefficient.monomial(-self.k / 2, 2)
        return [ConservedOperatorSpec(0, one, zero, c, self.P, "p - k t^2/2")]

    def params_json(self):
        return {"k": self.k, "P": self.P}


def linear1d_beta(alpha: TimeCoefficient, m: float, beta0: float = 0.0) -> TimeCoefficient:
    """beta(t) = beta0 - (1/2m) int_0^t alpha(s)**2 ds, exact within the term algebra."""
    if not alpha.is_real:
        raise ValueError("alpha must be real-valued")
    return beta0 - (alpha * alpha).antiderivative() * (1.0 / (2 * m))


@dataclass(frozen=True)
class GeneralLinear1D(HarmonicFamily):
    """S = alpha(t) x + beta(t), beta chosen so the potential is -alpha'(t) x.

    ``beta0`` shifts S by a constant: a global phase of psi, no change in V.
    """

    alpha: TimeCoefficient = field(default_factory=TimeCoefficient)
    beta0: float = 0.0
    tag: ClassVar[str] = "GeneralLinear1D"
    dim: ClassVar[int] = 1

    def __post_init__(self):
        if not self.alpha.is_real:
            raise ValueError("alpha must be real-valued")

    def beta(self, m: float) -> TimeCoefficient:
        return linear1d_beta(self.alpha, m, self.beta0)

    def evaluate(self, coords, t, consts):
        (x,) = _coords(coords, 1)
        beta = self.beta(consts.m)
        a = self.alpha.real_value(t)
        S = a * x + beta.real_value(t)
        grad = np.broadcast_to(np.asarray(a, dtype=float), x.shape)[None].copy()
        dSdt = self.alpha.derivative().real_value(t) * x + beta.derivative().real_value(t)
        return ActionEval(S, grad, dSdt, np.zeros(x.shape))

    def conserved_operators(self, consts):
        a0 = self.alpha.real_value(0.0)
        one, zero = TimeCoefficient.constant(1.0), TimeCoefficient()
        c = a0 - self.alpha
        return [ConservedOperatorSpec(0, one, zero, c, a0, "p - (alpha(t) - alpha(0))")]

    def params_json(self):
        return {"alpha": self.alpha.to_json(), "beta0": self.beta0}


# -- two dimensions ----------------------------------------------------------


def analytic2d_derivatives(coeffs, x, y, t):
    """Evaluate f = sum_j c_j(t) z**j, f' = df/dz and df/dt at z = x + iy.

    Returns ``(f, fprime, dfdt)``.  With S = Re f the Cauchy-Riemann relations
    give dS/dx = Re f', dS/dy = -Im f' and dS/dt = Re df/dt.
    """
    coeffs = list(coeffs)
    if not coeffs:
        raise ValueError("coeffs must be nonempty")
    z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    c = [complex(cj(t)) for cj in coeffs]
    dc = [complex(cj.derivative()(t)) for cj in coeffs]
    f = np.zeros_like(z)
    fp = np.zeros_like(z)
    dfdt = np.zeros_like(z)
    # Horner in z for all three sums
    for j in range(len(c) - 1, -1, -1):
        f = f * z + c[j]
        dfdt = dfdt * z + dc[j]
        if j >= 1:
            fp = fp * z + j * c[j]
    return f, fp, dfdt


@dataclass(frozen=True)
class AnalyticPoly2D(HarmonicFamily):
    """S = Re sum_j c_j(t) z**j with z = x + iy."""

    coeffs: tuple = ()
    tag: ClassVar[str] = "AnalyticPoly2D"
    dim: ClassVar[int] = 2

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if not self.coeffs:
            raise ValueError("AnalyticPoly2D needs at least one coefficient")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, coords, t, consts):
        x, y = _coords(coords, 2)
        f, fp, dfdt = analytic2d_derivatives(self.coeffs, x, y, t)
        grad = np.stack([fp.real, -fp.imag])
        return ActionEval(f.real, grad, dfdt.real, np.zeros(x.shape))

    def params_json(self):
        return {"coeffs": [c.to_json() for c in self.coeffs]}


@dataclass(frozen=True)
class RepulsiveOscillator2D(HarmonicFamily):
    """S = (m w/2)(x**2 - y**2) + P1 e^{-wt} x + P2 e^{wt} y + (P1**2 e^{-2wt} - P2**2 e^{2wt}) / 4mw."""

    omega: float = 1.0
    P1: float = 0.0
    P2: float = 0.0
    tag: ClassVar[str] = "RepulsiveOscillator2D"
    dim: ClassVar[int] = 2

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    def evaluate(self, coords, t, consts):
        x, y = _coords(coords, 2)
        w, m = self.omega, consts.m
        a = self.P1 * math.exp(-w * t)
        b = self.P2 * math.exp(w * t)
        S = m * w / 2 * (x**2 - y**2) + a * x + b * y + (a**2 - b**2) / (4 * m * w)
        grad = np.stack([m * w * x + a, -m * w * y + b])
        dSdt = -w * a * x + w * b * y - (a**2 + b**2) / (2 * m)
        # d2S/dx2 + d2S/dy2 = m w - m w
        lap = np.full(x.shape, m * w - m * w)
        return ActionEval(S, grad, dSdt, lap)

    def as_analytic(self, consts: PhysConsts) -> AnalyticPoly2D:
        """The same action written as Re f(z, t) with polynomial f."""
        w, m = self.omega, consts.m
        g = TimeCoefficient(((self.P1, 0, -w), (-1j * self.P2, 0, w)))
        return AnalyticPoly2D((g * g * (1 / (4 * m * w)), g, TimeCoefficient.constant(m * w / 2)))

    def conserved_operators(self, consts):
        w, m = self.omega, consts.m
        zero = TimeCoefficient()
        ex = TimeCoefficient.monomial(1.0, 0, w)
        emx = TimeCoefficient.monomial(1.0, 0, -w)
        return [
            ConservedOperatorSpec(0, ex, ex * (-m * w), zero, self.P1, "e^{wt}(px - m w x)"),
            ConservedOperatorSpec(1, emx, emx * (m * w), zero, self.P2, "e^{-wt}(py + m w y)"),
        ]

    def params_json(self):
        return {"omega": self.omega, "P1": self.P1, "P2": self.P2}


@dataclass(frozen=True)
class LogCentral2D(HarmonicFamily):
    """S = sqrt(mk/2) ln(x**2 + y**2); no free parameters, time-independent."""

    k: float = 1.0
    tag: ClassVar[str] = "LogCentral2D"
    dim: ClassVar[int] = 2

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")

    def evaluate(self, coords, t, consts):
        x, y = _coords(coords, 2)
        r2 = x**2 + y**2
        if np.any(r2 == 0):
            raise SingularPoint("LogCentral2D is singular at the origin")
        amp = math.sqrt(consts.m * self.k / 2)
        S = amp * np.log(r2)
        grad = np.stack([2 * amp * x / r2, 2 * amp * y / r2])
        # Re ln z is harmonic away from the origin
        return ActionEval(S, grad, np.zeros(x.shape), np.zeros(x.shape))

    def params_json(self):
        return {"k": self.k}


# -- composites --------------------------------------------------------------


@dataclass(frozen=True)
class Composite(HarmonicFamily):
    """Sum of families acting on disjoint, contiguous coordinate slices.

    ``blocks`` is a sequence of ``(family, offset)``; block ``i`` reads axes
    ``offset .. offset + family.dim - 1``.  Together the blocks must cover
    every axis exactly once and the total dimension is at most 3.
    """

    blocks: tuple = ()
    tag: ClassVar[str] = "Composite"

    def __post_init__(self):
        blocks = tuple((fam, int(off)) for fam, off in self.blocks)
        if not blocks:
            raise ValueError("Composite needs at least one block")
        covered = []
        for fam, off in blocks:
            if off < 0:
                raise ValueError("negative block offset")
            covered.extend(range(off, off + fam.dim))
        if sorted(covered) != list(range(len(covered))):
            raise ValueError(f"blocks must cover disjoint contiguous axes, got {sorted(covered)}")
        if len(covered) > 3:
            raise ValueError("Composite dimension is limited to 3")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:  # type: ignore[override]
        return sum(fam.dim for fam, _ in self.blocks)

    def evaluate(self, coords, t, consts):
        X = _coords(coords, self.dim)
        shape = X.shape[1:]
        S = np.zeros(shape)
        dSdt = np.zeros(shape)
        lap = np.zeros(shape)
        grad = np.zeros((self.dim,) + shape)
        for fam, off in self.blocks:
            ev = fam.evaluate(X[off:off + fam.dim], t, consts)
            S = S + ev.S
            dSdt = dSdt + ev.dSdt
            lap = lap + ev.lapS
            grad[off:off + fam.dim] = ev.gradS
        return ActionEval(S, grad, dSdt, lap)

    def conserved_operators(self, consts):
        ops = []
        for fam, off in self.blocks:
            ops.extend(op.shifted(off) for op in fam.conserved_operators(consts))
        return ops

    def params_json(self):
        return {
            "blocks": [
                {"family": {"family": fam.tag, "params": fam.params_json()}, "offset": off}
                for fam, off in self.blocks
            ]
        }


# -- non-harmonic test actions -----------------------------------------------


@dataclass(frozen=True)
class PolynomialAction1D(HarmonicFamily):
    """Time-independent S = sum_j coeffs[j] x**j.  Not harmonic for degree >= 2.

    Used to exercise the Schrodinger/Hamilton-Jacobi equivalence identity when
    the Laplacian of S does not vanish.
    """

    coeffs: tuple = (0.0, 0.0, 1.0)
    tag: ClassVar[str] = "PolynomialAction1D"
    dim: ClassVar[int] = 1
    harmonic: ClassVar[bool] = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def evaluate(self, coords, t, consts):
        (x,) = _coords(coords, 1)
        p = np.polynomial.Polynomial(self.coeffs)
        dp = p.deriv()
        lap = dp.deriv()(x) + np.zeros(x.shape)
        return ActionEval(p(x), (dp(x) + np.zeros(x.shape))[None], np.zeros(x.shape), lap)

    def params_json(self):
        return {"coeffs": list(self.coeffs)}


FAMILIES: dict[str, type] = {
    cls.tag: cls
    for cls in (
        Free1D,
        ConstantForce1D,
        GrowingForce1D,
        GeneralLinear1D,
        AnalyticPoly2D,
        RepulsiveOscillator2D,
        LogCentral2D,
        Composite,
        PolynomialAction1D,
    )
}


def eval_action(family: HarmonicFamily, consts: PhysConsts, x, t: float) -> ActionEval:
    """Evaluate S and its derivatives at a single point ``x`` (length ``dim``)."""
    X = np.atleast_1d(np.asarray(x, dtype=float))
    if X.ndim != 1 or X.shape[0] != family.dim:
        raise DimensionMismatch(f"{family.tag} expects a point of dimension {family.dim}, got {X.shape}")
    ev = family.evaluate(X, t, consts)
    return ActionEval(float(ev.S), np.asarray(ev.gradS, dtype=float).reshape(-1), float(ev.dSdt), float(ev.lapS))


# -- JSON --------------------------------------------------------------------


def family_from_json(obj: dict) -> HarmonicFamily:
    """Inverse of :func:`family_to_json` (the ``consts`` key is ignored here)."""
    tag = obj["family"]
    if tag not in FAMILIES:
        raise KeyError(f"unknown family {tag!r}")
    params = dict(obj.get("params", {}))
    if tag == "GeneralLinear1D":
        params["alpha"] = TimeCoefficient.from_json(params.get("alpha", []))
    elif tag == "AnalyticPoly2D":
        params["coeffs"] = tuple(TimeCoefficient.from_json(c) for c in params["coeffs"])
    elif tag == "Composite":
        params["blocks"] = tuple(
            (family_from_json(b["family"]), b.get("offset", 0)) for b in params["blocks"]
        )
    return FAMILIES[tag](**params)


def family_to_json(family: HarmonicFamily, consts: PhysConsts | None = None) -> dict:
    out = {"family": family.tag, "params": family.params_json()}
    if consts is not None:
        out["consts"] = consts.to_json()
    return out
