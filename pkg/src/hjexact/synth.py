"""Potentials built from an action S, closed-form reference potentials, and psi = exp(iS/hbar)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import DimensionMismatch, SingularPoint
from .model import (
    Composite,
    ConstantForce1D,
    Free1D,
    GrowingForce1D,
    HarmonicFamily,
    LogCentral2D,
    PhysConsts,
    RepulsiveOscillator2D,
    family_from_json,
    family_to_json,
)

# -- gauge fields ------------------------------------------------------------


@dataclass(frozen=True)
class ZeroGauge:
    kind: ClassVar[str] = "zero"

    def vector_potential(self, coords) -> np.ndarray:
        return np.zeros_like(np.asarray(coords, dtype=float))

    def to_json(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class UniformB:
    """Symmetric gauge A = (-B y/2, B x/2, 0); divergence-free."""

    B: float = 1.0
    kind: ClassVar[str] = "uniform_b"

    def vector_potential(self, coords) -> np.ndarray:
        X = np.asarray(coords, dtype=float)
        if X.shape[0] < 2:
            raise DimensionMismatch("UniformB needs at least two dimensions")
        A = np.zeros_like(X)
        A[0] = -self.B * X[1] / 2
        A[1] = self.B * X[0] / 2
        return A

    def to_json(self):
        return {"kind": self.kind, "B": self.B}


GaugeField = ZeroGauge | UniformB


def gauge_from_json(obj) -> GaugeField:
    if obj is None or obj.get("kind", "zero") == "zero":
        return ZeroGauge()
    if obj["kind"] == "uniform_b":
        return UniformB(float(obj["B"]))
    raise KeyError(f"unknown gauge kind {obj['kind']!r}")


# -- potentials --------------------------------------------------------------


def synthesized_values(family: HarmonicFamily, gauge, consts: PhysConsts, coords, t: float) -> np.ndarray:
    """V = -dS/dt - |grad S - (e/c) A|**2 / 2m on an array of points."""
    ev = family.evaluate(coords, t, consts)
    if isinstance(gauge, ZeroGauge):
        return -ev.dSdt - np.sum(ev.gradS**2, axis=0) / (2 * consts.m)
    kinetic = ev.gradS - (consts.e / consts.c) * gauge.vector_potential(coords)
    return -ev.dSdt - np.sum(kinetic**2, axis=0) / (2 * consts.m)


class PotentialSpec:
    """Anything evaluable as V(coords, t) on arrays of shape ``(dim, ...)``."""

    dim: int | None = None

    def evaluate(self, coords, t: float, consts: PhysConsts) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Synthesized(PotentialSpec):
    family: HarmonicFamily
    gauge: object = ZeroGauge()

    @property
    def dim(self):
        return self.family.dim

    def evaluate(self, coords, t, consts):
        return synthesized_values(self.family, self.gauge, consts, coords, t)

    def to_json(self):
        return {
            "kind": "synthesized",
            "family": family_to_json(self.family),
            "gauge": self.gauge.to_json(),
        }


@dataclass(frozen=True)
class UniformForce(PotentialSpec):
    """V = -F x."""

    F: float
    dim: ClassVar[int] = 1

    def evaluate(self, coords, t, consts):
        (x,) = np.asarray(coords, dtype=float)
        return -self.F * x

    def to_json(self):
        return {"kind": "catalog", "tag": "UniformForce", "params": {"F": self.F}}


@dataclass(frozen=True)
class GrowingForce(PotentialSpec):
    """V = -k t x."""

    k: float
    dim: ClassVar[int] = 1

    def evaluate(self, coords, t, consts):
        (x,) = np.asarray(coords, dtype=float)
        return -self.k * t * x

    def to_json(self):
        return {"kind": "catalog", "tag": "GrowingForce", "params": {"k": self.k}}


@dataclass(frozen=True)
class RepulsiveOsc(PotentialSpec):
    """V = -(m w**2 / 2)(x**2 + y**2); ``m`` defaults to the run's mass."""

    omega: float
    m: float | None = None
    dim: ClassVar[int] = 2

    def evaluate(self, coords, t, consts):
        x, y = np.asarray(coords, dtype=float)
        m = consts.m if self.m is None else self.m
        return -(m * self.omega**2 / 2) * (x**2 + y**2)

    def to_json(self):
        params = {"omega": self.omega}
        if self.m is not None:
            params["m"] = self.m
        return {"kind": "catalog", "tag": "RepulsiveOsc", "params": params}


@dataclass(frozen=True)
class InverseSquare(PotentialSpec):
    """V = -k / (x**2 + y**2)."""

    k: float
    dim: ClassVar[int] = 2

    def evaluate(self, coords, t, consts):
        x, y = np.asarray(coords, dtype=float)
        r2 = x**2 + y**2
        if np.any(r2 == 0):
            raise SingularPoint("InverseSquare potential is singular at the origin")
        return -self.k / r2

    def to_json(self):
        return {"kind": "catalog", "tag": "InverseSquare", "params": {"k": self.k}}


@dataclass(frozen=True)
class CompositeSum(PotentialSpec):
    """Sum of block potentials, each reading its own axis slice."""

    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple((p, int(o)) for p, o in self.blocks))

    @property
    def dim(self):
        return max(o + p.dim for p, o in self.blocks)

    def evaluate(self, coords, t, consts):
        X = np.asarray(coords, dtype=float)
        total = np.zeros(X.shape[1:])
        for pot, off in self.blocks:
            total = total + pot.evaluate(X[off:off + pot.dim], t, consts)
        return total

    def to_json(self):
        return {
            "kind": "catalog",
            "tag": "CompositeSum",
            "blocks": [{"potential": p.to_json(), "offset": o} for p, o in self.blocks],
        }


@dataclass(frozen=True)
class Perturbed(PotentialSpec):
    """``base`` with the value at the node nearest ``point`` scaled by ``1 + rel``.

    Only nodes within ``tol`` of ``point`` on every axis are touched, so the
    perturbation lands on one grid node when ``point`` is a node.
    """

    base: PotentialSpec
    point: tuple
    rel: float = 1e-3
    tol: float = 1e-9

    @property
    def dim(self):
        return self.base.dim

    def evaluate(self, coords, t, consts):
        X = np.asarray(coords, dtype=float)
        V = np.array(self.base.evaluate(X, t, consts), dtype=float)
        hit = np.ones(X.shape[1:], dtype=bool)
        for ax, p in enumerate(self.point):
            hit &= np.abs(X[ax] - p) <= self.tol
        return np.where(hit, V * (1 + self.rel), V)

    def to_json(self):
        return {
            "kind": "perturbed",
            "base": self.base.to_json(),
            "point": list(self.point),
            "rel": self.rel,
        }


CATALOG = {
    "UniformForce": UniformForce,
    "GrowingForce": GrowingForce,
    "RepulsiveOsc": RepulsiveOsc,
    "InverseSquare": InverseSquare,
}


def potential_from_json(obj: dict, default_family: HarmonicFamily | None = None) -> PotentialSpec:
    kind = obj.get("kind", "synthesized")
    if kind == "synthesized":
        fam = family_from_json(obj["family"]) if "family" in obj else default_family
        if fam is None:
            raise KeyError("synthesized potential needs a family")
        return Synthesized(fam, gauge_from_json(obj.get("gauge")))
    if kind == "catalog":
        tag = obj["tag"]
        if tag == "CompositeSum":
            return CompositeSum(
                tuple((potential_from_json(b["potential"]), b.get("offset", 0)) for b in obj["blocks"])
            )
        if tag not in CATALOG:
            raise KeyError(f"unknown catalog potential {tag!r}")
        return CATALOG[tag](**obj.get("params", {}))
    if kind == "perturbed":
        return Perturbed(
            potential_from_json(obj["base"], default_family), tuple(obj["point"]), obj.get("rel", 1e-3)
        )
    raise KeyError(f"unknown potential kind {kind!r}")


def matching_catalog(family: HarmonicFamily) -> PotentialSpec | None:
    """Closed-form potential that the family's action solves, if one is catalogued."""
    if isinstance(family, Free1D):
        return UniformForce(0.0)
    if isinstance(family, ConstantForce1D):
        return UniformForce(family.F)
    if isinstance(family, GrowingForce1D):
        return GrowingForce(family.k)
    if isinstance(family, RepulsiveOscillator2D):
        return RepulsiveOsc(family.omega)
    if isinstance(family, LogCentral2D):
        return InverseSquare(family.k)
    if isinstance(family, Composite):
        blocks = []
        for fam, off in family.blocks:
            pot = matching_catalog(fam)
            if pot is None:
                return None
            blocks.append((pot, off))
        return CompositeSum(tuple(blocks))
    return None


# -- point-wise entry points -------------------------------------------------


def _point(x, dim):
    X = np.atleast_1d(np.asarray(x, dtype=float))
    if X.ndim != 1 or (dim is not None and X.shape[0] != dim):
        raise DimensionMismatch(f"expected a point of dimension {dim}, got shape {X.shape}")
    return X


def synth_potential(family: HarmonicFamily, gauge, consts: PhysConsts, x, t: float) -> float:
    X = _point(x, family.dim)
    return float(synthesized_values(family, gauge, consts, X, t))


def catalog_potential(spec: PotentialSpec, x, t: float, consts: PhysConsts | None = None) -> float:
    X = _point(x, spec.dim)
    return float(spec.evaluate(X, t, consts or PhysConsts()))


def wavefunction_values(family: HarmonicFamily, consts: PhysConsts, coords, t: float) -> np.ndarray:
    return np.exp(1j * family.evaluate(coords, t, consts).S / consts.hbar)


def exact_wavefunction(family: HarmonicFamily, consts: PhysConsts, x, t: float) -> complex:
    X = _point(x, family.dim)
    return complex(wavefunction_values(family, consts, X, t))
