"""Wave packets superposed over the parameter P, Crank-Nicolson propagation in 1D,
and expansion of states in the exp(iS_P/hbar) basis."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import BoundaryLeak, DimensionMismatch, EmptyInterior, QuadratureTooCoarse
from .grid import Field, GridSpec
from .model import HarmonicFamily, PhysConsts
from .synth import PotentialSpec

BOUNDARY_START_TOL = 1e-8
BOUNDARY_RUN_TOL = 1e-4


@dataclass(frozen=True)
class Quadrature:
    """Trapezoid rule on ``npts`` equally spaced nodes of ``[Pmin, Pmax]``."""

    Pmin: float
    Pmax: float
    npts: int
    rule: str = "trapezoid"

    def __post_init__(self):
        if self.rule != "trapezoid":
            raise ValueError(f"unsupported quadrature rule {self.rule!r}")
        if self.npts < 2 or not self.Pmax > self.Pmin:
            raise ValueError("quadrature needs npts >= 2 and Pmax > Pmin")

    @property
    def dP(self) -> float:
        return (self.Pmax - self.Pmin) / (self.npts - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.Pmin, self.Pmax, self.npts)

    def weights(self) -> np.ndarray:
        w = np.full(self.npts, self.dP)
        w[0] = w[-1] = self.dP / 2
        return w

    def to_json(self):
        return {"Pmin": self.Pmin, "Pmax": self.Pmax, "npts": self.npts, "rule": self.rule}


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian-weighted superposition over P of a one-parameter family.

    The weight is ``exp(-(P - P0)**2 / (2 sigmaP**2))``; summed against
    ``exp(iPx/hbar)`` it gives an envelope of amplitude width ``hbar/sigmaP``.
    """

    family_template: HarmonicFamily
    P0: float
    sigmaP: float
    quadrature: Quadrature

    def __post_init__(self):
        if "P" not in {f.name for f in fields(self.family_template)} or self.family_template.dim != 1:
            raise ValueError("packet template must be a 1D family with a free parameter P")
        if not self.sigmaP > 0:
            raise ValueError("sigmaP must be positive")
        q = self.quadrature
        if q.npts < 51:
            raise ValueError("packet quadrature needs npts >= 51")
        lo, hi = self.P0 - 5 * self.sigmaP, self.P0 + 5 * self.sigmaP
        if q.Pmin > lo or q.Pmax < hi:
            raise ValueError(f"quadrature [{q.Pmin}, {q.Pmax}] must contain [{lo}, {hi}]")

    def weight(self, P):
        return np.exp(-((np.asarray(P) - self.P0) ** 2) / (2 * self.sigmaP**2))

    def amplitudes(self) -> np.ndarray:
        q = self.quadrature
        return q.weights() * self.weight(q.nodes())


def family_with_P(template: HarmonicFamily, P: float) -> HarmonicFamily:
    return replace(template, P=float(P))


def _x_max(grid: GridSpec) -> float:
    a = grid.axes[0]
    return max(abs(a.min), abs(a.max))


def check_aliasing(dP: float, grid: GridSpec, hbar: float) -> None:
    """The P-sum repeats in x with period 2 pi hbar / dP; keep copies off the grid."""
    if dP * _x_max(grid) / hbar > math.pi:
        raise QuadratureTooCoarse(
            f"dP * x_max / hbar = {dP * _x_max(grid) / hbar:.4g} exceeds pi"
        )


def basis_matrix(template: HarmonicFamily, consts: PhysConsts, grid: GridSpec, t: float,
                 P_nodes) -> np.ndarray:
    """Rows are exp(iS(x, t; P_i)/hbar) sampled on the grid."""
    x = grid.coords()
    return np.stack(
        [np.exp(1j * family_with_P(template, P).evaluate(x, t, consts).S / consts.hbar) for P in P_nodes]
    )


def superpose(template: HarmonicFamily, consts: PhysConsts, grid: GridSpec, t: float,
              P_nodes, amplitudes) -> Field:
    """sum_i amplitudes[i] exp(iS(x, t; P_i)/hbar)."""
    if grid.dim != 1:
        raise DimensionMismatch("packets are one-dimensional")
    B = basis_matrix(template, consts, grid, t, P_nodes)
    return Field(grid, np.asarray(amplitudes, dtype=complex) @ B)


def build_packet(spec: PacketSpec, consts: PhysConsts, grid: GridSpec, t: float) -> Field:
    """Exact packet at time ``t``; not normalized."""
    check_aliasing(spec.quadrature.dP, grid, consts.hbar)
    return superpose(spec.family_template, consts, grid, t, spec.quadrature.nodes(), spec.amplitudes())


def gaussian_state(grid: GridSpec, x0: float = 0.0, sigma: float = 1.0, p0: float = 0.0,
                   hbar: float = 1.0) -> Field:
    """Normalized Gaussian; ``sigma`` is the standard deviation of |psi|**2."""
    (x,) = grid.coords()
    psi = (2 * math.pi * sigma**2) ** -0.25 * np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / hbar)
    return Field(grid, psi)


def l2_norm(values: np.ndarray, h: float) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * h))


# -- propagation -------------------------------------------------------------


@dataclass(frozen=True)
class PropagatorConfig:
    """Crank-Nicolson settings; Dirichlet walls and midpoint potential sampling are fixed.

    A negative ``dt`` runs backward in time from ``t0``.
    """

    dt: float
    T: float
    t0: float = 0.0
    snapshot_every: int | None = None

    def __post_init__(self):
        if self.dt == 0 or not self.T >= 0:
            raise ValueError("need dt != 0 and T >= 0")
        steps = self.T / abs(self.dt)
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(f"T/|dt| = {steps} is not an integer")

    @property
    def steps(self) -> int:
        return int(round(self.T / abs(self.dt)))

    @property
    def t_end(self) -> float:
        return self.t0 + math.copysign(self.T, self.dt)


def _leak(values: np.ndarray, tol: float) -> bool:
    peak = np.max(np.abs(values))
    return max(abs(values[0]), abs(values[-1])) > tol * peak


def crank_nicolson_1d(psi0: Field, potential: PotentialSpec, consts: PhysConsts,
                      config: PropagatorConfig,
                      observer: Callable[[float, np.ndarray], None] | None = None) -> Field:
    """Propagate ``psi0`` over ``config.T`` with psi = 0 at both ends.

    Each step solves ``(1 + i dt H/2hbar) psi_new = (1 - i dt H/2hbar) psi``
    with H = -(hbar^2/2m) D2 + V(x, t + dt/2).  The boundary test uses the
    nodes adjacent to the walls.
    """
    grid = psi0.grid
    if grid.dim != 1:
        raise DimensionMismatch("Crank-Nicolson propagation is one-dimensional")
    psi = np.array(psi0.values, dtype=complex)
    if _leak(psi, BOUNDARY_START_TOL):
        raise BoundaryLeak("initial state is not negligible at the boundary")
    if config.steps == 0:
        if observer is not None:
            observer(config.t0, psi)
        return psi0
    x = grid.coords()[:, 1:-1]
    h = grid.h[0]
    hb, m, dt = consts.hbar, consts.m, config.dt
    kin = hb**2 / (2 * m * h**2)
    coef = 1j * dt / (2 * hb)
    u = psi[1:-1].copy()
    n = u.size
    t = config.t0
    ab = np.empty((3, n), dtype=complex)
    if observer is not None:
        observer(t, psi)
    for step in range(config.steps):
        V = np.broadcast_to(potential.evaluate(x, t + dt / 2, consts), (n,))
        diag = 2 * kin + V
        Hu = diag * u
        Hu[1:] -= kin * u[:-1]
        Hu[:-1] -= kin * u[1:]
        rhs = u - coef * Hu
        ab[0, 1:] = -coef * kin
        ab[1] = 1 + coef * diag
        ab[2, :-1] = -coef * kin
        u = solve_banded((1, 1), ab, rhs, check_finite=False)
        t = config.t0 + (step + 1) * dt
        if _leak(u, BOUNDARY_RUN_TOL):
            raise BoundaryLeak(f"|psi| at the boundary exceeded {BOUNDARY_RUN_TOL} of peak at t={t:.6g}")
        if observer is not None and config.snapshot_every and (step + 1) % config.snapshot_every == 0:
            psi[1:-1] = u
            observer(t, psi)
    out = np.zeros_like(psi)
    out[1:-1] = u
    return Field(grid, out)


# -- comparison --------------------------------------------------------------


@dataclass
class CompareReport:
    l2_rel: float
    linf_rel: float
    norm_drift: float
    region: tuple

    def to_json(self):
        return {
            "l2_rel": self.l2_rel,
            "linf_rel": self.linf_rel,
            "norm_drift": self.norm_drift,
            "region": list(self.region),
        }


def align_phase(numeric: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Multiply ``numeric`` by the unit phase minimizing its L2 distance to ``reference``."""
    overlap = np.vdot(numeric, reference)
    if overlap == 0:
        return numeric
    return numeric * (overlap / abs(overlap))


def compare_fields(numeric: Field, reference: Field, region: tuple, reference_norm0: float) -> CompareReport:
    grid = numeric.grid
    (x,) = grid.coords()
    keep = (x >= region[0]) & (x <= region[1])
    if not keep.any():
        raise EmptyInterior(f"region {region} contains no grid nodes")
    num = align_phase(numeric.values[keep], reference.values[keep])
    ref = reference.values[keep]
    diff = num - ref
    h = grid.h[0]
    drift = abs(l2_norm(numeric.values, h) - reference_norm0) / reference_norm0
    return CompareReport(
        l2_rel=l2_norm(diff, h) / l2_norm(ref, h),
        linf_rel=float(np.max(np.abs(diff)) / np.max(np.abs(ref))),
        norm_drift=float(drift),
        region=tuple(region),
    )


def compare_exact(numeric: Field, spec: PacketSpec, consts: PhysConsts, t: float, region: tuple,
                  psi0: Field | None = None) -> CompareReport:
    """Compare a propagated packet with the exact packet at ``t`` over ``region``.

    ``norm_drift`` is measured against ``psi0`` (default: the exact packet at
    ``t = 0`` on the same grid, which is what propagation starts from).
    """
    exact = build_packet(spec, consts, numeric.grid, t)
    start = psi0 if psi0 is not None else build_packet(spec, consts, numeric.grid, 0.0)
    return compare_fields(numeric, exact, region, l2_norm(start.values, numeric.grid.h[0]))


# -- expansion ---------------------------------------------------------------


@dataclass
class Expansion:
    P_nodes: np.ndarray
    coeffs: np.ndarray
    reconstruction: Field
    l2_rel_error: float


def expand_and_reconstruct(target: Field, template: HarmonicFamily, consts: PhysConsts, t: float,
                           quadrature: Quadrature) -> Expansion:
    """Project ``target`` on exp(iS_P/hbar) and resum over the P grid.

    c(P) = (1/2 pi hbar) int conj(psi_P(x, t)) target(x) dx   (trapezoid in x)
    reconstruction = sum_i w_i c(P_i) psi_{P_i}(x, t)
    """
    grid = target.grid
    if grid.dim != 1:
        raise DimensionMismatch("expansion is one-dimensional")
    check_aliasing(quadrature.dP, grid, consts.hbar)
    P = quadrature.nodes()
    B = basis_matrix(template, consts, grid, t, P)
    h = grid.h[0]
    wx = np.full(grid.size, h)
    wx[0] = wx[-1] = h / 2
    coeffs = (B.conj() * wx) @ target.values / (2 * math.pi * consts.hbar)
    recon = (quadrature.weights() * coeffs) @ B
    err = l2_norm(recon - target.values, h) / l2_norm(target.values, h)
    return Expansion(P, coeffs, Field(grid, recon), float(err))
