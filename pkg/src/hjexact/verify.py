"""Residual checks for the Laplace, Hamilton-Jacobi and Schrodinger equations.

Every check returns a :class:`ResidualReport`.  Analytic identities are judged
by a relative tolerance; finite-difference checks are judged by the
convergence order measured in :func:`refinement_study`, with a strict
relative tolerance as the fallback for residuals that vanish to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InconsistentGrids
from .grid import (
    Field,
    GridSpec,
    InteriorMask,
    fd_gradient,
    fd_laplacian,
    norms,
    sample,
    stencil_center_weight,
)
from .model import ConservedOperatorSpec, HarmonicFamily, PhysConsts
from .synth import PotentialSpec, Synthesized, ZeroGauge

ANALYTIC_TOL = 1e-12
FD_EXACT_TOL = 1e-10
RESOLUTION_LIMIT = 0.5

CHECKS = ("Laplace", "HamiltonJacobi", "Schrodinger", "EquivalenceIdentity", "OperatorEigen")


def order_window(order: int) -> tuple:
    return (0.9 * order, 1.1 * order)


@dataclass
class ResidualReport:
    check: str
    family: str
    grid: dict
    h: float
    t: float
    l2: float
    linf: float
    scale: float
    tolerance: float
    order_estimate: float | None = None
    order_window: tuple | None = None
    linf_order_estimate: float | None = None
    warning: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def rel(self) -> float:
        if self.linf == 0.0:
            return 0.0
        if self.scale == 0.0:
            return math.inf
        return self.linf / self.scale

    @property
    def passed(self) -> bool:
        if self.rel <= self.tolerance:
            return True
        if self.order_window is not None and self.order_estimate is not None:
            lo, hi = self.order_window
            if not lo <= self.order_estimate <= hi:
                return False
            # a defect confined to a few nodes barely moves the L2 rate in 2D/3D
            # but stalls the max-norm rate, so both must converge
            e = self.linf_order_estimate
            return e is None or lo <= e <= hi
        return False

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "family": self.family,
            "grid": self.grid,
            "h": self.h,
            "t": self.t,
            "l2": self.l2,
            "linf": self.linf,
            "scale": self.scale,
            "rel": self.rel,
            "tolerance": self.tolerance,
            "order_estimate": self.order_estimate,
            "order_window": list(self.order_window) if self.order_window else None,
            "linf_order_estimate": self.linf_order_estimate,
            "pass": self.passed,
            "warning": self.warning,
            "extras": self.extras,
        }


def _report(check, family, grid, t, residual: np.ndarray, mask, scale, tolerance, **kw):
    f = Field(grid, residual)
    l2, linf = norms(f, mask)
    return ResidualReport(
        check=check,
        family=getattr(family, "tag", str(family)),
        grid=grid.summary(),
        h=max(grid.h),
        t=float(t),
        l2=l2,
        linf=linf,
        scale=float(scale),
        tolerance=tolerance,
        **kw,
    )


def _resolution_warning(ev, grid: GridSpec, consts: PhysConsts) -> str | None:
    worst = []
    for ax, h in enumerate(grid.h):
        ratio = h * float(np.max(np.abs(ev.gradS[ax]))) / consts.hbar
        if ratio > RESOLUTION_LIMIT:
            worst.append(f"axis {ax}: h*|dS|/hbar = {ratio:.3g}")
    return "under-resolved phase (" + "; ".join(worst) + ")" if worst else None


# -- Laplace -----------------------------------------------------------------


def laplace_residual(family: HarmonicFamily, grid: GridSpec, t: float, order: int = 2,
                     consts: PhysConsts = PhysConsts(), tolerance: float = FD_EXACT_TOL) -> ResidualReport:
    """Discrete Laplacian of sampled S over the interior.

    The scale is the largest single term entering the stencil,
    ``w_center * max|S| / h_min**2``, so the relative residual measures how far
    the stencil sum is from cancelling at round-off level.
    """
    S = sample(lambda X, tt: family.evaluate(X, tt, consts).S, grid, t)
    lap = fd_laplacian(S, order)
    mask = InteriorMask.for_order(order)
    scale = stencil_center_weight(order) * float(np.max(np.abs(S.values))) / min(grid.h) ** 2
    return _report("Laplace", family, grid, t, lap.values, mask, scale, tolerance)


# -- Hamilton-Jacobi ---------------------------------------------------------


def hj_residual_values(family: HarmonicFamily, potential: PotentialSpec, gauge, coords, t: float,
                       consts: PhysConsts = PhysConsts()):
    """Point-wise (1/2m)|grad S - (e/c)A|**2 + V + dS/dt and its magnitude scale."""
    X = np.asarray(coords, dtype=float)
    ev = family.evaluate(X, t, consts)
    gauge = gauge or ZeroGauge()
    kin_free = np.sum(ev.gradS**2, axis=0) / (2 * consts.m)
    if isinstance(gauge, ZeroGauge):
        kinetic = kin_free
    else:
        shifted = ev.gradS - (consts.e / consts.c) * gauge.vector_potential(X)
        kinetic = np.sum(shifted**2, axis=0) / (2 * consts.m)
    V = np.broadcast_to(potential.evaluate(X, t, consts), kinetic.shape)
    res = kinetic + V + ev.dSdt
    scale = np.maximum.reduce([np.abs(ev.dSdt), kin_free, kinetic, np.abs(V)])
    return res, scale


def hj_residual(family: HarmonicFamily, potential: PotentialSpec, gauge, grid: GridSpec, t: float,
                consts: PhysConsts = PhysConsts(), tolerance: float = ANALYTIC_TOL) -> ResidualReport:
    """Hamilton-Jacobi residual from analytic derivatives at every node."""
    res, scale = hj_residual_values(family, potential, gauge, grid.coords(), t, consts)
    return _report("HamiltonJacobi", family, grid, t, res, InteriorMask(0), float(np.max(scale)), tolerance)


# -- Schrodinger -------------------------------------------------------------


def _schrodinger_terms(family, potential, gauge, grid, t, order, consts):
    """Residual field of the Schrodinger equation for psi = exp(iS/hbar) and its scale field."""
    X = grid.coords()
    ev = family.evaluate(X, t, consts)
    hb, m = consts.hbar, consts.m
    psi = np.exp(1j * ev.S / hb)
    psi_f = Field(grid, psi)
    lap = fd_laplacian(psi_f, order).values
    dpsi_dt = (1j / hb) * ev.dSdt * psi
    V = np.broadcast_to(potential.evaluate(X, t, consts), grid.shape)
    kinetic = -(hb**2 / (2 * m)) * lap
    res = kinetic + V * psi - 1j * hb * dpsi_dt
    scale_field = np.abs(kinetic) + np.abs(V * psi) + hb * np.abs(dpsi_dt)
    gauge = gauge or ZeroGauge()
    if not isinstance(gauge, ZeroGauge):
        A = gauge.vector_potential(X)
        grad = np.stack([g.values for g in fd_gradient(psi_f, order)])
        cross = (1j * hb * consts.e / (m * consts.c)) * np.sum(A * grad, axis=0)
        quad = (consts.e**2 / (2 * m * consts.c**2)) * np.sum(A**2, axis=0) * psi
        res = res + cross + quad
        scale_field = scale_field + np.abs(cross) + np.abs(quad)
    keep = InteriorMask.for_order(order).array(grid)
    res = np.where(keep, res, 0)
    scale = float(np.max(scale_field[keep]))
    return ev, psi, res, scale


def schrodinger_residual_field(family: HarmonicFamily, potential: PotentialSpec, gauge, grid: GridSpec,
                               t: float, order: int = 2, consts: PhysConsts = PhysConsts()) -> Field:
    """Residual values (zero on the masked rim) behind :func:`schrodinger_residual`."""
    return Field(grid, _schrodinger_terms(family, potential, gauge, grid, t, order, consts)[2])


def schrodinger_residual(family: HarmonicFamily, potential: PotentialSpec, gauge, grid: GridSpec,
                         t: float, order: int = 2, consts: PhysConsts = PhysConsts(),
                         tolerance: float = FD_EXACT_TOL) -> ResidualReport:
    """-(hbar^2/2m)(grad - ieA/hbar c)^2 psi + V psi - i hbar dpsi/dt with psi = exp(iS/hbar).

    Spatial derivatives use centered stencils; dpsi/dt = (i/hbar)(dS/dt) psi is
    analytic so only spatial truncation error remains.  The gauge term is
    expanded using div A = 0.
    """
    ev, _, res, scale = _schrodinger_terms(family, potential, gauge, grid, t, order, consts)
    return _report(
        "Schrodinger", family, grid, t, res, InteriorMask.for_order(order), scale, tolerance,
        warning=_resolution_warning(ev, grid, consts),
    )


def equivalence_identity_check(action: HarmonicFamily, grid: GridSpec, t: float, order: int = 2,
                               consts: PhysConsts = PhysConsts(),
                               tolerance: float = FD_EXACT_TOL) -> ResidualReport:
    """Schrodinger residual of exp(iS/hbar) minus -(i hbar/2m)(lap S) psi.

    V is synthesized from S itself, so the Hamilton-Jacobi part closes exactly
    and the Schrodinger residual must reduce to the Laplacian term.  Both
    sides are reported in ``extras`` so a vanishing difference can be told
    apart from two vanishing sides.
    """
    ev, psi, side_a, scale = _schrodinger_terms(
        action, Synthesized(action), ZeroGauge(), grid, t, order, consts
    )
    keep = InteriorMask.for_order(order).array(grid)
    side_b = np.where(keep, -(1j * consts.hbar / (2 * consts.m)) * ev.lapS * psi, 0)
    mask = InteriorMask.for_order(order)
    a_linf = norms(Field(grid, side_a), mask)[1]
    b_linf = norms(Field(grid, side_b), mask)[1]
    return _report(
        "EquivalenceIdentity", action, grid, t, side_a - side_b, mask, scale, tolerance,
        warning=_resolution_warning(ev, grid, consts),
        extras={
            "schrodinger_linf": a_linf,
            "laplacian_term_linf": b_linf,
            "schrodinger_rel": a_linf / scale if scale else 0.0,
            "laplacian_term_rel": b_linf / scale if scale else 0.0,
        },
    )


# -- conserved operators -----------------------------------------------------


def operator_eigencheck(opspec: ConservedOperatorSpec, family: HarmonicFamily, grid: GridSpec,
                        t: float, order: int = 2, consts: PhysConsts = PhysConsts(),
                        analytic: bool = False, tolerance: float | None = None) -> ResidualReport:
    """Residual of ``O(t) psi - eigenvalue * psi``.

    With ``analytic=True`` the momentum acts through grad S (no stencil) and
    the residual is the scalar identity a dS + b x + c - eigenvalue, which
    must vanish to round-off.
    """
    X = grid.coords()
    ev = family.evaluate(X, t, consts)
    a = opspec.a.real_value(t)
    b = opspec.b.real_value(t)
    c = opspec.c.real_value(t)
    lam = opspec.eigenvalue
    x = X[opspec.axis]
    extras = {"operator": opspec.label, "axis": opspec.axis, "eigenvalue": lam}
    if analytic:
        momentum = a * ev.gradS[opspec.axis]
        res = momentum + b * x + c - lam
        scale = abs(lam) + float(np.max(np.abs(momentum)))
        tol = ANALYTIC_TOL if tolerance is None else tolerance
        return _report("OperatorEigen", family, grid, t, res, InteriorMask(0), scale, tol,
                       extras={**extras, "mode": "analytic"})
    hb = consts.hbar
    psi = np.exp(1j * ev.S / hb)
    dpsi = fd_gradient(Field(grid, psi), order)[opspec.axis].values
    res = a * (-1j * hb * dpsi) + (b * x + c - lam) * psi
    keep = InteriorMask.for_order(order).array(grid)
    res = np.where(keep, res, 0)
    scale = abs(lam) + float(np.max(np.abs(a * hb * dpsi[keep])))
    tol = FD_EXACT_TOL if tolerance is None else tolerance
    return _report("OperatorEigen", family, grid, t, res, InteriorMask.for_order(order), scale, tol,
                   warning=_resolution_warning(ev, grid, consts), extras={**extras, "mode": "fd"})


# -- refinement --------------------------------------------------------------


@dataclass
class RefinementResult:
    reports: list
    order_estimate: float | None
    window: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def pair_orders(self) -> list:
        return [r.order_estimate for r in self.reports[1:]]


def refinement_levels(base: GridSpec, levels: int = 3) -> list:
    grids = [base]
    for _ in range(levels - 1):
        grids.append(grids[-1].refined(2))
    return grids


def _check_grids(grids: Sequence[GridSpec]):
    if len(grids) < 3:
        raise InconsistentGrids(f"refinement needs at least 3 grids, got {len(grids)}")
    for coarse, fine in zip(grids, grids[1:]):
        if coarse.dim != fine.dim:
            raise InconsistentGrids("grids differ in dimension")
        for a, b in zip(coarse.axes, fine.axes):
            if (a.min, a.max) != (b.min, b.max):
                raise InconsistentGrids("grids cover different boxes")
            if b.n - 1 != 2 * (a.n - 1):
                raise InconsistentGrids(f"n-1 must double between levels, got {a.n} -> {b.n}")


def refinement_study(check: Callable[[GridSpec], ResidualReport], grids: Sequence[GridSpec],
                     order: int = 2, window: tuple | None = None) -> RefinementResult:
    """Run ``check`` on each grid and estimate the convergence order.

    Pair estimates are ``log2(l2_coarse / l2_fine)``, with the same ratio of
    max norms kept alongside.  Report ``i`` carries the estimates of pair
    ``(i-1, i)``; the coarsest report carries the first pair's.  Pairs whose
    residuals both sit within tolerance (vanishing to round-off) have no
    meaningful order and are left as None.
    """
    _check_grids(grids)
    window = window or order_window(order)
    reports = [check(g) for g in grids]
    pairs, linf_pairs = [], []
    for coarse, fine in zip(reports, reports[1:]):
        if coarse.rel <= coarse.tolerance and fine.rel <= fine.tolerance:
            pairs.append(None)
            linf_pairs.append(None)
        else:
            pairs.append(_log2_ratio(coarse.l2, fine.l2))
            linf_pairs.append(_log2_ratio(coarse.linf, fine.linf))
    estimates = [pairs[0]] + pairs
    linf_estimates = [linf_pairs[0]] + linf_pairs
    out = [
        replace(r, order_estimate=e, linf_order_estimate=le, order_window=window)
        for r, e, le in zip(reports, estimates, linf_estimates)
    ]
    finite = [p for p in pairs if p is not None and math.isfinite(p)]
    overall = float(np.mean(finite)) if finite else None
    return RefinementResult(out, overall, window)


def _log2_ratio(coarse: float, fine: float) -> float:
    if fine == 0.0:
        return math.inf
    if coarse == 0.0:
        return -math.inf
    return math.log2(coarse / fine)
