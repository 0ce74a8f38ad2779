import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjexact.errors import DimensionMismatch, SingularPoint
from hjexact.grid import GridSpec
from hjexact.model import (
    Composite,
    ConstantForce1D,
    Free1D,
    GrowingForce1D,
    LogCentral2D,
    PhysConsts,
    RepulsiveOscillator2D,
)
from hjexact.synth import (
    CompositeSum,
    GrowingForce,
    InverseSquare,
    Perturbed,
    RepulsiveOsc,
    Synthesized,
    UniformB,
    UniformForce,
    ZeroGauge,
    catalog_potential,
    exact_wavefunction,
    matching_catalog,
    potential_from_json,
    synth_potential,
    synthesized_values,
    wavefunction_values,
)
from hjexact.verify import hj_residual_values

ONE = PhysConsts()


def test_free_particle_has_zero_potential():
    assert synth_potential(Free1D(1.7), ZeroGauge(), ONE, [0.4], 2.0) == 0.0


def test_constant_force_potential():
    # V = -F x at F = 1, x = 3, independent of t and P
    assert synth_potential(ConstantForce1D(1.0, 0.0), ZeroGauge(), ONE, [3.0], 2.0) == pytest.approx(-3.0)


def test_oscillator_potential():
    v = synth_potential(RepulsiveOscillator2D(2.0, 0.0, 0.0), ZeroGauge(), ONE, [1.0, 0.0], 0.0)
    assert v == pytest.approx(-2.0)


@pytest.mark.parametrize("k", [0.5, 2.0, 7.0])
def test_log_central_potential_on_unit_circle(k):
    v = synth_potential(LogCentral2D(k), ZeroGauge(), ONE, [np.cos(0.3), np.sin(0.3)], 1.0)
    assert v == pytest.approx(-k)


def test_catalog_examples():
    assert catalog_potential(UniformForce(2.0), [1.5], 0.0) == -3.0
    assert catalog_potential(GrowingForce(3.0), [2.0], 4.0) == -24.0
    comp = CompositeSum(((RepulsiveOsc(1.0), 0), (UniformForce(1.0), 2)))
    assert catalog_potential(comp, [1.0, 1.0, 1.0], 0.0) == pytest.approx(-2.0)


def test_inverse_square_singular_at_origin():
    with pytest.raises(SingularPoint):
        catalog_potential(InverseSquare(1.0), [0.0, 0.0], 0.0)


def test_point_dimension_checked():
    with pytest.raises(DimensionMismatch):
        synth_potential(ConstantForce1D(), ZeroGauge(), ONE, [1.0, 2.0], 0.0)
    with pytest.raises(DimensionMismatch):
        UniformB(1.0).vector_potential(np.zeros((1, 3)))


def test_wavefunction_example():
    psi = exact_wavefunction(ConstantForce1D(1.0, 0.0), ONE, [1.0], 1.0)
    assert psi.real == pytest.approx(np.cos(5 / 6), abs=1e-12)
    assert psi.imag == pytest.approx(np.sin(5 / 6), abs=1e-12)
    assert psi == pytest.approx(0.672412 + 0.740177j, abs=1e-6)


def test_plane_wave_periodicity():
    psi = exact_wavefunction(Free1D(2 * np.pi), ONE, [1.0], 0.0)
    assert psi == pytest.approx(1.0, abs=1e-12)


PAIRS = [
    (ConstantForce1D(1.3, -0.5), GridSpec.uniform(-3.0, 3.0, 257)),
    (GrowingForce1D(0.7, 0.9), GridSpec.uniform(-3.0, 3.0, 257)),
    (RepulsiveOscillator2D(1.1, 0.4, -0.8), GridSpec.uniform(-2.0, 2.0, 65, dim=2)),
    (LogCentral2D(1.9), GridSpec.uniform(0.5, 2.5, 64, dim=2)),
    (
        Composite(((RepulsiveOscillator2D(0.9, 0.2, 0.3), 0), (ConstantForce1D(0.8, 0.1), 2))),
        GridSpec.uniform(-1.0, 1.0, 17, dim=3),
    ),
]


@pytest.mark.parametrize("fam,grid", PAIRS, ids=lambda v: getattr(v, "tag", ""))
@pytest.mark.parametrize("m", [1.0, 1.7])
def test_synthesis_matches_catalog_at_every_node(fam, grid, m):
    consts = PhysConsts(m=m)
    cat = matching_catalog(fam)
    X = grid.coords()
    for t in (0.0, 0.7, 2.0):
        a = synthesized_values(fam, ZeroGauge(), consts, X, t)
        b = cat.evaluate(X, t, consts)
        assert np.all(np.abs(a - b) <= 1e-12 * np.maximum(np.abs(b), 1e-300) + 1e-14)


def test_uniform_b_with_zero_field_reduces_bitwise():
    fam = RepulsiveOscillator2D(1.2, 0.5, -0.5)
    X = GridSpec.uniform(-1.0, 1.0, 9, dim=2).coords()
    a = synthesized_values(fam, ZeroGauge(), ONE, X, 0.4)
    b = synthesized_values(fam, UniformB(0.0), ONE, X, 0.4)
    assert np.array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 3), st.floats(-20, 20))
def test_wavefunction_has_unit_modulus(P, x, t, F):
    fam = ConstantForce1D(F if abs(F) > 1e-3 else 1.0, P)
    assert abs(abs(exact_wavefunction(fam, ONE, [x], t)) - 1.0) <= 1e-15


@pytest.mark.parametrize("gauge", [ZeroGauge(), UniformB(0.8)])
def test_hamilton_jacobi_holds_by_construction(gauge):
    fam = RepulsiveOscillator2D(1.0, 0.7, 0.2)
    consts = PhysConsts(hbar=0.5, m=1.3, e=2.0, c=3.0)
    X = GridSpec.uniform(-2.0, 2.0, 33, dim=2).coords()
    res, scale = hj_residual_values(fam, Synthesized(fam, gauge), gauge, X, 1.1, consts)
    assert np.max(np.abs(res)) <= 1e-12 * np.max(scale)


def test_symmetric_gauge_is_divergence_free():
    X = GridSpec.uniform(-1.0, 1.0, 11, dim=2).coords()
    h = 1e-4
    g = UniformB(1.7)
    div = sum(
        (g.vector_potential(X + h * np.eye(2)[i][:, None, None])[i]
         - g.vector_potential(X - h * np.eye(2)[i][:, None, None])[i]) / (2 * h)
        for i in range(2)
    )
    assert np.max(np.abs(div)) < 1e-10
    curl = (
        (g.vector_potential(X + h * np.array([1, 0])[:, None, None])[1]
         - g.vector_potential(X - h * np.array([1, 0])[:, None, None])[1])
        - (g.vector_potential(X + h * np.array([0, 1])[:, None, None])[0]
           - g.vector_potential(X - h * np.array([0, 1])[:, None, None])[0])
    ) / (2 * h)
    assert np.allclose(curl, 1.7)


def test_wavefunction_values_shape():
    grid = GridSpec.uniform(-1.0, 1.0, 7, dim=2)
    psi = wavefunction_values(LogCentral2D(1.0), ONE, grid.coords() + 3.0, 0.0)
    assert psi.shape == (7, 7) and np.iscomplexobj(psi)


def test_perturbed_touches_one_node():
    grid = GridSpec.uniform(-1.0, 1.0, 9)
    base = UniformForce(1.0)
    V0 = base.evaluate(grid.coords(), 0.0, ONE)
    V1 = Perturbed(base, (0.5,), rel=1e-3).evaluate(grid.coords(), 0.0, ONE)
    changed = np.flatnonzero(V0 != V1)
    assert changed.tolist() == [6]
    assert V1[6] == pytest.approx(V0[6] * 1.001)


@pytest.mark.parametrize("pot", [
    UniformForce(2.0),
    GrowingForce(-1.0),
    RepulsiveOsc(1.5),
    RepulsiveOsc(1.5, m=2.0),
    InverseSquare(0.5),
    CompositeSum(((RepulsiveOsc(1.0), 0), (UniformForce(1.0), 2))),
    Synthesized(RepulsiveOscillator2D(1.0, 1.0, 0.0), UniformB(0.3)),
    Perturbed(UniformForce(1.0), (0.5,), rel=0.01),
])
def test_potential_json_round_trip(pot):
    assert potential_from_json(pot.to_json()) == pot


def test_matching_catalog_table():
    assert matching_catalog(Free1D(1.0)) == UniformForce(0.0)
    assert matching_catalog(ConstantForce1D(2.0, 1.0)) == UniformForce(2.0)
    assert matching_catalog(GrowingForce1D(3.0, 0.0)) == GrowingForce(3.0)
