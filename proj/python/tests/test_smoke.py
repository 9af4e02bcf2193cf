import math

import pytest

import oscbands as ob


def linear():
    return ob.Potential(1, {(1,): 1.0})


def test_linear_shifts():
    h = 0.1
    for c in ob.clusters(linear(), h, 60):
        for m in c.shifts:
            assert abs(m + 0.5 * h * h) <= 1e-9


def test_quadratic_closed_form():
    V = ob.Potential(1, {(2,): 0.5, (0,): 0.3})
    exact = ob.quadratic_exact_spectrum(0.5, 0.3, 1, 0.1, 20)
    for c in ob.clusters(V, 0.1, 100):
        if c.j <= 20:
            assert c.energies[0] == pytest.approx(exact[c.j], rel=1e-10)


def test_average_of_odd_is_zero():
    assert ob.average_poly(ob.Potential(1, {(3,): 1.0})).terms() == []
    avg = ob.average_poly(ob.Potential(1, {(2,): 1.0}))
    assert avg([1.0], [0.0]).real == pytest.approx(0.5)
    assert ob.poisson_bracket(ob.PhasePolynomial.H0(1), avg).max_abs() == 0.0


def test_delta_average_linear():
    d = ob.delta_average(linear())
    assert d([0.3], [0.7]).real == pytest.approx(-0.5, abs=1e-15)


def test_first_invariant_constant():
    assert ob.band_invariant_first(ob.Potential(1, {(0,): 1.0}), 1.0) == pytest.approx(2 * math.pi)


def test_recover_hessian():
    V = ob.Potential(2, {(2, 0): 1.0, (0, 2): 3.0})
    rep = ob.recover_hessian(V)
    assert rep["values"] == pytest.approx([1.0, 3.0], abs=1e-8)


def test_rigidity():
    assert ob.rigidity_sigma_min(1.0, 3.0, 6) > 1e-8
    assert ob.rigidity_sigma_min(1.0, 1.0, 6) < 1e-12


def test_audits_pass():
    for name in ("moyal-identities", "fourier-laws"):
        ok, checks = ob.run_audit(name)
        assert ok, checks


def test_overlap_raises():
    with pytest.raises(ob.ClusterOverlapError):
        ob.clusters(ob.Potential(2, {(2, 2): 80.0}), 0.3, 20)
