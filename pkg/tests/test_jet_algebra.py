"""Twisted truncated series: products, x-multiplication, commutators.

Hand-derived cases fix the twist bookkeeping: for order k and the pair
f = b x, g = c (b, c Gaussian), the product f g has nonzero coefficients
b*c at degree 1 and b*(t c) at degree k, and the commutator [f, g] is the
single coefficient b*(t c) at degree k (k >= 2).
"""

import json

import numpy as np
import pytest

from foliation_lab.coeff_ring import GaussPolyFn, GridFn, random_gauss_poly
from foliation_lab.jet_algebra import (
    ORDER_CONVENTION,
    Jet,
    commutativity_report,
    commutativity_witness,
    commutator,
    jet_mul,
    x_mult_left,
    x_mult_right,
)


def gaussian_pair():
    b = GaussPolyFn.gaussian()
    c = GaussPolyFn.gaussian()
    z = GaussPolyFn.zero()
    return b, c, z


# ---------------------------------------------------------------------------
# product
# ---------------------------------------------------------------------------


def test_low_order_product_is_cauchy(rng):
    # below the flow order the product is plain multiplication + truncation
    k, p = 3, 2
    f = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
    g = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
    h = jet_mul(f, g)
    for q in range(p + 1):
        want = GaussPolyFn.zero()
        for n in range(q + 1):
            want = want + f.coeffs[n].convolve(g.coeffs[q - n])
        assert (h.coeffs[q] - want).sup_norm() <= 1e-12


def test_first_twist_term_by_hand():
    b, c, z = gaussian_pair()
    for k in (2, 3):
        f = Jet(k, [z, b] + [z] * (k - 1))
        g = Jet(k, [c] + [z] * k)
        h = jet_mul(f, g)
        # degree 1: b*c; degree k: b*(t c); everything else zero
        assert h.coeffs[0].is_zero()
        assert (h.coeffs[1] - b.convolve(c)).sup_norm() <= 1e-13
        for q in range(2, k):
            assert h.coeffs[q].is_zero()
        want_k = b.convolve(c.mul_by_t())
        assert (h.coeffs[k] - want_k).sup_norm() <= 1e-13


def test_zero_jet_annihilates(rng):
    k, p = 2, 3
    f = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
    z = Jet.zero(k, p)
    assert jet_mul(f, z).sup_norm() == 0.0
    assert jet_mul(z, f).sup_norm() == 0.0


def test_jet_mul_rejects_mismatch(rng):
    f = Jet(2, [random_gauss_poly(rng) for _ in range(3)])
    g = Jet(3, [random_gauss_poly(rng) for _ in range(3)])
    with pytest.raises(ValueError):
        jet_mul(f, g)
    h = Jet(2, [random_gauss_poly(rng) for _ in range(2)])
    with pytest.raises(ValueError):
        jet_mul(f, h)


def test_associativity_exact(rng):
    for k in (1, 2, 3):
        for p in (2, 4):
            f = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
            g = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
            h = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
            lhs = jet_mul(jet_mul(f, g), h)
            rhs = jet_mul(f, jet_mul(g, h))
            assert (lhs - rhs).sup_norm() <= 1e-12 * max(lhs.sup_norm(), 1.0)


def test_truncation_compatibility(rng):
    k, p = 2, 4
    f = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
    g = Jet(k, [random_gauss_poly(rng) for _ in range(p + 1)])
    full = jet_mul(f, g)
    for q in range(p):
        d = full.truncate(q) - jet_mul(f.truncate(q), g.truncate(q))
        assert d.sup_norm() <= 1e-12


# ---------------------------------------------------------------------------
# x-multiplication and the defining relations
# ---------------------------------------------------------------------------


def test_x_mult_right_shifts():
    b, c, z = gaussian_pair()
    f = Jet(2, [b, c, z])
    shifted = x_mult_right(f)
    assert shifted.coeffs[0].is_zero()
    assert (shifted.coeffs[1] - b).sup_norm() == 0.0
    assert (shifted.coeffs[2] - c).sup_norm() == 0.0


def test_order_k_relation():
    # x f - f x = delta(f) x^k with delta multiplication by t
    b, _, z = gaussian_pair()
    f = Jet(2, [b, z, z])
    diff = x_mult_left(f) - x_mult_right(f)
    assert diff.coeffs[0].is_zero()
    assert diff.coeffs[1].is_zero()
    assert (diff.coeffs[2] - b.mul_by_t()).sup_norm() <= 1e-14


def test_order_one_relation():
    # x f = Delta(f) x with Delta the e^t twist
    b, _, z = gaussian_pair()
    f = Jet(1, [b, z])
    left = x_mult_left(f)
    assert left.coeffs[0].is_zero()
    assert (left.coeffs[1] - b.mul_by_exp(1.0)).sup_norm() <= 1e-13


def test_x_mult_zero_and_order_errors():
    z = GaussPolyFn.zero()
    f = Jet(2, [z, z, z])
    assert x_mult_left(f).sup_norm() == 0.0
    with pytest.raises(ValueError):
        x_mult_left(Jet(2, [z]))
    with pytest.raises(ValueError):
        x_mult_right(Jet(2, [z]))


def test_exponential_twist_iterates(rng):
    # x^n f = Delta^n(f) x^n in the order-one algebra
    b = random_gauss_poly(rng)
    p = 3
    f = Jet.from_coefficient(1, b, p)
    lhs = f
    for _ in range(2):
        lhs = x_mult_left(lhs)
    rhs = Jet(1, [GaussPolyFn.zero()] * 2 + [b.mul_by_exp(2.0), GaussPolyFn.zero()])
    assert (lhs - rhs).sup_norm() <= 1e-12 * max(rhs.sup_norm(), 1.0)


# ---------------------------------------------------------------------------
# commutators and the dichotomy
# ---------------------------------------------------------------------------


def test_commutator_vanishes_below_flow_order(rng):
    for k in (1, 2, 3):
        for q in range(k):
            f = Jet(k, [random_gauss_poly(rng) for _ in range(q + 1)])
            g = Jet(k, [random_gauss_poly(rng) for _ in range(q + 1)])
            assert commutator(f, g).sup_norm() <= 1e-10


def test_commutator_witness_value():
    b, c, z = gaussian_pair()
    f = Jet(2, [z, b, z])
    g = Jet(2, [c, z, z])
    comm = commutator(f, g)
    assert comm.coeffs[0].is_zero()
    assert comm.coeffs[1].sup_norm() <= 1e-13
    want = b.convolve(c.mul_by_t())
    assert (comm.coeffs[2] - want).sup_norm() <= 1e-13
    # closed form of the witness coefficient: (sqrt(pi)/2) t exp(-t^2/4)
    ts = np.linspace(-6, 6, 241)
    np.testing.assert_allclose(
        want(ts), (np.sqrt(np.pi) / 2.0) * ts * np.exp(-(ts**2) / 4.0), atol=1e-12
    )
    peak = (np.sqrt(np.pi) / 2.0) * np.sqrt(2.0) * np.exp(-0.5)
    assert want.sup_norm() == pytest.approx(peak, rel=1e-6)


def test_commutator_of_equal_jets_vanishes(rng):
    f = Jet(2, [random_gauss_poly(rng) for _ in range(3)])
    assert commutator(f, f).sup_norm() == 0.0


def test_commutativity_report_dichotomy():
    for k in (1, 2, 3):
        rows = commutativity_report(k, max_order=k + 1, trials=5, seed=3)
        for q, norm in rows:
            if q <= k - 1:
                assert norm <= 1e-10, (k, q, norm)
            else:
                assert norm >= 1e-3, (k, q, norm)


def test_witness_is_unit_norm():
    for k in (1, 2, 3):
        f, g = commutativity_witness(k)
        assert f.sup_norm() == pytest.approx(1.0)
        assert g.sup_norm() == pytest.approx(1.0)
        assert commutator(f, g).sup_norm() >= 1e-3


def test_order_convention_bridge():
    # "quotient by x^p" statements translate to jets of truncation order p-1:
    # for k = 2, order 1 (quotient by x^2) commutes, order 2 does not
    assert "p+1" in ORDER_CONVENTION
    b, c, z = gaussian_pair()
    f1, g1 = Jet(2, [z, b]), Jet(2, [c, z])
    assert commutator(f1, g1).sup_norm() <= 1e-12
    f2, g2 = Jet(2, [z, b, z]), Jet(2, [c, z, z])
    assert commutator(f2, g2).sup_norm() >= 1e-3


# ---------------------------------------------------------------------------
# mixed representations and serialization
# ---------------------------------------------------------------------------


def test_jet_with_grid_coefficients():
    def bump(t):
        out = np.zeros_like(t)
        inside = np.abs(t) < 0.4
        out[inside] = np.exp(1 - 1 / (1 - (t[inside] / 0.4) ** 2))
        return out

    b = GridFn.from_function(bump, -0.5, 0.01, 101)
    z = b.scale(0.0)
    f = Jet(2, [z, b, z])
    g = Jet(2, [b, z, z])
    h = jet_mul(f, g)
    want = b.convolve(b.mul_by_t())
    assert (h.coeffs[2] - want).sup_norm() <= 1e-12
    with pytest.raises(ValueError):
        Jet(2, [b, GaussPolyFn.gaussian()])


def test_jet_json_roundtrip(rng):
    f = Jet(2, [random_gauss_poly(rng, n_atoms=2) for _ in range(3)])
    doc = json.loads(f.to_json())
    assert doc["k"] == 2 and doc["p"] == 2 and len(doc["coeffs"]) == 3
    back = Jet.from_json(f.to_json())
    ts = np.linspace(-5, 5, 41)
    for a, b in zip(back.coeffs, f.coeffs):
        np.testing.assert_allclose(a(ts), b(ts), atol=1e-15)

    def bump(t):
        out = np.zeros_like(t)
        inside = np.abs(t) < 0.4
        out[inside] = np.exp(1 - 1 / (1 - (t[inside] / 0.4) ** 2))
        return out

    g = GridFn.from_function(bump, -0.5, 0.01, 101)
    jet = Jet(1, [g, g.scale(2.0)])
    back = Jet.from_json(jet.to_json())
    np.testing.assert_allclose(back.coeffs[1].samples, jet.coeffs[1].samples)
