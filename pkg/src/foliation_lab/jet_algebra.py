"""Truncated twisted series: coefficient functions of t times powers of x.

A ``Jet`` of truncation order p models the quotient of the groupoid
convolution algebra by the ideal of kernels vanishing to order p+1 at x = 0,
i.e. a series f_0 + f_1 x + ... + f_p x^p with coefficients in the
convolution ring of the t variable.  (Statements about the quotient by x^p
therefore read "jets of truncation order p-1"; ``ORDER_CONVENTION`` records
the bridge and tests assert it.)

The product twists the coefficient ring by the Taylor data of the flow:

    (f g)_q = sum over n <= m <= q of  f_n * (phi_m^n . g_{q-m})

where * is convolution in t and phi_m^n . h is pointwise multiplication by
the flow-power Taylor coefficient (a polynomial in t for k >= 2, e^(n t) for
k = 1).  Multiplication by the indeterminate x is implemented by the same
sums with the convolution unit in place of f: right multiplication shifts
coefficients up one degree, and left multiplication picks up the twist

    (x f)_q = f_{q-1} + sum over m >= 2 of phi_m^1 . f_{q-m} ,

whose first nontrivial term reproduces x f = f x + delta(f) x^k at order k
(delta(h)(t) = t h(t)), and x f = Delta(f) x for k = 1 (Delta = e^t twist).
"""

from __future__ import annotations

import json

import numpy as np

from .coeff_ring import GaussPolyFn, GridFn
from .flow import FlowTaylorTable

ORDER_CONVENTION = "quotient by x^(p+1) == jets of truncation order p"


class Jet:
    """A truncated series with p+1 coefficient functions and flow order k."""

    __slots__ = ("k", "p", "coeffs", "_table")

    def __init__(self, k, coeffs, table=None):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("a jet needs at least the order-0 coefficient")
        kinds = {type(c) for c in coeffs}
        if len(kinds) > 1:
            raise ValueError("all coefficients must share one representation")
        self.k = int(k)
        self.p = len(coeffs) - 1
        self.coeffs = coeffs
        self._table = table

    @classmethod
    def zero(cls, k, p, like=None):
        if like is None or isinstance(like, GaussPolyFn):
            z = GaussPolyFn.zero()
            return cls(k, [z] * (p + 1))
        zero = like.scale(0.0)
        return cls(k, [zero] * (p + 1))

    @classmethod
    def from_coefficient(cls, k, f, p):
        """The degree-0 jet (f, 0, ..., 0) of truncation order p."""
        if isinstance(f, GaussPolyFn):
            pad = GaussPolyFn.zero()
        else:
            pad = f.scale(0.0)
        return cls(k, [f] + [pad] * p)

    def table(self):
        if self._table is None or self._table.m_max < self.p:
            self._table = FlowTaylorTable(self.k, max(self.p, 1))
        return self._table

    def truncate(self, q):
        if q > self.p:
            raise ValueError("cannot extend a jet by truncation")
        return Jet(self.k, self.coeffs[: q + 1], self._table)

    def add(self, other):
        self._check_match(other)
        return Jet(self.k, [a.add(b) for a, b in zip(self.coeffs, other.coeffs)], self._table)

    def scale(self, c):
        return Jet(self.k, [a.scale(c) for a in self.coeffs], self._table)

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def sup_norm(self):
        return max(c.sup_norm() for c in self.coeffs)

    def _check_match(self, other):
        if self.k != other.k:
            raise ValueError(f"flow order mismatch: k={self.k} vs k={other.k}")
        if self.p != other.p:
            raise ValueError(f"truncation order mismatch: p={self.p} vs p={other.p}")

    def to_json(self):
        coeffs = []
        for c in self.coeffs:
            if isinstance(c, GaussPolyFn):
                coeffs.append(c.to_dict())
            elif isinstance(c, GridFn):
                coeffs.append(
                    {
                        "type": "grid",
                        "t_start": c.t_start,
                        "t_step": c.t_step,
                        "re": c.samples.real.tolist(),
                        "im": c.samples.imag.tolist(),
                    }
                )
            else:
                raise TypeError(f"cannot serialize coefficient of type {type(c)}")
        return json.dumps({"k": self.k, "p": self.p, "coeffs": coeffs})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        coeffs = []
        for c in d["coeffs"]:
            if c["type"] == "gauss_poly":
                coeffs.append(GaussPolyFn.from_dict(c))
            else:
                samples = np.asarray(c["re"]) + 1j * np.asarray(c["im"])
                coeffs.append(GridFn(c["t_start"], c["t_step"], samples))
        return cls(d["k"], coeffs)

    def __repr__(self):
        rep = type(self.coeffs[0]).__name__
        return f"Jet(k={self.k}, p={self.p}, coeffs={rep}x{self.p + 1})"


def jet_mul(f, g):
    """Twisted product; exact when the coefficients are GaussPolyFn."""
    f._check_match(g)
    table = f.table()
    out = []
    for q in range(f.p + 1):
        acc = None
        for n in range(q + 1):
            for m in range(n, q + 1):
                c = table.coeff(n, m)
                if c.is_zero():
                    continue
                term = f.coeffs[n].convolve(c.apply(g.coeffs[q - m]))
                acc = term if acc is None else acc.add(term)
        out.append(acc)  # phi_0^0 = 1, so every order has at least one term
    return Jet(f.k, out, table)


def x_mult_right(f):
    """(f x): shift coefficients up one degree and truncate."""
    if f.p < 1:
        raise ValueError("x-multiplication needs truncation order p >= 1")
    if isinstance(f.coeffs[0], GaussPolyFn):
        pad = GaussPolyFn.zero()
    else:
        pad = f.coeffs[0].scale(0.0)
    return Jet(f.k, [pad] + f.coeffs[: f.p], f._table)


def x_mult_left(f):
    """(x f): shift plus the flow twist through the phi_m^1 column."""
    if f.p < 1:
        raise ValueError("x-multiplication needs truncation order p >= 1")
    table = f.table()
    out = [None] * (f.p + 1)
    if isinstance(f.coeffs[0], GaussPolyFn):
        pad = GaussPolyFn.zero()
    else:
        pad = f.coeffs[0].scale(0.0)
    out[0] = pad
    for q in range(1, f.p + 1):
        acc = None
        for m in range(1, q + 1):
            c = table.coeff(1, m)
            if c.is_zero():
                continue
            term = c.apply(f.coeffs[q - m])
            acc = term if acc is None else acc.add(term)
        out[q] = pad if acc is None else acc
    return Jet(f.k, out, table)


def commutator(f, g):
    return jet_mul(f, g) - jet_mul(g, f)


def commutativity_witness(k):
    """The deterministic pair whose commutator at order k is b*(t c) (k >= 2)
    or b*(e^t c) - c*b (k = 1), with unit-sup-norm Gaussian b, c."""
    b = GaussPolyFn.gaussian()
    c = GaussPolyFn.gaussian()
    zero = GaussPolyFn.zero()
    f = Jet(k, [zero, b] + [zero] * (k - 1))
    g = Jet(k, [c] + [zero] * k)
    return f, g


def commutativity_report(k, max_order, trials=10, seed=0):
    """Max commutator sup-norm per truncation order over random exact jets.

    The quotient is commutative exactly at orders <= k-1; the report includes
    the deterministic unit-norm witness at order k so the noncommutative side
    is bounded away from zero, not just nonzero with luck.
    """
    rng = np.random.default_rng(seed)
    from .coeff_ring import random_gauss_poly

    rows = []
    for q in range(max_order + 1):
        worst = 0.0
        for _ in range(trials):
            f = Jet(k, [random_gauss_poly(rng) for _ in range(q + 1)])
            g = Jet(k, [random_gauss_poly(rng) for _ in range(q + 1)])
            worst = max(worst, commutator(f, g).sup_norm())
        if q == k:
            f, g = commutativity_witness(k)
            worst = max(worst, commutator(f.truncate(q), g.truncate(q)).sup_norm())
        rows.append((q, worst))
    return rows
