"""Flows generated by order-k vector fields on the line, and their Taylor data.

Two variants are supported:

``monomial``
    the field x^k d/dx itself.  For k = 1 the flow is e^t x; for k >= 2 it is
    x / (1 - (k-1) t x^(k-1))^(1/(k-1)), defined where (k-1) t x^(k-1) < 1.
    All Taylor data at 0 is exact (polynomials in t, or e^(n t) for k = 1).

``complete_rescaled``
    the globally defined field (1+x^2)^(-(k-1)/2) x^k d/dx, which agrees with
    the monomial field near 0 and has sublinear growth; its flow and spatial
    derivative are computed by adaptive Runge-Kutta integration together with
    the variational equation.

The module also provides the Taylor coefficients phi_m^n of the m-th power of
the flow (coefficient of x^m in (phi_t(x))^n), the multiplicative cocycles
``cocycle_delta`` (phi_t(x)/x, smoothly extended through x = 0) and
``beta_cocycle`` ((phi_t'(x))^(1/2) for x != 0, and 1 on the isotropy line
x = 0 -- note the x = 0 value makes beta discontinuous when k = 1, where
phi_t' = e^t everywhere; the case split is deliberate, not smoothed), and
residual checks for the composition and cocycle identities satisfied by the
phi_m^n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.integrate import solve_ivp

MONOMIAL = "monomial"
COMPLETE_RESCALED = "complete_rescaled"

DEFAULT_M_MAX = 8
ODE_RTOL = 1e-10
ODE_ATOL = 1e-12


class FlowDomainError(ValueError):
    """Evaluation requested outside the domain of an incomplete flow."""


@dataclass(frozen=True)
class FlowModel:
    """Order k plus variant; ``time_reversed`` negates the generating field."""

    k: int
    variant: str = MONOMIAL
    time_reversed: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.variant not in (MONOMIAL, COMPLETE_RESCALED):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def sign(self):
        return -1.0 if self.time_reversed else 1.0

    def vector_field(self, x):
        """Value of the generating field at x."""
        x = np.asarray(x, dtype=float)
        if self.variant == MONOMIAL:
            v = x**self.k
        else:
            v = x**self.k * (1.0 + x * x) ** (-(self.k - 1) / 2.0)
        return self.sign * v

    def _field_derivative(self, x):
        k = self.k
        if self.variant == MONOMIAL:
            d = k * x ** (k - 1)
        else:
            # d/dx [x^k (1+x^2)^(-(k-1)/2)] = (1+x^2)^(-(k+1)/2) (k x^(k-1) + x^(k+1))
            d = (1.0 + x * x) ** (-(k + 1) / 2.0) * (k * x ** (k - 1) + x ** (k + 1))
        return self.sign * d

    def in_domain(self, t, x):
        """Vectorized admissibility predicate for (x, t)."""
        t = self.sign * np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.variant == COMPLETE_RESCALED or self.k == 1:
            return np.broadcast_to(True, np.broadcast(t, x).shape).copy()
        return (self.k - 1) * t * x ** (self.k - 1) < 1.0


def _monomial_flow(k, t, x):
    if k == 1:
        return np.exp(t) * x
    base = 1.0 - (k - 1) * t * x ** (k - 1)
    return x * base ** (-1.0 / (k - 1))


def _monomial_flow_derivative(k, t, x):
    if k == 1:
        return np.exp(t) * np.ones_like(np.asarray(x, dtype=float))
    base = 1.0 - (k - 1) * t * x ** (k - 1)
    return base ** (-k / (k - 1))


def _rescaled_flow_many(model, ts, xs, with_derivative=False):
    """Flow (and optionally d(flow)/dx) for all (t, x) pairs by one ODE solve
    per time sign, integrating every initial condition as a vector system."""
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    vals = np.empty((ts.size, n))
    derivs = np.empty((ts.size, n)) if with_derivative else None

    def rhs(_, y):
        x = y[:n]
        out = np.empty_like(y)
        out[:n] = model.vector_field(x)
        if y.size > n:
            out[n:] = model._field_derivative(x) * y[n:]
        return out

    y0 = np.concatenate([xs, np.ones(n)]) if with_derivative else xs
    for sgn in (1.0, -1.0):
        sel = np.where(ts * sgn > 0)[0]
        if sel.size == 0:
            continue
        t_far = float(np.max(np.abs(ts[sel])))
        sol = solve_ivp(
            rhs,
            (0.0, sgn * t_far),
            y0,
            method="DOP853",
            rtol=ODE_RTOL,
            atol=ODE_ATOL,
            dense_output=True,
        )
        if not sol.success:
            raise RuntimeError("flow integration failed: " + sol.message)
        for i in sel:
            y = sol.sol(ts[i])
            vals[i] = y[:n]
            if with_derivative:
                derivs[i] = y[n:]
    zero = np.where(ts == 0)[0]
    for i in zero:
        vals[i] = xs
        if with_derivative:
            derivs[i] = 1.0
    return (vals, derivs) if with_derivative else vals


def flow_eval(model, t, x):
    """phi_t(x) for a scalar pair; raises FlowDomainError outside the domain."""
    if not np.all(model.in_domain(t, x)):
        raise FlowDomainError(
            f"(x={x}, t={t}) outside the domain of the order-{model.k} monomial flow"
        )
    t_eff = model.sign * t
    if model.variant == MONOMIAL:
        return float(_monomial_flow(model.k, t_eff, x))
    return float(_rescaled_flow_many(model, [t_eff], np.atleast_1d(float(x)))[0, 0])


def flow_derivative(model, t, x):
    """Spatial derivative d phi_t / dx at (t, x)."""
    if not np.all(model.in_domain(t, x)):
        raise FlowDomainError(
            f"(x={x}, t={t}) outside the domain of the order-{model.k} monomial flow"
        )
    t_eff = model.sign * t
    if model.variant == MONOMIAL:
        return float(_monomial_flow_derivative(model.k, t_eff, x))
    _, d = _rescaled_flow_many(
        model, [t_eff], np.atleast_1d(float(x)), with_derivative=True
    )
    return float(d[0, 0])


def flow_eval_many(model, ts, xs):
    """phi_t(x) on the grid ts x xs; inadmissible entries become NaN."""
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    t_eff = model.sign * ts
    if model.variant == MONOMIAL:
        T, X = np.meshgrid(t_eff, xs, indexing="ij")
        if model.k == 1:
            return np.exp(T) * X
        base = 1.0 - (model.k - 1) * T * X ** (model.k - 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(base > 0, X * np.abs(base) ** (-1.0 / (model.k - 1)), np.nan)
        return out
    return _rescaled_flow_many(model, t_eff, xs)


def flow_derivative_many(model, ts, xs):
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    t_eff = model.sign * ts
    if model.variant == MONOMIAL:
        T, X = np.meshgrid(t_eff, xs, indexing="ij")
        if model.k == 1:
            return np.exp(T) * np.ones_like(X)
        base = 1.0 - (model.k - 1) * T * X ** (model.k - 1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(base > 0, np.abs(base) ** (-model.k / (model.k - 1)), np.nan)
    _, d = _rescaled_flow_many(model, t_eff, xs, with_derivative=True)
    return d


# ---------------------------------------------------------------------------
# Taylor coefficients of powers of the flow
# ---------------------------------------------------------------------------


def _rising(a, j):
    out = 1.0
    for i in range(j):
        out *= a + i
    return out


def taylor_flow_power(k, n, m):
    """Coefficient of x^m in (phi_t(x))^n for the monomial flow, k >= 2.

    Returns ascending polynomial coefficients in t.  The coefficient vanishes
    unless m = n + j*(k-1) for some j >= 0, where it equals
    rising(n/(k-1), j) * (k-1)^j / j! * t^j.
    """
    if k < 2:
        raise ValueError("polynomial Taylor data exists for k >= 2; k = 1 is e^(n t) on the diagonal")
    if n < 0 or m < n:
        return np.zeros(1)
    if n == 0:
        return np.array([1.0]) if m == 0 else np.zeros(1)
    d = m - n
    if d % (k - 1) != 0:
        return np.zeros(1)
    j = d // (k - 1)
    c = _rising(n / (k - 1), j) * (k - 1) ** j / factorial(j)
    out = np.zeros(j + 1)
    out[j] = c
    return out


@dataclass(frozen=True)
class FlowCoeff:
    """One entry phi_m^n: a polynomial in t, or a pure exponential e^(rate*t)."""

    kind: str  # "poly" | "exp"
    poly: tuple = (0.0,)
    rate: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(t, np.asarray(self.poly))
        return np.exp(self.rate * t)

    def is_zero(self):
        return self.kind == "poly" and not np.any(np.asarray(self.poly))

    def apply(self, f):
        """Pointwise-multiply a coefficient function by this entry."""
        if self.kind == "poly":
            return f.mul_by_poly(self.poly)
        return f.mul_by_exp(self.rate)


@dataclass(frozen=True)
class FlowTaylorTable:
    """All phi_m^n with 0 <= n <= m <= m_max for the monomial flow of order k."""

    k: int
    m_max: int = DEFAULT_M_MAX
    entries: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.entries:
            return
        entries = {}
        for n in range(self.m_max + 1):
            for m in range(n, self.m_max + 1):
                if self.k == 1:
                    if m == n:
                        entries[(n, m)] = FlowCoeff("exp", rate=float(n))
                    else:
                        entries[(n, m)] = FlowCoeff("poly", poly=(0.0,))
                else:
                    coeffs = taylor_flow_power(self.k, n, m)
                    entries[(n, m)] = FlowCoeff("poly", poly=tuple(coeffs.tolist()))
        object.__setattr__(self, "entries", entries)

    def coeff(self, n, m):
        if not (0 <= n <= m <= self.m_max):
            raise ValueError(f"(n={n}, m={m}) outside table range m_max={self.m_max}")
        return self.entries[(n, m)]

    def value(self, n, m, t):
        return self.coeff(n, m)(t)

    def to_json(self):
        items = []
        for (n, m), c in sorted(self.entries.items()):
            rec = {"n": n, "m": m}
            if c.kind == "poly":
                rec["poly_coeffs"] = list(c.poly)
            else:
                rec["exp_rate"] = c.rate
            items.append(rec)
        return json.dumps({"k": self.k, "M_max": self.m_max, "entries": items})

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        entries = {}
        for rec in d["entries"]:
            if "poly_coeffs" in rec:
                entries[(rec["n"], rec["m"])] = FlowCoeff("poly", poly=tuple(rec["poly_coeffs"]))
            else:
                entries[(rec["n"], rec["m"])] = FlowCoeff("exp", rate=rec["exp_rate"])
        return cls(k=d["k"], m_max=d["M_max"], entries=entries)


# ---------------------------------------------------------------------------
# cocycles
# ---------------------------------------------------------------------------


def cocycle_delta(model, x, t):
    """Delta(x, t) = phi_t(x)/x for x != 0, extended smoothly through x = 0.

    For the monomial flow the extension is (1 - (k-1) t x^(k-1))^(-1/(k-1))
    (e^t when k = 1); for the rescaled field it is
    (h(x)/h(phi_t(x)) * phi_t'(x))^(1/k) with h the rescaling factor.
    """
    if not np.all(model.in_domain(t, x)):
        raise FlowDomainError(f"(x={x}, t={t}) outside the flow domain")
    t_eff = model.sign * t
    k = model.k
    if model.variant == MONOMIAL:
        if k == 1:
            return float(np.exp(t_eff))
        base = 1.0 - (k - 1) * t_eff * x ** (k - 1)
        return float(base ** (-1.0 / (k - 1)))
    if x != 0.0:
        return flow_eval(model, t, x) / x
    if k == 1:
        return float(np.exp(t_eff))
    # h(0) = h(phi_t(0)) = 1 and phi_t'(0) = 1 for k >= 2
    return 1.0


def beta_cocycle(model, x, t):
    """beta(x, t) = (phi_t'(x))^(1/2) for x != 0, and 1 at x = 0."""
    if x == 0.0:
        return 1.0
    return float(np.sqrt(flow_derivative(model, t, x)))


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _cached_table(k, m_max):
    return FlowTaylorTable(k, m_max)


def check_cocycle_identity(k, n, m, t, s):
    """|phi_m^n(t) - sum_i phi_m^i(t-s) phi_i^n(s)| at the given arguments."""
    table = _cached_table(k, max(m, DEFAULT_M_MAX))
    lhs = table.coeff(n, m)(t)
    rhs = 0.0
    for i in range(n, m + 1):
        rhs += table.coeff(i, m)(t - s) * table.coeff(n, i)(s)
    return float(abs(lhs - rhs))


# small truncated-series helpers (scalar coefficients, index = power of x)


def series_mul(a, b, m_max):
    out = np.zeros(m_max + 1)
    for i in range(m_max + 1):
        if a[i] == 0:
            continue
        jtop = m_max - i
        out[i : i + jtop + 1] += a[i] * b[: jtop + 1]
    return out


def series_power(a, n, m_max):
    out = np.zeros(m_max + 1)
    out[0] = 1.0
    for _ in range(n):
        out = series_mul(out, a, m_max)
    return out


def series_compose(f, g, m_max):
    """(f o g) truncated at x^m_max; g must vanish at 0."""
    if g[0] != 0:
        raise ValueError("inner series must vanish at 0")
    out = np.zeros(m_max + 1)
    out[0] = f[0]
    gp = np.zeros(m_max + 1)
    gp[0] = 1.0
    for n in range(1, m_max + 1):
        gp = series_mul(gp, g, m_max)
        out += f[n] * gp
    return out


def check_composition_identity(k, n, m, trials=20, seed=0, m_max=None):
    """Max residual of [m](f o g)^n = sum_i ([m] g^i)([i] f^n) over random
    truncated series f, g vanishing at 0.

    The identity is purely formal; k only sets the default truncation order.
    """
    if m_max is None:
        m_max = max(m, DEFAULT_M_MAX)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = rng.uniform(-1, 1, m_max + 1)
        g = rng.uniform(-1, 1, m_max + 1)
        f[0] = 0.0
        g[0] = 0.0
        lhs = series_power(series_compose(f, g, m_max), n, m_max)[m]
        fn = series_power(f, n, m_max)
        gi = np.zeros(m_max + 1)
        gi[0] = 1.0
        rhs = 0.0
        gpows = [gi]
        for i in range(1, m_max + 1):
            gpows.append(series_mul(gpows[-1], g, m_max))
        for i in range(n, m + 1):
            rhs += gpows[i][m] * fn[i]
        worst = max(worst, abs(lhs - rhs))
    return worst
