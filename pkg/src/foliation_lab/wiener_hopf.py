"""Operator side: Fourier and Cayley unitaries, Toeplitz sections, index data.

Conventions, fixed once
-----------------------

Fourier transform of a function on the line:

    F f (s) = integral f(t) exp(-2 pi i s t) dt

Symbol loops live on the one-point compactification of the line, sampled on
the tangent-substituted grid s = tan(theta/2)/pi with theta running once
around the circle counterclockwise; circle loops are sampled at increasing
angle.  Winding numbers accumulate argument increments along the loop in
that orientation, so z^n winds n.

The K-theory/index bookkeeping of a convolution operator evaluates its
symbol with the *plus* pairing exp(+2 pi i s t), i.e. the loop of a kernel g
is s -> F g (-s).  That is the orientation in which the classical index
theorem for truncated convolution operators on the half-line reads
"index = -winding", and in which the canonical index-one generator loop of
the half-line extension winds +1.  With the minus pairing the same loop
winds -1; only the bookkeeping flips, the operators do not change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .coeff_ring import GridFn


class NonFredholmError(ValueError):
    """The symbol loop passes through (or too near) the origin."""


class UnderResolvedLoopError(ValueError):
    """The argument quadrature did not land near an integer winding."""


# ---------------------------------------------------------------------------
# symbol loops
# ---------------------------------------------------------------------------


class SymbolLoop:
    """A closed loop of complex values: a symbol on the circle or the
    compactified line."""

    __slots__ = ("values", "kind", "label")

    def __init__(self, values, kind="circle", label=""):
        values = np.ascontiguousarray(values, dtype=complex)
        if values.ndim != 1 or values.size < 3:
            raise ValueError("a loop needs at least three samples")
        self.values = values
        self.kind = kind
        self.label = label

    @classmethod
    def from_circle_function(cls, fn, n=1024, label=""):
        theta = 2.0 * np.pi * np.arange(n) / n
        return cls(fn(np.exp(1j * theta)), kind="circle", label=label)

    @classmethod
    def from_circle_samples(cls, values, label=""):
        return cls(values, kind="circle", label=label)

    @staticmethod
    def tangent_grid(n):
        """n points s = tan(theta/2)/pi at angle midpoints, poles avoided."""
        theta = -np.pi + (2.0 * np.arange(n) + 1.0) * np.pi / n
        return np.tan(theta / 2.0) / np.pi

    @classmethod
    def from_line_function(cls, fn, n=2048, limit=None, closure_tol=1e-2, label=""):
        """Sample a line symbol on the compactified grid, s increasing.

        The loop closes through the point at infinity; the two extreme
        samples must already agree within ``closure_tol`` (relative), and
        ``limit``, when given, is appended as the closing value.
        """
        s = cls.tangent_grid(n)
        vals = np.asarray(fn(s), dtype=complex)
        span = float(np.max(np.abs(vals))) or 1.0
        if abs(vals[0] - vals[-1]) > closure_tol * span:
            raise ValueError(
                "line symbol does not close at infinity: "
                f"f(-inf)~{vals[0]:.4g} vs f(+inf)~{vals[-1]:.4g}"
            )
        if limit is not None:
            vals = np.concatenate([[complex(limit)], vals, [complex(limit)]])
        return cls(vals, kind="line", label=label)

    def closed_values(self):
        v = self.values
        if v[0] == v[-1]:
            return v
        return np.concatenate([v, v[:1]])

    def fredholm_min_modulus(self):
        return float(np.min(np.abs(self.values)))

    # pointwise loop arithmetic (samplewise; kinds must match)

    def _binary(self, other, op):
        if isinstance(other, SymbolLoop):
            if self.kind != other.kind:
                raise ValueError("cannot combine circle and line loops")
            if self.values.size != other.values.size:
                raise ValueError("loops have different sample counts")
            return SymbolLoop(op(self.values, other.values), self.kind)
        return SymbolLoop(op(self.values, other), self.kind)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)


MAX_ARG_STEP = 0.9 * np.pi  # a sampled step this close to pi means aliasing


def winding_number(loop, residual_tol=0.05, min_modulus=1e-12):
    """Total argument increment around the loop, over 2 pi, as an integer.

    Raises NonFredholmError when the loop meets the origin and
    UnderResolvedLoopError when the sampling cannot be trusted: either the
    accumulated argument misses every integer multiple of 2 pi by more than
    ``residual_tol`` turns, or a single step turns by nearly pi (principal
    branches then wrap, which aliases the count).
    """
    raw, residual, minmod, max_step = winding_diagnostics(loop, min_modulus=min_modulus)
    if residual > residual_tol:
        raise UnderResolvedLoopError(
            f"winding residual {residual:.3g} exceeds {residual_tol}; "
            "increase the loop resolution"
        )
    if max_step > MAX_ARG_STEP:
        raise UnderResolvedLoopError(
            f"a single loop step turns by {max_step:.3g} rad; "
            "increase the loop resolution"
        )
    return int(round(raw))


def winding_diagnostics(loop, min_modulus=1e-12):
    """(raw winding, distance to nearest integer, min |loop|, max arg step)."""
    v = loop.closed_values()
    minmod = float(np.min(np.abs(v)))
    if minmod <= min_modulus:
        raise NonFredholmError(
            f"symbol modulus drops to {minmod:.3g}; no index is defined"
        )
    steps = np.angle(v[1:] / v[:-1])
    raw = float(np.sum(steps) / (2.0 * np.pi))
    return raw, abs(raw - round(raw)), minmod, float(np.max(np.abs(steps)))


# ---------------------------------------------------------------------------
# Fourier transform of sampled line functions
# ---------------------------------------------------------------------------


def fourier_transform_values(f, s, endpoint_correction=True):
    """F f at the points s by corrected trapezoid quadrature on f's grid.

    The endpoint correction subtracts h^2/12 (g'(end) - g'(start)) with g the
    integrand, which restores O(h^4) accuracy when f is cut off or kinked at
    a window endpoint (one-sided second-order differences estimate f' there).
    """
    if isinstance(f, GridFn):
        t = f.t_grid
        y = f.samples
        h = f.t_step
    else:
        raise TypeError("fourier_transform_values expects a GridFn")
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.shape, dtype=complex)
    w = np.ones(t.size)
    w[0] = w[-1] = 0.5
    if endpoint_correction and t.size >= 3:
        d0 = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
        d1 = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    chunk = max(1, int(2e6 // t.size))
    for i in range(0, s.size, chunk):
        sb = s[i : i + chunk, None]
        phase = np.exp(-2j * np.pi * sb * t[None, :])
        vals = (phase * (w * y)[None, :]).sum(axis=1) * h
        if endpoint_correction and t.size >= 3:
            twopis = 2j * np.pi * sb[:, 0]
            gp0 = (d0 - twopis * y[0]) * np.exp(-2j * np.pi * sb[:, 0] * t[0])
            gp1 = (d1 - twopis * y[-1]) * np.exp(-2j * np.pi * sb[:, 0] * t[-1])
            vals = vals - (h * h / 12.0) * (gp1 - gp0)
        out[i : i + chunk] = vals
    return out


def fourier_transform_line(f, n=2048, limit=0.0, label=""):
    """Sample F f on the compactified grid and return it as a line loop.

    The input must decay within its window (a one-sided cut like the
    half-line generator is fine); otherwise the windowed integral does not
    represent the transform and the call is refused.
    """
    peak = float(np.max(np.abs(f.samples)))
    edges = (abs(f.samples[0]), abs(f.samples[-1]))
    if peak > 0 and min(edges) > 0.1 * peak:
        raise ValueError(
            "input does not decay within its window; enlarge the window "
            "or truncate the support"
        )
    s = SymbolLoop.tangent_grid(n)
    vals = fourier_transform_values(f, s)
    vals = np.concatenate([[complex(limit)], vals, [complex(limit)]])
    return SymbolLoop(vals, kind="line", label=label)


# ---------------------------------------------------------------------------
# Cayley transform
# ---------------------------------------------------------------------------


def cayley_basis_image(n):
    """Image on the line of the circle basis vector z^n / sqrt(2 pi).

    For every integer n the image is (1/sqrt(pi)) w(t)^n / (t + i) with
    w(t) = (t - i)/(t + i); n >= 0 spans the Hardy space of the line and
    n < 0 its orthogonal complement.
    """

    def fn(t):
        t = np.asarray(t, dtype=float)
        w = (t - 1j) / (t + 1j)
        return (w**n) / ((t + 1j) * np.sqrt(np.pi))

    return fn


def cayley_gram_matrix(indices, t_radius=1000.0, n_points=200001):
    """Inner products of basis images: quadrature on [-R, R] plus the exact
    analytic tail of the integrand (whose modulus is 1/(pi (1 + t^2)))."""
    t = np.linspace(-t_radius, t_radius, n_points)
    dt = t[1] - t[0]
    w = np.full(n_points, dt)
    w[0] = w[-1] = dt / 2.0
    vals = np.stack([cayley_basis_image(n)(t) for n in indices])
    gram = (vals * w) @ np.conj(vals).T
    for a, na in enumerate(indices):
        for b, nb in enumerate(indices):
            gram[a, b] += _cayley_tail(na - nb, t_radius)
    return gram


def _cayley_tail(d, radius):
    """integral over |t| > R of w(t)^d / (pi (1 + t^2)) dt, in closed form."""
    half_gap = 2.0 * np.arctan(1.0 / radius)
    if d == 0:
        return half_gap / np.pi
    return np.sin(d * half_gap) / (np.pi * d)


# ---------------------------------------------------------------------------
# Toeplitz finite sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteSection:
    """An N x N truncation of a Toeplitz operator, with provenance."""

    matrix: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError("finite section must be a square matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("finite section entries must be finite")

    @property
    def n(self):
        return self.matrix.shape[0]


def toeplitz_finite_section(loop, n):
    """Matrix (T_f)_{jk} = fhat(j - k) from the circle Fourier coefficients
    of the loop (discrete quadrature over the samples)."""
    if loop.kind != "circle":
        raise ValueError("finite sections are built from circle-sampled loops")
    vals = loop.values
    m = vals.size
    fft = np.fft.fft(vals) / m  # fft[k] = mean of f(z_j) z_j^{-k} = fhat(k)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % m
    matrix = fft[idx]
    return FiniteSection(matrix=matrix, provenance=loop.label or "circle loop")


def finite_section_kernel_counts(section, tol=1e-10):
    """(dim ker, dim coker) of the truncation, counted by small singular
    values.  A diagnostic only: finite sections of shift-like operators grow
    spurious kernel vectors that the true operator does not have, so the
    index of record always comes from the winding number."""
    svals = np.linalg.svd(np.asarray(section.matrix), compute_uv=False)
    n_small = int(np.sum(svals < tol))
    # the matrix is square, so kernel and cokernel counts coincide
    return n_small, n_small


# ---------------------------------------------------------------------------
# the half-line extension generator and its index
# ---------------------------------------------------------------------------


def generator_kernel(t_radius=60.0, t_step=1e-3):
    """The kernel b(t) = exp(-t/2) for t >= 0 sampled on [0, radius].

    b jumps to 1 at the left window edge, so the compact-support edge check
    is opted out; the corrected trapezoid in ``fourier_transform_values``
    handles the cut-off endpoint at O(h^4).
    """
    n = int(round(t_radius / t_step)) + 1
    return GridFn.from_function(
        lambda t: np.exp(-t / 2.0), 0.0, t_step, n, support_tol=np.inf
    )


def generator_hat_closed_form(s):
    """F b in closed form: 1 / (1/2 + 2 pi i s)."""
    s = np.asarray(s, dtype=float)
    return 1.0 / (0.5 + 2j * np.pi * s)


def generator_symbol_loop(n=4096):
    """Spectral loop of 1 - b: s -> 1 - F b(-s) on the compactified line.

    Evaluated with the plus pairing (see module docstring); this loop winds
    +1 and the extension's boundary map sends its class to -1.
    """
    return SymbolLoop.from_line_function(
        lambda s: 1.0 - generator_hat_closed_form(-s),
        n=n,
        limit=1.0,
        label="one minus half-line generator",
    )


def boundary_index(loop, residual_tol=0.05):
    """Index assigned by the extension boundary map: minus the winding."""
    return -winding_number(loop, residual_tol=residual_tol)


def index_report(loop, symbol_id="", residual_tol=0.05):
    raw, residual, minmod, _ = winding_diagnostics(loop)
    return {
        "symbol_id": symbol_id or loop.label,
        "winding": int(round(raw)),
        "boundary_index": -int(round(raw)),
        "fredholm_min_modulus": minmod,
        "residual": residual,
    }


# ---------------------------------------------------------------------------
# flow bi-index and parity classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowBiIndex:
    """Source/sink signature of the fixed point on the two half-lines:
    +1 for a source, -1 for a sink, component one for the left half-line."""

    left: int
    right: int

    def __post_init__(self):
        if self.left not in (-1, 1) or self.right not in (-1, 1):
            raise ValueError("bi-index components must be +1 or -1")

    def as_tuple(self):
        return (self.left, self.right)


def flow_bi_index(model, probe=0.1):
    """Bi-index read off the sign of the generating field near 0.

    On the right half-line a positive field pushes away from 0 (source, +1);
    on the left half-line a negative field pushes away from 0 (source, +1).
    """
    right_field = float(model.vector_field(probe))
    left_field = float(model.vector_field(-probe))
    right = 1 if right_field > 0 else -1
    left = 1 if left_field < 0 else -1
    return FlowBiIndex(left=left, right=right)


def parity_invariant(idx):
    """epsilon_1 + epsilon_2: 0 for mixed components, +/-2 for equal ones.

    |sum| = 2 exactly when the field order k is odd, which is the
    isomorphism invariant of the completed algebra.
    """
    return idx.left + idx.right


def bi_index_report(model):
    idx = flow_bi_index(model)
    return {
        "k": model.k,
        "variant": model.variant,
        "epsilon": [idx.left, idx.right],
        "parity_invariant": parity_invariant(idx),
    }


# ---------------------------------------------------------------------------
# non-preservation of the half-line operator algebra under steep warps
# ---------------------------------------------------------------------------


class Diffeomorphism:
    """An orientation-preserving diffeomorphism of the line with u' >= floor,
    inverted numerically (monotone table seed + Newton polish)."""

    def __init__(self, u, du, label="", table_range=(-60.0, 60.0), table_points=120001):
        self.u = u
        self.du = du
        self.label = label
        xs = np.linspace(table_range[0], table_range[1], table_points)
        us = np.asarray(u(xs), dtype=float)
        if np.any(np.diff(us) <= 0):
            raise ValueError("u is not strictly increasing on the tabulated range")
        self._xs = xs
        self._us = us

    @classmethod
    def identity(cls):
        return cls(lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float)), label="identity")

    @classmethod
    def exp_stretch(cls):
        """u(x) = x + e^x: smooth, u' = 1 + e^x >= 1, u' -> infinity."""
        return cls(
            lambda x: np.asarray(x, dtype=float) + np.exp(np.minimum(np.asarray(x, dtype=float), 700.0)),
            lambda x: 1.0 + np.exp(np.minimum(np.asarray(x, dtype=float), 700.0)),
            label="x + exp(x)",
        )

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self._us[0]) or np.any(y > self._us[-1]):
            raise ValueError("inverse requested outside the tabulated range")
        x = np.interp(y, self._us, self._xs)
        for _ in range(4):
            x = x - (np.asarray(self.u(x), dtype=float) - y) / np.asarray(self.du(x), dtype=float)
        return x


@dataclass(frozen=True)
class GaussianSpec:
    """f(x) = amplitude * exp(-x^2 / (2 sigma^2)); F f is again Gaussian."""

    amplitude: float = 1.0
    sigma: float = 1.0

    def transform_values(self, t):
        t = np.asarray(t, dtype=float)
        return (
            self.amplitude
            * self.sigma
            * np.sqrt(2.0 * np.pi)
            * np.exp(-2.0 * np.pi**2 * self.sigma**2 * t**2)
        )


def _smooth_bump(x, lo=0.0, hi=2.0):
    u = (np.asarray(x, dtype=float) - lo) / (hi - lo) * 2.0 - 1.0
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def nonpreservation_demo(
    u,
    f1,
    f2,
    n_max=20,
    spacing=3.0,
    grid_step=0.005,
    grid_lo=-20.0,
):
    """Norms of (T1 - U^{-1} T2 U) applied to a marching orthonormal family.

    T_i is convolution by F f_i after projecting to the right half-line, and
    U is the unitary warp (U xi)(x) = sqrt(u'(x)) xi(u(x)).  The test vectors
    xi_n are disjoint translates of one smooth unit bump on [0, 2].  Each
    record reports the full difference norm, the constant first-term norm a,
    and the L^2 and sup norms of the pulled-back second term, so a steep
    warp (u' -> infinity) shows the first term pinned at a while the second
    fades: the difference cannot be a compact perturbation of anything.
    """
    if not isinstance(u, Diffeomorphism):
        raise ValueError("u must be a Diffeomorphism descriptor")
    x = np.arange(grid_lo, spacing * n_max + 20.0, grid_step)
    dx = x[1] - x[0]
    proj = x >= 0.0

    xi0 = _smooth_bump(x)
    xi0 = xi0 / np.sqrt(np.trapezoid(xi0**2, dx=dx))

    def conv(kernel_vals, vec):
        return fftconvolve(vec, kernel_vals, mode="same") * dx

    # convolution kernels on a symmetric window around 0
    kt = np.arange(-len(x) // 2, len(x) // 2 + 1) * dx
    k1 = f1.transform_values(kt) if f1 is not None else None
    k2 = f2.transform_values(kt) if f2 is not None else None

    du_x = np.asarray(u.du(x), dtype=float)
    if np.any(du_x <= 0):
        raise ValueError("u is not orientation-preserving on the grid")
    ux = np.asarray(u.u(x), dtype=float)

    records = []
    for n in range(n_max + 1):
        shift = int(round(spacing * n / dx))
        xi_n = np.zeros_like(xi0)
        if shift:
            xi_n[shift:] = xi0[:-shift]
        else:
            xi_n[:] = xi0

        t1 = conv(k1, xi_n * proj) if k1 is not None else np.zeros_like(xi_n)

        # U xi_n, T2, then back through U^{-1}
        u_xi = np.sqrt(du_x) * np.interp(ux, x, xi_n, left=0.0, right=0.0)
        t2u = conv(k2, u_xi * proj) if k2 is not None else np.zeros_like(u_xi)
        xinv = u.inverse(x)
        du_inv = np.asarray(u.du(xinv), dtype=float)
        pullback = np.interp(xinv, x, t2u, left=0.0, right=0.0) / np.sqrt(du_inv)

        diff = t1 - pullback
        records.append(
            {
                "n": n,
                "norm": float(np.sqrt(np.trapezoid(np.abs(diff) ** 2, dx=dx))),
                "first_term_norm": float(np.sqrt(np.trapezoid(np.abs(t1) ** 2, dx=dx))),
                "pullback_l2": float(np.sqrt(np.trapezoid(np.abs(pullback) ** 2, dx=dx))),
                "pullback_sup": float(np.max(np.abs(pullback))),
            }
        )
    return records
