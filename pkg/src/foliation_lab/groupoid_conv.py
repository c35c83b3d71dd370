"""Sampled kernels on the transformation groupoid of a flow on the line.

A ``GroupoidKernel`` is a compactly supported function of (x, t) sampled on a
rectangular grid, where (x, t) stands for the arrow from x to phi_t(x).  The
module implements:

  convolution     (f*g)(x,t) = integral of f(phi_s(x), t-s) g(x,s) ds
  adjoint         f*(x,t)    = conj f(phi_t(x), -t)
  module actions  (a.g)(x,t) = a(phi_t(x)) g(x,t),  (g.a)(x,t) = a(x) g(x,t)
  Taylor map      T(f) = jet of x-Taylor coefficients of f at x = 0
  L^1 norms       the plain kernel norm and the weighted variant that carries
                  the square-root-of-flow-derivative cocycle

Quadrature is the trapezoid rule on the t-grid; values of f at the off-grid
points (phi_s(x), t-s) come from cubic interpolation along x (the t argument
stays on-grid because both operands share one t-step).  Products get an
enlarged t-window equal to the sum of the operand windows; the x-window is
unchanged.
"""

from __future__ import annotations

import csv
import io
import struct

import numpy as np
from scipy.interpolate import CubicSpline

from .coeff_ring import DEFAULT_SUPPORT_TOL, GridFn
from .flow import (
    FlowDomainError,
    FlowModel,
    cocycle_delta,
    flow_derivative_many,
    flow_eval_many,
)
from .jet_algebra import Jet

_BINARY_MAGIC = b"GKN1"
_VARIANT_CODES = {"monomial": 0, "complete_rescaled": 1}
_VARIANT_NAMES = {v: k for k, v in _VARIANT_CODES.items()}

# kernels produced by interpolating operations carry cubic-interpolation
# ringing off the support edge; their boundary check allows for it
DERIVED_SUPPORT_TOL = 1e-7


class GridSpec(tuple):
    """(start, step, count) of a uniform axis."""

    def __new__(cls, start, step, count):
        if not step > 0:
            raise ValueError("grid step must be positive")
        if count < 2:
            raise ValueError("grid needs at least two points")
        return super().__new__(cls, (float(start), float(step), int(count)))

    @classmethod
    def centered(cls, radius, step):
        n = int(round(radius / step))
        return cls(-n * step, step, 2 * n + 1)

    @property
    def start(self):
        return self[0]

    @property
    def step(self):
        return self[1]

    @property
    def count(self):
        return self[2]

    @property
    def end(self):
        return self.start + self.step * (self.count - 1)

    @property
    def points(self):
        return self.start + self.step * np.arange(self.count)


class BaseFn:
    """A smooth function of the base coordinate x acting as a multiplier."""

    def __init__(self, kind, fn, data=None):
        self.kind = kind
        self._fn = fn
        self.data = data

    @classmethod
    def identity(cls):
        return cls("identity", lambda x: np.asarray(x, dtype=float))

    @classmethod
    def power(cls, p):
        return cls("power", lambda x: np.asarray(x, dtype=float) ** p, data=p)

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", lambda x: np.full_like(np.asarray(x, dtype=float), c, dtype=complex), data=c)

    @classmethod
    def bump(cls, radius=1.0, center=0.0):
        def fn(x):
            u = (np.asarray(x, dtype=float) - center) / radius
            out = np.zeros_like(u)
            inside = np.abs(u) < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
            return out

        return cls("bump", fn, data=(radius, center))

    @classmethod
    def from_samples(cls, x_nodes, values):
        spline = CubicSpline(np.asarray(x_nodes, dtype=float), np.asarray(values))
        return cls("sampled", spline, data=(np.asarray(x_nodes), np.asarray(values)))

    @classmethod
    def from_callable(cls, fn, label="callable"):
        return cls(label, fn)

    def __call__(self, x):
        return self._fn(x)


class GroupoidKernel:
    """A sampled compactly supported kernel tied to a flow model."""

    __slots__ = ("flow", "x_grid", "t_grid", "samples", "support_tol")

    def __init__(self, flow, x_grid, t_grid, samples, support_tol=DEFAULT_SUPPORT_TOL):
        if not isinstance(flow, FlowModel):
            raise TypeError("flow must be a FlowModel")
        x_grid = GridSpec(*x_grid)
        t_grid = GridSpec(*t_grid)
        samples = np.array(samples, dtype=complex)  # own the data
        if samples.shape != (x_grid.count, t_grid.count):
            raise ValueError(
                f"samples shape {samples.shape} does not match grids "
                f"({x_grid.count}, {t_grid.count})"
            )
        peak = float(np.max(np.abs(samples))) if samples.size else 0.0
        tol = support_tol * max(1.0, peak)
        boundary = max(
            float(np.max(np.abs(samples[0, :]))),
            float(np.max(np.abs(samples[-1, :]))),
            float(np.max(np.abs(samples[:, 0]))),
            float(np.max(np.abs(samples[:, -1]))),
        )
        if boundary > tol:
            raise ValueError(
                f"kernel does not vanish on the grid boundary (max {boundary:.3e}); "
                "enlarge the window"
            )
        # every sample carrying mass must be a point of the groupoid, i.e.
        # admissible for the flow; quadrature re-checks the warped points it
        # actually visits
        mass = np.abs(samples) > tol
        if np.any(mass):
            ok = flow.in_domain(t_grid.points[None, :], x_grid.points[:, None])
            bad = mass & ~ok
            if np.any(bad):
                i, j = np.argwhere(bad)[0]
                raise FlowDomainError(
                    f"kernel carries mass at (x={x_grid.points[i]:g}, "
                    f"t={t_grid.points[j]:g}), outside the flow domain"
                )
        samples.setflags(write=False)  # kernels are immutable after construction
        self.flow = flow
        self.x_grid = x_grid
        self.t_grid = t_grid
        self.samples = samples
        self.support_tol = support_tol

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_function(cls, flow, x_grid, t_grid, fn, **kw):
        x_grid = GridSpec(*x_grid)
        t_grid = GridSpec(*t_grid)
        X, T = np.meshgrid(x_grid.points, t_grid.points, indexing="ij")
        return cls(flow, x_grid, t_grid, np.asarray(fn(X, T), dtype=complex), **kw)

    @classmethod
    def separable(cls, flow, x_grid, t_grid, a, b, **kw):
        """Kernel a(x) * b(t) from two one-variable callables."""
        x_grid = GridSpec(*x_grid)
        t_grid = GridSpec(*t_grid)
        av = np.asarray(a(x_grid.points), dtype=complex)
        bv = np.asarray(b(t_grid.points), dtype=complex)
        return cls(flow, x_grid, t_grid, np.outer(av, bv), **kw)

    def scale(self, c):
        return GroupoidKernel(self.flow, self.x_grid, self.t_grid, self.samples * c, self.support_tol)

    def __sub__(self, other):
        self._check_compatible(other)
        return GroupoidKernel(
            self.flow, self.x_grid, self.t_grid, self.samples - other.samples, self.support_tol
        )

    def __add__(self, other):
        self._check_compatible(other)
        return GroupoidKernel(
            self.flow, self.x_grid, self.t_grid, self.samples + other.samples, self.support_tol
        )

    def sup_norm(self):
        return float(np.max(np.abs(self.samples)))

    def _check_compatible(self, other):
        if self.flow != other.flow:
            raise ValueError("kernels live over different flows")
        if tuple(self.x_grid) != tuple(other.x_grid):
            raise ValueError("x-grid mismatch")
        if abs(self.t_grid.step - other.t_grid.step) > 1e-12 * self.t_grid.step:
            raise ValueError("t-step mismatch")

    def _x_spline(self):
        return CubicSpline(self.x_grid.points, self.samples, axis=0, extrapolate=False)

    def _sample_warped(self, spline, x_warp):
        """Evaluate the x-interpolant at warped positions; 0 outside window,
        0 at NaN positions (inadmissible points carrying no mass)."""
        vals = spline(np.where(np.isnan(x_warp), self.x_grid.start, x_warp))
        vals = np.where(np.isnan(vals), 0.0, vals)
        outside = np.isnan(x_warp) | (x_warp < self.x_grid.start) | (x_warp > self.x_grid.end)
        if vals.ndim == 2:
            vals[outside, :] = 0.0
        else:
            vals = np.where(outside, 0.0, vals)
        return vals


def convolve(f, g):
    """(f*g)(x,t) = integral f(phi_s(x), t-s) g(x,s) ds on the shared grid.

    Raises FlowDomainError if the quadrature needs the flow at a point
    outside its domain where g actually carries mass.
    """
    f._check_compatible(g)
    flow = f.flow
    xs = f.x_grid.points
    dt = f.t_grid.step
    n_out = f.t_grid.count + g.t_grid.count - 1
    out = np.zeros((f.x_grid.count, n_out), dtype=complex)

    s_vals = g.t_grid.points
    warped = flow_eval_many(flow, s_vals, xs)  # (n_s, n_x), NaN off-domain

    peak = max(g.sup_norm(), 1.0)
    tol = min(g.support_tol, DERIVED_SUPPORT_TOL) * peak
    spline = f._x_spline()
    trap_w = np.ones(g.t_grid.count)
    trap_w[0] = trap_w[-1] = 0.5

    for l in range(g.t_grid.count):
        g_col = g.samples[:, l]
        col_mask = np.abs(g_col) > tol
        if not np.any(col_mask):
            continue
        bad = np.isnan(warped[l]) & col_mask
        if np.any(bad):
            raise FlowDomainError(
                f"convolution quadrature leaves the flow domain at "
                f"s={s_vals[l]:g}, x={xs[bad][0]:g}"
            )
        f_slab = f._sample_warped(spline, warped[l])  # (n_x, n_t_f)
        out[:, l : l + f.t_grid.count] += (trap_w[l] * dt) * f_slab * g_col[:, None]

    t_grid = GridSpec(f.t_grid.start + g.t_grid.start, dt, n_out)
    return GroupoidKernel(flow, f.x_grid, t_grid, out, f.support_tol)


def adjoint(f):
    """f*(x,t) = conj f(phi_t(x), -t); the t-window is reflected.

    Grid points outside the flow domain carry no true mass (the adjoint is
    supported on composable pairs) and become zeros; the construction check
    of the result raises if mass actually lands on an inadmissible row.
    """
    flow = f.flow
    t_grid = GridSpec(-f.t_grid.end, f.t_grid.step, f.t_grid.count)
    warped = flow_eval_many(flow, t_grid.points, f.x_grid.points)  # (n_t, n_x)

    spline = f._x_spline()
    out = np.empty((f.x_grid.count, t_grid.count), dtype=complex)
    for j in range(t_grid.count):
        # f at (phi_tau(x), -tau); -tau is the mirrored on-grid column
        col = f.t_grid.count - 1 - j
        vals = f._sample_warped(spline, warped[j])[:, col]
        out[:, j] = np.conj(vals)
    return GroupoidKernel(
        flow, f.x_grid, t_grid, out, max(f.support_tol, DERIVED_SUPPORT_TOL)
    )


def module_mult_left(a, g):
    """(a.g)(x,t) = a(phi_t(x)) g(x,t) for a base multiplier a."""
    warped = flow_eval_many(g.flow, g.t_grid.points, g.x_grid.points)  # (n_t, n_x)
    tol = g.support_tol * max(g.sup_norm(), 1.0)
    mass = np.abs(g.samples.T) > tol
    bad = np.isnan(warped) & mass
    if np.any(bad):
        raise FlowDomainError("left module action needs the flow outside its domain")
    a_vals = np.asarray(a(np.where(np.isnan(warped), 0.0, warped)), dtype=complex)
    a_vals = np.where(np.isnan(warped), 0.0, a_vals)
    return GroupoidKernel(
        g.flow, g.x_grid, g.t_grid, a_vals.T * g.samples, g.support_tol
    )


def module_mult_right(g, a):
    """(g.a)(x,t) = a(x) g(x,t)."""
    a_vals = np.asarray(a(g.x_grid.points), dtype=complex)
    return GroupoidKernel(
        g.flow, g.x_grid, g.t_grid, a_vals[:, None] * g.samples, g.support_tol
    )


def scale_by_delta(g):
    """Pointwise multiply by the cocycle Delta(x,t) = phi_t(x)/x (extended)."""
    xs = g.x_grid.points
    ts = g.t_grid.points
    model = g.flow
    k = model.k
    if model.variant == "monomial":
        t_eff = model.sign * ts
        if k == 1:
            vals = np.broadcast_to(np.exp(t_eff)[None, :], g.samples.shape).copy()
        else:
            base = 1.0 - (k - 1) * t_eff[None, :] * xs[:, None] ** (k - 1)
            with np.errstate(invalid="ignore", divide="ignore"):
                vals = np.where(base > 0, np.abs(base) ** (-1.0 / (k - 1)), np.nan)
    else:
        phi = flow_eval_many(model, ts, xs).T  # (n_x, n_t)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = phi / xs[:, None]
        zero_rows = xs == 0.0
        vals[zero_rows, :] = np.exp(model.sign * ts)[None, :] if k == 1 else 1.0
    tol = g.support_tol * max(g.sup_norm(), 1.0)
    if np.any(np.isnan(vals) & (np.abs(g.samples) > tol)):
        raise FlowDomainError("cocycle scaling needs the flow outside its domain")
    vals = np.where(np.isnan(vals), 0.0, vals)
    return GroupoidKernel(g.flow, g.x_grid, g.t_grid, vals * g.samples, g.support_tol)


def taylor_map(f, p):
    """Jet of order p of the kernel: coefficients (1/n!) d^n f/dx^n (0, t).

    Derivatives at 0 come from a least-squares polynomial fit of degree p+2
    over a symmetric stencil of at least 2p+5 points around x = 0, which is
    robust to the quadrature noise that products carry.
    """
    xs = f.x_grid.points
    if not (xs[0] < 0.0 < xs[-1]):
        raise ValueError("x = 0 must lie strictly inside the x-grid")
    width = 2 * p + 5
    degree = p + 2
    if width > xs.size:
        raise ValueError(
            f"taylor_map order {p} needs a stencil of {width} points; "
            f"the x-grid has only {xs.size}"
        )
    i0 = int(np.argmin(np.abs(xs)))
    half = width // 2
    lo = max(0, min(i0 - half, xs.size - width))
    stencil = slice(lo, lo + width)
    xloc = xs[stencil]
    design = np.vander(xloc, degree + 1, increasing=True)
    coeffs, *_ = np.linalg.lstsq(design, f.samples[stencil, :], rcond=None)
    jets = [
        GridFn(f.t_grid.start, f.t_grid.step, coeffs[n, :], support_tol=np.inf)
        for n in range(p + 1)
    ]
    return Jet(f.flow.k, jets)


def l1_groupoid_norm(f):
    """sup over x of the larger of the t-integrals of |f| and |f*|."""
    dt = f.t_grid.step
    direct = np.trapezoid(np.abs(f.samples), dx=dt, axis=1)
    adj = np.trapezoid(np.abs(adjoint(f).samples), dx=dt, axis=1)
    return float(np.max(np.maximum(direct, adj)))


def l1_as_norm(f):
    """The weighted variant: both integrands carry beta = sqrt(phi_t'(x)),
    with beta = 1 on the isotropy line x = 0."""
    dt = f.t_grid.step
    xs = f.x_grid.points

    def weight(kernel):
        dphi = flow_derivative_many(kernel.flow, kernel.t_grid.points, xs)  # (n_t, n_x)
        beta = np.sqrt(np.where(np.isnan(dphi), 1.0, dphi)).T
        beta[np.abs(xs) == 0.0, :] = 1.0
        return np.trapezoid(np.abs(kernel.samples) * beta, dx=dt, axis=1)

    return float(np.max(np.maximum(weight(f), weight(adjoint(f)))))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def kernel_to_binary(f):
    buf = io.BytesIO()
    buf.write(_BINARY_MAGIC)
    buf.write(
        struct.pack(
            "<ddqddqqB",
            f.x_grid.start,
            f.x_grid.step,
            f.x_grid.count,
            f.t_grid.start,
            f.t_grid.step,
            f.t_grid.count,
            f.flow.k,
            _VARIANT_CODES[f.flow.variant],
        )
    )
    inter = np.empty(2 * f.samples.size)
    inter[0::2] = f.samples.real.ravel()
    inter[1::2] = f.samples.imag.ravel()
    buf.write(inter.astype("<f8").tobytes())
    return buf.getvalue()


def kernel_from_binary(data):
    if data[:4] != _BINARY_MAGIC:
        raise ValueError("not a GroupoidKernel binary record")
    header = struct.unpack_from("<ddqddqqB", data, 4)
    x_start, x_step, x_count, t_start, t_step, t_count, k, vcode = header
    offset = 4 + struct.calcsize("<ddqddqqB")
    inter = np.frombuffer(data, dtype="<f8", count=2 * x_count * t_count, offset=offset)
    samples = (inter[0::2] + 1j * inter[1::2]).reshape(x_count, t_count)
    flow = FlowModel(k, _VARIANT_NAMES[vcode])
    return GroupoidKernel(flow, (x_start, x_step, x_count), (t_start, t_step, t_count), samples)


def kernel_to_csv(f, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "re", "im"])
        for i, x in enumerate(f.x_grid.points):
            for j, t in enumerate(f.t_grid.points):
                v = f.samples[i, j]
                writer.writerow(
                    [repr(float(x)), repr(float(t)), repr(float(v.real)), repr(float(v.imag))]
                )
