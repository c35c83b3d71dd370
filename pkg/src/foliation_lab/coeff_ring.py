"""Coefficient ring: smooth functions of one time variable under convolution.

Two interchangeable representations are provided:

``GridFn``
    a function sampled on a uniform grid, zero outside the sampled window;
    convolution is discrete quadrature (direct or FFT-accelerated).

``GaussPolyFn``
    an exact finite sum of atoms ``p(t) * exp(-(t - mean)^2 / (2*variance))``
    with polynomial ``p``.  The family is closed, in closed form, under
    convolution, multiplication by polynomials in ``t`` and multiplication
    by exponentials ``exp(c*t)``, which is everything the twisted jet
    products require.

Gaussian atoms are not compactly supported; they decay fast enough that the
window-edge values of any sampling are far below the support tolerance, and
we treat them as effectively compact.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from math import comb, pi, sqrt

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline
from scipy.signal import convolve2d, fftconvolve

DEFAULT_SUPPORT_TOL = 1e-10
DEFAULT_EQ_TOL = 1e-8

_BINARY_MAGIC = b"GFN1"


class RepresentationMismatchError(TypeError):
    """Raised when an operation mixes GridFn and GaussPolyFn operands."""


class GridMismatchError(ValueError):
    """Raised when two GridFn operands live on incommensurable grids."""


# ---------------------------------------------------------------------------
# sampled representation
# ---------------------------------------------------------------------------


class GridFn:
    """A function of t sampled on a uniform grid, zero outside the window."""

    __slots__ = ("t_start", "t_step", "samples")

    def __init__(self, t_start, t_step, samples, support_tol=DEFAULT_SUPPORT_TOL):
        samples = np.array(samples, dtype=complex)  # own the data
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a nonempty 1-d array")
        if not t_step > 0:
            raise ValueError("t_step must be positive")
        peak = float(np.max(np.abs(samples)))
        edge = max(abs(samples[0]), abs(samples[-1]))
        if edge > support_tol * max(1.0, peak):
            raise ValueError(
                f"window-edge value {edge:.3e} exceeds support tolerance; "
                "enlarge the window so the function decays inside it"
            )
        samples.setflags(write=False)  # values are immutable after construction
        self.t_start = float(t_start)
        self.t_step = float(t_step)
        self.samples = samples

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_function(cls, fn, t_start, t_step, count, **kw):
        t = t_start + t_step * np.arange(count)
        return cls(t_start, t_step, np.asarray(fn(t), dtype=complex), **kw)

    @classmethod
    def zero(cls, t_start=-1.0, t_step=1.0, count=3):
        return cls(t_start, t_step, np.zeros(count, dtype=complex))

    @property
    def count(self):
        return self.samples.size

    @property
    def t_grid(self):
        return self.t_start + self.t_step * np.arange(self.count)

    @property
    def t_end(self):
        return self.t_start + self.t_step * (self.count - 1)

    def __call__(self, t):
        """Evaluate by cubic interpolation, zero outside the window."""
        t = np.asarray(t, dtype=float)
        spl = CubicSpline(self.t_grid, self.samples, extrapolate=False)
        out = spl(t)
        return np.where(np.isnan(out), 0.0, out)

    # -- ring operations -----------------------------------------------------

    def _check_compatible(self, other):
        if not isinstance(other, GridFn):
            raise RepresentationMismatchError(
                "cannot combine GridFn with " + type(other).__name__
            )
        if not np.isclose(self.t_step, other.t_step, rtol=1e-12, atol=0):
            raise GridMismatchError(
                f"t_step mismatch: {self.t_step} vs {other.t_step}"
            )
        # offsets must differ by a whole number of steps so grids align
        off = (other.t_start - self.t_start) / self.t_step
        if abs(off - round(off)) > 1e-9:
            raise GridMismatchError("grid offsets are not commensurable")

    def convolve(self, other, method="fft"):
        """(f*g)(t) = integral f(t-s) g(s) ds by discrete quadrature.

        Endpoint samples vanish by the support invariant, so the plain
        Riemann sum coincides with the trapezoid rule.
        """
        self._check_compatible(other)
        if method == "fft":
            conv = fftconvolve(self.samples, other.samples)
        elif method == "direct":
            conv = np.convolve(self.samples, other.samples)
        else:
            raise ValueError(f"unknown method {method!r}")
        return GridFn(self.t_start + other.t_start, self.t_step, conv * self.t_step)

    def mul_by_t(self):
        return GridFn(self.t_start, self.t_step, self.samples * self.t_grid)

    def mul_by_exp(self, c):
        return GridFn(self.t_start, self.t_step, self.samples * np.exp(c * self.t_grid))

    def mul_by_poly(self, coeffs):
        """Pointwise multiply by the polynomial with ascending coefficients."""
        vals = npoly.polyval(self.t_grid, np.asarray(coeffs))
        return GridFn(self.t_start, self.t_step, self.samples * vals)

    def add(self, other):
        self._check_compatible(other)
        start = min(self.t_start, other.t_start)
        end = max(self.t_end, other.t_end)
        n = int(round((end - start) / self.t_step)) + 1
        out = np.zeros(n, dtype=complex)
        i = int(round((self.t_start - start) / self.t_step))
        j = int(round((other.t_start - start) / self.t_step))
        out[i : i + self.count] += self.samples
        out[j : j + other.count] += other.samples
        return GridFn(start, self.t_step, out)

    def scale(self, c):
        return GridFn(self.t_start, self.t_step, self.samples * c)

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    # -- norms and comparison --------------------------------------------------

    def sup_norm(self):
        return float(np.max(np.abs(self.samples)))

    def l1_norm(self):
        return float(np.trapezoid(np.abs(self.samples), dx=self.t_step))

    def l2_norm(self):
        return float(sqrt(np.trapezoid(np.abs(self.samples) ** 2, dx=self.t_step)))

    def resample(self, t_start, t_step, count):
        """Cubic-interpolate onto a new grid (zero outside the old window)."""
        t = t_start + t_step * np.arange(count)
        return GridFn(t_start, t_step, self(t))

    # -- serialization ---------------------------------------------------------

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "re", "im"])
            for t, v in zip(self.t_grid, self.samples):
                writer.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path):
        ts, vals = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)  # header
            for row in reader:
                ts.append(float(row[0]))
                vals.append(complex(float(row[1]), float(row[2])))
        ts = np.asarray(ts)
        step = ts[1] - ts[0] if len(ts) > 1 else 1.0
        return cls(ts[0], step, np.asarray(vals))

    def to_binary(self):
        """Little-endian record: magic, t_start, t_step, count, re/im pairs."""
        buf = io.BytesIO()
        buf.write(_BINARY_MAGIC)
        buf.write(struct.pack("<ddq", self.t_start, self.t_step, self.count))
        inter = np.empty(2 * self.count)
        inter[0::2] = self.samples.real
        inter[1::2] = self.samples.imag
        buf.write(inter.astype("<f8").tobytes())
        return buf.getvalue()

    @classmethod
    def from_binary(cls, data):
        if data[:4] != _BINARY_MAGIC:
            raise ValueError("not a GridFn binary record")
        t_start, t_step, count = struct.unpack_from("<ddq", data, 4)
        inter = np.frombuffer(data, dtype="<f8", count=2 * count, offset=4 + 24)
        return cls(t_start, t_step, inter[0::2] + 1j * inter[1::2])

    def __repr__(self):
        return (
            f"GridFn(t_start={self.t_start:g}, t_step={self.t_step:g}, "
            f"count={self.count})"
        )


# ---------------------------------------------------------------------------
# exact representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussAtom:
    """One term p(t) * exp(-(t-mean)^2 / (2*variance)); poly ascending."""

    poly: tuple
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("atom variance must be positive")

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return npoly.polyval(t, np.asarray(self.poly)) * np.exp(
            -((t - self.mean) ** 2) / (2.0 * self.variance)
        )


def _double_factorial(j):
    out = 1
    while j > 1:
        out *= j
        j -= 2
    return out


def _poly_shift(coeffs, x0):
    """Coefficients of p(x0 + y) in y, given p's coefficients in x."""
    p = np.polynomial.Polynomial(np.asarray(coeffs))
    return p(np.polynomial.Polynomial([x0, 1.0])).coef


def _bivar_from_shifted(coeffs, x0, cw, cv):
    """2-d coefficient array of p(x0 + cw*w + cv*v), index [i,j] for w^i v^j."""
    q = _poly_shift(coeffs, x0)
    deg = len(q) - 1
    out = np.zeros((deg + 1, deg + 1), dtype=q.dtype)
    for k in range(deg + 1):
        for j in range(k + 1):
            out[k - j, j] += q[k] * comb(k, j) * cw ** (k - j) * cv**j
    return out


def _convolve_atoms(a, b):
    """Exact convolution of two atoms (Gaussian moment integration)."""
    s = a.variance + b.variance
    sig2 = a.variance * b.variance / s
    A = _bivar_from_shifted(a.poly, a.mean, a.variance / s, -1.0)
    B = _bivar_from_shifted(b.poly, b.mean, b.variance / s, +1.0)
    C = convolve2d(A, B)
    w_poly = np.zeros(C.shape[0], dtype=C.dtype)
    for j in range(0, C.shape[1], 2):  # odd Gaussian moments vanish
        w_poly = w_poly + C[:, j] * (_double_factorial(j - 1) * sig2 ** (j // 2))
    w_poly = w_poly * sqrt(2.0 * pi * sig2)
    t_poly = _poly_shift(w_poly, -(a.mean + b.mean))
    return GaussAtom(tuple(t_poly), a.mean + b.mean, s)


class GaussPolyFn:
    """Exact coefficient function: a finite sum of polynomial-Gaussian atoms."""

    __slots__ = ("atoms",)

    def __init__(self, atoms=()):
        merged = {}
        for atom in atoms:
            if not isinstance(atom, GaussAtom):
                atom = GaussAtom(tuple(np.asarray(atom[0]).tolist()), atom[1], atom[2])
            key = (atom.mean, atom.variance)
            if key in merged:
                merged[key] = npoly.polyadd(merged[key], np.asarray(atom.poly))
            else:
                merged[key] = np.asarray(atom.poly)
        self.atoms = tuple(
            GaussAtom(tuple(p.tolist()), m, v)
            for (m, v), p in merged.items()
            if np.any(p != 0)
        )

    @classmethod
    def gaussian(cls, amplitude=1.0, mean=0.0, variance=1.0):
        return cls([GaussAtom((amplitude,), mean, variance)])

    @classmethod
    def zero(cls):
        return cls(())

    def is_zero(self):
        return not self.atoms

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for atom in self.atoms:
            out = out + atom.eval(t)
        return out

    # -- ring operations -----------------------------------------------------

    def convolve(self, other):
        if not isinstance(other, GaussPolyFn):
            raise RepresentationMismatchError(
                "cannot combine GaussPolyFn with " + type(other).__name__
            )
        return GaussPolyFn(
            [_convolve_atoms(a, b) for a in self.atoms for b in other.atoms]
        )

    def mul_by_t(self):
        return self.mul_by_poly((0.0, 1.0))

    def mul_by_poly(self, coeffs):
        coeffs = np.asarray(coeffs)
        return GaussPolyFn(
            [
                GaussAtom(tuple(npoly.polymul(a.poly, coeffs).tolist()), a.mean, a.variance)
                for a in self.atoms
            ]
        )

    def mul_by_exp(self, c):
        # e^{ct} p(t) e^{-(t-m)^2/2v} = [e^{cm + c^2 v/2} p(t)] e^{-(t-m-cv)^2/2v}
        out = []
        for a in self.atoms:
            scale = np.exp(c * a.mean + c * c * a.variance / 2.0)
            poly = tuple((np.asarray(a.poly) * scale).tolist())
            out.append(GaussAtom(poly, a.mean + c * a.variance, a.variance))
        return GaussPolyFn(out)

    def add(self, other):
        if not isinstance(other, GaussPolyFn):
            raise RepresentationMismatchError(
                "cannot combine GaussPolyFn with " + type(other).__name__
            )
        return GaussPolyFn(self.atoms + other.atoms)

    def scale(self, c):
        return GaussPolyFn(
            [
                GaussAtom(tuple((np.asarray(a.poly) * c).tolist()), a.mean, a.variance)
                for a in self.atoms
            ]
        )

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    # -- sampling and norms ----------------------------------------------------

    def support_window(self, n_sigma=12.0):
        """A window outside which every atom is far below rounding."""
        if not self.atoms:
            return (-1.0, 1.0)
        lo = min(a.mean - n_sigma * sqrt(a.variance) for a in self.atoms)
        hi = max(a.mean + n_sigma * sqrt(a.variance) for a in self.atoms)
        return (lo, hi)

    def sample(self, t_start, t_step, count, **kw):
        t = t_start + t_step * np.arange(count)
        return GridFn(t_start, t_step, self(t), **kw)

    def _dense_grid(self, n=4001):
        lo, hi = self.support_window()
        return np.linspace(lo, hi, n)

    def sup_norm(self):
        if not self.atoms:
            return 0.0
        t = self._dense_grid()
        vals = np.abs(self(t))
        best = float(np.max(vals))
        # refine around the coarse argmax
        i = int(np.argmax(vals))
        lo = t[max(i - 2, 0)]
        hi = t[min(i + 2, t.size - 1)]
        for _ in range(3):
            local = np.linspace(lo, hi, 81)
            lvals = np.abs(self(local))
            j = int(np.argmax(lvals))
            best = max(best, float(lvals[j]))
            lo = local[max(j - 2, 0)]
            hi = local[min(j + 2, 80)]
        return best

    def l1_norm(self):
        if not self.atoms:
            return 0.0
        t = self._dense_grid()
        return float(np.trapezoid(np.abs(self(t)), t))

    def l2_norm(self):
        if not self.atoms:
            return 0.0
        t = self._dense_grid()
        return float(sqrt(np.trapezoid(np.abs(self(t)) ** 2, t)))

    # -- serialization ---------------------------------------------------------

    def to_dict(self):
        return {
            "type": "gauss_poly",
            "atoms": [
                {
                    "poly_re": [float(np.real(c)) for c in a.poly],
                    "poly_im": [float(np.imag(c)) for c in a.poly],
                    "mean": a.mean,
                    "variance": a.variance,
                }
                for a in self.atoms
            ],
        }

    @classmethod
    def from_dict(cls, d):
        atoms = []
        for a in d["atoms"]:
            poly = np.asarray(a["poly_re"], dtype=complex) + 1j * np.asarray(a["poly_im"])
            if np.all(poly.imag == 0):
                poly = poly.real
            atoms.append(GaussAtom(tuple(poly.tolist()), a["mean"], a["variance"]))
        return cls(atoms)

    def __repr__(self):
        return f"GaussPolyFn(n_atoms={len(self.atoms)})"


# ---------------------------------------------------------------------------
# representation-generic operations (the module-level API)
# ---------------------------------------------------------------------------


def convolve(f, g, **kw):
    return f.convolve(g, **kw)


def mul_by_t(f):
    return f.mul_by_t()


def mul_by_exp(f, c):
    return f.mul_by_exp(c)


def add(f, g):
    return f.add(g)


def scale(f, c):
    return f.scale(c)


def sup_norm(f):
    return f.sup_norm()


def l1_norm(f):
    return f.l1_norm()


def l2_norm(f):
    return f.l2_norm()


def _common_grid(f, g, n_min=2001):
    if isinstance(f, GridFn) and isinstance(g, GridFn):
        step = min(f.t_step, g.t_step)
        lo = min(f.t_start, g.t_start)
        hi = max(f.t_end, g.t_end)
    else:
        windows = []
        for h in (f, g):
            if isinstance(h, GridFn):
                windows.append((h.t_start, h.t_end))
            else:
                windows.append(h.support_window())
        lo = min(w[0] for w in windows)
        hi = max(w[1] for w in windows)
        step = (hi - lo) / (n_min - 1)
        if isinstance(f, GridFn):
            step = min(step, f.t_step)
        if isinstance(g, GridFn):
            step = min(step, g.t_step)
    count = int(round((hi - lo) / step)) + 1
    return lo, step, count


def approx_eq(f, g, tol=DEFAULT_EQ_TOL, reference=None):
    """Compare in sup norm on a common grid, relative to the operand scale.

    ``reference`` overrides the denominator; two zero functions compare equal.
    """
    lo, step, count = _common_grid(f, g)
    t = lo + step * np.arange(count)
    fv = f(t)
    gv = g(t)
    diff = float(np.max(np.abs(fv - gv)))
    if reference is None:
        reference = max(float(np.max(np.abs(fv))), float(np.max(np.abs(gv))))
    if reference == 0.0:
        return True
    return diff <= tol * reference


def random_gauss_poly(rng, n_atoms=1, max_degree=2, real=True):
    """Seeded random element of the exact ring (used by suites and tests).

    Polynomial coefficients are drawn in [-1, 1], means in [-2, 2] and
    variances in [0.5, 2].
    """
    atoms = []
    for _ in range(n_atoms):
        deg = int(rng.integers(0, max_degree + 1))
        coeffs = rng.uniform(-1.0, 1.0, deg + 1)
        if not real:
            coeffs = coeffs + 1j * rng.uniform(-1.0, 1.0, deg + 1)
        atoms.append(
            GaussAtom(tuple(coeffs.tolist()), float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 2)))
        )
    return GaussPolyFn(atoms)
