"""Fourier bridge between momentum densities and characteristic functions.

Conventions (shared by every module):

* the CF of a momentum density P is ``Phi(s) = integral P(q) exp(i q s / hbar) dq``,
* tabulated densities/weights are piecewise linear between grid nodes and
  zero outside,
* transforms live on conjugate uniform grids with ``ds * dq = 2 pi hbar / n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    GridTooCoarse,
    NonHermitianInput,
    QuadratureNotConverged,
    SupportClipped,
    WindowTooNarrow,
)

trapezoid = getattr(np, "trapezoid", np.trapz)

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_MAX_PANELS = 2_000_000


def _gl_rule(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


def phase_minus_one(u):
    """exp(iu) - 1 evaluated without cancellation for small u."""
    u = np.asarray(u, dtype=float)
    return -2.0 * np.sin(0.5 * u) ** 2 + 1j * np.sin(u)


# ---------------------------------------------------------------------------
# adaptive composite quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Momentum window and tolerances for the jump integrals.

    ``singularities`` lists momenta (e.g. q=0 for stable measures) that get
    a geometric stack of panels; the integrand there must stay integrable.
    """

    q_min: float
    q_max: float
    base_panels: int = 64
    refine_limit: int = 8
    singularities: tuple = ()
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6

    def __post_init__(self):
        if not np.isfinite(self.q_min) or not np.isfinite(self.q_max):
            raise ValueError("quadrature window must be finite")
        if self.q_max <= self.q_min:
            raise ValueError("quadrature window is empty")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.base_panels < 1:
            raise ValueError("base_panels must be >= 1")


def _initial_edges(spec: QuadratureSpec, osc_half_period=None):
    edges = set(np.linspace(spec.q_min, spec.q_max, spec.base_panels + 1))
    width = spec.q_max - spec.q_min
    w0 = width / max(spec.base_panels, 4)
    for s0 in spec.singularities:
        if not (spec.q_min <= s0 <= spec.q_max):
            continue
        edges.add(float(s0))
        for k in range(49):
            step = w0 * 0.5 ** k
            for p in (s0 - step, s0 + step):
                if spec.q_min < p < spec.q_max:
                    edges.add(float(p))
    out = np.array(sorted(edges))
    if osc_half_period is not None and np.isfinite(osc_half_period):
        need = width / osc_half_period
        if need > _MAX_PANELS:
            raise QuadratureNotConverged(
                f"window needs ~{need:.3g} oscillation panels; shrink the window"
            )
        pieces = [out[:1]]
        for a, b in zip(out[:-1], out[1:]):
            m = int(np.ceil((b - a) / osc_half_period))
            if m > 1:
                pieces.append(np.linspace(a, b, m + 1)[1:])
            else:
                pieces.append(np.array([b]))
        out = np.concatenate(pieces)
    return out


def _gl_panels(f, edges, order):
    x, w = _gl_rule(order)
    a = edges[:-1]
    b = edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
    panel = (vals * w[None, :]).sum(axis=1) * half
    return panel.sum()


def _split_edges(edges):
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(edges.size + mids.size, dtype=float)
    out[0::2] = edges
    out[1::2] = mids
    return out


def _refine_until(f, edges, abs_tol, rel_tol, max_levels, order=15):
    prev = _gl_panels(f, edges, order)
    cur = prev
    for _ in range(max_levels):
        if edges.size > _MAX_PANELS:
            break
        edges = _split_edges(edges)
        cur = _gl_panels(f, edges, order)
        if abs(cur - prev) <= max(abs_tol, rel_tol * abs(cur)):
            return cur
        prev = cur
    raise QuadratureNotConverged(
        f"refinements still differ by {abs(cur - prev):.3e} after "
        f"{max_levels} levels"
    )


def composite_quadrature(f, spec: QuadratureSpec, osc_half_period=None, order=15):
    """Adaptive composite Gauss-Legendre integral of ``f`` over the window.

    Convergence is declared when two successive edge-doubling levels agree
    within ``spec.abs_tol`` absolute or ``spec.rel_tol`` relative.
    """
    edges = _initial_edges(spec, osc_half_period)
    return _refine_until(f, edges, spec.abs_tol, spec.rel_tol,
                         spec.refine_limit, order)


def jump_integral(weight, s, compensated, q0, spec: QuadratureSpec, hbar=1.0):
    """integral of weight(q) * (e^{iqs/hbar} - 1 [- compensator]) over the window.

    ``weight`` is a vectorized real evaluator of |lambda|^2, |omega|^2 or the
    cross term; ``compensated`` subtracts (i/hbar) q s / (1 + q^2/q0^2).
    """
    s = float(s)
    if s == 0.0:
        return 0.0 + 0.0j
    w = s / hbar

    def integrand(q):
        val = phase_minus_one(q * w)
        if compensated:
            val = val - 1j * (q * w) / (1.0 + (q / q0) ** 2)
        return np.asarray(weight(q)) * val

    half_period = np.pi * hbar / abs(s)
    return composite_quadrature(integrand, spec, osc_half_period=half_period)


def power_law_jump_integral(alpha, amplitude, s, hbar=1.0, half_periods=128,
                            tol=1e-9):
    """Compensated jump integral for the symmetric measure amplitude/|q|^{1+alpha}.

    The measure is even, so the compensator term vanishes and the result is
    ``2 * amplitude * integral_0^inf q^{-1-alpha} (cos(q s/hbar) - 1) dq``.
    Panels cover a geometric stack toward q=0 plus ``half_periods`` half
    oscillation periods; the region beyond is replaced by the exact tail of
    the -1 part and a two-term integration-by-parts estimate of the cosine
    tail, both analytic.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("power-law quadrature requires alpha in (0, 2)")
    s = float(s)
    if s == 0.0:
        return 0.0 + 0.0j
    w = abs(s) / hbar
    half = np.pi / w
    big_q = half_periods * half

    def body(q):
        # cos(qw) - 1 via -2 sin^2(qw/2): the direct difference loses all
        # relative precision at small q and q^{-1-alpha} amplifies the noise
        return q ** (-1.0 - alpha) * (-2.0 * np.sin(0.5 * q * w) ** 2)

    ladder = np.arange(1, half_periods + 1) * half
    stack = half * 0.5 ** np.arange(1, 53)
    edges = np.concatenate((stack[::-1], ladder))
    body_val = _refine_until(body, edges, abs_tol=tol, rel_tol=1e-9,
                             max_levels=6)
    q_lo = edges[0]
    small_tail = -(w ** 2) * q_lo ** (2.0 - alpha) / (2.0 * (2.0 - alpha))
    big_tail = (
        -big_q ** (-alpha) / alpha
        - np.sin(w * big_q) * big_q ** (-1.0 - alpha) / w
        + (1.0 + alpha) * np.cos(w * big_q) * big_q ** (-2.0 - alpha) / w ** 2
    )
    return complex(2.0 * amplitude * (body_val + small_tail + big_tail))


# ---------------------------------------------------------------------------
# conjugate uniform grids and discrete transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UniformGridPair:
    """Uniform momentum grid and its conjugate separation grid.

    ``n`` must be a power of two; the grids are conjugate under the
    ``exp(i q s / hbar)`` transform, i.e. ``ds = 2 pi hbar / (n dq)``.
    """

    q_min: float
    dq: float
    n: int
    hbar: float = 1.0

    def __post_init__(self):
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError("n must be a power of two >= 4")
        if self.dq <= 0 or self.hbar <= 0:
            raise ValueError("dq and hbar must be positive")

    @classmethod
    def from_window(cls, q_min, q_max, n, hbar=1.0):
        return cls(q_min=float(q_min), dq=(float(q_max) - float(q_min)) / n,
                   n=int(n), hbar=float(hbar))

    @property
    def q(self):
        return self.q_min + self.dq * np.arange(self.n)

    @property
    def ds(self):
        return 2.0 * np.pi * self.hbar / (self.n * self.dq)

    @property
    def s(self):
        return (np.arange(self.n) - self.n // 2) * self.ds

    @property
    def q_max(self):
        return self.q_min + self.n * self.dq


def _alt_signs(n):
    sign = np.ones(n)
    sign[1::2] = -1.0
    return sign


def samples_to_cf(fq, pair: UniformGridPair, end_correction=True):
    """CF samples on the conjugate separation grid from density samples.

    Discrete transform of ``Phi(s) = integral f(q) e^{iqs/hbar} dq`` with a
    trapezoid end-correction at the window ends.
    """
    fq = np.asarray(fq)
    if fq.shape != (pair.n,):
        raise ValueError("sample count does not match the grid pair")
    y = fq * _alt_signs(pair.n)
    spectrum = pair.n * np.fft.ifft(y)
    cf = pair.dq * np.exp(1j * pair.q_min * pair.s / pair.hbar) * spectrum
    if end_correction:
        q = pair.q
        cf = cf - pair.dq * 0.5 * (
            fq[0] * np.exp(1j * q[0] * pair.s / pair.hbar)
            + fq[-1] * np.exp(1j * q[-1] * pair.s / pair.hbar)
        )
    return cf


def cf_to_samples(cf, pair: UniformGridPair):
    """Inverse of :func:`samples_to_cf` (without end correction): density samples."""
    cf = np.asarray(cf)
    if cf.shape != (pair.n,):
        raise ValueError("sample count does not match the grid pair")
    z = cf * np.exp(-1j * pair.q_min * pair.s / pair.hbar)
    f = np.fft.fft(z) * _alt_signs(pair.n) / (pair.n * pair.dq)
    return f


def pd_to_cf(pd, pair: UniformGridPair):
    """CF samples of a momentum density on the pair's separation grid.

    Raises SupportClipped when more than 1e-9 probability mass lies outside
    the momentum window.
    """
    clipped = pd.mass_outside(pair.q_min, pair.q_max)
    if clipped > 1e-9:
        raise SupportClipped(
            f"{clipped:.3e} probability mass outside the momentum window"
        )
    return samples_to_cf(pd.density_on(pair.q), pair)


def _hermitian_defect(cf, pair):
    k = np.arange(1, pair.n)
    return float(np.max(np.abs(cf[k] - np.conj(cf[pair.n - k]))))


def cf_to_pd(cf, pair: UniformGridPair, clip_tol=1e-8, mass_tol=1e-6,
             hermitian_tol=1e-9):
    """Momentum density reconstructed from CF samples on the conjugate grid.

    The inverse transform is clipped of negative ringing and renormalized;
    raises NonHermitianInput for asymmetric input and GridTooCoarse when the
    renormalization moves more than ``mass_tol`` probability mass.
    """
    cf = np.asarray(cf, dtype=complex)
    if cf.shape != (pair.n,):
        raise ValueError("sample count does not match the grid pair")
    defect = _hermitian_defect(cf, pair)
    if defect > hermitian_tol:
        raise NonHermitianInput(
            f"CF samples deviate from Hermitian symmetry by {defect:.3e}"
        )
    raw = np.real(cf_to_samples(cf, pair))
    density = np.where(raw < 0.0, 0.0, raw)
    # ringing below clip_tol (relative to the peak) is silently dropped;
    # deeper undershoots and any net mass shift must fit the mass budget
    peak = float(np.max(density))
    deep_mass = -trapezoid(np.where(raw < -clip_tol * peak, raw, 0.0), pair.q)
    mass = trapezoid(density, pair.q)
    if mass <= 0.0:
        raise GridTooCoarse("reconstructed density has no positive mass")
    if abs(mass - 1.0) > mass_tol or deep_mass > mass_tol:
        raise GridTooCoarse(
            f"renormalization changes the mass by "
            f"{max(abs(mass - 1.0), deep_mass):.3e}"
        )
    from . import models

    return models.MomentumPD.from_table(pair.q, density / mass, hbar=pair.hbar)


def _single_support(pd, pair):
    """Conservative support interval of one kick, for the n-fold fit check."""
    if pd.kind == "gaussian":
        return pd.mu - 9.0 * pd.sigma, pd.mu + 9.0 * pd.sigma
    if pd.kind == "mandel":
        return 0.0, 2.0 * pd.hbar * pd.k0
    fq = pd.density_on(pair.q)
    mass = trapezoid(fq, pair.q)
    if abs(mass - 1.0) > 1e-7:
        raise SupportClipped(
            f"density carries {abs(mass - 1.0):.3e} mass outside the window "
            "(or is undersampled at its jumps)"
        )
    cdf = np.cumsum(0.5 * (fq[1:] + fq[:-1]) * np.diff(pair.q))
    cdf = np.concatenate(([0.0], cdf)) / mass
    lo = pair.q[min(np.searchsorted(cdf, 1e-12), pair.n - 1)]
    hi = pair.q[min(np.searchsorted(cdf, 1.0 - 1e-12), pair.n - 1)]
    return lo, hi


def convolve_power(pd, n, pair: UniformGridPair):
    """n-fold self-convolution of a momentum density via CF powers.

    CF samples come from the closed-form evaluator when the density has one
    and from the discrete transform of its samples otherwise.  The window
    must contain n times the single-kick support; a tail-mass guard near the
    window edges (> 1e-9) raises WindowTooNarrow.
    """
    n = int(n)
    if n < 1:
        raise ValueError("convolution power needs n >= 1")
    lo, hi = _single_support(pd, pair)
    if n * lo < pair.q_min or n * hi > pair.q_max:
        raise WindowTooNarrow(
            f"n-fold support [{n * lo:.3g}, {n * hi:.3g}] exceeds the window"
        )
    if pd.kind in ("gaussian", "mandel"):
        if n == 1:
            return pd
        cf = np.asarray(pd.cf_evaluator()(pair.s), dtype=complex)
    else:
        cf = samples_to_cf(pd.density_on(pair.q), pair, end_correction=False)
    out = np.real(cf_to_samples(cf ** n, pair))
    out = np.where(out < 0.0, 0.0, out)
    total = trapezoid(out, pair.q)
    if abs(total - 1.0) > 1e-7:
        raise WindowTooNarrow(
            f"convolved mass deviates from one by {abs(total - 1.0):.3e}"
        )
    edge = max(4, pair.n // 64)
    edge_mass = trapezoid(out[:edge], pair.q[:edge]) + trapezoid(
        out[-edge:], pair.q[-edge:]
    )
    if edge_mass > 1e-9:
        raise WindowTooNarrow(
            f"aliasing guard: {edge_mass:.3e} mass near the window edges"
        )
    from . import models

    return models.MomentumPD.from_table(pair.q, out / total, hbar=pair.hbar)


# ---------------------------------------------------------------------------
# exact CF of a piecewise-linear tabulated density
# ---------------------------------------------------------------------------

_FACT = [1.0]
for _k in range(1, 16):
    _FACT.append(_FACT[-1] * _k)


def _eb_coeffs(theta):
    """E(t) = int_0^1 e^{itx} dx and B(t) = int_0^1 x e^{itx} dx, stable."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 0.35
    ts = np.where(small, theta, 0.0)
    its = 1j * ts
    e_series = np.zeros_like(its)
    b_series = np.zeros_like(its)
    for k in range(12, -1, -1):
        e_series = e_series * its + 1.0 / _FACT[k + 1]
        b_series = b_series * its + 1.0 / (_FACT[k] * (k + 2))
    tl = np.where(small, 1.0, theta)
    itl = 1j * tl
    eitl = np.exp(itl)
    e_direct = (eitl - 1.0) / itl
    b_direct = (eitl * (itl - 1.0) + 1.0) / (itl * itl)
    e = np.where(small, e_series, e_direct)
    b = np.where(small, b_series, b_direct)
    return e, b


def linear_density_cf(q, f, s, hbar=1.0, block=64, interval_block=1 << 15):
    """CF of the piecewise-linear density through (q, f), zero outside.

    Per interval the linear interpolant is integrated against
    ``exp(i q s / hbar)`` in closed form, so the result is exactly the CF of
    a genuine density (Hermitian, positive definite, |Phi| <= 1).
    """
    q = np.asarray(q, dtype=float)
    f = np.asarray(f, dtype=float)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    h = np.diff(q)
    uniform = np.all(np.abs(h - h[0]) <= 1e-9 * abs(h[0]))
    out = np.zeros(s_arr.shape, dtype=complex)
    if uniform:
        # constant spacing: the per-interval weights depend on s only, and
        # the phase sums reduce to two weighted exponential matvecs
        h0 = h[0]
        fc = f.astype(complex)
        blk = max(1, min(block, (1 << 23) // max(q.size, 1)))
        for start in range(0, s_arr.size, blk):
            w = s_arr[start:start + blk] / hbar
            e, b = _eb_coeffs(w * h0)
            phase = np.exp(1j * w[:, None] * q[None, :-1])
            s0 = phase @ fc[:-1]
            s1 = phase @ fc[1:]
            out[start:start + blk] = h0 * ((e - b) * s0 + b * s1)
    else:
        a = q[:-1]
        fa = f[:-1]
        fb = f[1:]
        for start in range(0, s_arr.size, block):
            w = s_arr[start:start + block] / hbar
            acc = np.zeros(w.size, dtype=complex)
            for j0 in range(0, h.size, interval_block):
                sl = slice(j0, j0 + interval_block)
                theta = w[:, None] * h[None, sl]
                e, b = _eb_coeffs(theta)
                phase = np.exp(1j * w[:, None] * a[None, sl])
                acc += np.sum(
                    h[None, sl] * phase
                    * (fa[None, sl] * (e - b) + fb[None, sl] * b),
                    axis=1,
                )
            out[start:start + block] = acc
    if np.isscalar(s) or np.asarray(s).ndim == 0:
        return complex(out[0])
    return out
