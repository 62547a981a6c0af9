"""Levy triplets, characteristic exponents and decoherence factors.

The off-diagonal position matrix elements of a translation-covariant
Markovian dynamics decay as ``Phi(t, s) = exp(t Psi(s))`` with ``s = x - y``;
``Psi`` is assembled here from a drift ``a``, a diffusion ``D`` and jump
weights ``lambda(q)``, ``omega(q)`` over momentum transfer q, with a
compensator of scale ``q0`` taming divergent small-q jump measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import gamma as _gamma

from . import spectral
from .errors import (
    AuditFailed,
    LevyConditionViolated,
    NegativeTime,
)
from .spectral import QuadratureSpec

__all__ = [
    "LevyTriplet",
    "PowerLawWeight",
    "SeparationGrid",
    "CharacteristicExponent",
    "DecoherenceFactor",
    "AuditReport",
    "gaussian_exponent",
    "build_exponent",
    "eval_exponent",
    "cf_at_time",
    "cf_property_audit",
    "levy_condition_check",
    "stable_cos_integral",
]


def stable_cos_integral(alpha):
    """integral over R of (1 - cos q) / |q|^{1+alpha} dq, alpha in (0, 2)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    return np.pi / (_gamma(1.0 + alpha) * np.sin(0.5 * np.pi * alpha))


@dataclass(frozen=True)
class PowerLawWeight:
    """Symmetric squared jump weight ``amplitude / |q|^(1+alpha)``.

    Marker recognized by :func:`build_exponent`, which then dispatches to the
    closed form of the compensated integral instead of generic quadrature.
    """

    alpha: float
    amplitude: float

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.amplitude <= 0.0:
            raise ValueError("amplitude must be positive")

    def __call__(self, q):
        return self.amplitude * np.abs(q) ** (-1.0 - self.alpha)


def _as_amplitude(weight):
    """Normalize a weight argument to a vectorized amplitude callable."""
    if weight is None:
        return None
    if isinstance(weight, PowerLawWeight):
        return weight
    if callable(weight):
        return weight
    q, v = weight
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if q.ndim != 1 or q.shape != v.shape or q.size < 2:
        raise ValueError("tabulated weight needs matching 1-d (q, value) arrays")
    if np.any(np.diff(q) <= 0):
        raise ValueError("tabulated weight grid must be strictly increasing")

    def amp(x, _q=q, _v=v):
        return np.interp(np.asarray(x, dtype=float), _q, _v, left=0.0, right=0.0)

    return amp


@dataclass(frozen=True)
class LevyTriplet:
    """Drift, diffusion and jump weights of a translation-covariant generator.

    ``lambda_weight`` and ``omega_weight`` are complex amplitudes (callable or
    (q, value) tabulation, interpolated piecewise linearly and zero outside);
    their squared moduli carry units 1/(momentum*time).  ``omega_weight`` may
    also be a :class:`PowerLawWeight` for the stable jump measure, in which
    case it already denotes the squared modulus.
    """

    drift_a: float = 0.0
    diffusion_D: float = 0.0
    lambda_weight: object = None
    omega_weight: object = None
    q0: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.diffusion_D < 0.0:
            raise ValueError("diffusion_D must be >= 0")
        if self.q0 <= 0.0:
            raise ValueError("q0 must be > 0")
        if self.hbar <= 0.0:
            raise ValueError("hbar must be > 0")

    @property
    def has_jumps(self):
        return self.lambda_weight is not None or self.omega_weight is not None


@dataclass(frozen=True, eq=False)
class SeparationGrid:
    """Ordered grid of separations s = x - y."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("grid needs a 1-d array of points")
        if pts.size > 1 and np.any(np.diff(pts) <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, lo, hi, n):
        return cls(np.linspace(float(lo), float(hi), int(n)))

    @classmethod
    def symmetric_linspace(cls, smax, n_half):
        """2*n_half + 1 points with an exact zero and exact mirror symmetry."""
        tail = np.linspace(0.0, float(smax), int(n_half) + 1)[1:]
        return cls(np.concatenate((-tail[::-1], [0.0], tail)))

    @property
    def n(self):
        return self.points.size

    @property
    def zero_index(self):
        idx = np.flatnonzero(self.points == 0.0)
        return int(idx[0]) if idx.size else None

    @property
    def symmetric(self):
        scale = max(np.max(np.abs(self.points)), 1.0)
        return bool(
            np.all(np.abs(self.points + self.points[::-1]) <= 1e-12 * scale)
        )

    @property
    def uniform(self):
        if self.n < 2:
            return True
        d = np.diff(self.points)
        return bool(np.all(np.abs(d - d[0]) <= 1e-9 * abs(d[0])))


@dataclass(frozen=True, eq=False)
class CharacteristicExponent:
    """Evaluatable characteristic exponent Psi(s) with term metadata."""

    fn: Callable
    terms: tuple
    meta: Mapping = field(default_factory=dict)

    def __call__(self, s):
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.asarray(self.fn(arr), dtype=complex)
        if np.isscalar(s) or np.asarray(s).ndim == 0:
            return complex(out[0])
        return out


@dataclass(frozen=True, eq=False)
class DecoherenceFactor:
    """Complex decoherence curve Phi(t, s) sampled on a separation grid."""

    t: float
    grid: SeparationGrid
    values: np.ndarray
    exponent: CharacteristicExponent | None = None


def gaussian_exponent(a, D):
    """Closed-form exponent of the Gaussian component: -i a s - D s^2 / 2."""
    if D < 0.0:
        raise ValueError("diffusion must be >= 0")
    a = float(a)
    D = float(D)

    def fn(s):
        return -1j * a * s - 0.5 * D * s * s

    terms = tuple(
        t for t, on in (("drift", a != 0.0), ("diffusion", D != 0.0)) if on
    )
    return CharacteristicExponent(fn=fn, terms=terms,
                                  meta={"closed_form": "gaussian", "a": a, "D": D})


def _power_law_closed(weight: PowerLawWeight, hbar):
    if weight.alpha >= 2.0:
        raise LevyConditionViolated(
            "power-law measure with alpha >= 2 has no finite compensated "
            "integral; use the Gaussian form instead"
        )
    const = weight.amplitude * stable_cos_integral(weight.alpha)

    def fn(s):
        return -const * np.abs(s / hbar) ** weight.alpha + 0.0j

    return fn


def build_exponent(triplet: LevyTriplet, quad: QuadratureSpec | None = None,
                   prefer_closed_form=True):
    """Assemble Psi(s) from a Levy triplet.

    Closed-form special cases (pure Gaussian component, power-law stable
    measure) bypass quadrature unless ``prefer_closed_form`` is False; the
    generic jump terms integrate over the ``quad`` window, with the
    omega term compensated.
    """
    gauss = gaussian_exponent(triplet.drift_a, triplet.diffusion_D)
    terms = list(
        t for t, on in (("drift", triplet.drift_a != 0.0),
                        ("diffusion", triplet.diffusion_D != 0.0)) if on
    )
    parts = [gauss.fn]
    meta = {"hbar": triplet.hbar, "q0": triplet.q0}
    if not triplet.has_jumps:
        meta["closed_form"] = "gaussian"

    lam = _as_amplitude(triplet.lambda_weight)
    omega = _as_amplitude(triplet.omega_weight)

    if isinstance(omega, PowerLawWeight):
        terms.append("levy")
        if prefer_closed_form:
            parts.append(_power_law_closed(omega, triplet.hbar))
            meta["closed_form"] = "stable"
        else:
            if omega.alpha >= 2.0:
                raise LevyConditionViolated(
                    "power-law measure with alpha >= 2 diverges at small q"
                )
            amp = omega.amplitude
            alpha = omega.alpha
            hbar = triplet.hbar

            def fn_pl(s, _amp=amp, _alpha=alpha, _hbar=hbar):
                return np.array([
                    spectral.power_law_jump_integral(_alpha, _amp, x, _hbar)
                    for x in np.atleast_1d(s)
                ])

            parts.append(fn_pl)
            meta["quadrature"] = "power_law"
        omega = None

    if lam is not None or omega is not None:
        if quad is None:
            raise ValueError(
                "generic jump weights need a QuadratureSpec window"
            )
        integrands = []
        if lam is not None:
            terms.append("poisson")
            integrands.append((lambda q, _l=lam: np.abs(_l(q)) ** 2, False))
        if omega is not None:
            terms.append("levy")
            omega_sq = lambda q, _o=omega: np.abs(_o(q)) ** 2
            levy_condition_check(omega_sq, scale=triplet.q0)
            integrands.append((omega_sq, True))
        if lam is not None and omega is not None:
            terms.append("cross")
            integrands.append((
                lambda q, _l=lam, _o=omega: 2.0 * np.real(
                    np.asarray(_o(q)) * np.conj(_l(q))),
                False,
            ))

        def fn_quad(s, _ints=tuple(integrands), _t=triplet, _q=quad):
            out = np.zeros(np.atleast_1d(s).shape, dtype=complex)
            for i, x in enumerate(np.atleast_1d(s)):
                acc = 0.0 + 0.0j
                for w, compensated in _ints:
                    acc += spectral.jump_integral(
                        w, x, compensated, _t.q0, _q, hbar=_t.hbar
                    )
                out[i] = acc
            return out

        parts.append(fn_quad)
        meta["quadrature"] = quad

    def fn(s, _parts=tuple(parts)):
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        total = np.zeros(arr.shape, dtype=complex)
        for p in _parts:
            total = total + np.asarray(p(arr), dtype=complex)
        return total

    return CharacteristicExponent(fn=fn, terms=tuple(terms), meta=meta)


def eval_exponent(psi: CharacteristicExponent, grid: SeparationGrid):
    """Psi evaluated at each grid point."""
    return psi(grid.points)


def cf_at_time(psi: CharacteristicExponent, t, grid: SeparationGrid):
    """General solution Phi(t, s) = exp(t Psi(s)) on the grid."""
    t = float(t)
    if t < 0.0:
        raise NegativeTime(f"t = {t} < 0")
    values = np.exp(t * psi(grid.points))
    return DecoherenceFactor(t=t, grid=grid, values=values, exponent=psi)


# ---------------------------------------------------------------------------
# Levy condition
# ---------------------------------------------------------------------------

def _dyadic_windows(g, scale, levels, inward, order=15):
    """Panel integrals of g over dyadic windows around +-scale, both signs."""
    out = np.empty(levels)
    x, w = spectral._gl_rule(order)
    for k in range(levels):
        if inward:
            a, b = scale * 0.5 ** (k + 1), scale * 0.5 ** k
        else:
            a, b = scale * 2.0 ** k, scale * 2.0 ** (k + 1)
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        nodes = mid + half * x
        vals = np.asarray(g(nodes)) + np.asarray(g(-nodes))
        out[k] = float(np.sum(w * vals) * half)
    return out


def levy_condition_check(omega_sq, scale=1.0, levels=40, ratio_tol=0.05):
    """Numerical check of ``integral |omega(q)|^2 q^2 / (1 + q^2) dq < infinity``.

    Heuristic: the integrand is summed over geometrically shrinking windows
    toward q = 0 and expanding windows toward |q| = infinity; a summable tail
    requires the per-window contributions not to grow.  Marginally constant
    small-q contributions (the alpha = 2 endpoint of the stable family) are
    accepted; growing ones raise LevyConditionViolated.  Returns the windowed
    integral plus geometric tail estimates.
    """
    omega_sq = _as_amplitude(omega_sq) if not callable(omega_sq) else omega_sq

    def g(q):
        q = np.asarray(q, dtype=float)
        return np.asarray(omega_sq(q)) * q * q / (1.0 + q * q)

    inner = _dyadic_windows(g, scale, levels, inward=True)
    outer = _dyadic_windows(g, scale, levels, inward=False)
    total = float(inner.sum() + outer.sum())

    def tail_ratio(contrib):
        tail = contrib[-9:]
        mask = tail[:-1] > 0.0
        if not np.any(mask):
            return 0.0
        return float(np.median(tail[1:][mask] / tail[:-1][mask]))

    r_in = tail_ratio(inner)
    if r_in > 1.0 + ratio_tol:
        raise LevyConditionViolated(
            f"small-q window contributions grow by factor {r_in:.3f}; "
            "the compensated measure is not integrable near q = 0"
        )
    r_out = tail_ratio(outer)
    if r_out >= 1.0 - ratio_tol:
        raise LevyConditionViolated(
            f"large-q window contributions decay too slowly (ratio {r_out:.3f})"
        )
    if r_in < 1.0:
        total += float(inner[-1] * r_in / (1.0 - r_in))
    if r_out > 0.0:
        total += float(outer[-1] * r_out / (1.0 - r_out))
    return total


# ---------------------------------------------------------------------------
# characteristic-function axiom audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditReport:
    """Outcome of a passing CF axiom audit."""

    tol: float
    probes: int
    max_modulus_excess: float
    zero_defect: float
    hermitian_defect: float
    min_probe_eigenvalue: float
    passed: bool = True


def _psd_probes_from_exponent(factor, probe_count, probe_size, rng):
    lo = factor.grid.points[0]
    hi = factor.grid.points[-1]
    min_eig = np.inf
    worst = None
    for _ in range(probe_count):
        pts = rng.uniform(lo, hi, size=probe_size)
        diffs = pts[:, None] - pts[None, :]
        gram = np.exp(factor.t * factor.exponent(diffs.ravel())).reshape(
            probe_size, probe_size
        )
        eig = float(np.linalg.eigvalsh(gram)[0])
        if eig < min_eig:
            min_eig = eig
            worst = pts
    return min_eig, worst


def _psd_probes_from_grid(factor, probe_count, probe_size, rng):
    grid = factor.grid
    if not (grid.uniform and grid.symmetric):
        raise ValueError(
            "grid-based positive-definiteness probes need a uniform "
            "symmetric grid (or an exponent-backed factor)"
        )
    n = grid.n
    center = grid.zero_index
    reach = min(center, n - 1 - center)
    min_eig = np.inf
    worst = None
    for _ in range(probe_count):
        offset = int(rng.integers(0, n - reach)) if n - reach > 0 else 0
        idx = offset + rng.choice(reach + 1, size=min(probe_size, reach + 1),
                                  replace=False)
        d = idx[:, None] - idx[None, :]
        gram = factor.values[center + d]
        eig = float(np.linalg.eigvalsh(gram)[0])
        if eig < min_eig:
            min_eig = eig
            worst = grid.points[idx]
    return min_eig, worst


def cf_property_audit(factor: DecoherenceFactor, probe_count=64, seed=0,
                      tol=1e-9, probe_size=8):
    """Assert the CF axioms of a decoherence factor.

    Checks |Phi| <= 1 + tol, Phi(0) = 1 +- tol, Hermitian symmetry on the
    grid, and positive semidefiniteness of Gram matrices [Phi(s_i - s_j)] on
    ``probe_count`` random point sets (eigenvalues >= -tol).  Use
    tol = 1e-6 for quadrature- or FFT-built factors.  Returns an
    AuditReport on success and raises AuditFailed with the violated axiom
    and witness points otherwise.
    """
    grid = factor.grid
    values = np.asarray(factor.values)
    if grid.zero_index is None:
        raise ValueError("audit grid must contain s = 0")
    if not grid.symmetric:
        raise ValueError("audit grid must be symmetric")

    mods = np.abs(values)
    excess = float(np.max(mods) - 1.0)
    if excess > tol:
        i = int(np.argmax(mods))
        raise AuditFailed("modulus", witnesses=[grid.points[i]],
                          detail=f"|Phi| = {mods[i]:.12g}")

    zero_defect = float(abs(values[grid.zero_index] - 1.0))
    if zero_defect > tol:
        raise AuditFailed("unit_at_zero", witnesses=[0.0],
                          detail=f"Phi(0) = {values[grid.zero_index]:.12g}")

    herm = np.abs(values - np.conj(values[::-1]))
    herm_defect = float(np.max(herm))
    if herm_defect > tol:
        i = int(np.argmax(herm))
        raise AuditFailed("hermitian", witnesses=[grid.points[i]],
                          detail=f"defect {herm_defect:.3e}")

    rng = np.random.default_rng(seed)
    if factor.exponent is not None:
        min_eig, worst = _psd_probes_from_exponent(
            factor, probe_count, probe_size, rng
        )
    else:
        min_eig, worst = _psd_probes_from_grid(
            factor, probe_count, probe_size, rng
        )
    if min_eig < -tol:
        raise AuditFailed("positive_semidefinite", witnesses=list(worst),
                          detail=f"min eigenvalue {min_eig:.3e}")

    return AuditReport(
        tol=tol,
        probes=probe_count,
        max_modulus_excess=excess,
        zero_defect=zero_defect,
        hermitian_defect=herm_defect,
        min_probe_eigenvalue=min_eig,
    )
