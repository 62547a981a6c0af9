"""Evolution of off-diagonal density-matrix elements.

Closed-form decay by the exponent, the jump expansion in powers of the kick
CF with Poisson weights, the decoherence superoperator, interferometric
visibilities and the compound-Poisson to Gaussian transition scan.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import poisson as _poisson

from .core import CharacteristicExponent, DecoherenceFactor, SeparationGrid
from .errors import (
    NegativeTime,
    TruncationTooSmall,
    UnnormalizedWeights,
)
from .models import MomentumPD, compound_poisson_exponent, gaussian_limit
from .spectral import convolve_power, trapezoid

__all__ = [
    "OffDiagonalState",
    "JumpConfig",
    "PathSeparationWeights",
    "TransitionReport",
    "evolve_closed_form",
    "poisson_weights",
    "gaussian_weights",
    "jump_expansion_evolve",
    "apply_superoperator",
    "visibility",
    "transition_scan",
]


@dataclass(frozen=True, eq=False)
class OffDiagonalState:
    """Coherences <x|rho|y> sampled over separations s = x - y."""

    grid: SeparationGrid
    values: np.ndarray = None

    def __post_init__(self):
        vals = self.values
        if vals is None:
            vals = np.ones(self.grid.n, dtype=complex)
        vals = np.asarray(vals, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise ValueError("values must match the grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        i0 = self.grid.zero_index
        if i0 is not None:
            v0 = vals[i0]
            if not (v0.real > 0.0 and abs(v0.imag) <= 1e-12 * abs(v0.real)):
                raise ValueError("the s = 0 element must be real and positive")
        object.__setattr__(self, "values", vals)


def evolve_closed_form(state: OffDiagonalState, psi: CharacteristicExponent,
                       t) -> OffDiagonalState:
    """Multiply the coherences by exp(t Psi(s)) pointwise."""
    t = float(t)
    if t < 0.0:
        raise NegativeTime(f"t = {t} < 0")
    factor = np.exp(t * psi(state.grid.points))
    return OffDiagonalState(grid=state.grid, values=state.values * factor)


@dataclass(frozen=True)
class JumpConfig:
    """Scattering rate (constant or tabulated history), horizon and truncation.

    ``rate`` is either a positive constant Gamma or a ``(times, values)``
    tabulation of Gamma(t) >= 0 covering [0, horizon]; the effective jump
    number is nbar = integral of Gamma over [0, horizon].  ``truncation``
    defaults to ceil(nbar + 10 sqrt(nbar + 1)), which keeps the Poisson tail
    below 1e-10 up to nbar ~ 1e4.
    """

    rate: object
    horizon: float
    truncation: int | None = None
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.horizon < 0.0:
            raise ValueError("horizon must be >= 0")
        if self.tail_tol <= 0.0:
            raise ValueError("tail_tol must be > 0")
        if self.truncation is not None and self.truncation < 0:
            raise ValueError("truncation must be >= 0")
        if np.isscalar(self.rate):
            if self.rate <= 0.0:
                raise ValueError("constant rate must be > 0")
        else:
            times, values = self.rate
            times = np.asarray(times, dtype=float)
            values = np.asarray(values, dtype=float)
            if times.ndim != 1 or times.shape != values.shape or times.size < 2:
                raise ValueError("rate tabulation needs matching 1-d arrays")
            if np.any(np.diff(times) <= 0):
                raise ValueError("rate times must be strictly increasing")
            if np.any(values < 0):
                raise ValueError("rate history must be >= 0")
            if self.horizon > times[-1] or self.horizon < times[0]:
                raise ValueError("rate tabulation must cover [0, horizon]")
            object.__setattr__(self, "rate", (times, values))

    @property
    def nbar(self):
        """Mean jump number: Gamma t or the integral of Gamma(t') over [0, t]."""
        if np.isscalar(self.rate):
            return float(self.rate) * self.horizon
        times, values = self.rate
        keep = times <= self.horizon
        t_cut = np.concatenate((times[keep], [self.horizon]))
        v_cut = np.concatenate(
            (values[keep], [np.interp(self.horizon, times, values)])
        )
        return float(trapezoid(v_cut, t_cut))

    @property
    def effective_truncation(self):
        if self.truncation is not None:
            return int(self.truncation)
        nb = self.nbar
        return int(np.ceil(nb + 10.0 * np.sqrt(nb + 1.0)))


def poisson_weights(cfg: JumpConfig):
    """Poisson weights p_n = nbar^n e^{-nbar} / n! for n = 0..truncation.

    Raises TruncationTooSmall when the residual tail exceeds tail_tol; the
    error suggests N >= nbar + 10 sqrt(nbar + 1).
    """
    nb = cfg.nbar
    nmax = cfg.effective_truncation
    tail = float(_poisson.sf(nmax, nb)) if nb > 0 else 0.0
    if tail > cfg.tail_tol:
        suggested = int(np.ceil(nb + 10.0 * np.sqrt(nb + 1.0)))
        raise TruncationTooSmall(tail, cfg.tail_tol, suggested)
    n = np.arange(nmax + 1)
    p = _poisson.pmf(n, nb) if nb > 0 else np.where(n == 0, 1.0, 0.0)
    return list(zip(n.tolist(), p.tolist()))


def gaussian_weights(cfg: JumpConfig):
    """Gaussian jump-number weights with the Poisson mean-variance relation.

    Comparison variant for fits that replace the Poisson distribution with a
    Gaussian of mean nbar and variance nbar; such weights no longer describe
    a Markovian dynamics and are flagged accordingly in CLI metadata.
    """
    nb = cfg.nbar
    nmax = cfg.effective_truncation
    n = np.arange(nmax + 1, dtype=float)
    if nb <= 0:
        p = np.where(n == 0, 1.0, 0.0)
    else:
        p = np.exp(-0.5 * (n - nb) ** 2 / nb)
        p = p / p.sum()
    return list(zip(range(nmax + 1), p.tolist()))


def jump_expansion_evolve(state: OffDiagonalState, cf, cfg: JumpConfig,
                          weights=None) -> OffDiagonalState:
    """Evolve by the jump expansion: values <- sum_n p_n(t) Phi_P(s)^n values.

    Equals the closed form with Psi = Gamma (Phi_P - 1) within the truncated
    Poisson tail.  ``cf`` is a vectorized CF evaluator of the kick density.
    """
    if weights is None:
        weights = poisson_weights(cfg)
    phi = np.asarray(cf(state.grid.points), dtype=complex)
    acc = np.zeros(state.grid.n, dtype=complex)
    power = np.ones_like(phi)
    expect = 0
    for n, p in weights:
        if n != expect:
            raise ValueError("weights must enumerate n = 0, 1, 2, ...")
        acc += p * power
        power = power * phi
        expect += 1
    return OffDiagonalState(grid=state.grid, values=acc * state.values)


def apply_superoperator(pd: MomentumPD, state: OffDiagonalState, n,
                        via_convolution=False, pair=None) -> OffDiagonalState:
    """Apply n momentum kicks: values <- Phi_P(s)^n values.

    Equivalently the CF of the n-fold self-convolution of the kick density
    multiplies the state; ``via_convolution=True`` takes that route (needs a
    UniformGridPair) and serves as a self-check of the CF-power path.
    """
    n = int(n)
    if n < 0:
        raise ValueError("kick count must be >= 0")
    if n == 0:
        return OffDiagonalState(grid=state.grid, values=state.values.copy())
    if via_convolution:
        if pair is None:
            raise ValueError("convolution path needs a UniformGridPair")
        conv = pd if n == 1 else convolve_power(pd, n, pair)
        factor = np.asarray(conv.cf_evaluator()(state.grid.points))
    else:
        factor = np.asarray(pd.cf_evaluator()(state.grid.points)) ** n
    return OffDiagonalState(grid=state.grid, values=factor * state.values)


@dataclass(frozen=True, eq=False)
class PathSeparationWeights:
    """Discrete distribution over interferometer path separations."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 1 or pts.shape != w.shape or pts.size < 1:
            raise ValueError("weights need matching 1-d arrays")
        if np.any(w < 0.0):
            raise UnnormalizedWeights("weights must be non-negative")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise UnnormalizedWeights(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, s):
        return cls(points=np.array([float(s)]), weights=np.array([1.0]))

    @classmethod
    def uniform(cls, points):
        points = np.asarray(points, dtype=float)
        return cls(points=points,
                   weights=np.full(points.size, 1.0 / points.size))

    @classmethod
    def from_file(cls, path):
        from .models import read_two_column

        s, w = read_two_column(path)
        return cls(points=s, weights=w)


def visibility(phi, w: PathSeparationWeights):
    """Fringe visibility V = |sum_s w(s) Phi(t, s)| in [0, 1].

    ``phi`` is a DecoherenceFactor on the same grid as the weights or a
    vectorized evaluator of Phi at the weight separations.  In the
    strong-kick regime (kick CF ~ 0 on the supported separations) the value
    degenerates to e^{-Lambda t} whatever the kick density looks like.
    """
    if isinstance(phi, DecoherenceFactor):
        if phi.grid.n != w.points.size or not np.array_equal(
            phi.grid.points, w.points
        ):
            raise ValueError("weights must live on the factor's grid")
        values = phi.values
    else:
        values = np.asarray(phi(w.points), dtype=complex)
    return float(np.abs(np.sum(w.weights * values)))


@dataclass(frozen=True, eq=False)
class TransitionReport:
    """Compound-Poisson vs Gaussian-limit curves over a list of mean kick numbers.

    ``divergence`` per nbar is the maximum |abs CF difference| restricted to
    separations where the compound curve still carries weight
    (|Phi_CP| > 0.1); ``plateau`` is |Phi_CP| at the largest separation,
    which tends to e^{-nbar}.
    """

    nbars: tuple
    grid: SeparationGrid
    abs_compound: np.ndarray
    abs_gaussian: np.ndarray
    divergence: np.ndarray
    plateau: np.ndarray
    meta: dict = field(default_factory=dict)

    _COLUMNS = ("nbar", "s", "abs_cf_compound", "abs_cf_gaussian", "divergence")

    def rows(self):
        for i, nb in enumerate(self.nbars):
            for j, s in enumerate(self.grid.points):
                yield (nb, s, self.abs_compound[i, j],
                       self.abs_gaussian[i, j], self.divergence[i])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self._COLUMNS)
            for row in self.rows():
                writer.writerow([f"{x:.17g}" for x in row])

    def to_json(self, path):
        payload = {
            "meta": dict(self.meta),
            "nbar": list(self.nbars),
            "s": self.grid.points.tolist(),
            "abs_cf_compound": self.abs_compound.tolist(),
            "abs_cf_gaussian": self.abs_gaussian.tolist(),
            "divergence": self.divergence.tolist(),
            "plateau": self.plateau.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")


def transition_scan(pd: MomentumPD, nbar_list, grid: SeparationGrid,
                    divergence_floor=0.1) -> TransitionReport:
    """|Phi_CP| vs |Phi_G| curves for each mean kick number nbar.

    Phi_CP = exp(nbar (Phi_P - 1)) and Phi_G its second-order Gaussian limit;
    the divergence metric is restricted to |Phi_CP| > ``divergence_floor`` to
    avoid meaningless differences in the fully decayed region.  Requires a
    density with finite second moment (InfiniteMoment otherwise).
    """
    nbars = tuple(float(nb) for nb in nbar_list)
    if any(nb < 0 for nb in nbars):
        raise ValueError("nbar values must be >= 0")
    psi_cp = compound_poisson_exponent(1.0, pd)
    psi_g = gaussian_limit(1.0, pd)  # raises InfiniteMoment for heavy tails
    s = grid.points
    cp1 = psi_cp(s)
    g1 = psi_g(s)
    abs_cp = np.empty((len(nbars), grid.n))
    abs_g = np.empty_like(abs_cp)
    div = np.empty(len(nbars))
    plateau = np.empty(len(nbars))
    for i, nb in enumerate(nbars):
        abs_cp[i] = np.abs(np.exp(nb * cp1))
        abs_g[i] = np.abs(np.exp(nb * g1))
        mask = abs_cp[i] > divergence_floor
        diff = np.abs(abs_cp[i] - abs_g[i])
        div[i] = float(diff[mask].max()) if np.any(mask) else 0.0
        plateau[i] = abs_cp[i][-1]
    return TransitionReport(
        nbars=nbars, grid=grid, abs_compound=abs_cp, abs_gaussian=abs_g,
        divergence=div, plateau=plateau,
        meta={"pd": pd.kind, "divergence_floor": divergence_floor},
    )
