"""Marchenko–Pastur law: density, distribution function, Stieltjes transform
and the local law verifier."""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.stats

from corrtw.spectra import (
    Interval,
    SpectralParameter,
    Spectrum,
    as_complex,
    count_in_interval,
)

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200


@dataclass(frozen=True)
class MPParams:
    """The asymptotic law for an aspect ratio y in (0, 1)."""

    y: float
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0 < self.y < 1:
            raise ValueError(f"Aspect ratio must be in (0, 1): {self.y}")
        object.__setattr__(self, "a", (1.0 - math.sqrt(self.y)) ** 2)
        object.__setattr__(self, "b", (1.0 + math.sqrt(self.y)) ** 2)

    @property
    def lower(self) -> float:
        return self.a

    @property
    def upper(self) -> float:
        return self.b


@dataclass(frozen=True)
class NonasymptoticMP:
    """The law at the finite ratio p/n, with edges λ₋ and λ₊."""

    p: int
    n: int
    lam_minus: float = field(init=False)
    lam_plus: float = field(init=False)
    phi: float = field(init=False)
    """The control parameter (log p)^(log log p)."""

    def __post_init__(self) -> None:
        if not 1 <= self.p < self.n:
            raise ValueError(f"Need 1 <= p < n, got p={self.p}, n={self.n}")
        root = math.sqrt(self.p / self.n)
        object.__setattr__(self, "lam_minus", (1.0 - root) ** 2)
        object.__setattr__(self, "lam_plus", (1.0 + root) ** 2)
        if self.p > 1:
            log_p = math.log(self.p)
            phi = log_p ** math.log(log_p) if log_p > 0 else 1.0
        else:
            phi = 1.0
        object.__setattr__(self, "phi", phi)

    @property
    def y(self) -> float:
        return self.p / self.n

    @property
    def lower(self) -> float:
        return self.lam_minus

    @property
    def upper(self) -> float:
        return self.lam_plus


LawParams = Union[MPParams, NonasymptoticMP]


@dataclass(frozen=True)
class GreenDiagnostics:
    """Deviations of a Green matrix from the nonasymptotic Stieltjes transform."""

    lam: float
    """|s_p − s_W|, with s_p the normalized trace."""

    lam_d: float
    """max_k |G_kk − s_W|."""

    lam_o: float
    """max_{k≠l} |G_kl|, zero for p = 1."""


@dataclass(frozen=True)
class IntervalOutcome:
    interval: Interval
    count: int
    expected: float
    bound: float

    @property
    def excess(self) -> float:
        """|N_I − p∫_I ρ| relative to the allowed δ·p·|I|."""
        return abs(self.count - self.expected) / self.bound

    @property
    def passed(self) -> bool:
        return abs(self.count - self.expected) <= self.bound


@dataclass
class LocalLawReport:
    """Eigenvalue counts against the law over a grid of intervals."""

    delta: float
    min_len: float
    outcomes: List[IntervalOutcome]

    @property
    def pass_fraction(self) -> float:
        return sum(outcome.passed for outcome in self.outcomes) / len(self.outcomes)

    @property
    def worst(self) -> IntervalOutcome:
        return max(self.outcomes, key=lambda outcome: outcome.excess)


def mp_params(y: float) -> MPParams:
    """The law for aspect ratio y, with edges a = (1−√y)² and b = (1+√y)²."""
    return MPParams(y=y)


def nonasymptotic_params(p: int, n: int) -> NonasymptoticMP:
    """The law at ratio p/n, with edges λ± = (1 ± √(p/n))²."""
    return NonasymptoticMP(p=p, n=n)


def mp_density(
    x: Union[float, np.ndarray], params: LawParams
) -> Union[float, np.ndarray]:
    """The density √((b−x)(x−a))/(2πxy) on [a, b], zero elsewhere."""
    a, b, y = params.lower, params.upper, params.y
    values = np.asarray(x, dtype=float)
    inside = (values > a) & (values < b)
    safe = np.where(inside, values, 0.5 * (a + b))
    density = np.where(
        inside, np.sqrt((b - safe) * (safe - a)) / (2.0 * math.pi * safe * y), 0.0
    )
    if density.ndim == 0:
        return float(density)
    return density


def _angle_integrand(theta: float, a: float, b: float, y: float) -> float:
    # x = a + (b − a) sin²θ turns the square-root edges into a smooth integrand.
    sin2 = math.sin(theta) ** 2
    cos2 = 1.0 - sin2
    return (b - a) ** 2 * sin2 * cos2 / (math.pi * y * (a + (b - a) * sin2))


def _cdf(x: float, params: LawParams) -> float:
    a, b, y = params.lower, params.upper, params.y
    if x <= a:
        return 0.0
    if x >= b:
        return 1.0
    theta = math.asin(math.sqrt((x - a) / (b - a)))
    value, _ = scipy.integrate.quad(
        _angle_integrand,
        0.0,
        theta,
        args=(a, b, y),
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
    )
    return min(max(value, 0.0), 1.0)


def mp_cdf(x: Union[float, np.ndarray], params: LawParams) -> Union[float, np.ndarray]:
    """The distribution function, by adaptive quadrature in the angle variable.

    Args:
        x (Union[float, np.ndarray]): Point or points to evaluate at.
        params (LawParams): The law.

    Returns:
        Union[float, np.ndarray]: F(x), exactly 0 at or below the lower edge
        and exactly 1 at or above the upper edge.
    """
    values = np.asarray(x, dtype=float)
    if values.ndim == 0:
        return _cdf(float(values), params)
    return np.array([_cdf(float(value), params) for value in values.ravel()]).reshape(
        values.shape
    )


def mp_quantile(alpha: float, params: LawParams) -> float:
    """The inverse distribution function."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1]: {alpha}")
    a, b = params.lower, params.upper
    if alpha == 0:
        return a
    if alpha == 1:
        return b
    return float(
        scipy.optimize.brentq(
            lambda x: _cdf(x, params) - alpha, a, b, xtol=1e-14, rtol=1e-14
        )
    )


def mp_quantile_spectrum(p: int, params: LawParams) -> Spectrum:
    """A synthetic spectrum of the p quantiles F⁻¹((i − ½)/p)."""
    return Spectrum(
        values=np.array([mp_quantile((i - 0.5) / p, params) for i in range(1, p + 1)])
    )


def mp_stieltjes(z: SpectralParameter, params: LawParams) -> complex:
    """The Stieltjes transform s(z) of the law.

    s(z) solves yz·s² + (y + z − 1)·s + 1 = 0. Both roots are computed in
    cancellation-free form and the one in the upper half plane is returned.
    """
    value = as_complex(z)
    y = params.y
    A = y * value
    B = y + value - 1.0
    root = np.sqrt(complex(B * B - 4.0 * A))
    sign = 1.0 if (B.conjugate() * root).real >= 0 else -1.0
    q = -0.5 * (B + sign * root)
    candidates = (q / A, 1.0 / q)
    s = max(candidates, key=lambda candidate: candidate.imag * np.sign(value.imag))
    return complex(s)


def mp_stieltjes_nonasym(z: SpectralParameter, params: NonasymptoticMP) -> complex:
    """The Stieltjes transform s_W(z) of the law at ratio p/n."""
    if not isinstance(params, NonasymptoticMP):
        raise TypeError(f"Expected NonasymptoticMP, got {type(params).__name__}")
    return mp_stieltjes(z, params)


def default_min_len(p: int, delta: float) -> float:
    """The shortest interval length of the local law, K²log⁷p/(δ⁹p) with K = log²p."""
    log_p = math.log(p)
    K = log_p**2
    return K**2 * log_p**7 / (delta**9 * p)


def local_law_report(
    s: Spectrum,
    params: LawParams,
    delta: float = 0.1,
    min_len: Optional[float] = None,
    grid: int = 100,
) -> LocalLawReport:
    """Compares eigenvalue counts with p∫ρ over a graded grid of intervals.

    Interval centers are equally spaced over [a/2, 2b] and widths cycle
    through min_len, 2·min_len and 4·min_len. An interval passes if
    |N_I − p∫_I ρ| ≤ δ·p·|I|. Intervals are shifted, never shortened, to stay
    inside the window, unless wider than the window itself.

    Args:
        s (Spectrum): The spectrum to check.
        params (LawParams): The law to compare with.
        delta (float): The relative tolerance, in (0, 1/2).
        min_len (Optional[float]): The shortest interval length. Defaults to
            `default_min_len`.
        grid (int): The number of intervals.

    Returns:
        LocalLawReport: The outcome for every interval.
    """
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must be in (0, 1/2): {delta}")
    if grid < 1:
        raise ValueError(f"grid must be positive: {grid}")
    if min_len is None:
        min_len = default_min_len(s.p, delta)
    if not min_len > 0:
        raise ValueError(f"min_len must be positive: {min_len}")
    low = params.lower / 2.0
    high = 2.0 * params.upper
    window = high - low
    if min_len >= window:
        logger.warning(
            f"min_len={min_len:g} covers the whole window [{low:g}, {high:g}], "
            "every interval is the full window"
        )
    p = s.p
    outcomes = []
    for k in range(grid):
        width = min(min_len * 2 ** (k % 3), window)
        center = low + window * (k + 0.5) / grid
        lo = min(max(center - 0.5 * width, low), high - width)
        interval = Interval(lo, lo + width)
        expected = p * (_cdf(interval.hi, params) - _cdf(interval.lo, params))
        outcomes.append(
            IntervalOutcome(
                interval=interval,
                count=count_in_interval(s, interval),
                expected=expected,
                bound=delta * p * width,
            )
        )
    return LocalLawReport(delta=delta, min_len=min_len, outcomes=outcomes)


def esd_deviation(s: Spectrum, params: LawParams) -> float:
    """sup_E |F_p(E) − F(E)| between the empirical spectral distribution and the law."""
    result = scipy.stats.kstest(np.sort(s.values), lambda x: mp_cdf(x, params))
    return float(result.statistic)


def lambda_diagnostics(
    G: np.ndarray, z: SpectralParameter, params: NonasymptoticMP
) -> GreenDiagnostics:
    """Λ, Λ_d and Λ_o of a Green matrix against s_W(z)."""
    s_W = mp_stieltjes_nonasym(z, params)
    diagonal = np.diag(G)
    lam = abs(complex(np.mean(diagonal)) - s_W)
    lam_d = float(np.max(np.abs(diagonal - s_W)))
    if G.shape[0] > 1:
        off_diagonal = np.abs(G - np.diag(diagonal))
        lam_o = float(np.max(off_diagonal))
    else:
        lam_o = 0.0
    return GreenDiagnostics(lam=float(lam), lam_d=lam_d, lam_o=lam_o)
