"""The Tracy–Widom β=1 distribution from the Hastings–McLeod solution of
Painlevé II."""

import logging
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import fsspec
import numpy as np
import pandas as pd
import scipy.integrate
import scipy.optimize
import scipy.special
from scipy.interpolate import PchipInterpolator

from corrtw.constants import (
    CACHE_DIR_ENV_VAR,
    DEFAULT_CACHE_DIR,
    TW_BLOWUP,
    TW_LEFT_TAIL,
    TW_STEP,
    TW_T_MIN,
    TW_T_PLUS,
    TW_TABLE_COLUMNS,
)
from corrtw.storage import build_provenance, read_csv, write_csv
from corrtw.utils import canonical_json, multihash_hex
from corrtw.warnings import TableRangeWarning

logger = logging.getLogger(__name__)

AIRY_RANGE = 200.0
SOLVED = "solved"
IMPORTED = "imported"

ArrayLike = Union[float, np.ndarray]


class AiryRangeError(ValueError):
    """The Airy function was requested outside |t| ≤ 200."""


class PainleveBlowup(RuntimeError):
    """The backward integration left the Hastings–McLeod branch."""


@dataclass(frozen=True)
class PainleveConfig:
    """Integration settings for the Painlevé II solve."""

    t_plus: float = TW_T_PLUS
    """The right anchor, where q and q' are set to Ai and Ai'."""

    t_min: float = TW_T_MIN
    """The left end of the table."""

    step: float = TW_STEP
    """The table spacing, also the largest integrator step."""

    method: str = "RK45"
    """The scipy integrator, a fourth order method with fifth order error control."""

    rtol: float = 1e-12
    atol: float = 1e-20

    def __post_init__(self) -> None:
        if not self.t_min < 0 < self.t_plus:
            raise ValueError(
                f"Need t_min < 0 < t_plus, got t_min={self.t_min}, t_plus={self.t_plus}"
            )
        if not 0 < self.step < self.t_plus - self.t_min:
            raise ValueError(f"Invalid step: {self.step}")
        if self.t_plus > AIRY_RANGE:
            raise ValueError(f"t_plus must be at most {AIRY_RANGE}: {self.t_plus}")

    @property
    def grid(self) -> np.ndarray:
        """The ascending table grid from t_min to t_plus."""
        count = int(round((self.t_plus - self.t_min) / self.step)) + 1
        return np.linspace(self.t_min, self.t_plus, count)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def cache_key(self) -> str:
        """The multihash of this configuration."""
        return multihash_hex(canonical_json(self.to_dict()).encode("utf-8"))


def airy_ai(t: float) -> Tuple[float, float]:
    """Returns (Ai(t), Ai'(t)).

    Raises:
        AiryRangeError: If |t| > 200.
    """
    if not abs(t) <= AIRY_RANGE:
        raise AiryRangeError(
            f"Airy function requested outside |t| <= {AIRY_RANGE}: {t}"
        )
    ai, ai_prime, _, _ = scipy.special.airy(t)
    return float(ai), float(ai_prime)


def _integral_ai(t: float) -> float:
    if t < 1.0:
        head, _ = scipy.integrate.quad(
            lambda x: airy_ai(x)[0], t, 1.0, epsabs=0.0, epsrel=1e-10, limit=200
        )
        return head + _integral_ai(1.0)
    # x = (3(u + ζ)/2)^(2/3) with ζ = 2t^(3/2)/3 factors out exp(−ζ), so the
    # integrand stays O(1) where Ai underflows.
    zeta = 2.0 / 3.0 * t**1.5

    def integrand(u: float) -> float:
        x = (1.5 * (u + zeta)) ** (2.0 / 3.0)
        return float(scipy.special.airye(x)[0]) * math.exp(-u) / math.sqrt(x)

    scaled, _ = scipy.integrate.quad(
        integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-10, limit=200
    )
    return math.exp(-zeta) * scaled


def airy_tail_integrals(t: float) -> Tuple[float, float, float]:
    """The tails ∫_t^∞ Ai, ∫_t^∞ Ai² and ∫_t^∞ x·Ai(x)² dx.

    The first by quadrature of the exponentially scaled Ai, the others in
    closed form.
    """
    ai, ai_prime = airy_ai(t)
    integral_ai = _integral_ai(t)
    integral_ai2 = ai_prime**2 - t * ai**2
    integral_x_ai2 = (t * ai_prime**2 - t * t * ai**2 - ai * ai_prime) / 3.0
    return integral_ai, integral_ai2, integral_x_ai2


def _log_f1_from_integrals(
    t: ArrayLike, integral_q: ArrayLike, integral_q2: ArrayLike, integral_xq2: ArrayLike
) -> ArrayLike:
    return -0.5 * (integral_q + integral_xq2 - t * integral_q2)


def _rhs(t: float, state: np.ndarray) -> np.ndarray:
    q, q_prime = state[0], state[1]
    q2 = q * q
    return np.array([q_prime, t * q + 2.0 * q2 * q, -q, -q2, -t * q2])


def _blowup(t: float, state: np.ndarray) -> float:
    return abs(state[0]) - TW_BLOWUP


_blowup.terminal = True  # type: ignore[attr-defined]


@dataclass(frozen=True)
class PainleveSolution:
    t_grid: np.ndarray
    q: np.ndarray
    q_prime: np.ndarray
    integral_q: np.ndarray
    integral_q2: np.ndarray
    integral_xq2: np.ndarray


def _integrate(cfg: PainleveConfig) -> PainleveSolution:
    grid = cfg.grid
    ai, ai_prime = airy_ai(cfg.t_plus)
    initial = np.array([ai, ai_prime, *airy_tail_integrals(cfg.t_plus)])
    logger.info(
        f"Solving Painleve II from {cfg.t_plus} to {cfg.t_min} with step {cfg.step}"
    )
    solution = scipy.integrate.solve_ivp(
        _rhs,
        (cfg.t_plus, cfg.t_min),
        initial,
        method=cfg.method,
        t_eval=grid[::-1],
        events=_blowup,
        max_step=cfg.step,
        rtol=cfg.rtol,
        atol=cfg.atol,
    )
    if solution.status == 1:
        where = float(solution.t_events[0][0])
        raise PainleveBlowup(
            f"|q| exceeded {TW_BLOWUP:g} at t={where:g}; raise t_plus or reduce step"
        )
    if not solution.success:
        raise RuntimeError(f"Painleve II integration failed: {solution.message}")
    states = solution.y[:, ::-1]
    if not np.all(np.isfinite(states[0])) or np.any(states[0] <= 0):
        raise PainleveBlowup("q left the positive branch on the table range")
    return PainleveSolution(
        t_grid=solution.t[::-1].copy(),
        q=states[0].copy(),
        q_prime=states[1].copy(),
        integral_q=states[2].copy(),
        integral_q2=states[3].copy(),
        integral_xq2=states[4].copy(),
    )


def solve_painleve2(cfg: PainleveConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Integrates q'' = tq + 2q³ backward from t_plus with Airy initial data.

    Returns:
        Tuple[np.ndarray, np.ndarray]: The ascending grid and q on it.

    Raises:
        PainleveBlowup: If |q| exceeds 1e6 or q stops being positive.
    """
    solution = _integrate(cfg)
    return solution.t_grid, solution.q


def _left_tail(t: ArrayLike) -> ArrayLike:
    N, a, b, c = TW_LEFT_TAIL
    u = np.abs(t)
    return N * np.exp(-a * u**3 - b * u**1.5) / u**c


def _right_tail_log_cdf(t: float) -> float:
    if t > AIRY_RANGE:
        return 0.0
    integral_q, integral_q2, integral_xq2 = airy_tail_integrals(t)
    return float(_log_f1_from_integrals(t, integral_q, integral_q2, integral_xq2))


@dataclass(frozen=True)
class TW1Table:
    """A tabulated TW₁ distribution function with tail extensions."""

    t_grid: np.ndarray
    q: np.ndarray
    F1: np.ndarray
    config: PainleveConfig = field(default_factory=PainleveConfig)
    provenance: str = SOLVED
    """``solved`` when computed in this process, ``imported`` when read from a file."""

    _interpolant: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.t_grid.ndim != 1 or self.t_grid.size < 2:
            raise ValueError("A TW1 table needs at least two grid points")
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("TW1 table grid must be strictly ascending")
        if np.any(np.diff(self.F1) < 0) or self.F1[0] < 0 or self.F1[-1] > 1:
            raise ValueError("TW1 table values must be a nondecreasing CDF")
        interpolant = PchipInterpolator(self.t_grid, self.F1)
        object.__setattr__(self, "_interpolant", interpolant)

    @property
    def t_min(self) -> float:
        return float(self.t_grid[0])

    @property
    def t_max(self) -> float:
        return float(self.t_grid[-1])

    def _scalar_cdf(self, t: float) -> float:
        if t < self.t_min:
            scale = self.F1[0] / _left_tail(self.t_min)
            return float(scale * _left_tail(t))
        if t > self.t_max:
            return math.exp(_right_tail_log_cdf(t))
        return float(self._interpolant(t))

    def _scalar_sf(self, t: float) -> float:
        if t > self.t_max:
            return -math.expm1(_right_tail_log_cdf(t))
        return 1.0 - self._scalar_cdf(t)

    def _scalar_pdf(self, t: float) -> float:
        if t < self.t_min:
            _, a, b, c = TW_LEFT_TAIL
            u = abs(t)
            return self._scalar_cdf(t) * (3 * a * u**2 + 1.5 * b * math.sqrt(u) + c / u)
        if t > self.t_max:
            if t > AIRY_RANGE:
                return 0.0
            ai, _ = airy_ai(t)
            _, integral_ai2, _ = airy_tail_integrals(t)
            return 0.5 * (ai + integral_ai2) * self._scalar_cdf(t)
        return float(self._interpolant(t, 1))

    def cdf(self, t: ArrayLike) -> ArrayLike:
        """F₁(t), interpolated on the grid and extended by tail asymptotics."""
        return _map(self._scalar_cdf, t)

    def sf(self, t: ArrayLike) -> ArrayLike:
        """1 − F₁(t), accurate in the right tail."""
        return _map(self._scalar_sf, t)

    def pdf(self, t: ArrayLike) -> ArrayLike:
        """The density, the derivative of `cdf`."""
        return _map(self._scalar_pdf, t)

    def quantile(self, alpha: float) -> float:
        """The inverse of `cdf`."""
        return tw1_quantile(alpha, self)

    def pvalue(self, stat: float) -> float:
        """The right-tail probability of a statistic."""
        return tw1_pvalue(stat, self)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(dict(zip(TW_TABLE_COLUMNS, (self.t_grid, self.q, self.F1))))

    def to_csv(self, href: str) -> None:
        """Writes the table as CSV with columns t, q, F1."""
        write_csv(self.to_frame(), href, build_provenance(self.config.to_dict(), None))

    @classmethod
    def from_csv(cls, href: str) -> "TW1Table":
        """Reads a table written by `to_csv`."""
        frame, found = read_csv(href)
        missing = set(TW_TABLE_COLUMNS) - set(frame.columns)
        if missing:
            raise ValueError(f"TW1 table {href} is missing columns: {sorted(missing)}")
        t_grid = frame["t"].to_numpy(dtype=float)
        if "config" in found:
            config = PainleveConfig(**found["config"])
        else:
            config = PainleveConfig(
                t_plus=float(t_grid[-1]),
                t_min=float(t_grid[0]),
                step=float(t_grid[1] - t_grid[0]),
            )
        return cls(
            t_grid=t_grid,
            q=frame["q"].to_numpy(dtype=float),
            F1=frame["F1"].to_numpy(dtype=float),
            config=config,
            provenance=IMPORTED,
        )


def _map(function: Any, t: ArrayLike) -> ArrayLike:
    values = np.asarray(t, dtype=float)
    if values.ndim == 0:
        return float(function(float(values)))
    return np.array([function(float(value)) for value in values.ravel()]).reshape(
        values.shape
    )


def tw1_cdf_table(cfg: Optional[PainleveConfig] = None) -> TW1Table:
    """Solves Painlevé II and tabulates F₁.

    F₁(t) = exp(−½[I_q(t) + I_{xq²}(t) − t·I_{q²}(t)]) where each I is an
    integral from t to ∞, accumulated alongside q during the solve and
    started from the exact Airy tails at t_plus.
    """
    cfg = cfg or PainleveConfig()
    solution = _integrate(cfg)
    F1 = np.exp(
        _log_f1_from_integrals(
            solution.t_grid,
            solution.integral_q,
            solution.integral_q2,
            solution.integral_xq2,
        )
    )
    F1 = np.clip(np.maximum.accumulate(F1), 0.0, 1.0)
    return TW1Table(t_grid=solution.t_grid, q=solution.q, F1=F1, config=cfg)


def _bracket(table: TW1Table, alpha: float) -> Tuple[float, float]:
    if alpha < table.F1[0]:
        hi = table.t_min
        lo = hi - 1.0
        while table._scalar_cdf(lo) >= alpha:
            hi, lo = lo, lo - 2.0 * (hi - lo)
            if lo < -1e4:
                raise ValueError(f"alpha={alpha} is below the representable left tail")
        warnings.warn(TableRangeWarning(lo, table.t_min, table.t_max))
        return lo, hi
    if alpha > table.F1[-1]:
        lo = table.t_max
        hi = lo + 1.0
        while table._scalar_cdf(hi) <= alpha:
            lo, hi = hi, hi + 2.0 * (hi - lo)
            if hi > AIRY_RANGE:
                raise ValueError(
                    f"alpha={alpha} is beyond the representable right tail"
                )
        warnings.warn(TableRangeWarning(hi, table.t_min, table.t_max))
        return lo, hi
    return table.t_min, table.t_max


def tw1_quantile(alpha: float, table: TW1Table) -> float:
    """The α-quantile of TW₁.

    Raises:
        ValueError: If alpha is not in (0, 1).
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1): {alpha}")
    lo, hi = _bracket(table, alpha)
    if table._scalar_cdf(lo) == alpha:
        return lo
    if table._scalar_cdf(hi) == alpha:
        return hi
    return float(
        scipy.optimize.brentq(
            lambda t: table._scalar_cdf(t) - alpha, lo, hi, xtol=1e-12, rtol=1e-14
        )
    )


def tw1_pvalue(stat: float, table: TW1Table) -> float:
    """P(TW₁ ≥ stat), clamped to [0, 1]."""
    if not math.isfinite(stat):
        raise ValueError(f"Statistic must be finite: {stat}")
    if stat < table.t_min or stat > table.t_max:
        warnings.warn(TableRangeWarning(stat, table.t_min, table.t_max))
    return min(max(table._scalar_sf(stat), 0.0), 1.0)


def cache_dir() -> str:
    """The table cache directory, from the environment or the default."""
    return os.path.expanduser(os.environ.get(CACHE_DIR_ENV_VAR, DEFAULT_CACHE_DIR))


def cache_href(cfg: PainleveConfig, directory: Optional[str] = None) -> str:
    """Where the table for a configuration is cached."""
    return os.path.join(directory or cache_dir(), f"tw1-{cfg.cache_key()}.csv")


def load_or_solve(
    cfg: Optional[PainleveConfig] = None, directory: Optional[str] = None
) -> TW1Table:
    """Returns the cached table for a configuration, solving and caching it if needed."""
    cfg = cfg or PainleveConfig()
    href = cache_href(cfg, directory)
    fs, path = fsspec.core.url_to_fs(href)
    if fs.exists(path):
        logger.info(f"Loading cached TW1 table from {href}")
        return TW1Table.from_csv(href)
    table = tw1_cdf_table(cfg)
    try:
        fs.makedirs(os.path.dirname(path), exist_ok=True)
        table.to_csv(href)
    except OSError as error:
        logger.warning(f"Could not cache TW1 table at {href}: {error}")
    return table
