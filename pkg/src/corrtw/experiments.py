"""Monte Carlo drivers for edge fluctuations, delocalization, eigenvalue
simplicity, the local law and the Green function comparison."""

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.stats
from numpy.polynomial import Polynomial

from corrtw.constants import MAX_REPLICA_FAILURE_FRACTION, REPLICA_COLUMNS
from corrtw.ensembles import (
    DataMatrix,
    DegenerateRow,
    EntryDistribution,
    Form,
    RowNormalizedMatrix,
    build_R,
    build_S,
    build_W,
    build_W_hat,
    helmert_reduce,
    sample_data_matrix,
)
from corrtw.mp_law import LocalLawReport, local_law_report, nonasymptotic_params
from corrtw.spectra import (
    Spectrum,
    empirical_stieltjes,
    integrated_im_stieltjes,
    last_column_projection_trial,
    min_gap,
    projection_concentration_trial,
    shared_eigenvalue_gap,
    singular_triplets,
    sup_norm_components,
    symmetric_eigen,
)
from corrtw.tracy_widom import TW1Table
from corrtw.warnings import ExploratoryEnsemble

logger = logging.getLogger(__name__)

ECDF_PROBABILITIES = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)


class Edge(str, Enum):
    LARGEST = "largest"
    SMALLEST = "smallest"


class Scaling(str, Enum):
    N = "n"
    N_MINUS_1 = "n_minus_1"


class DiscreteEnsembleError(ValueError):
    """The operation needs an absolutely continuous entry distribution."""


class ExperimentFailed(RuntimeError):
    """Too many replicas aborted."""


@dataclass(frozen=True)
class ReplicaFailure:
    """A replica that aborted on a degenerate row."""

    replica: int
    row: int
    message: str


@dataclass(frozen=True)
class ScalingTransform:
    """Centering and scaling of an extreme eigenvalue of a p×n correlation matrix."""

    edge: Edge
    center: float
    scale: float
    n: int
    """The sample size the eigenvalue is multiplied by."""

    def apply(self, lam: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """(n·λ − center)/scale."""
        return (self.n * lam - self.center) / self.scale

    def oriented(self, stat: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """The statistic in the orientation compared with TW₁.

        The smallest edge is reflected, so that small eigenvalues give large
        oriented statistics.
        """
        return stat if self.edge == Edge.LARGEST else -stat


def scaling_transform(p: int, n: int, edge: Union[Edge, str]) -> ScalingTransform:
    """The edge scaling for a p×n sample correlation matrix.

    Largest: center (√p + √n)², scale (√n + √p)(p^−½ + n^−½)^⅓.
    Smallest: center (√p − √n)², scale (√n − √p)(p^−½ − n^−½)^⅓.
    """
    edge = Edge(edge)
    if not 1 <= p < n:
        raise ValueError(f"Need 1 <= p < n, got p={p}, n={n}")
    root_p = math.sqrt(p)
    root_n = math.sqrt(n)
    if edge == Edge.LARGEST:
        center = (root_p + root_n) ** 2
        scale = (root_n + root_p) * (1 / root_p + 1 / root_n) ** (1 / 3)
    else:
        center = (root_p - root_n) ** 2
        scale = (root_n - root_p) * (1 / root_p - 1 / root_n) ** (1 / 3)
    return ScalingTransform(edge=edge, center=center, scale=scale, n=n)


@dataclass(frozen=True)
class ExperimentConfig:
    """A reproducible Monte Carlo experiment."""

    p: int
    n: int
    dist: EntryDistribution
    form: Form = Form.W
    edge: Edge = Edge.LARGEST
    replicas: int = 1
    master_seed: int = 0
    workers: int = 1
    scaling: Scaling = Scaling.N
    helmert: bool = False
    """Build the R form as the W form of the Helmert-reduced data."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "form", Form.from_string(self.form))
        object.__setattr__(self, "edge", Edge(self.edge))
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        if not 1 <= self.p < self.n:
            raise ValueError(f"Need 1 <= p < n, got p={self.p}, n={self.n}")
        if self.replicas < 1:
            raise ValueError(f"Need at least one replica, got {self.replicas}")
        if self.workers < 1:
            raise ValueError(f"Need at least one worker, got {self.workers}")
        if self.master_seed < 0:
            raise ValueError(f"Seed must be non-negative: {self.master_seed}")
        if self.scaling == Scaling.N_MINUS_1 and self.p >= self.n - 1:
            raise ValueError(
                f"n - 1 scaling needs p < n - 1, got p={self.p}, n={self.n}"
            )

    @property
    def n_eff(self) -> int:
        return self.n - 1 if self.scaling == Scaling.N_MINUS_1 else self.n

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["dist"] = self.dist.name
        values["form"] = self.form.value
        values["edge"] = self.edge.value
        values["scaling"] = self.scaling.value
        return values


@dataclass
class EmpiricalCDF:
    """The empirical distribution function of a sample."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        self.samples = np.sort(np.asarray(self.samples, dtype=float))

    @property
    def size(self) -> int:
        return int(self.samples.size)

    def __call__(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return np.searchsorted(self.samples, x, side="right") / self.size

    def quantiles(
        self, probabilities: Sequence[float] = ECDF_PROBABILITIES
    ) -> np.ndarray:
        return np.quantile(self.samples, probabilities)


def ks_distance(ecdf: EmpiricalCDF, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """The Kolmogorov–Smirnov distance between an empirical and a reference CDF.

    Raises:
        ValueError: If the sample is empty.
    """
    if ecdf.size == 0:
        raise ValueError("KS distance of an empty sample")
    return float(scipy.stats.kstest(ecdf.samples, cdf).statistic)


def build_form(
    data: DataMatrix, form: Form, helmert: bool = False
) -> Tuple[RowNormalizedMatrix, np.ndarray]:
    """Returns the row matrix and the p×p matrix of a form.

    For the S form the rows are data/√n, which are not unit rows.
    """
    if form == Form.W:
        return build_W(data)
    if form == Form.R:
        if helmert:
            Y, W = build_W(helmert_reduce(data))
            return RowNormalizedMatrix(Form.R, Y.rows, data), W
        return build_R(data)
    rows = data.entries / np.sqrt(float(data.n))
    return RowNormalizedMatrix(Form.S, rows, data), build_S(data)


class Replica:
    """Computes one replica of an experiment from its own random stream.

    Subclasses override `measure`; `data` and `matrices` can be overridden
    to change where the matrix comes from.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg

    def data(self, index: int) -> DataMatrix:
        """The data of replica ``index``, drawn from stream ``index``."""
        cfg = self.cfg
        return sample_data_matrix(cfg.p, cfg.n, cfg.dist, cfg.master_seed, index)

    def matrices(self, data: DataMatrix) -> Tuple[RowNormalizedMatrix, np.ndarray]:
        return build_form(data, self.cfg.form, self.cfg.helmert)

    def measure(self, index: int, data: DataMatrix) -> Any:
        raise NotImplementedError

    def run(self, index: int) -> Any:
        """Runs one replica, returning a `ReplicaFailure` on a degenerate row."""
        try:
            return self.measure(index, self.data(index))
        except DegenerateRow as error:
            return ReplicaFailure(replica=index, row=error.row, message=str(error))


def _run_replica(args: Tuple[Replica, int]) -> Any:
    replica, index = args
    return replica.run(index)


def run_replicas(replica: Replica, count: int, workers: int = 1) -> List[Any]:
    """Runs replicas 0..count−1, in index order whatever the worker count."""
    name = type(replica).__name__
    logger.debug(f"Running {count} replicas of {name} on {workers} workers")
    if workers <= 1:
        return [replica.run(index) for index in range(count)]
    chunksize = max(1, count // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(
            executor.map(
                _run_replica,
                [(replica, index) for index in range(count)],
                chunksize=chunksize,
            )
        )


def _split(results: List[Any], count: int) -> Tuple[List[Any], List[ReplicaFailure]]:
    records = []
    failures = []
    for result in results:
        if isinstance(result, ReplicaFailure):
            logger.warning(f"Replica {result.replica} failed: {result.message}")
            failures.append(result)
        else:
            records.append(result)
    if len(failures) > MAX_REPLICA_FAILURE_FRACTION * count:
        raise ExperimentFailed(
            f"{len(failures)} of {count} replicas failed, first: {failures[0].message}"
        )
    return records, failures


def _require_continuous(dist: EntryDistribution, operation: str) -> None:
    if not dist.is_continuous:
        raise DiscreteEnsembleError(
            f"{operation} needs a continuous distribution, got {dist.name}"
        )


@dataclass(frozen=True)
class EdgeRecord:
    replica: int
    lambda_min: float
    lambda_max: float
    stat_min: float
    stat_max: float


class EdgeReplica(Replica):
    def __init__(self, cfg: ExperimentConfig):
        super().__init__(cfg)
        self.smallest = scaling_transform(cfg.p, cfg.n_eff, Edge.SMALLEST)
        self.largest = scaling_transform(cfg.p, cfg.n_eff, Edge.LARGEST)

    def measure(self, index: int, data: DataMatrix) -> EdgeRecord:
        _, matrix = self.matrices(data)
        values = symmetric_eigen(matrix, want_vectors=False).values
        lambda_min = float(values[0])
        lambda_max = float(values[-1])
        return EdgeRecord(
            replica=index,
            lambda_min=lambda_min,
            lambda_max=lambda_max,
            stat_min=float(self.smallest.apply(lambda_min)),
            stat_max=float(self.largest.apply(lambda_max)),
        )


@dataclass
class EdgeExperimentResult:
    config: ExperimentConfig
    records: List[EdgeRecord]
    failures: List[ReplicaFailure]
    ecdf: EmpiricalCDF
    """The TW₁-oriented statistics of the configured edge."""

    def frame(self) -> pd.DataFrame:
        """One row per successful replica."""
        return pd.DataFrame(
            [asdict(record) for record in self.records], columns=REPLICA_COLUMNS
        )

    def statistics(self, edge: Union[Edge, str], reflected: bool = False) -> np.ndarray:
        """The scaled statistics of an edge, optionally negated."""
        column = "stat_max" if Edge(edge) == Edge.LARGEST else "stat_min"
        values = np.array([getattr(record, column) for record in self.records])
        return -values if reflected else values

    def summary(self, table: TW1Table) -> Dict[str, Any]:
        """KS distances to TW₁ for both edges and the ECDF quantiles."""
        largest = EmpiricalCDF(self.statistics(Edge.LARGEST))
        smallest = EmpiricalCDF(self.statistics(Edge.SMALLEST))
        reflected = EmpiricalCDF(self.statistics(Edge.SMALLEST, reflected=True))
        return {
            "edge": self.config.edge.value,
            "replicas": len(self.records),
            "failures": [asdict(failure) for failure in self.failures],
            "ks": ks_distance(self.ecdf, table.cdf),
            "ks_largest": ks_distance(largest, table.cdf),
            "ks_smallest": ks_distance(smallest, table.cdf),
            "ks_smallest_reflected": ks_distance(reflected, table.cdf),
            "mean": float(np.mean(self.ecdf.samples)),
            "ecdf_probabilities": list(ECDF_PROBABILITIES),
            "ecdf_quantiles": self.ecdf.quantiles().tolist(),
            "table_provenance": table.provenance,
        }


def run_edge_experiment(cfg: ExperimentConfig) -> EdgeExperimentResult:
    """Simulates scaled extreme eigenvalues, one replica per random stream.

    Replica r draws its data from stream (master_seed, r), so results do not
    depend on the number of workers.
    """
    if cfg.form == Form.R and (cfg.dist.base or cfg.dist.kind) != "gaussian":
        warnings.warn(ExploratoryEnsemble(cfg.dist.name))
    logger.info(
        f"Edge experiment: p={cfg.p} n={cfg.n} {cfg.dist.name} {cfg.form.value} "
        f"{cfg.edge.value} M={cfg.replicas} seed={cfg.master_seed}"
    )
    results = run_replicas(EdgeReplica(cfg), cfg.replicas, cfg.workers)
    records, failures = _split(results, cfg.replicas)
    column = "stat_max" if cfg.edge == Edge.LARGEST else "stat_min"
    statistics = np.array([getattr(record, column) for record in records])
    if cfg.edge == Edge.SMALLEST:
        statistics = -statistics
    return EdgeExperimentResult(
        config=cfg, records=records, failures=failures, ecdf=EmpiricalCDF(statistics)
    )


class DelocalizationReplica(Replica):
    def measure(self, index: int, data: DataMatrix) -> float:
        Y, _ = self.matrices(data)
        return sup_norm_components(singular_triplets(Y))


@dataclass
class DelocalizationResult:
    max_sup: float
    per_replica: np.ndarray
    failures: List[ReplicaFailure]
    bound: float
    """3·√(2 log p / p), the delocalization scale."""


def run_delocalization(cfg: ExperimentConfig) -> DelocalizationResult:
    """The largest singular vector component, per replica and overall."""
    _require_continuous(cfg.dist, "Delocalization")
    results = run_replicas(DelocalizationReplica(cfg), cfg.replicas, cfg.workers)
    values, failures = _split(results, cfg.replicas)
    per_replica = np.array(values)
    bound = 3.0 * math.sqrt(2.0 * math.log(cfg.p) / cfg.p) if cfg.p > 1 else 1.0
    return DelocalizationResult(
        max_sup=float(per_replica.max()),
        per_replica=per_replica,
        failures=failures,
        bound=bound,
    )


class SimplicityReplica(Replica):
    def measure(self, index: int, data: DataMatrix) -> Tuple[float, float, float]:
        _, W = self.matrices(data)
        _, W_hat = build_W_hat(data)
        spectrum = symmetric_eigen(W, want_vectors=False)
        minor = symmetric_eigen(W[:-1, :-1], want_vectors=False)
        hat = symmetric_eigen(W_hat, want_vectors=False)
        return (
            min_gap(spectrum),
            shared_eigenvalue_gap(spectrum, minor),
            shared_eigenvalue_gap(spectrum, hat),
        )


@dataclass
class SimplicityResult:
    min_gap: float
    """The smallest gap between eigenvalues of W."""

    minor_gap: float
    """The smallest distance between eigenvalues of W and of W without its last row and column."""

    hat_gap: float
    """The smallest distance between eigenvalues of W and of W without the last observation."""

    per_replica: np.ndarray
    failures: List[ReplicaFailure]

    @property
    def all_positive(self) -> bool:
        return min(self.min_gap, self.minor_gap, self.hat_gap) > 0


def run_simplicity_check(cfg: ExperimentConfig) -> SimplicityResult:
    """Minimum eigenvalue gaps over replicas.

    Raises:
        DiscreteEnsembleError: For rademacher entries, where collisions have
            positive probability.
    """
    _require_continuous(cfg.dist, "The simplicity check")
    if cfg.p < 2:
        raise ValueError(f"The simplicity check needs p >= 2, got {cfg.p}")
    results = run_replicas(SimplicityReplica(cfg), cfg.replicas, cfg.workers)
    values, failures = _split(results, cfg.replicas)
    per_replica = np.array(values)
    minima = per_replica.min(axis=0)
    return SimplicityResult(
        min_gap=float(minima[0]),
        minor_gap=float(minima[1]),
        hat_gap=float(minima[2]),
        per_replica=per_replica,
        failures=failures,
    )


class LocalLawReplica(Replica):
    def __init__(
        self, cfg: ExperimentConfig, delta: float, min_len: Optional[float], grid: int
    ):
        super().__init__(cfg)
        self.delta = delta
        self.min_len = min_len
        self.grid = grid

    def measure(self, index: int, data: DataMatrix) -> LocalLawReport:
        _, matrix = self.matrices(data)
        spectrum = symmetric_eigen(matrix, want_vectors=False)
        params = nonasymptotic_params(self.cfg.p, self.cfg.n_eff)
        return local_law_report(spectrum, params, self.delta, self.min_len, self.grid)


def run_local_law(
    cfg: ExperimentConfig,
    delta: float = 0.1,
    min_len: Optional[float] = None,
    grid: int = 100,
) -> List[LocalLawReport]:
    """One local law report per replica, against the law at ratio p/n."""
    replica = LocalLawReplica(cfg, delta, min_len, grid)
    results = run_replicas(replica, cfg.replicas, cfg.workers)
    reports, _ = _split(results, cfg.replicas)
    return reports


def run_concentration_trials(
    n: int, d: int, dist: EntryDistribution, trials: int, master_seed: int
) -> np.ndarray:
    """Deviations |‖π_H(x)‖ − √d| over independent trials."""
    return np.array(
        [
            projection_concentration_trial(n, d, dist, master_seed, stream)
            for stream in range(trials)
        ]
    )


def run_last_column_trials(
    cfg: ExperimentConfig, d: int, trials: int, hat: bool = False, offset: int = 0
) -> np.ndarray:
    """Deviations |√n·‖P_J h‖ − √d| of the last observation column over trials."""
    return np.array(
        [
            last_column_projection_trial(
                cfg.p, cfg.n, d, cfg.dist, cfg.master_seed, stream, offset, hat
            )
            for stream in range(trials)
        ]
    )


@dataclass(frozen=True)
class GreenComparisonConfig:
    """Compares 𝔼F(pη·Im s_p(E + iη)) between two entry distributions."""

    p: int
    n: int
    dist_v: EntryDistribution
    dist_w: EntryDistribution
    replicas: int
    master_seed: int = 0
    epsilon: float = 0.05
    E: Optional[float] = None
    """The energy; defaults to λ₊."""

    coefficients: Tuple[float, ...] = (0.0, 1.0)
    """The test polynomial F, lowest degree first, degree at most 4."""

    statistic: str = "point"
    """``point`` for pη·Im s_p(E + iη), ``integrated`` for p∫Im s_p over [E ± p^(−2/3+ε)]."""

    paired: bool = False
    """Draw both arms from the same random streams."""

    workers: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.p < self.n:
            raise ValueError(f"Need 1 <= p < n, got p={self.p}, n={self.n}")
        if self.replicas < 1:
            raise ValueError(f"Need at least one replica, got {self.replicas}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive: {self.epsilon}")
        if not 1 <= len(self.coefficients) <= 5:
            raise ValueError(
                "The test function must be a polynomial of degree <= 4: "
                f"{self.coefficients}"
            )
        if self.statistic not in ("point", "integrated"):
            raise ValueError(f"Invalid statistic: {self.statistic}")
        lam_plus = nonasymptotic_params(self.p, self.n).lam_plus
        if self.E is None:
            object.__setattr__(self, "E", lam_plus)
        assert self.E is not None
        if abs(self.E - lam_plus) > self.window:
            raise ValueError(
                f"E={self.E} is farther than p^(-2/3+eps)={self.window:g} "
                f"from {lam_plus}"
            )

    @property
    def eta(self) -> float:
        """p^(−2/3−ε)."""
        return float(self.p ** (-2.0 / 3.0 - self.epsilon))

    @property
    def window(self) -> float:
        """p^(−2/3+ε)."""
        return float(self.p ** (-2.0 / 3.0 + self.epsilon))

    @property
    def test_function(self) -> Polynomial:
        return Polynomial(self.coefficients)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["dist_v"] = self.dist_v.name
        values["dist_w"] = self.dist_w.name
        values["coefficients"] = list(self.coefficients)
        return values


class GreenReplica(Replica):
    def __init__(self, cfg: GreenComparisonConfig, arm: int):
        self.green = cfg
        self.arm = arm
        dist = cfg.dist_v if arm == 0 else cfg.dist_w
        super().__init__(
            ExperimentConfig(
                p=cfg.p,
                n=cfg.n,
                dist=dist,
                replicas=cfg.replicas,
                master_seed=cfg.master_seed,
            )
        )

    def data(self, index: int) -> DataMatrix:
        stream = 2 * index if self.green.paired else 2 * index + self.arm
        cfg = self.cfg
        return sample_data_matrix(cfg.p, cfg.n, cfg.dist, cfg.master_seed, stream)

    def measure(self, index: int, data: DataMatrix) -> float:
        _, W = self.matrices(data)
        spectrum = symmetric_eigen(W, want_vectors=False)
        statistic = comparison_statistic(spectrum, self.green)
        return float(self.green.test_function(statistic))


def comparison_statistic(spectrum: Spectrum, cfg: GreenComparisonConfig) -> float:
    """The argument of the test function for one spectrum."""
    assert cfg.E is not None
    if cfg.statistic == "integrated":
        return integrated_im_stieltjes(
            spectrum, cfg.E - cfg.window, cfg.E + cfg.window, cfg.eta
        )
    s = empirical_stieltjes(spectrum, complex(cfg.E, cfg.eta))
    return spectrum.p * cfg.eta * s.imag


@dataclass
class GreenComparisonResult:
    mean_v: float
    mean_w: float
    pooled_se: float
    diff: float
    values_v: np.ndarray
    values_w: np.ndarray


def run_green_comparison(cfg: GreenComparisonConfig) -> GreenComparisonResult:
    """Monte Carlo means of the comparison statistic for both distributions.

    The pooled standard error is √(var_v/M + var_w/M); it is NaN for M = 1.
    """
    logger.info(
        f"Green comparison: p={cfg.p} n={cfg.n} {cfg.dist_v.name} vs {cfg.dist_w.name} "
        f"E={cfg.E:g} eta={cfg.eta:g} M={cfg.replicas}"
    )
    arms = []
    for arm in (0, 1):
        results = run_replicas(GreenReplica(cfg, arm), cfg.replicas, cfg.workers)
        values, _ = _split(results, cfg.replicas)
        arms.append(np.array(values))
    values_v, values_w = arms
    mean_v = float(np.mean(values_v))
    mean_w = float(np.mean(values_w))
    if values_v.size > 1 and values_w.size > 1:
        pooled_se = math.sqrt(
            np.var(values_v, ddof=1) / values_v.size
            + np.var(values_w, ddof=1) / values_w.size
        )
    else:
        pooled_se = float("nan")
    return GreenComparisonResult(
        mean_v=mean_v,
        mean_w=mean_w,
        pooled_se=pooled_se,
        diff=abs(mean_v - mean_w),
        values_v=values_v,
        values_w=values_w,
    )
