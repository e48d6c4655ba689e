"""Entry distributions and the data, correlation and covariance matrices."""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from corrtw.constants import ROW_NORM_TOLERANCE

logger = logging.getLogger(__name__)

BASE_KINDS = ("rademacher", "gaussian", "uniform_symmetric", "laplace")
TRUNCATED = "truncated"

_TRUNCATED_PATTERN = re.compile(
    r"^truncated\(\s*(?P<base>[a-z_]+)\s*(?:,\s*(?P<cutoff>[^)\s]+)\s*)?\)$"
)


class DegenerateRow(ValueError):
    """A row of a data matrix cannot be normalized."""

    row: int
    """The zero-based index of the offending row."""

    def __init__(self, row: int, message: str):
        super().__init__(message)
        self.row = row


class ZeroRowNorm(DegenerateRow):
    """A row has zero Euclidean norm."""

    def __init__(self, row: int):
        super().__init__(row, f"Row {row} has zero norm")


class ZeroVariance(DegenerateRow):
    """A row is constant, so its centered version is zero."""

    def __init__(self, row: int):
        super().__init__(row, f"Row {row} is constant")


class Form(str, Enum):
    """The matrix built from a data matrix."""

    W = "W_form"
    R = "R_form"
    S = "S_form"

    @classmethod
    def from_string(cls, value: str) -> "Form":
        """Parses ``W``, ``W_form``, ``R``, ``R_form``, ``S`` or ``S_form``."""
        normalized = value.strip()
        for form in cls:
            if normalized in (form.value, form.value[0]):
                return form
        raise ValueError(f"Invalid form: {value}")


def default_cutoff(n: int) -> float:
    """The default truncation level, K = log²n."""
    return math.log(n) ** 2


def stream_generator(master_seed: int, stream_id: int) -> Generator:
    """Returns the random generator for one stream of a master seed.

    Streams are keyed by ``(master_seed, stream_id)`` through a counter-based
    Philox bit generator, so every stream can be regenerated on its own.

    Args:
        master_seed (int): The master seed, a non-negative integer.
        stream_id (int): The stream id, e.g. a replica index.

    Returns:
        Generator: A numpy generator for that stream.
    """
    if master_seed < 0 or stream_id < 0:
        raise ValueError(
            f"Seeds and stream ids must be non-negative: {master_seed}, {stream_id}"
        )
    sequence = SeedSequence(entropy=master_seed, spawn_key=(stream_id,))
    return Generator(Philox(sequence))


@dataclass(frozen=True)
class EntryDistribution:
    """A standardized symmetric entry distribution."""

    kind: str
    """One of ``rademacher``, ``gaussian``, ``uniform_symmetric``, ``laplace``
    or ``truncated``."""

    base: Optional[str] = None
    """The truncated distribution, when ``kind`` is ``truncated``."""

    cutoff: Optional[float] = None
    """The truncation level K. If None, K = log²n for rows of length n."""

    def __post_init__(self) -> None:
        if self.kind == TRUNCATED:
            if self.base not in BASE_KINDS:
                raise ValueError(f"Invalid truncated base distribution: {self.base}")
            if self.cutoff is not None:
                if not self.cutoff > 0:
                    raise ValueError(f"Cutoff must be positive: {self.cutoff}")
                if self.base == "rademacher" and self.cutoff < 1:
                    raise ValueError(
                        f"Cutoff {self.cutoff} rejects every rademacher value"
                    )
        elif self.kind in BASE_KINDS:
            if self.base is not None or self.cutoff is not None:
                raise ValueError("Only truncated distributions take a base or cutoff")
        else:
            raise ValueError(f"Invalid distribution kind: {self.kind}")

    @classmethod
    def from_string(cls, text: str) -> "EntryDistribution":
        """Parses a distribution name.

        Accepts the base names and ``truncated(<base>)`` or
        ``truncated(<base>,<cutoff>)``.

        Args:
            text (str): The distribution name.

        Returns:
            EntryDistribution: The parsed distribution.
        """
        text = text.strip().lower()
        if text in BASE_KINDS:
            return cls(kind=text)
        match = _TRUNCATED_PATTERN.match(text)
        if not match:
            raise ValueError(f"Invalid distribution: {text}")
        cutoff = match.group("cutoff")
        try:
            cutoff_value = float(cutoff) if cutoff is not None else None
        except ValueError:
            raise ValueError(f"Invalid truncation cutoff: {cutoff}")
        return cls(kind=TRUNCATED, base=match.group("base"), cutoff=cutoff_value)

    @property
    def name(self) -> str:
        """The string form, parseable by `from_string`."""
        if self.kind != TRUNCATED:
            return self.kind
        if self.cutoff is None:
            return f"truncated({self.base})"
        return f"truncated({self.base},{self.cutoff!r})"

    @property
    def is_continuous(self) -> bool:
        """Is this an absolutely continuous law?"""
        return (self.base or self.kind) != "rademacher"

    def sample(self, rng: Generator, shape: Tuple[int, ...]) -> np.ndarray:
        """Draws an array of i.i.d. entries.

        For truncated laws with no explicit cutoff, the cutoff is computed
        from the last dimension of ``shape``.

        Args:
            rng (Generator): The random generator to draw from.
            shape (Tuple[int, ...]): The shape of the returned array.

        Returns:
            np.ndarray: The sampled entries, as float64.
        """
        if self.kind != TRUNCATED:
            return _sample_base(self.kind, rng, shape)
        assert self.base
        cutoff = self.cutoff
        if cutoff is None:
            cutoff = default_cutoff(max(shape[-1], 2))
            if self.base == "rademacher" and cutoff < 1:
                raise ValueError(f"Cutoff {cutoff} rejects every rademacher value")
        values = _sample_base(self.base, rng, shape)
        rejected = np.abs(values) > cutoff
        while rejected.any():
            values[rejected] = _sample_base(self.base, rng, (int(rejected.sum()),))
            rejected = np.abs(values) > cutoff
        return values


def _sample_base(kind: str, rng: Generator, shape: Tuple[int, ...]) -> np.ndarray:
    if kind == "gaussian":
        return rng.standard_normal(shape)
    elif kind == "rademacher":
        return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
    elif kind == "uniform_symmetric":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=shape)
    elif kind == "laplace":
        return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size=shape)
    else:
        raise ValueError(f"Invalid distribution kind: {kind}")


@dataclass
class DataMatrix:
    """Raw p×n entries, one row per variable."""

    entries: np.ndarray
    """The p×n entries."""

    dist: Optional[EntryDistribution] = None
    """The distribution the entries were drawn from, if known."""

    seed: Optional[int] = None
    """The master seed the entries were drawn with, if any."""

    stream: int = 0
    """The stream of the master seed the entries were drawn from."""

    def __post_init__(self) -> None:
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2:
            raise ValueError(f"Data must be two dimensional: {self.entries.shape}")
        if self.p < 1 or self.n < 1:
            raise ValueError(f"Invalid dimensions: {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("Data contains non-finite values")

    @property
    def p(self) -> int:
        """The number of rows (variables)."""
        return int(self.entries.shape[0])

    @property
    def n(self) -> int:
        """The number of columns (observations)."""
        return int(self.entries.shape[1])


@dataclass
class RowNormalizedMatrix:
    """A matrix with unit-norm rows, Y of the W form or R of the R form."""

    form: Form
    rows: np.ndarray
    source: Optional[DataMatrix] = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return int(self.rows.shape[0])

    @property
    def m(self) -> int:
        return int(self.rows.shape[1])


def sample_data_matrix(
    p: int, n: int, dist: EntryDistribution, seed: int, stream: int = 0
) -> DataMatrix:
    """Draws a p×n data matrix with i.i.d. entries.

    Args:
        p (int): The number of rows, at least 1.
        n (int): The number of columns, at least 2.
        dist (EntryDistribution): The entry distribution.
        seed (int): The master seed.
        stream (int): The stream id, e.g. the replica index.

    Returns:
        DataMatrix: The sampled matrix. The same arguments always return the
        same entries.
    """
    if p < 1 or n < 2:
        raise ValueError(f"Invalid dimensions: p={p}, n={n} (need p >= 1, n >= 2)")
    rng = stream_generator(seed, stream)
    entries = dist.sample(rng, (p, n))
    return DataMatrix(entries=entries, dist=dist, seed=seed, stream=stream)


def _row_norms(values: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", values, values))


def gram(rows: np.ndarray) -> np.ndarray:
    """Returns the symmetrized Gram matrix rows·rowsᵀ."""
    product = rows @ rows.T
    return 0.5 * (product + product.T)


def build_W(data: DataMatrix) -> Tuple[RowNormalizedMatrix, np.ndarray]:
    """Builds Y, with rows xᵢ/‖xᵢ‖, and W = YYᵀ.

    Raises:
        ZeroRowNorm: If some row is zero.
    """
    norms = _row_norms(data.entries)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroRowNorm(int(zero[0]))
    rows = data.entries / norms[:, np.newaxis]
    return RowNormalizedMatrix(Form.W, rows, data), gram(rows)


def build_R(data: DataMatrix) -> Tuple[RowNormalizedMatrix, np.ndarray]:
    """Builds R, with centered unit rows, and ℛ = RRᵀ.

    Raises:
        ZeroVariance: If some row is constant.
    """
    centered = data.entries - data.entries.mean(axis=1, keepdims=True)
    norms = _row_norms(centered)
    scale = np.max(np.abs(data.entries), axis=1)
    constant = np.flatnonzero(norms <= ROW_NORM_TOLERANCE * scale)
    if constant.size:
        raise ZeroVariance(int(constant[0]))
    rows = centered / norms[:, np.newaxis]
    return RowNormalizedMatrix(Form.R, rows, data), gram(rows)


def build_S(data: DataMatrix) -> np.ndarray:
    """Builds the sample covariance S = XXᵀ with X = data/√n."""
    return gram(data.entries / np.sqrt(float(data.n)))


def build_W_hat(data: DataMatrix) -> Tuple[RowNormalizedMatrix, np.ndarray]:
    """Builds W from the data with its last observation removed.

    Rows are renormalized over the remaining n−1 columns.
    """
    if data.n < 2:
        raise ValueError(f"Need at least two columns, got {data.n}")
    reduced = DataMatrix(
        entries=data.entries[:, :-1], dist=data.dist, seed=data.seed, stream=data.stream
    )
    return build_W(reduced)


def helmert_matrix(n: int) -> np.ndarray:
    """Returns the n×n Helmert matrix.

    The first row is constant 1/√n. Row k (counting from 1) for k ≥ 2 has
    k−1 entries 1/√(k(k−1)), then −(k−1)/√(k(k−1)), then zeros.
    """
    if n < 2:
        raise ValueError(f"Helmert matrix needs n >= 2, got {n}")
    matrix = np.zeros((n, n))
    matrix[0, :] = 1.0 / np.sqrt(n)
    rows = np.arange(1, n)
    weights = 1.0 / np.sqrt(rows * (rows + 1.0))
    below = np.arange(n)[np.newaxis, :] < rows[:, np.newaxis]
    matrix[1:, :] = below * weights[:, np.newaxis]
    matrix[rows, rows] = -rows * weights
    return matrix


def helmert_reduce(data: DataMatrix, method: str = "matrix") -> DataMatrix:
    """Applies the Helmert matrix to the centered rows and drops the first coordinate.

    The result has n−1 columns and the same row norms as the centered data,
    so its W-form Gram matrix equals ℛ.

    Args:
        data (DataMatrix): The data, with n ≥ 2.
        method (str): ``matrix`` multiplies by the explicit matrix,
            ``streaming`` uses cumulative sums in O(n) per row.

    Returns:
        DataMatrix: The p×(n−1) reduced data.
    """
    n = data.n
    if n < 2:
        raise ValueError(f"Helmert reduction needs n >= 2, got {n}")
    centered = data.entries - data.entries.mean(axis=1, keepdims=True)
    if method == "matrix":
        reduced = (centered @ helmert_matrix(n).T)[:, 1:]
    elif method == "streaming":
        index = np.arange(1, n, dtype=np.float64)
        partial = np.cumsum(centered, axis=1)[:, :-1]
        reduced = (partial - index * centered[:, 1:]) / np.sqrt(index * (index + 1.0))
    else:
        raise ValueError(f"Invalid Helmert method: {method}")
    return DataMatrix(
        entries=reduced, dist=data.dist, seed=data.seed, stream=data.stream
    )
