"""Eigen and singular decompositions, Green functions and the deterministic
linear-algebra identities used throughout the package."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgError

from corrtw.constants import (
    CHECK_SLACK,
    COLLISION_TOLERANCE,
    SINGULAR_VALUE_FLOOR,
    SYMMETRY_TOLERANCE,
)
from corrtw.ensembles import (
    EntryDistribution,
    RowNormalizedMatrix,
    build_W,
    build_W_hat,
    gram,
    sample_data_matrix,
    stream_generator,
)

logger = logging.getLogger(__name__)

# Relative width within which vector components count as tied for the sign rule.
SIGN_TIE_TOLERANCE = 1e-10


class NotSymmetric(ValueError):
    """The matrix is not symmetric within tolerance."""


class EigenNonConvergence(RuntimeError):
    """The eigensolver did not converge."""


class NearCollision(ValueError):
    """Two singular values that must differ are too close."""


class DimensionMismatch(ValueError):
    """Inputs do not have compatible dimensions."""


@dataclass
class Spectrum:
    """Eigenvalues in ascending order, with optional orthonormal eigenvectors."""

    values: np.ndarray
    """The eigenvalues λ₁ ≤ … ≤ λ_p."""

    vectors: Optional[np.ndarray] = None
    """The eigenvectors as columns, ``vectors[:, k]`` belonging to ``values[k]``."""

    @property
    def p(self) -> int:
        return int(self.values.shape[0])


@dataclass
class SingularSystem:
    """Singular values with paired left and right singular vectors."""

    sigmas: np.ndarray
    """The singular values σ₁ ≤ … ≤ σ_p."""

    left: np.ndarray
    """The p×p matrix of left singular vectors (columns)."""

    right: np.ndarray
    """The m×p matrix of right singular vectors (columns)."""


@dataclass(frozen=True)
class ComplexPoint:
    """A spectral parameter z = E + iη in the upper half plane."""

    E: float
    eta: float

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ValueError(f"eta must be positive: {self.eta}")

    @property
    def z(self) -> complex:
        return complex(self.E, self.eta)


@dataclass(frozen=True)
class Interval:
    """A closed interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"Invalid interval: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class CheckResult:
    """The outcome of an inequality check."""

    passed: bool
    """Did every inequality hold, up to the slack?"""

    worst_margin: float
    """The smallest right-minus-left margin over all inequalities checked."""


class InterlacingKind(str, Enum):
    HERMITIAN_MINOR = "hermitian_minor"
    ROW_DELETED = "row_deleted"
    COLUMN_DELETED = "column_deleted"


SpectralParameter = Union[ComplexPoint, complex]


def as_complex(z: SpectralParameter) -> complex:
    """Returns a spectral parameter as a complex number off the real axis."""
    if isinstance(z, ComplexPoint):
        return z.z
    value = complex(z)
    if value.imag == 0:
        raise ValueError(f"Spectral parameter must be off the real axis: {value}")
    return value


def _rows(Y: Union[RowNormalizedMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(Y, RowNormalizedMatrix):
        return Y.rows
    return np.asarray(Y, dtype=np.float64)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flips columns so each has its largest-magnitude component positive.

    Ties, up to a relative tolerance, go to the lowest index.
    """
    if vectors.size == 0:
        return vectors
    magnitudes = np.abs(vectors)
    largest = magnitudes.max(axis=0)
    tied = magnitudes >= largest * (1.0 - SIGN_TIE_TOLERANCE)
    index = np.argmax(tied, axis=0)
    signs = np.sign(vectors[index, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def symmetric_eigen(M: np.ndarray, want_vectors: bool = True) -> Spectrum:
    """Computes the spectrum of a real symmetric matrix.

    Args:
        M (np.ndarray): A p×p symmetric matrix.
        want_vectors (bool): Also compute eigenvectors?

    Returns:
        Spectrum: Ascending eigenvalues, and eigenvectors under the sign
        convention of `fix_signs` if requested.

    Raises:
        NotSymmetric: If M is not square or not symmetric within 1e−12
            (relative to its largest entry).
        EigenNonConvergence: If the solver fails.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"Matrix is not square: {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asymmetry = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE * scale:
        raise NotSymmetric(f"Matrix is not symmetric (max asymmetry {asymmetry:g})")
    try:
        if want_vectors:
            values, vectors = scipy.linalg.eigh(M)
            return Spectrum(values=values, vectors=fix_signs(vectors))
        values = scipy.linalg.eigh(M, eigvals_only=True)
        return Spectrum(values=values)
    except LinAlgError as error:
        raise EigenNonConvergence(str(error)) from error


def singular_values(A: np.ndarray) -> Spectrum:
    """Returns the singular values of a matrix in ascending order."""
    return Spectrum(values=np.sort(scipy.linalg.svdvals(np.asarray(A, dtype=float))))


def singular_triplets(Y: Union[RowNormalizedMatrix, np.ndarray]) -> SingularSystem:
    """Computes the singular system of a p×m matrix with p ≤ m.

    The left vectors come from the p×p Gram matrix and the right vectors are
    recovered as uᵢ = Yᵀvᵢ/σᵢ. Right vectors for σᵢ below 1e−12 are taken
    from an orthonormal basis of the null space of Y.
    """
    rows = _rows(Y)
    p, m = rows.shape
    if p > m:
        raise DimensionMismatch(f"Need p <= m for singular triplets, got {p}x{m}")
    spectrum = symmetric_eigen(gram(rows), want_vectors=True)
    assert spectrum.vectors is not None
    sigmas = np.sqrt(np.clip(spectrum.values, 0.0, None))
    left = spectrum.vectors
    right = np.empty((m, p))
    regular = sigmas >= SINGULAR_VALUE_FLOOR
    right[:, regular] = (rows.T @ left[:, regular]) / sigmas[regular]
    missing = int(np.count_nonzero(~regular))
    if missing:
        logger.debug(f"Completing {missing} right singular vectors from null space")
        right[:, ~regular] = scipy.linalg.null_space(rows)[:, :missing]
    return SingularSystem(sigmas=sigmas, left=left, right=right)


def count_in_interval(s: Spectrum, interval: Interval) -> int:
    """The number of eigenvalues in the closed interval."""
    return int(np.count_nonzero((s.values >= interval.lo) & (s.values <= interval.hi)))


def empirical_stieltjes(s: Spectrum, z: SpectralParameter) -> complex:
    """The Stieltjes transform (1/p)Σ 1/(λ_k − z) of the spectral measure."""
    return complex(np.mean(1.0 / (s.values - as_complex(z))))


def integrated_im_stieltjes(s: Spectrum, E1: float, E2: float, eta: float) -> float:
    """p∫ Im s_p(x + iη) dx over [E1, E2], in closed form."""
    if not eta > 0:
        raise ValueError(f"eta must be positive: {eta}")
    values = s.values
    return float(
        np.sum(np.arctan((E2 - values) / eta) - np.arctan((E1 - values) / eta))
    )


def green_matrix(M: np.ndarray, z: SpectralParameter) -> np.ndarray:
    """The resolvent G(z) = (M − z)⁻¹."""
    M = np.asarray(M, dtype=np.float64)
    value = as_complex(z)
    try:
        return scipy.linalg.inv(M - value * np.eye(M.shape[0]))
    except LinAlgError as error:
        raise RuntimeError(f"Resolvent is singular at z={value}") from error


def schur_identity_residuals(
    Y: Union[RowNormalizedMatrix, np.ndarray], z: SpectralParameter
) -> Tuple[float, float]:
    """Residuals of the Schur complement identities for the first row.

    With y₁ the first row, Y⁽¹⁾ the remaining rows, G = (YYᵀ − z)⁻¹,
    G⁽¹⁾ = (Y⁽¹⁾Y⁽¹⁾ᵀ − z)⁻¹ and 𝒢⁽¹⁾ = (Y⁽¹⁾ᵀY⁽¹⁾ − z)⁻¹, every quantity is
    computed by its own dense inversion.

    Returns:
        Tuple[float, float]: ``r1 = |G₁₁ − 1/(1 − z − y₁ᵀY⁽¹⁾ᵀY⁽¹⁾𝒢⁽¹⁾y₁)|`` and
        ``r2 = |TrG − TrG⁽¹⁾ + 1/z − zG₁₁·y₁ᵀ(𝒢⁽¹⁾)²y₁|``.
    """
    rows = _rows(Y)
    if rows.shape[0] < 2:
        raise DimensionMismatch(f"Schur identities need p >= 2, got {rows.shape[0]}")
    value = as_complex(z)
    first = rows[0]
    rest = rows[1:]
    G = green_matrix(gram(rows), value)
    G_minor = green_matrix(gram(rest), value)
    companion = rest.T @ rest
    G_companion = green_matrix(0.5 * (companion + companion.T), value)
    inner = first @ companion @ G_companion @ first
    r1 = abs(G[0, 0] - 1.0 / (1.0 - value - inner))
    quadratic = first @ G_companion @ G_companion @ first
    r2 = abs(
        np.trace(G)
        - np.trace(G_minor)
        + 1.0 / value
        - value * G[0, 0] * quadratic
    )
    return float(r1), float(r2)


def schur_trace_decomposition(
    Y: Union[RowNormalizedMatrix, np.ndarray], z: SpectralParameter
) -> complex:
    """s_p(z) rebuilt row by row from the Schur complement of every diagonal entry."""
    rows = _rows(Y)
    value = as_complex(z)
    total = 0.0j
    for k in range(rows.shape[0]):
        rest = np.delete(rows, k, axis=0)
        companion = rest.T @ rest
        resolvent = green_matrix(0.5 * (companion + companion.T), value)
        total += 1.0 / (1.0 - value - rows[k] @ companion @ resolvent @ rows[k])
    return complex(total / rows.shape[0])


def interlacing_check(
    outer: Spectrum, minor: Spectrum, kind: Union[InterlacingKind, str]
) -> CheckResult:
    """Checks Cauchy interlacing between a matrix and a one-smaller minor.

    For ``hermitian_minor`` the spectra are eigenvalues of a symmetric matrix
    and of a principal minor; for ``row_deleted`` and ``column_deleted`` they
    are singular values of a p×n matrix (p ≤ n) and of the matrix with its
    last row or column removed. All values are ascending.

    Raises:
        DimensionMismatch: If the sizes do not fit the kind.
    """
    kind = InterlacingKind(kind)
    a = np.asarray(outer.values, dtype=float)
    b = np.asarray(minor.values, dtype=float)
    if kind == InterlacingKind.COLUMN_DELETED:
        if b.size != a.size:
            raise DimensionMismatch(
                "Column deletion keeps the number of singular values: "
                f"{a.size} vs {b.size}"
            )
        margins = np.concatenate([b[:1], b[1:] - a[:-1], a - b])
    else:
        if b.size != a.size - 1:
            raise DimensionMismatch(
                f"Minor must have one value fewer: {a.size} vs {b.size}"
            )
        margins = np.concatenate([b - a[:-1], a[1:] - b])
    worst = float(margins.min()) if margins.size else float("inf")
    return CheckResult(passed=worst >= -CHECK_SLACK, worst_margin=worst)


def weyl_check(M: np.ndarray, N: np.ndarray, hermitian: bool = False) -> CheckResult:
    """Checks Weyl's inequality maxᵢ|σᵢ(M) − σᵢ(N)| ≤ ‖M − N‖.

    With ``hermitian`` the matrices must be symmetric and their ordered
    eigenvalues are compared instead of singular values.
    """
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    if M.shape != N.shape:
        raise DimensionMismatch(f"Shape mismatch: {M.shape} vs {N.shape}")
    if hermitian:
        a = symmetric_eigen(M, want_vectors=False).values
        b = symmetric_eigen(N, want_vectors=False).values
    else:
        a = singular_values(M).values
        b = singular_values(N).values
    gap = float(np.max(np.abs(a - b))) if a.size else 0.0
    operator_norm = float(scipy.linalg.norm(M - N, 2)) if M.size else 0.0
    return CheckResult(
        passed=gap <= operator_norm + CHECK_SLACK, worst_margin=operator_norm - gap
    )


def deleted_column_component(
    A: np.ndarray, i: int, side: str = "right"
) -> Tuple[float, float]:
    """Predicts the squared last component of a singular vector from the minor.

    For ``side="right"``, with A' the first n−1 columns and h the last column,
    the squared last component of the i-th right singular vector is
    1/(1 + Σⱼ σⱼ(A')²/(σⱼ(A')² − σᵢ(A)²)²·(vⱼ(A')·h)²), vⱼ(A') the left
    singular vectors of A'. ``side="left"`` applies the same to Aᵀ, which
    deletes the last row and predicts a left singular vector component.

    Args:
        A (np.ndarray): The p×n matrix.
        i (int): Zero-based index into the ascending singular values of A.
        side (str): ``right`` or ``left``.

    Returns:
        Tuple[float, float]: ``(predicted, actual)``.

    Raises:
        NearCollision: If a singular value of the minor is within 1e−8 of σᵢ(A).
    """
    A = np.asarray(A, dtype=float)
    if side == "left":
        A = A.T
    elif side != "right":
        raise ValueError(f"Invalid side: {side}")
    p, n = A.shape
    if n < 2:
        raise DimensionMismatch(f"Need at least two columns, got {n}")
    _, s, Vt = scipy.linalg.svd(A, full_matrices=False)
    order = np.argsort(s, kind="stable")
    if not 0 <= i < s.size:
        raise IndexError(f"Singular value index out of range: {i}")
    sigma = float(s[order[i]])
    actual = float(Vt[order[i], -1] ** 2)

    minor = A[:, :-1]
    h = A[:, -1]
    U_minor, s_minor, _ = scipy.linalg.svd(minor, full_matrices=False)
    separation = np.abs(s_minor - sigma)
    if s_minor.size < p:
        separation = np.append(separation, sigma)
    if np.min(separation) <= COLLISION_TOLERANCE:
        raise NearCollision(
            f"Singular value {sigma:g} of the matrix collides with the minor "
            f"(separation {np.min(separation):g})"
        )
    squares = s_minor**2
    weights = squares / (squares - sigma**2) ** 2
    predicted = 1.0 / (1.0 + float(np.sum(weights * (U_minor.T @ h) ** 2)))
    return predicted, actual


def sup_norm_components(sys: SingularSystem) -> float:
    """The largest absolute component over all left and right singular vectors."""
    return float(max(np.max(np.abs(sys.left)), np.max(np.abs(sys.right))))


def min_gap(s: Spectrum) -> float:
    """The smallest gap between adjacent eigenvalues (infinite for p = 1)."""
    if s.p < 2:
        return float("inf")
    return float(np.min(np.diff(np.sort(s.values))))


def shared_eigenvalue_gap(s1: Spectrum, s2: Spectrum) -> float:
    """The smallest distance between an eigenvalue of s1 and one of s2."""
    return float(np.min(np.abs(s1.values[:, np.newaxis] - s2.values[np.newaxis, :])))


def projection_concentration_trial(
    n: int, d: int, dist: EntryDistribution, seed: int, stream: int = 0
) -> float:
    """One trial of |‖π_H(x)‖ − √d| for a random vector and a random d-subspace.

    The vector x has n i.i.d. entries from ``dist``. H is spanned by the
    orthonormalized columns of an n×d Gaussian matrix, which is a uniformly
    random d-dimensional subspace.
    """
    if not 1 <= d <= n:
        raise ValueError(f"Need 1 <= d <= n, got d={d}, n={n}")
    rng = stream_generator(seed, stream)
    x = dist.sample(rng, (n,))
    if d == n:
        return abs(float(np.linalg.norm(x)) - np.sqrt(n))
    basis, _ = np.linalg.qr(rng.standard_normal((n, d)))
    return abs(float(np.linalg.norm(basis.T @ x)) - np.sqrt(d))


def last_column_projection_trial(
    p: int,
    n: int,
    d: int,
    dist: EntryDistribution,
    seed: int,
    stream: int = 0,
    offset: int = 0,
    hat: bool = False,
) -> float:
    """One trial of |√n·‖P_J h‖ − √d| for the last observation column.

    P_J projects onto d consecutive eigenvectors of Ŵ (W without the last
    observation), counted down from the largest eigenvalue after skipping
    ``offset`` of them. The vector h is the last column of Y, or with ``hat``
    the last column of the data scaled by the row norms of Ŷ.
    """
    if d < 1 or d + offset > p or offset < 0:
        raise ValueError(f"Need 1 <= d and d + offset <= p, got d={d}, offset={offset}")
    data = sample_data_matrix(p, n, dist, seed, stream)
    if hat:
        kept = data.entries[:, :-1]
        norms = np.sqrt(np.einsum("ij,ij->i", kept, kept))
        h = data.entries[:, -1] / norms
    else:
        Y, _ = build_W(data)
        h = Y.rows[:, -1]
    _, W_hat = build_W_hat(data)
    spectrum = symmetric_eigen(W_hat, want_vectors=True)
    assert spectrum.vectors is not None
    selected = spectrum.vectors[:, p - offset - d : p - offset]
    return abs(np.sqrt(n) * float(np.linalg.norm(selected.T @ h)) - np.sqrt(d))
