"""Identity suites run by ``corrtw verify``.

Each suite checks an exact algebraic identity on freshly sampled continuous
instances and reports the worst error it saw.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Tuple

import numpy as np
import scipy.integrate

from corrtw.ensembles import (
    DataMatrix,
    EntryDistribution,
    build_R,
    build_S,
    build_W,
    helmert_matrix,
    helmert_reduce,
    sample_data_matrix,
)
from corrtw.mp_law import (
    mp_cdf,
    mp_density,
    mp_params,
    mp_stieltjes,
    nonasymptotic_params,
)
from corrtw.spectra import (
    InterlacingKind,
    NearCollision,
    empirical_stieltjes,
    green_matrix,
    interlacing_check,
    deleted_column_component,
    schur_identity_residuals,
    schur_trace_decomposition,
    singular_values,
    symmetric_eigen,
    weyl_check,
)

logger = logging.getLogger(__name__)

GAUSSIAN = EntryDistribution("gaussian")
RADEMACHER = EntryDistribution("rademacher")


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    """The worst error, or for inequality suites the most negative margin."""

    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst {self.worst:.3g} ({self.detail})"


SuiteFunction = Callable[[int, int], SuiteResult]


def _instances(
    p: int, n: int, seed: int, instances: int, dist: EntryDistribution = GAUSSIAN
) -> Iterator[DataMatrix]:
    for stream in range(instances):
        yield sample_data_matrix(p, n, dist, seed, stream)


def _error_suite(name: str, errors: List[float], tolerance: float) -> SuiteResult:
    worst = max(errors) if errors else 0.0
    return SuiteResult(
        name=name,
        passed=worst <= tolerance,
        worst=worst,
        detail=f"{len(errors)} checks, tolerance {tolerance:g}",
    )


def _margin_suite(name: str, margins: List[float], passed: bool) -> SuiteResult:
    return SuiteResult(
        name=name,
        passed=passed,
        worst=min(margins) if margins else 0.0,
        detail=f"{len(margins)} checks",
    )


def _interlacing(kind: InterlacingKind) -> SuiteFunction:
    def suite(seed: int, instances: int) -> SuiteResult:
        margins = []
        passed = True
        for data in _instances(5, 9, seed, instances):
            Y, W = build_W(data)
            if kind == InterlacingKind.HERMITIAN_MINOR:
                outer = symmetric_eigen(W, want_vectors=False)
                minor = symmetric_eigen(W[:-1, :-1], want_vectors=False)
            elif kind == InterlacingKind.ROW_DELETED:
                outer = singular_values(Y.rows)
                minor = singular_values(Y.rows[:-1, :])
            else:
                outer = singular_values(Y.rows)
                minor = singular_values(Y.rows[:, :-1])
            result = interlacing_check(outer, minor, kind)
            passed = passed and result.passed
            margins.append(result.worst_margin)
        return _margin_suite(f"interlacing.{kind.value}", margins, passed)

    return suite


def _weyl(hermitian: bool) -> SuiteFunction:
    def suite(seed: int, instances: int) -> SuiteResult:
        margins = []
        passed = True
        for index, data in enumerate(_instances(4, 7, seed, instances)):
            other = sample_data_matrix(4, 7, GAUSSIAN, seed, instances + index)
            if hermitian:
                _, M = build_W(data)
                _, N = build_W(other)
            else:
                M = data.entries
                N = data.entries + 0.1 * other.entries
            result = weyl_check(M, N, hermitian=hermitian)
            passed = passed and result.passed
            margins.append(result.worst_margin)
        return _margin_suite("weyl.hermitian" if hermitian else "weyl", margins, passed)

    return suite


def _deleted_column_component(seed: int, instances: int) -> SuiteResult:
    errors = []
    skipped = 0
    for data in _instances(4, 7, seed, instances):
        for side in ("right", "left"):
            for i in range(4):
                try:
                    predicted, actual = deleted_column_component(data.entries, i, side)
                except NearCollision:
                    skipped += 1
                    continue
                errors.append(abs(predicted - actual))
    result = _error_suite("deleted_column_component", errors, 1e-8)
    if skipped:
        logger.info(f"deleted_column_component: skipped {skipped} near collisions")
    return result


def _schur(seed: int, instances: int) -> SuiteResult:
    z = complex(nonasymptotic_params(3, 6).lam_plus, 0.1)
    worst_r1 = 0.0
    worst_r2 = 0.0
    for data in _instances(3, 6, seed, instances):
        Y, _ = build_W(data)
        r1, r2 = schur_identity_residuals(Y, z)
        worst_r1 = max(worst_r1, r1)
        worst_r2 = max(worst_r2, r2)
    return SuiteResult(
        name="schur",
        passed=worst_r1 <= 1e-8 and worst_r2 <= 1e-7,
        worst=max(worst_r1, worst_r2),
        detail=f"r1 {worst_r1:.3g} <= 1e-08, r2 {worst_r2:.3g} <= 1e-07",
    )


def _schur_trace(seed: int, instances: int) -> SuiteResult:
    errors = []
    for data in _instances(3, 6, seed, instances):
        Y, W = build_W(data)
        z = complex(1.0, 0.1)
        spectrum = symmetric_eigen(W, want_vectors=False)
        decomposed = schur_trace_decomposition(Y, z)
        errors.append(abs(decomposed - empirical_stieltjes(spectrum, z)))
    return _error_suite("schur_trace", errors, 1e-8)


def _helmert(seed: int, instances: int) -> SuiteResult:
    A = helmert_matrix(50)
    orthogonality = float(np.max(np.abs(A @ A.T - np.eye(50))))
    spectra = []
    streaming = []
    for data in _instances(3, 6, seed, instances):
        _, R = build_R(data)
        reduced = helmert_reduce(data)
        _, W = build_W(reduced)
        spectra.append(
            float(
                np.max(
                    np.abs(
                        symmetric_eigen(R, want_vectors=False).values
                        - symmetric_eigen(W, want_vectors=False).values
                    )
                )
            )
        )
        fast = helmert_reduce(data, method="streaming")
        streaming.append(float(np.max(np.abs(fast.entries - reduced.entries))))
    worst_spectrum = max(spectra)
    worst_streaming = max(streaming)
    return SuiteResult(
        name="helmert",
        passed=(
            orthogonality <= 1e-12
            and worst_spectrum <= 1e-10
            and worst_streaming <= 1e-12
        ),
        worst=max(orthogonality, worst_spectrum, worst_streaming),
        detail=(
            f"orthogonality {orthogonality:.3g}, spectrum {worst_spectrum:.3g}, "
            f"streaming {worst_streaming:.3g}"
        ),
    )


def _rademacher_w_equals_s(seed: int, instances: int) -> SuiteResult:
    errors = []
    for data in _instances(5, 9, seed, instances, RADEMACHER):
        _, W = build_W(data)
        errors.append(float(np.max(np.abs(W - build_S(data)))))
    return _error_suite("rademacher_w_equals_s", errors, 1e-14)


def _mp_self_consistency(seed: int, instances: int) -> SuiteResult:
    errors = []
    wrong_half_plane = 0
    for y in (0.25, 0.5, 0.9):
        params = mp_params(y)
        for E in np.linspace(-0.5, 4.5, 10):
            for eta in np.logspace(-3, 0, 10):
                z = complex(E, eta)
                s = mp_stieltjes(z, params)
                if not s.imag > 0:
                    wrong_half_plane += 1
                errors.append(abs(s + 1.0 / (y + z - 1.0 + y * z * s)))
    result = _error_suite("mp_self_consistency", errors, 1e-12)
    if wrong_half_plane:
        return SuiteResult(
            name=result.name,
            passed=False,
            worst=result.worst,
            detail=f"{wrong_half_plane} values with Im s <= 0",
        )
    return result


def _mp_cdf(seed: int, instances: int) -> SuiteResult:
    errors = []
    for y in (0.1, 0.5, 0.9):
        params = mp_params(y)
        for x in np.linspace(params.a, params.b, 11)[1:-1]:
            oracle, _ = scipy.integrate.quad(
                lambda t: float(mp_density(t, params)),
                params.a,
                float(x),
                epsabs=1e-12,
                epsrel=1e-12,
                limit=500,
            )
            errors.append(abs(float(mp_cdf(float(x), params)) - oracle))
    return _error_suite("mp_cdf", errors, 1e-6)


def _green_trace(seed: int, instances: int) -> SuiteResult:
    errors = []
    z = complex(1.0, 0.05)
    for data in _instances(5, 9, seed, instances):
        _, W = build_W(data)
        G = green_matrix(W, z)
        spectrum = symmetric_eigen(W, want_vectors=False)
        errors.append(abs(complex(np.trace(G)) / 5 - empirical_stieltjes(spectrum, z)))
    return _error_suite("green_trace", errors, 1e-10)


SUITES: Dict[str, SuiteFunction] = {
    "interlacing.hermitian_minor": _interlacing(InterlacingKind.HERMITIAN_MINOR),
    "interlacing.row_deleted": _interlacing(InterlacingKind.ROW_DELETED),
    "interlacing.column_deleted": _interlacing(InterlacingKind.COLUMN_DELETED),
    "weyl": _weyl(hermitian=False),
    "weyl.hermitian": _weyl(hermitian=True),
    "deleted_column_component": _deleted_column_component,
    "schur": _schur,
    "schur_trace": _schur_trace,
    "helmert": _helmert,
    "rademacher_w_equals_s": _rademacher_w_equals_s,
    "mp_self_consistency": _mp_self_consistency,
    "mp_cdf": _mp_cdf,
    "green_trace": _green_trace,
}


def run_verification(seed: int = 0, instances: int = 100) -> List[SuiteResult]:
    """Runs every identity suite.

    Args:
        seed (int): The master seed of the sampled instances.
        instances (int): Random instances per suite.

    Returns:
        List[SuiteResult]: One result per suite, in a fixed order.
    """
    if instances < 1:
        raise ValueError(f"Need at least one instance, got {instances}")
    results = []
    for name, suite in SUITES.items():
        result = suite(seed, instances)
        logger.debug(result.line())
        results.append(result)
    failed = [result.name for result in results if not result.passed]
    if failed:
        logger.warning(f"Failed suites: {', '.join(failed)}")
    else:
        logger.info(f"All {len(results)} suites passed")
    return results


def failures(results: List[SuiteResult]) -> Tuple[str, ...]:
    return tuple(result.name for result in results if not result.passed)
