import math

import numpy as np
import pytest

from corrtw.ensembles import EntryDistribution, build_W, sample_data_matrix
from corrtw.mp_law import nonasymptotic_params
from corrtw.spectra import (
    ComplexPoint,
    DimensionMismatch,
    Interval,
    InterlacingKind,
    NearCollision,
    NotSymmetric,
    SingularSystem,
    Spectrum,
    count_in_interval,
    empirical_stieltjes,
    green_matrix,
    integrated_im_stieltjes,
    interlacing_check,
    last_column_projection_trial,
    deleted_column_component,
    min_gap,
    projection_concentration_trial,
    schur_identity_residuals,
    schur_trace_decomposition,
    shared_eigenvalue_gap,
    singular_triplets,
    singular_values,
    sup_norm_components,
    symmetric_eigen,
    weyl_check,
)

GAUSSIAN = EntryDistribution("gaussian")
RADEMACHER = EntryDistribution("rademacher")


def random_W(p: int, n: int, seed: int) -> np.ndarray:
    _, W = build_W(sample_data_matrix(p, n, GAUSSIAN, seed))
    return W


def test_symmetric_eigen_diagonal() -> None:
    spectrum = symmetric_eigen(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(spectrum.values, [1.0, 2.0, 3.0])


def test_symmetric_eigen_sign_convention() -> None:
    spectrum = symmetric_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(spectrum.values, [-1.0, 1.0], atol=1e-15)
    assert spectrum.vectors is not None
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(spectrum.vectors[:, 0], [r, -r], atol=1e-15)
    np.testing.assert_allclose(spectrum.vectors[:, 1], [r, r], atol=1e-15)


def test_symmetric_eigen_reconstruction() -> None:
    W = random_W(6, 10, 0)
    spectrum = symmetric_eigen(W)
    assert spectrum.vectors is not None
    V = spectrum.vectors
    assert np.max(np.abs(W - V @ np.diag(spectrum.values) @ V.T)) <= 1e-8
    assert np.max(np.abs(V.T @ V - np.eye(6))) <= 1e-10
    assert np.all(np.diff(spectrum.values) >= 0)


def test_symmetric_eigen_rejects_asymmetric() -> None:
    with pytest.raises(NotSymmetric):
        symmetric_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotSymmetric):
        symmetric_eigen(np.ones((2, 3)))


def test_singular_triplets_unit_row() -> None:
    system = singular_triplets(np.array([[0.6, 0.8]]))
    np.testing.assert_allclose(system.sigmas, [1.0])
    np.testing.assert_allclose(system.left, [[1.0]])
    np.testing.assert_allclose(system.right[:, 0], [0.6, 0.8])


def test_singular_triplets_orthonormal_rows() -> None:
    system = singular_triplets(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    np.testing.assert_allclose(system.sigmas, [1.0, 1.0])


def test_singular_triplets_relations() -> None:
    Y, W = build_W(sample_data_matrix(4, 7, GAUSSIAN, 3))
    system = singular_triplets(Y)
    np.testing.assert_allclose(
        system.sigmas, np.sqrt(symmetric_eigen(W, False).values), atol=1e-10
    )
    for i, sigma in enumerate(system.sigmas):
        left = system.left[:, i]
        right = system.right[:, i]
        assert np.max(np.abs(Y.rows @ right - sigma * left)) <= 1e-8
        assert np.max(np.abs(Y.rows.T @ left - sigma * right)) <= 1e-8
    assert np.max(np.abs(system.right.T @ system.right - np.eye(4))) <= 1e-8


def test_singular_triplets_requires_wide() -> None:
    with pytest.raises(DimensionMismatch):
        singular_triplets(np.ones((3, 2)))


def test_count_in_interval() -> None:
    spectrum = Spectrum(values=np.array([0.5, 1.5, 2.5]))
    assert count_in_interval(spectrum, Interval(1.0, 2.0)) == 1
    assert count_in_interval(spectrum, Interval(-0.5, 3.5)) == 3
    assert count_in_interval(spectrum, Interval(3.0, 4.0)) == 0


def test_empirical_stieltjes() -> None:
    assert empirical_stieltjes(
        Spectrum(values=np.array([1.0, 3.0])), complex(2.0, 1.0)
    ) == pytest.approx(0.5j)
    assert empirical_stieltjes(
        Spectrum(values=np.array([2.0])), ComplexPoint(0.0, 1.0)
    ) == pytest.approx((2 + 1j) / 5)


def test_empirical_stieltjes_large_z() -> None:
    spectrum = symmetric_eigen(random_W(5, 9, 1), False)
    z = complex(30.0, 40.0)
    bound = 2 * np.max(np.abs(spectrum.values)) / abs(z) ** 2
    assert abs(empirical_stieltjes(spectrum, z) + 1 / z) <= bound


def test_spectral_parameter_must_be_off_axis() -> None:
    with pytest.raises(ValueError):
        ComplexPoint(1.0, 0.0)
    with pytest.raises(ValueError):
        empirical_stieltjes(Spectrum(values=np.array([1.0])), complex(1.0, 0.0))


def test_green_matrix() -> None:
    np.testing.assert_allclose(green_matrix(np.array([[1.0]]), 1j), [[0.5 + 0.5j]])
    G = green_matrix(np.diag([1.0, 2.0]), complex(0.0, 1.0))
    np.testing.assert_allclose(G, np.diag([1 / (1 - 1j), 1 / (2 - 1j)]))


def test_green_matrix_trace() -> None:
    W = random_W(5, 8, 2)
    z = complex(1.0, 0.1)
    G = green_matrix(W, z)
    assert np.max(np.abs((W - z * np.eye(5)) @ G - np.eye(5))) <= 1e-8
    spectrum = symmetric_eigen(W, False)
    assert abs(np.trace(G) / 5 - empirical_stieltjes(spectrum, z)) <= 1e-10


def test_integrated_im_stieltjes_counts_eigenvalues() -> None:
    spectrum = Spectrum(values=np.array([0.5, 1.5, 2.5]))
    assert integrated_im_stieltjes(spectrum, 1.0, 2.0, 1e-9) == pytest.approx(
        math.pi, rel=1e-6
    )
    with pytest.raises(ValueError):
        integrated_im_stieltjes(spectrum, 1.0, 2.0, 0.0)


def test_schur_residuals() -> None:
    Y, _ = build_W(sample_data_matrix(3, 6, GAUSSIAN, 4))
    z = complex(nonasymptotic_params(3, 6).lam_plus, 0.1)
    r1, r2 = schur_identity_residuals(Y, z)
    assert r1 <= 1e-8
    assert r2 <= 1e-7
    r1_conjugate, r2_conjugate = schur_identity_residuals(Y, z.conjugate())
    assert r1_conjugate == pytest.approx(r1, abs=1e-12)
    assert r2_conjugate == pytest.approx(r2, abs=1e-12)


def test_schur_orthogonal_rows() -> None:
    rows = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
    r1, _ = schur_identity_residuals(rows, 1j)
    assert r1 <= 1e-10


def test_schur_needs_two_rows() -> None:
    with pytest.raises(DimensionMismatch):
        schur_identity_residuals(np.array([[0.6, 0.8]]), 1j)


def test_schur_trace_decomposition() -> None:
    Y, W = build_W(sample_data_matrix(4, 9, GAUSSIAN, 5))
    z = complex(0.8, 0.2)
    expected = empirical_stieltjes(symmetric_eigen(W, False), z)
    assert abs(schur_trace_decomposition(Y, z) - expected) <= 1e-10


def test_interlacing_trivial() -> None:
    result = interlacing_check(
        Spectrum(values=np.array([1.0, 3.0])),
        Spectrum(values=np.array([1.0])),
        InterlacingKind.HERMITIAN_MINOR,
    )
    assert result.passed


@pytest.mark.parametrize("kind", list(InterlacingKind))
def test_interlacing_random(kind: InterlacingKind) -> None:
    Y, W = build_W(sample_data_matrix(6, 9, GAUSSIAN, 6))
    if kind == InterlacingKind.HERMITIAN_MINOR:
        outer = symmetric_eigen(W, False)
        minor = symmetric_eigen(W[:-1, :-1], False)
    elif kind == InterlacingKind.ROW_DELETED:
        outer = singular_values(Y.rows)
        minor = singular_values(Y.rows[:-1])
    else:
        outer = singular_values(Y.rows)
        minor = singular_values(Y.rows[:, :-1])
    result = interlacing_check(outer, minor, kind)
    assert result.passed
    assert result.worst_margin >= -1e-10


def test_interlacing_violation() -> None:
    outer = symmetric_eigen(random_W(6, 9, 7), False)
    minor = Spectrum(values=outer.values[:-1] + 10.0)
    result = interlacing_check(outer, minor, "hermitian_minor")
    assert not result.passed
    assert result.worst_margin < 0


def test_interlacing_dimension_mismatch() -> None:
    spectrum = Spectrum(values=np.array([1.0, 2.0]))
    with pytest.raises(DimensionMismatch):
        interlacing_check(spectrum, spectrum, InterlacingKind.ROW_DELETED)


def test_weyl() -> None:
    M = np.diag([1.0, 2.0])
    assert weyl_check(M, M).passed
    result = weyl_check(M, np.diag([1.1, 2.2]))
    assert result.passed
    assert result.worst_margin == pytest.approx(0.0, abs=1e-12)


def test_weyl_random() -> None:
    for stream in range(50):
        M = sample_data_matrix(4, 7, GAUSSIAN, 8, stream).entries
        N = sample_data_matrix(4, 7, GAUSSIAN, 9, stream).entries
        assert weyl_check(M, N).passed
        assert weyl_check(M @ M.T, N @ N.T, hermitian=True).passed


def test_weyl_shape_mismatch() -> None:
    with pytest.raises(DimensionMismatch):
        weyl_check(np.ones((2, 3)), np.ones((3, 2)))


def test_deleted_column_component_unit_vector() -> None:
    predicted, actual = deleted_column_component(np.array([[0.0, 1.0]]), 0)
    assert predicted == pytest.approx(1.0)
    assert actual == pytest.approx(1.0)


@pytest.mark.parametrize("side", ["right", "left"])
def test_deleted_column_component_random(side: str) -> None:
    A = sample_data_matrix(4, 7, GAUSSIAN, 10).entries
    for i in range(4):
        predicted, actual = deleted_column_component(A, i, side)
        assert abs(predicted - actual) <= 1e-8


def test_deleted_column_component_collision() -> None:
    A = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    with pytest.raises(NearCollision):
        deleted_column_component(A, 0)


def test_sup_norm_components() -> None:
    identity = SingularSystem(sigmas=np.ones(2), left=np.eye(2), right=np.eye(3)[:, :2])
    assert sup_norm_components(identity) == 1.0
    m = 4
    flat = np.full((m, 1), 1 / math.sqrt(m))
    system = SingularSystem(sigmas=np.ones(1), left=flat, right=flat)
    assert sup_norm_components(system) == pytest.approx(1 / math.sqrt(m))


def test_gaps() -> None:
    assert min_gap(Spectrum(values=np.array([1.0, 2.0, 4.0]))) == 1.0
    assert min_gap(Spectrum(values=np.array([1.0]))) == math.inf
    assert (
        shared_eigenvalue_gap(
            Spectrum(values=np.array([1.0, 2.0])), Spectrum(values=np.array([2.0, 3.0]))
        )
        == 0.0
    )


def test_gaps_are_positive_for_continuous_entries() -> None:
    W = random_W(50, 100, 11)
    spectrum = symmetric_eigen(W, False)
    assert min_gap(spectrum) > 0
    assert shared_eigenvalue_gap(spectrum, symmetric_eigen(W[:-1, :-1], False)) > 0


def test_projection_concentration_full_rademacher() -> None:
    assert projection_concentration_trial(16, 16, RADEMACHER, 0) == pytest.approx(
        0.0, abs=1e-12
    )
    with pytest.raises(ValueError):
        projection_concentration_trial(16, 0, RADEMACHER, 0)


def test_projection_concentration() -> None:
    deviations = [
        projection_concentration_trial(1000, 100, GAUSSIAN, 0, stream)
        for stream in range(200)
    ]
    assert np.mean(np.array(deviations) <= 5.0) >= 0.99


def test_last_column_projection() -> None:
    deviations = [
        last_column_projection_trial(20, 60, 5, GAUSSIAN, 0, stream)
        for stream in range(50)
    ]
    assert all(np.isfinite(deviations))
    assert np.median(deviations) < 2.0
    hat = last_column_projection_trial(20, 60, 5, GAUSSIAN, 0, 0, offset=3, hat=True)
    assert math.isfinite(hat)
    with pytest.raises(ValueError):
        last_column_projection_trial(20, 60, 18, GAUSSIAN, 0, 0, offset=3)
