import math

import numpy as np
import pytest

from corrtw.ensembles import (
    DataMatrix,
    EntryDistribution,
    Form,
    ZeroRowNorm,
    ZeroVariance,
    build_R,
    build_S,
    build_W,
    build_W_hat,
    helmert_matrix,
    helmert_reduce,
    sample_data_matrix,
    stream_generator,
)

GAUSSIAN = EntryDistribution("gaussian")
RADEMACHER = EntryDistribution("rademacher")


def test_sample_rademacher_is_reproducible() -> None:
    first = sample_data_matrix(1, 4, RADEMACHER, 7)
    second = sample_data_matrix(1, 4, RADEMACHER, 7)
    assert first.entries.shape == (1, 4)
    assert set(np.unique(first.entries)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(first.entries, second.entries)


def test_sample_same_seed_same_matrix() -> None:
    first = sample_data_matrix(2, 3, GAUSSIAN, 0)
    second = sample_data_matrix(2, 3, GAUSSIAN, 0)
    np.testing.assert_array_equal(first.entries, second.entries)


def test_sample_different_seed_different_matrix() -> None:
    first = sample_data_matrix(2, 3, GAUSSIAN, 0)
    second = sample_data_matrix(2, 3, GAUSSIAN, 1)
    assert not np.array_equal(first.entries, second.entries)


def test_streams_are_independent_of_order() -> None:
    late = sample_data_matrix(3, 5, GAUSSIAN, 11, stream=4)
    for stream in range(4):
        sample_data_matrix(3, 5, GAUSSIAN, 11, stream=stream)
    again = sample_data_matrix(3, 5, GAUSSIAN, 11, stream=4)
    np.testing.assert_array_equal(late.entries, again.entries)
    other = sample_data_matrix(3, 5, GAUSSIAN, 11, stream=5)
    assert not np.array_equal(late.entries, other.entries)


def test_stream_generator_rejects_negative_seed() -> None:
    with pytest.raises(ValueError):
        stream_generator(-1, 0)


def test_sample_requires_two_columns() -> None:
    with pytest.raises(ValueError):
        sample_data_matrix(2, 1, GAUSSIAN, 0)


@pytest.mark.parametrize(
    "kind", ["gaussian", "rademacher", "uniform_symmetric", "laplace"]
)
def test_distributions_are_standardized(kind: str) -> None:
    values = EntryDistribution(kind).sample(stream_generator(3, 0), (200_000,))
    assert abs(values.mean()) < 0.02
    assert abs(values.var() - 1.0) < 0.03


def test_truncated_respects_cutoff() -> None:
    dist = EntryDistribution.from_string("truncated(laplace,1.5)")
    values = dist.sample(stream_generator(0, 0), (50, 200))
    assert np.max(np.abs(values)) <= 1.5


def test_truncated_default_cutoff() -> None:
    dist = EntryDistribution.from_string("truncated(gaussian)")
    values = dist.sample(stream_generator(0, 0), (4, 20))
    assert np.max(np.abs(values)) <= math.log(20) ** 2


def test_distribution_names_round_trip() -> None:
    names = ["gaussian", "laplace", "truncated(laplace,3.5)", "truncated(gaussian)"]
    for text in names:
        assert EntryDistribution.from_string(text).name == text


def test_invalid_distribution() -> None:
    with pytest.raises(ValueError):
        EntryDistribution.from_string("cauchy")
    with pytest.raises(ValueError):
        EntryDistribution("truncated", base="cauchy")
    with pytest.raises(ValueError):
        EntryDistribution("gaussian", cutoff=2.0)


def test_continuity() -> None:
    assert GAUSSIAN.is_continuous
    assert not RADEMACHER.is_continuous
    assert not EntryDistribution.from_string("truncated(rademacher,2)").is_continuous


def test_form_from_string() -> None:
    assert Form.from_string("W") == Form.W
    assert Form.from_string("R_form") == Form.R
    with pytest.raises(ValueError):
        Form.from_string("X")


def test_data_matrix_validation() -> None:
    with pytest.raises(ValueError):
        DataMatrix(entries=np.zeros(3))
    with pytest.raises(ValueError):
        DataMatrix(entries=np.array([[1.0, np.nan]]))


def test_build_W_single_row() -> None:
    Y, W = build_W(DataMatrix(entries=np.array([[3.0, 4.0]])))
    np.testing.assert_allclose(Y.rows, [[0.6, 0.8]])
    np.testing.assert_allclose(W, [[1.0]])
    assert Y.form == Form.W


def test_build_W_properties() -> None:
    data = sample_data_matrix(5, 9, GAUSSIAN, 2)
    Y, W = build_W(data)
    np.testing.assert_allclose(np.linalg.norm(Y.rows, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.diag(W), 1.0, atol=1e-12)
    np.testing.assert_array_equal(W, W.T)
    assert np.min(np.linalg.eigvalsh(W)) > -1e-12


def test_build_W_zero_row() -> None:
    data = DataMatrix(entries=np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(ZeroRowNorm) as info:
        build_W(data)
    assert info.value.row == 1


def test_build_R_two_columns() -> None:
    R, matrix = build_R(DataMatrix(entries=np.array([[1.0, 3.0]])))
    np.testing.assert_allclose(R.rows, [[-1 / math.sqrt(2), 1 / math.sqrt(2)]])
    np.testing.assert_allclose(matrix, [[1.0]])


def test_build_R_rows_are_centered() -> None:
    R, matrix = build_R(sample_data_matrix(4, 10, GAUSSIAN, 5))
    np.testing.assert_allclose(R.rows.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(R.rows, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.diag(matrix), 1.0, atol=1e-12)


def test_build_R_constant_row() -> None:
    with pytest.raises(ZeroVariance):
        build_R(DataMatrix(entries=np.array([[1.0, 1.0]])))


def test_build_S() -> None:
    np.testing.assert_allclose(
        build_S(DataMatrix(entries=np.array([[1.0, 1.0, 1.0, 1.0]]))), [[1.0]]
    )
    np.testing.assert_array_equal(build_S(DataMatrix(entries=np.zeros((2, 3)))), 0.0)
    data = sample_data_matrix(3, 7, GAUSSIAN, 1)
    S = build_S(data)
    assert math.isclose(
        np.trace(S), np.sum(data.entries**2) / data.n, rel_tol=1e-12
    )


def test_rademacher_W_equals_S() -> None:
    data = sample_data_matrix(6, 11, RADEMACHER, 9)
    _, W = build_W(data)
    assert np.max(np.abs(W - build_S(data))) <= 1e-14


def test_build_W_hat_drops_last_observation() -> None:
    data = sample_data_matrix(3, 8, GAUSSIAN, 4)
    Y_hat, W_hat = build_W_hat(data)
    assert Y_hat.m == 7
    _, expected = build_W(DataMatrix(entries=data.entries[:, :-1]))
    np.testing.assert_allclose(W_hat, expected)


def test_helmert_small() -> None:
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(helmert_matrix(2), [[r, r], [r, -r]])
    np.testing.assert_allclose(
        helmert_matrix(3)[2], np.array([1.0, 1.0, -2.0]) / math.sqrt(6)
    )


def test_helmert_orthogonal() -> None:
    A = helmert_matrix(50)
    assert np.max(np.abs(A @ A.T - np.eye(50))) <= 1e-12


def test_helmert_reduce_row() -> None:
    reduced = helmert_reduce(DataMatrix(entries=np.array([[1.0, 2.0, 3.0]])))
    np.testing.assert_allclose(
        reduced.entries, [[-1 / math.sqrt(2), -3 / math.sqrt(6)]], atol=1e-12
    )
    assert math.isclose(np.sum(reduced.entries**2), 2.0, rel_tol=1e-12)


def test_helmert_reduce_constant_row() -> None:
    reduced = helmert_reduce(DataMatrix(entries=np.array([[5.0, 5.0, 5.0]])))
    np.testing.assert_allclose(reduced.entries, [[0.0, 0.0]], atol=1e-12)


@pytest.mark.parametrize("shape", [(2, 5), (3, 6)])
def test_helmert_reduction_matches_R_spectrum(shape: tuple) -> None:
    data = sample_data_matrix(shape[0], shape[1], GAUSSIAN, 8)
    _, R = build_R(data)
    _, W = build_W(helmert_reduce(data))
    np.testing.assert_allclose(
        np.linalg.eigvalsh(R), np.linalg.eigvalsh(W), atol=1e-10
    )


def test_helmert_streaming_matches_matrix() -> None:
    data = sample_data_matrix(4, 30, GAUSSIAN, 6)
    matrix = helmert_reduce(data, method="matrix")
    streaming = helmert_reduce(data, method="streaming")
    assert np.max(np.abs(matrix.entries - streaming.entries)) <= 1e-12
    with pytest.raises(ValueError):
        helmert_reduce(data, method="fft")
