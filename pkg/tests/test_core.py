import numpy as np
import pytest

from silvar import (
    Dataset,
    DimensionError,
    LinkEstimate,
    ModelFormatError,
    NonFiniteError,
    RegularizerSpec,
    SilvarModel,
    SolverConfig,
    deserialize_model,
    serialize_model,
    validate_dataset,
)


def test_valid_dataset_passes_through(rng):
    d = Dataset(rng.normal(size=(2, 3)), rng.normal(size=(4, 3)))
    assert validate_dataset(d) is d
    assert (d.m, d.p, d.n) == (2, 4, 3)


def test_validate_is_idempotent(rng):
    d = Dataset(rng.normal(size=(2, 3)), rng.normal(size=(4, 3)))
    assert validate_dataset(validate_dataset(d)) is d


def test_column_mismatch():
    with pytest.raises(DimensionError):
        validate_dataset(Dataset(np.zeros((2, 3)), np.zeros((4, 2))))


def test_nan_reports_index():
    Y = np.zeros((2, 3))
    Y[1, 2] = np.nan
    with pytest.raises(NonFiniteError) as info:
        validate_dataset(Dataset(Y, np.zeros((4, 3))))
    assert (info.value.row, info.value.col) == (1, 2)


def test_link_rejects_unsorted_knots():
    with pytest.raises(ValueError):
        LinkEstimate(np.array([1.0, 0.0]), np.array([0.0, 1.0]))


def test_link_check_flags_steep_segment():
    assert LinkEstimate(np.array([0.0, 1.0]), np.array([0.0, 1.0])).check()
    assert not LinkEstimate(np.array([0.0, 1.0]), np.array([0.0, 2.0])).check()
    assert not LinkEstimate(np.array([0.0, 1.0]), np.array([1.0, 0.0])).check()


def test_zero_model_round_trip():
    m = SilvarModel(LinkEstimate.identity([-1.0, 1.0]), np.zeros((2, 3)), np.zeros((2, 3)))
    back = deserialize_model(serialize_model(m))
    assert np.array_equal(back.A, m.A) and np.array_equal(back.L, m.L)
    assert np.array_equal(back.link.knots, m.link.knots)


def test_random_model_round_trip_is_bit_exact(rng):
    knots = np.sort(rng.normal(size=7))
    values = np.cumsum(rng.uniform(0, 1, size=7))
    m = SilvarModel(LinkEstimate(knots, values), rng.normal(size=(3, 6)), rng.normal(size=(3, 6)) / 3,
                    mode="autoregressive", order=2, lambda_s=0.1, lambda_l=np.pi)
    back = deserialize_model(serialize_model(m))
    for a, b in [(m.A, back.A), (m.L, back.L), (m.link.knots, back.link.knots), (m.link.values, back.link.values)]:
        assert a.tobytes() == b.tobytes()
    assert (back.mode, back.order, back.lambda_l) == ("autoregressive", 2, np.pi)


@pytest.mark.parametrize("blob", [b'{"mode": "multitask", "order"', b"[]", b'{"mode": "multitask"}', b"\xff"])
def test_malformed_documents(blob):
    with pytest.raises((ModelFormatError, UnicodeDecodeError)):
        deserialize_model(blob)


def test_shape_mismatch_in_document():
    m = SilvarModel(LinkEstimate.constant(0.0), np.zeros((2, 2)), np.zeros((2, 2)))
    doc = serialize_model(m).replace(b'"shape": [2, 2]', b'"shape": [3, 2]')
    with pytest.raises(ModelFormatError):
        deserialize_model(doc)


def test_ar_model_shape_is_checked():
    with pytest.raises(DimensionError):
        SilvarModel(LinkEstimate.constant(0.0), np.zeros((2, 3)), np.zeros((2, 3)), mode="autoregressive", order=2)


def test_spec_and_config_validation():
    with pytest.raises(ValueError):
        RegularizerSpec(lambda_s=-1.0)
    with pytest.raises(ValueError):
        RegularizerSpec(h1_kind="lasso")
    with pytest.raises(ValueError):
        SolverConfig(backtracking_shrink=1.0)
    with pytest.raises(ValueError):
        SolverConfig(lmr_method="bvls")
