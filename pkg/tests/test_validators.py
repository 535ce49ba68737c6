import numpy as np
import pytest
import torch

from app.shared.errors import (
    DataError,
    DetectorError,
    EmptyInputError,
    InvalidArgumentError,
    NonFiniteInputError,
    NumericalError,
    ShapeMismatchError,
)
from app.shared.utils.validators import ensure_finite, ensure_last_dim, ensure_same_shape, split_csv


class TestEnsureFinite:
    """Non-finite input detection"""

    def test_finite_tensor_passes(self):
        ensure_finite(torch.randn(3, 4))

    def test_finite_array_passes(self):
        ensure_finite(np.zeros(5))

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_tensor_rejected(self, bad):
        x = torch.zeros(4)
        x[2] = bad
        with pytest.raises(NonFiniteInputError, match="features"):
            ensure_finite(x, "features")

    def test_array_rejected(self):
        with pytest.raises(NonFiniteInputError):
            ensure_finite(np.array([0.0, np.nan]))

    def test_is_numerical_error(self):
        with pytest.raises(NumericalError) as e:
            ensure_finite(torch.tensor([float("nan")]))
        assert e.value.exit_code == 3

    def test_empty_passes(self):
        ensure_finite(torch.zeros(0))


class TestEnsureLastDim:
    def test_match(self):
        ensure_last_dim(torch.zeros(2, 3, 8), 8)

    def test_mismatch(self):
        with pytest.raises(ShapeMismatchError, match=r"expected last dimension 8, got shape \(3, 7\)"):
            ensure_last_dim(torch.zeros(3, 7), 8)

    def test_scalar(self):
        with pytest.raises(ShapeMismatchError):
            ensure_last_dim(np.float64(1.0), 1)

    def test_is_data_error(self):
        with pytest.raises(DataError):
            ensure_last_dim(np.zeros((2, 2)), 3)


class TestEnsureSameShape:
    def test_same(self):
        ensure_same_shape([(2, 3), (2, 3), [2, 3]])

    def test_different(self):
        with pytest.raises(ShapeMismatchError, match="columns"):
            ensure_same_shape([(2, 3), (2, 4)], "columns")


class TestSplitCsv:
    """Comma-separated config values"""

    def test_split(self):
        assert split_csv("a, b ,c") == ["a", "b", "c"]

    def test_empty_items_dropped(self):
        assert split_csv("1.0,,2.0,") == ["1.0", "2.0"]

    def test_non_string_passes_through(self):
        value = (1.0, 2.0)
        assert split_csv(value) is value


class TestErrorExitCodes:
    """Each error family maps to one CLI exit code"""

    @pytest.mark.parametrize(
        "error, code",
        [
            (ShapeMismatchError("x"), 2),
            (EmptyInputError("x"), 2),
            (InvalidArgumentError("x"), 1),
            (NonFiniteInputError(), 3),
        ],
    )
    def test_exit_code(self, error, code):
        assert isinstance(error, DetectorError)
        assert isinstance(error, ValueError)
        assert error.exit_code == code
