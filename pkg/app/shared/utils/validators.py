from typing import Any, Sequence, Union

import numpy as np
import torch

from app.shared.errors import NonFiniteInputError, ShapeMismatchError

ArrayLike = Union[torch.Tensor, np.ndarray]


def ensure_finite(value: ArrayLike, name: str = "input") -> None:
    """
    Raise NonFiniteInputError if any entry is NaN or infinite.

    Args:
        value: tensor or array to check
        name: what the value is, used in the message

    Raises:
        NonFiniteInputError: at least one entry is not finite
    """
    if isinstance(value, torch.Tensor):
        ok = bool(torch.isfinite(value).all())
    else:
        ok = bool(np.isfinite(np.asarray(value)).all())
    if not ok:
        raise NonFiniteInputError(f"non-finite input: {name}")


def ensure_last_dim(value: ArrayLike, expected: int, name: str = "input") -> None:
    """Raise ShapeMismatchError unless value.shape[-1] == expected"""
    if value.ndim == 0 or value.shape[-1] != expected:
        raise ShapeMismatchError(
            f"{name}: expected last dimension {expected}, got shape {tuple(value.shape)}"
        )


def ensure_same_shape(shapes: Sequence[Sequence[int]], name: str = "inputs") -> None:
    """Raise ShapeMismatchError unless every shape in shapes is identical"""
    first = tuple(shapes[0])
    for shape in shapes[1:]:
        if tuple(shape) != first:
            raise ShapeMismatchError(
                f"{name}: shape mismatch {first} vs {tuple(shape)}"
            )


def split_csv(value: Any) -> Any:
    """'a, b' -> ['a', 'b']; anything that is not a string passes through"""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value
