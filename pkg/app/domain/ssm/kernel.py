import torch

from app.shared.errors import InvalidArgumentError, ShapeMismatchError


def ssm_kernel(
    a_bar: torch.Tensor, b_bar: torch.Tensor, c: torch.Tensor, length: int
) -> torch.Tensor:
    """
    Convolution kernel of a time-invariant SSM: K[k] = <c, a_bar^k * b_bar>.

    Args:
        a_bar, b_bar, c: [..., N]
        length: number of taps L

    Returns:
        K: [..., L]
    """
    if length <= 0:
        raise InvalidArgumentError(f"kernel length must be positive, got {length}")
    powers = torch.arange(length, dtype=a_bar.dtype, device=a_bar.device)
    a_pow = a_bar.unsqueeze(-2) ** powers.unsqueeze(-1)
    return (c.unsqueeze(-2) * a_pow * b_bar.unsqueeze(-2)).sum(-1)


def apply_kernel_conv(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    """
    Causal convolution y_t = sum_{k <= t} K[k] x_{t-k}, computed with FFTs.

    Args:
        x: [..., L]
        kernel: [..., L]
    """
    length = x.shape[-1]
    if kernel.shape[-1] != length:
        raise ShapeMismatchError(
            f"kernel length {kernel.shape[-1]} does not match input length {length}"
        )
    n = 2 * length
    spectrum = torch.fft.rfft(x, n=n) * torch.fft.rfft(kernel, n=n)
    return torch.fft.irfft(spectrum, n=n)[..., :length]
