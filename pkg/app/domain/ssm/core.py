from typing import Optional, Tuple

import torch
import torch.nn.functional as F

from app.domain.ssm.entity import (
    ContinuousSsm,
    DiscreteSteps,
    ScanCache,
    ScanGradients,
    ScanState,
    SelectiveParams,
)
from app.shared.errors import ShapeMismatchError
from app.shared.utils.validators import ensure_finite

ZOH_LIMIT = 1e-8


def discretize_zoh(
    a_diag: torch.Tensor, delta: torch.Tensor, b: torch.Tensor
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Zero-order-hold discretization of a diagonal SSM.

    Args:
        a_diag: [D, N] diagonal of A (negative)
        delta: [..., L, D] step sizes (positive)
        b: [..., L, N] input vectors B_t

    Returns:
        (a_bar, b_bar), both [..., L, D, N]. Where |delta * a| < 1e-8 the
        limit b_bar = delta * B is used instead of expm1(delta * a) / a * B.
    """
    ensure_finite(a_diag, "a_diag")
    ensure_finite(delta, "delta")
    ensure_finite(b, "b")

    delta = delta.unsqueeze(-1)
    delta_a = delta * a_diag
    a_bar = torch.exp(delta_a)

    small = delta_a.abs() < ZOH_LIMIT
    a_safe = torch.where(small, torch.ones_like(a_diag), a_diag)
    scale = torch.where(small, delta.expand_as(delta_a), torch.expm1(delta_a) / a_safe)
    b_bar = scale * b.unsqueeze(-2)
    return a_bar, b_bar


def selective_params(x: torch.Tensor, ssm: ContinuousSsm) -> SelectiveParams:
    """
    Input-dependent B_t, C_t (linear in x_t) and delta_t = softplus(W x_t + bias).

    Args:
        x: [..., L, D] features
    """
    ensure_finite(x, "x")
    return SelectiveParams(
        b=ssm.b_proj(x),
        c=ssm.c_proj(x),
        delta=F.softplus(ssm.delta_proj(x)),
    )


def discretize(x: torch.Tensor, ssm: ContinuousSsm) -> DiscreteSteps:
    """Derive the selective parameters from x and fold x into b_bar"""
    params = selective_params(x, ssm)
    assert bool((params.delta > 0).all()), "softplus step size must be positive"
    a_bar, b_bar = discretize_zoh(ssm.a_diag, params.delta, params.b)
    return DiscreteSteps(a_bar=a_bar, b_bar_x=b_bar * x.unsqueeze(-1), c=params.c)


def _states_sequential(
    a: torch.Tensor, b: torch.Tensor, h0: torch.Tensor
) -> torch.Tensor:
    # a, b: [L, ...]; h0: [...]
    h = h0
    states = []
    for t in range(a.shape[0]):
        h = a[t] * h + b[t]
        states.append(h)
    return torch.stack(states)


def _prefix_scan(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """
    Inclusive scan of (a_t, b_t) pairs along dim 0 under
    (a2, b2) o (a1, b1) = (a2 a1, a2 b1 + b2); returns the b component.

    Pairs are combined, the half-length problem is solved recursively, and
    the even positions are filled in from their odd predecessors: O(L) work,
    O(log L) depth.
    """
    length = a.shape[0]
    if length == 1:
        return b
    if length % 2:
        a = torch.cat([a, torch.ones_like(a[:1])])
        b = torch.cat([b, torch.zeros_like(b[:1])])

    a_even, a_odd = a[0::2], a[1::2]
    b_even, b_odd = b[0::2], b[1::2]

    b_odd_prefix = _prefix_scan(a_odd * a_even, a_odd * b_even + b_odd)
    b_even_prefix = torch.cat(
        [b_even[:1], a_even[1:] * b_odd_prefix[:-1] + b_even[1:]]
    )
    return torch.stack([b_even_prefix, b_odd_prefix], dim=1).flatten(0, 1)[:length]


def _states_parallel(a: torch.Tensor, b: torch.Tensor, h0: torch.Tensor) -> torch.Tensor:
    # fold the initial state into the first step
    b = torch.cat([(a[0] * h0 + b[0]).unsqueeze(0), b[1:]])
    return _prefix_scan(a, b)


def _scan_states(steps: DiscreteSteps, h0: torch.Tensor, parallel: bool) -> torch.Tensor:
    a = steps.a_bar.movedim(-3, 0)
    b = steps.b_bar_x.movedim(-3, 0)
    states = _states_parallel(a, b, h0) if parallel else _states_sequential(a, b, h0)
    return states.movedim(0, -3)


def _resolve_h0(steps: DiscreteSteps, h0: Optional[ScanState]) -> torch.Tensor:
    if h0 is None:
        return ScanState.zeros_like_steps(steps).h
    expected = steps.a_bar.shape[:-3] + steps.a_bar.shape[-2:]
    if tuple(h0.h.shape) != tuple(expected):
        raise ShapeMismatchError(
            f"h0: expected shape {tuple(expected)}, got {tuple(h0.h.shape)}"
        )
    ensure_finite(h0.h, "h0")
    return h0.h


def _check_steps(steps: DiscreteSteps) -> None:
    if steps.a_bar.shape != steps.b_bar_x.shape:
        raise ShapeMismatchError(
            f"a_bar {tuple(steps.a_bar.shape)} vs b_bar_x {tuple(steps.b_bar_x.shape)}"
        )
    if steps.c.shape[-1] != steps.n_state:
        raise ShapeMismatchError(
            f"c has {steps.c.shape[-1]} states, steps have {steps.n_state}"
        )


def _empty_output(steps: DiscreteSteps) -> torch.Tensor:
    return steps.a_bar.new_zeros(steps.a_bar.shape[:-1])


def scan_sequential(
    steps: DiscreteSteps, h0: Optional[ScanState] = None
) -> torch.Tensor:
    """
    h_t = a_bar_t * h_{t-1} + b_bar_x_t, y_t = <c_t, h_t>, strictly left to right.

    Returns y: [..., L, D]
    """
    _check_steps(steps)
    if steps.length == 0:
        return _empty_output(steps)
    h = _resolve_h0(steps, h0)
    states = _scan_states(steps, h, parallel=False)
    return (states * steps.c_full()).sum(-1)


def scan_parallel(steps: DiscreteSteps, h0: Optional[ScanState] = None) -> torch.Tensor:
    """Same contract as scan_sequential, evaluated by an associative scan"""
    _check_steps(steps)
    if steps.length == 0:
        return _empty_output(steps)
    h = _resolve_h0(steps, h0)
    states = _scan_states(steps, h, parallel=True)
    return (states * steps.c_full()).sum(-1)


def scan_backward(grad_y: torch.Tensor, cache: ScanCache) -> ScanGradients:
    """
    Reverse-mode gradients of y = scan(a_bar, b_bar_x, c, h0).

    The adjoint lam_t = grad_y_t * c_t + a_bar_{t+1} * lam_{t+1} is evaluated
    as a right-to-left scan; then
        d b_bar_x_t = lam_t
        d a_bar_t = lam_t * h_{t-1}
        d c_t = grad_y_t * h_t (summed over channels when c is shared)
        d h0 = a_bar_0 * lam_0
    """
    states = cache.states
    if tuple(grad_y.shape) != tuple(states.shape[:-1]):
        raise ShapeMismatchError(
            f"grad_y {tuple(grad_y.shape)} does not match cached output "
            f"{tuple(states.shape[:-1])}"
        )
    shared_c = cache.c.dim() == states.dim() - 1
    c_full = cache.c.unsqueeze(-2) if shared_c else cache.c

    g = grad_y.unsqueeze(-1) * c_full
    a = cache.a_bar.movedim(-3, 0)
    g = g.movedim(-3, 0)

    # coefficient linking lam_t to lam_{t+1}; the last one is unused
    a_next = torch.cat([a[1:], torch.zeros_like(a[:1])])
    lam = _prefix_scan(a_next.flip(0), g.flip(0)).flip(0)

    h = states.movedim(-3, 0)
    h_prev = torch.cat([cache.h0.unsqueeze(0), h[:-1]])

    grad_a = (lam * h_prev).movedim(0, -3)
    grad_h0 = a[0] * lam[0]
    grad_c = grad_y.unsqueeze(-1) * states
    if shared_c:
        grad_c = grad_c.sum(-2)
    return ScanGradients(
        a_bar=grad_a, b_bar_x=lam.movedim(0, -3), c=grad_c, h0=grad_h0
    )


class SelectiveScan(torch.autograd.Function):
    """Scan whose backward pass is the analytic adjoint scan"""

    @staticmethod
    def forward(ctx, a_bar, b_bar_x, c, h0, parallel):
        steps = DiscreteSteps(a_bar=a_bar, b_bar_x=b_bar_x, c=c)
        states = _scan_states(steps, h0, parallel=parallel)
        ctx.save_for_backward(a_bar, c, states, h0)
        return (states * steps.c_full()).sum(-1)

    @staticmethod
    def backward(ctx, grad_y):
        a_bar, c, states, h0 = ctx.saved_tensors
        grads = scan_backward(
            grad_y.contiguous(), ScanCache(a_bar=a_bar, c=c, states=states, h0=h0)
        )
        return grads.a_bar, grads.b_bar_x, grads.c, grads.h0, None


def selective_scan(
    steps: DiscreteSteps, h0: Optional[ScanState] = None, parallel: bool = True
) -> torch.Tensor:
    """Differentiable scan used by the network layers"""
    _check_steps(steps)
    if steps.length == 0:
        return _empty_output(steps)
    h = _resolve_h0(steps, h0)
    return SelectiveScan.apply(steps.a_bar, steps.b_bar_x, steps.c, h, parallel)


# exp stays a normal float64 over this range
EXPONENT_LIMIT = 600.0


def _split_time(v: torch.Tensor, chunks: int, dim: int) -> torch.Tensor:
    """[..., L, ...] -> [..., chunks, ceil(L / chunks), ...], zero-padded at the end"""
    length = v.shape[dim]
    size = -(-length // chunks)
    pad = chunks * size - length
    if pad:
        v = F.pad(v, (0, 0) * (-dim - 1) + (0, pad))
    return v.unflatten(dim, (chunks, size))


def _chunk_count(delta: torch.Tensor, rate: torch.Tensor) -> int:
    """Fewest chunks, doubling from one, whose decay exponent stays within EXPONENT_LIMIT"""
    length = delta.shape[-2]
    chunks = 1
    while chunks < length:
        span = (_split_time(delta, chunks, -2).sum(-2) * rate).max()
        if float(span) <= EXPONENT_LIMIT:
            return chunks
        chunks *= 2
    return length


def _chunk_starts(decay: torch.Tensor, partial: torch.Tensor) -> torch.Tensor:
    # state entering every chunk; partial holds the zero-start sums
    last = decay[..., -1, :, :].movedim(-3, 0)
    ends = _states_parallel(
        last, partial[..., -1, :, :].movedim(-3, 0) * last, torch.zeros_like(last[0])
    )
    return torch.cat([torch.zeros_like(ends[:1]), ends[:-1]]).movedim(0, -3)


def scan_chunked(u: torch.Tensor, ssm: ContinuousSsm) -> torch.Tensor:
    """
    scan(discretize(u)) without autograd, for inference. u: [..., L, D].

    Within a chunk the recurrence has the closed form
        h_t = E_t * (h_start + sum_{s <= t} b_bar_x_s / E_s)
    where E_t = exp(a * (delta_1 + ... + delta_t)) counts from the chunk
    start, so a_bar is never formed and the time axis is one cumsum. The body
    runs in float64 and chunk end states are joined by the associative scan.
    A single step whose decay passes EXPONENT_LIMIT is clamped there.
    """
    length = u.shape[-2]
    if length == 0:
        return u.new_zeros(u.shape)
    params = selective_params(u, ssm)
    # expm1(delta * a) / a stays finite as a -> 0
    a = ssm.a_diag.clamp(max=-ZOH_LIMIT)
    b_bar_x = torch.expm1(params.delta.unsqueeze(-1) * a).div_(a)
    b_bar_x = b_bar_x.mul_(params.b.unsqueeze(-2)).mul_(u.unsqueeze(-1)).double()

    delta = params.delta.double()
    a = a.double()
    chunks = _chunk_count(delta, -a.amin(-1))
    log_decay = _split_time(delta, chunks, -2).cumsum(-2).unsqueeze(-1) * a
    decay = torch.exp(log_decay.clamp_(min=-EXPONENT_LIMIT))

    h = _split_time(b_bar_x, chunks, -3).div_(decay).cumsum_(-3)
    if chunks > 1:
        h.add_(_chunk_starts(decay, h).unsqueeze(-3))
    h.mul_(decay)
    y = h.mul_(_split_time(params.c, chunks, -2).unsqueeze(-2)).sum(-1)
    return y.flatten(-3, -2)[..., :length, :].to(u.dtype)


def ssm_forward(u: torch.Tensor, ssm: ContinuousSsm, parallel: bool = True) -> torch.Tensor:
    """
    y = scan(discretize(u)) + d_skip * u for u: [..., L, D]. With autograd
    disabled the chunked closed form is used; ``parallel`` selects the
    differentiable scan otherwise.
    """
    if not torch.is_grad_enabled():
        return scan_chunked(u, ssm) + ssm.d_skip * u
    steps = discretize(u, ssm)
    return selective_scan(steps, parallel=parallel) + ssm.d_skip * u
