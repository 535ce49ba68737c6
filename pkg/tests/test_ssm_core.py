import math

import pytest
import torch

from app.domain.ssm.core import (
    EXPONENT_LIMIT,
    SelectiveScan,
    discretize,
    discretize_zoh,
    scan_backward,
    scan_chunked,
    scan_parallel,
    scan_sequential,
    selective_params,
    selective_scan,
    ssm_forward,
)
from app.domain.ssm.entity import (
    ContinuousSsm,
    DiscreteSteps,
    ScanCache,
    ScanState,
)
from app.domain.ssm.kernel import apply_kernel_conv, ssm_kernel
from app.shared.errors import InvalidArgumentError, NonFiniteInputError, ShapeMismatchError


def _steps(length, d=1, n=1, dtype=torch.float32, generator=None, shared_c=True):
    a = torch.empty(length, d, n, dtype=dtype).uniform_(0.5, 0.999, generator=generator)
    b = torch.randn(length, d, n, dtype=dtype, generator=generator)
    c_shape = (length, n) if shared_c else (length, d, n)
    c = torch.randn(*c_shape, dtype=dtype, generator=generator)
    return DiscreteSteps(a_bar=a, b_bar_x=b, c=c)


def _scalar_steps(a, b, c):
    t = lambda v: torch.tensor(v, dtype=torch.float64).reshape(-1, 1, 1)
    return DiscreteSteps(a_bar=t(a), b_bar_x=t(b), c=t(c).reshape(-1, 1))


def _max_rel(x, y):
    return float((x - y).abs().max() / y.abs().max().clamp(min=1e-12))


class TestDiscretizeZoh:
    """Zero-order-hold discretization"""

    def test_limit_branch_at_zero_a(self):
        """a = 0 takes the explicit limit: a_bar = 1, b_bar = delta * B"""
        a_bar, b_bar = discretize_zoh(
            torch.zeros(1, 1), torch.tensor([[0.5]]), torch.tensor([[1.0]])
        )
        assert a_bar.item() == 1.0
        assert b_bar.item() == 0.5

    def test_half_decay(self):
        """a = -1, delta = ln 2 gives a_bar = b_bar = 0.5"""
        a_bar, b_bar = discretize_zoh(
            torch.tensor([[-1.0]], dtype=torch.float64),
            torch.tensor([[math.log(2.0)]], dtype=torch.float64),
            torch.tensor([[1.0]], dtype=torch.float64),
        )
        assert a_bar.item() == pytest.approx(0.5, abs=1e-15)
        assert b_bar.item() == pytest.approx(0.5, abs=1e-15)

    def test_vanishing_step_is_identity(self):
        """delta -> 0+ gives a_bar -> 1 and b_bar -> 0"""
        a_bar, b_bar = discretize_zoh(
            torch.tensor([[-3.0]], dtype=torch.float64),
            torch.tensor([[1e-12]], dtype=torch.float64),
            torch.tensor([[1.0]], dtype=torch.float64),
        )
        assert a_bar.item() == pytest.approx(1.0, abs=1e-11)
        assert b_bar.item() == pytest.approx(0.0, abs=1e-11)

    def test_non_finite_input(self):
        """NaN anywhere raises the non-finite input error"""
        with pytest.raises(NonFiniteInputError, match="non-finite input"):
            discretize_zoh(
                torch.tensor([[-1.0]]), torch.tensor([[float("nan")]]), torch.ones(1, 1)
            )

    def test_decaying_memory(self):
        """0 < a_bar < 1 for negative a and positive delta"""
        torch.manual_seed(0)
        ssm = ContinuousSsm(d_inner=4, n_state=8)
        steps = discretize(torch.randn(10, 4), ssm)
        assert bool((steps.a_bar > 0).all()) and bool((steps.a_bar < 1).all())


class TestSelectiveParams:
    """Input-dependent B, C and step size"""

    def test_zero_weights_give_softplus_bias(self):
        """x = 0 with zero weights leaves delta = softplus(bias) everywhere"""
        ssm = ContinuousSsm(d_inner=3, n_state=2)
        with torch.no_grad():
            ssm.delta_proj.weight.zero_()
            ssm.delta_proj.bias.fill_(0.3)
        params = selective_params(torch.zeros(5, 3), ssm)
        expected = torch.nn.functional.softplus(torch.tensor(0.3))
        assert torch.allclose(params.delta, expected.expand(5, 3))

    def test_linearity_of_b_and_c(self):
        """Doubling x doubles B and C"""
        torch.manual_seed(1)
        ssm = ContinuousSsm(d_inner=4, n_state=3)
        x = torch.randn(6, 4)
        p1, p2 = selective_params(x, ssm), selective_params(2 * x, ssm)
        assert torch.allclose(p2.b, 2 * p1.b, atol=1e-6)
        assert torch.allclose(p2.c, 2 * p1.c, atol=1e-6)

    def test_delta_positive(self):
        """Any finite x gives strictly positive steps"""
        torch.manual_seed(2)
        ssm = ContinuousSsm(d_inner=4, n_state=3)
        params = selective_params(10 * torch.randn(50, 4), ssm)
        assert bool((params.delta > 0).all())

    def test_a_diag_negative(self):
        """The log parameterization keeps A strictly negative"""
        ssm = ContinuousSsm(d_inner=4, n_state=16)
        assert bool((ssm.a_diag < 0).all())


class TestScanSequential:
    """Left-to-right recurrence"""

    def test_single_step(self):
        """h1 = b_bar_x when h0 = 0"""
        y = scan_sequential(_scalar_steps([0.5], [2.0], [1.0]))
        assert y.flatten().tolist() == [2.0]

    def test_two_steps(self):
        """h2 = 0.5 * 1 + 1"""
        y = scan_sequential(_scalar_steps([0.5, 0.5], [1.0, 1.0], [1.0, 1.0]))
        assert y.flatten().tolist() == [1.0, 1.5]

    def test_zero_input(self):
        """No input and zero state stays silent"""
        steps = _steps(7, 2, 3)
        steps = DiscreteSteps(steps.a_bar, torch.zeros_like(steps.b_bar_x), steps.c)
        assert bool((scan_sequential(steps) == 0).all())

    def test_empty_sequence(self):
        """Length 0 returns an empty output"""
        steps = _steps(0, 2, 3)
        assert scan_sequential(steps).shape == (0, 2)
        assert scan_parallel(steps).shape == (0, 2)

    def test_initial_state(self):
        """h0 propagates through a_bar"""
        steps = _scalar_steps([0.5, 0.5], [0.0, 0.0], [1.0, 1.0])
        h0 = ScanState(torch.tensor([[4.0]], dtype=torch.float64))
        assert scan_sequential(steps, h0).flatten().tolist() == [2.0, 1.0]

    def test_h0_shape_mismatch(self):
        """A wrongly shaped h0 is rejected"""
        with pytest.raises(ShapeMismatchError):
            scan_sequential(_steps(3, 2, 3), ScanState(torch.zeros(3, 2)))

    def test_linear_in_input_for_frozen_parameters(self):
        """scan(a x1 + b x2) = a scan(x1) + b scan(x2) with fixed a_bar, c"""
        g = torch.Generator().manual_seed(3)
        s1 = _steps(20, 3, 4, torch.float64, g)
        x2 = torch.randn(20, 3, 4, dtype=torch.float64, generator=g)
        s2 = DiscreteSteps(s1.a_bar, x2, s1.c)
        mixed = DiscreteSteps(s1.a_bar, 2.0 * s1.b_bar_x - 0.5 * x2, s1.c)
        expected = 2.0 * scan_sequential(s1) - 0.5 * scan_sequential(s2)
        assert torch.allclose(scan_sequential(mixed), expected, atol=1e-12)


class TestScanParallel:
    """Associative scan against the sequential oracle"""

    def test_single_step_exact(self):
        """L = 1 involves no reassociation"""
        steps = _steps(1, 3, 4)
        assert torch.equal(scan_parallel(steps), scan_sequential(steps))

    def test_memoryless(self):
        """a_bar = 0 gives y_t = <c_t, b_bar_x_t>"""
        steps = _steps(9, 2, 3)
        steps = DiscreteSteps(torch.zeros_like(steps.a_bar), steps.b_bar_x, steps.c)
        expected = (steps.b_bar_x * steps.c.unsqueeze(-2)).sum(-1)
        assert torch.allclose(scan_parallel(steps), expected)

    @pytest.mark.parametrize("length", [1, 2, 3, 5, 8, 17, 64, 100, 1023])
    def test_matches_sequential(self, length):
        """Odd, even and power-of-two lengths"""
        g = torch.Generator().manual_seed(length)
        steps = _steps(length, 3, 8, generator=g)
        assert _max_rel(scan_parallel(steps), scan_sequential(steps)) <= 1e-5

    def test_batched_and_channel_c(self):
        """Leading batch dims and per-channel c"""
        g = torch.Generator().manual_seed(4)
        a = torch.empty(2, 33, 3, 4).uniform_(0.5, 0.99, generator=g)
        b = torch.randn(2, 33, 3, 4, generator=g)
        c = torch.randn(2, 33, 3, 4, generator=g)
        steps = DiscreteSteps(a, b, c)
        h0 = ScanState(torch.randn(2, 3, 4, generator=g))
        assert _max_rel(scan_parallel(steps, h0), scan_sequential(steps, h0)) <= 1e-5

    @pytest.mark.slow
    def test_random_sweep(self):
        """1000 random instances up to L = 4096 in single precision"""
        g = torch.Generator().manual_seed(5)
        worst = 0.0
        for _ in range(1000):
            length = int(torch.randint(1, 4097, (1,), generator=g))
            n = int(torch.randint(1, 33, (1,), generator=g))
            steps = _steps(length, 1, n, generator=g)
            worst = max(worst, _max_rel(scan_parallel(steps), scan_sequential(steps)))
        assert worst <= 1e-5


class TestScanChunked:
    """Closed-form inference scan against the sequential oracle"""

    @staticmethod
    def _oracle(u, ssm):
        with torch.no_grad():
            return scan_sequential(discretize(u, ssm))

    @pytest.mark.parametrize("length", [1, 2, 7, 100, 499])
    def test_matches_sequential(self, length):
        torch.manual_seed(length)
        ssm = ContinuousSsm(d_inner=8, n_state=4)
        u = torch.randn(length, 8)
        with torch.no_grad():
            y = scan_chunked(u, ssm)
        assert y.shape == (length, 8)
        assert y.dtype == torch.float32
        assert _max_rel(y, self._oracle(u, ssm)) <= 1e-4

    def test_leading_dims(self):
        torch.manual_seed(11)
        ssm = ContinuousSsm(d_inner=6, n_state=3)
        u = torch.randn(3, 20, 6)
        with torch.no_grad():
            y = scan_chunked(u, ssm)
        expected = torch.stack([self._oracle(u[i], ssm) for i in range(3)])
        assert y.shape == (3, 20, 6)
        assert _max_rel(y, expected) <= 1e-4

    def test_long_decay_splits_into_chunks(self):
        """Large steps push the decay exponent past the limit and the scan is chunked"""
        torch.manual_seed(12)
        ssm = ContinuousSsm(d_inner=8, n_state=4)
        with torch.no_grad():
            ssm.delta_proj.bias.fill_(5.0)
        u = torch.randn(100, 8)
        with torch.no_grad():
            delta = selective_params(u, ssm).delta
            span = (delta.sum(0) * -ssm.a_diag.amin(-1)).max()
            y = scan_chunked(u, ssm)
        assert float(span) > EXPONENT_LIMIT
        assert _max_rel(y, self._oracle(u, ssm)) <= 1e-4

    def test_single_step_beyond_limit(self):
        """A step that forgets everything leaves h_t = b_bar_x_t"""
        torch.manual_seed(13)
        ssm = ContinuousSsm(d_inner=8, n_state=4)
        with torch.no_grad():
            ssm.delta_proj.bias.fill_(300.0)
        u = torch.randn(9, 8)
        with torch.no_grad():
            y = scan_chunked(u, ssm)
        assert bool(torch.isfinite(y).all())
        assert _max_rel(y, self._oracle(u, ssm)) <= 1e-4

    def test_float64(self):
        torch.manual_seed(14)
        ssm = ContinuousSsm(d_inner=4, n_state=5).double()
        u = torch.randn(60, 4, dtype=torch.float64)
        with torch.no_grad():
            y = scan_chunked(u, ssm)
        assert y.dtype == torch.float64
        assert _max_rel(y, self._oracle(u, ssm)) <= 1e-10

    def test_empty(self):
        ssm = ContinuousSsm(d_inner=4, n_state=2)
        with torch.no_grad():
            assert scan_chunked(torch.zeros(0, 4), ssm).shape == (0, 4)
            assert scan_chunked(torch.zeros(2, 0, 4), ssm).shape == (2, 0, 4)

    def test_ssm_forward_agrees_across_grad_modes(self):
        torch.manual_seed(15)
        ssm = ContinuousSsm(d_inner=8, n_state=4)
        u = torch.randn(50, 8)
        with_grad = ssm_forward(u, ssm)
        with torch.no_grad():
            without_grad = ssm_forward(u, ssm)
        assert not without_grad.requires_grad
        assert _max_rel(without_grad, with_grad.detach()) <= 1e-4


class TestKernel:
    """Convolution-kernel form of a time-invariant SSM"""

    def test_scalar_kernel(self):
        """K = [1, 0.5, 0.25]"""
        k = ssm_kernel(torch.tensor([0.5]), torch.tensor([1.0]), torch.tensor([1.0]), 3)
        assert k.tolist() == [1.0, 0.5, 0.25]

    def test_zero_c(self):
        k = ssm_kernel(torch.rand(4), torch.rand(4), torch.zeros(4), 5)
        assert bool((k == 0).all())

    def test_zero_a_is_single_tap(self):
        b, c = torch.tensor([1.0, 2.0]), torch.tensor([3.0, 0.5])
        k = ssm_kernel(torch.zeros(2), b, c, 4)
        assert k.tolist() == [4.0, 0.0, 0.0, 0.0]

    def test_non_positive_length(self):
        with pytest.raises(InvalidArgumentError):
            ssm_kernel(torch.ones(1), torch.ones(1), torch.ones(1), 0)

    def test_impulse_response(self):
        """A unit impulse reproduces the kernel"""
        k = torch.tensor([1.0, 0.5, 0.25, 0.125], dtype=torch.float64)
        x = torch.tensor([1.0, 0.0, 0.0, 0.0], dtype=torch.float64)
        assert torch.allclose(apply_kernel_conv(x, k), k, atol=1e-12)

    def test_identity_kernel(self):
        x = torch.randn(16, dtype=torch.float64)
        k = torch.zeros(16, dtype=torch.float64)
        k[0] = 1.0
        assert torch.allclose(apply_kernel_conv(x, k), x, atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            apply_kernel_conv(torch.ones(4), torch.ones(3))

    def test_matches_recurrence(self):
        """Kernel convolution equals the scan for fixed parameters"""
        g = torch.Generator().manual_seed(6)
        for _ in range(100):
            length = int(torch.randint(1, 257, (1,), generator=g))
            n = int(torch.randint(1, 9, (1,), generator=g))
            a = torch.empty(n, dtype=torch.float64).uniform_(0.1, 0.95, generator=g)
            b = torch.randn(n, dtype=torch.float64, generator=g)
            c = torch.randn(n, dtype=torch.float64, generator=g)
            x = torch.randn(length, dtype=torch.float64, generator=g)

            steps = DiscreteSteps(
                a_bar=a.expand(length, 1, n),
                b_bar_x=b * x.reshape(length, 1, 1),
                c=c.expand(length, n),
            )
            expected = scan_sequential(steps).flatten()
            y = apply_kernel_conv(x, ssm_kernel(a, b, c, length))
            assert _max_rel(y, expected) <= 1e-6


class TestScanBackward:
    """Adjoint scan gradients"""

    def _cache(self, steps, h0=None):
        h0 = torch.zeros(steps.a_bar.shape[1:], dtype=steps.a_bar.dtype) if h0 is None else h0
        y = scan_sequential(steps, ScanState(h0))
        states = []
        h = h0
        for t in range(steps.length):
            h = steps.a_bar[t] * h + steps.b_bar_x[t]
            states.append(h)
        return y, ScanCache(a_bar=steps.a_bar, c=steps.c, states=torch.stack(states), h0=h0)

    def test_zero_upstream_gradient(self):
        """grad_y = 0 gives zero gradients everywhere"""
        steps = _steps(6, 2, 3, torch.float64)
        y, cache = self._cache(steps)
        grads = scan_backward(torch.zeros_like(y), cache)
        for g in (grads.a_bar, grads.b_bar_x, grads.c, grads.h0):
            assert bool((g == 0).all())

    def test_single_step_chain_rule(self):
        """L = 1: dy/d b_bar_x = c"""
        steps = _scalar_steps([0.3], [2.0], [1.7])
        y, cache = self._cache(steps)
        grads = scan_backward(torch.ones_like(y), cache)
        assert grads.b_bar_x.item() == pytest.approx(1.7)

    def test_shape_mismatch(self):
        steps = _steps(4, 2, 3, torch.float64)
        _, cache = self._cache(steps)
        with pytest.raises(ShapeMismatchError):
            scan_backward(torch.ones(5, 2, dtype=torch.float64), cache)

    @pytest.mark.parametrize("parallel", [False, True])
    @pytest.mark.parametrize("shared_c", [True, False])
    def test_gradcheck(self, parallel, shared_c):
        """Analytic gradients match central differences in double precision"""
        g = torch.Generator().manual_seed(7)
        steps = _steps(11, 3, 4, torch.float64, g, shared_c=shared_c)
        inputs = (
            steps.a_bar.clone().requires_grad_(),
            steps.b_bar_x.clone().requires_grad_(),
            steps.c.clone().requires_grad_(),
            torch.randn(3, 4, dtype=torch.float64, generator=g).requires_grad_(),
        )
        assert torch.autograd.gradcheck(
            lambda a, b, c, h0: SelectiveScan.apply(a, b, c, h0, parallel),
            inputs,
            eps=1e-6,
            atol=1e-8,
            rtol=1e-6,
        )

    def test_ssm_forward_gradcheck(self):
        """End to end through discretization and the skip term"""
        torch.manual_seed(8)
        ssm = ContinuousSsm(d_inner=3, n_state=4).double()
        x = torch.randn(2, 7, 3, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(
            lambda u: ssm_forward(u, ssm), (x,), eps=1e-6, atol=1e-7, rtol=1e-6
        )

    def test_parameter_gradients_match_autograd_recurrence(self):
        """Custom backward agrees with autograd through the plain loop"""
        torch.manual_seed(9)
        ssm = ContinuousSsm(d_inner=3, n_state=4).double()
        x = torch.randn(9, 3, dtype=torch.float64)

        ssm_forward(x, ssm).square().sum().backward()
        custom = [p.grad.clone() for p in ssm.parameters()]
        ssm.zero_grad()

        steps = discretize(x, ssm)
        h = torch.zeros(3, 4, dtype=torch.float64)
        ys = []
        for t in range(9):
            h = steps.a_bar[t] * h + steps.b_bar_x[t]
            ys.append((h * steps.c[t]).sum(-1))
        (torch.stack(ys) + ssm.d_skip * x).square().sum().backward()
        for got, want in zip(custom, (p.grad for p in ssm.parameters())):
            assert torch.allclose(got, want, atol=1e-10)

    def test_selective_scan_empty(self):
        steps = _steps(0, 2, 3)
        assert selective_scan(steps).shape == (0, 2)
