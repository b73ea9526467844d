import math

import numpy as np
import pytest

from crlab.nets import (
    ComponentwiseFlow,
    DomainFlow,
    Prototypes,
    UnknownEnvironmentError,
    domain_flow_forward,
    prototype_logits,
    temporal_flow_forward,
)
from crlab.tensor import (
    DomainError,
    PrngStream,
    ShapeError,
    Tape,
    Tensor,
    concat,
    grad,
    numerical_jacobian,
)


def randomize(module, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    for _, p in module.named_parameters():
        p.data = scale * rng.normal(size=p.shape)
    return module


class TestComponentwiseFlow:
    def test_identity_at_init(self):
        flow = ComponentwiseFlow(3, lag=2, stream=PrngStream(0), env_count=2)
        z = Tensor(np.random.default_rng(0).normal(size=(2, 5, 3)))
        r, logdet = temporal_flow_forward(flow, z, u=np.array([0, 1]))
        assert np.array_equal(r.numpy(), z.numpy()[:, 2:])
        assert logdet.numpy().tolist() == [0.0, 0.0]

    def test_constant_scale(self):
        flow = ComponentwiseFlow(3, lag=1)
        flow.net.layers[-1].bias.data = np.array([0.0, math.log(2)])
        z = Tensor(np.random.default_rng(1).normal(size=(2, 4, 3)))
        r, logdet = flow(z)
        assert np.allclose(logdet.numpy(), -3 * 3 * math.log(2), rtol=1e-12)
        assert np.allclose(r.numpy(), z.numpy()[:, 1:] / 2)

    @pytest.mark.parametrize("seed", range(25))
    def test_logdet_against_numerical_jacobian(self, seed):
        rng = np.random.default_rng(seed)
        D = int(rng.integers(1, 5))
        flow = randomize(ComponentwiseFlow(D, lag=1, env_count=3), seed)
        past = Tensor(rng.normal(size=(1, 1, D)))
        current = rng.normal(size=D)
        u = np.array([seed % 3])

        def step(zt):
            return flow(concat([past, zt.reshape(1, 1, D)], axis=1), u)

        jacobian = numerical_jacobian(lambda zt: step(zt)[0], current)
        _, numeric = np.linalg.slogdet(jacobian)
        logdet = step(Tensor(current))[1]
        assert logdet.item() == pytest.approx(numeric, rel=1e-4, abs=1e-8)

    def test_inverse(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            D, L = int(rng.integers(1, 4)), int(rng.integers(1, 3))
            flow = randomize(ComponentwiseFlow(D, L, env_count=2), seed)
            z = Tensor(rng.normal(size=(2, L + 3, D)))
            u = np.array([0, 1])
            r, _ = flow(z, u)
            back = flow.inverse(r, z[:, :L], u=u)
            assert np.allclose(back.numpy(), z.numpy(), rtol=0, atol=1e-9)

    def test_zeroed_edge_row_cuts_the_input(self):
        D = 3
        flow = randomize(ComponentwiseFlow(D, lag=1), 4)
        edges = np.ones((D, D))
        edges[1] = 0.0
        z = Tensor(np.random.default_rng(4).normal(size=(2, 2, D)), requires_grad=True)
        with Tape():
            r, _ = flow(z, edge_weights=Tensor(edges))
            (g,) = grad((r * Tensor(np.arange(1.0, 7.0).reshape(2, 1, 3))).sum(), [z])
        past = g.numpy()[:, 0]
        assert not past[:, 1].any()
        assert past[:, 0].any() and past[:, 2].any()

    def test_edge_weight_shape(self):
        flow = ComponentwiseFlow(2, lag=1)
        with pytest.raises(ShapeError):
            flow(Tensor(np.zeros((1, 3, 2))), edge_weights=Tensor(np.ones((3, 2))))

    def test_too_short(self):
        with pytest.raises(ShapeError):
            ComponentwiseFlow(2, lag=2)(Tensor(np.zeros((1, 2, 2))))

    def test_missing_environment(self):
        flow = ComponentwiseFlow(2, lag=1, env_count=2)
        with pytest.raises(UnknownEnvironmentError):
            flow(Tensor(np.zeros((1, 3, 2))))


class TestDomainFlow:
    def test_identity_at_init(self):
        flow = DomainFlow(3, 2, PrngStream(0))
        z = Tensor(np.random.default_rng(0).normal(size=(4, 3)))
        out, logdet = domain_flow_forward(flow, z, np.array([0, 1, 1, 0]))
        assert np.array_equal(out.numpy(), z.numpy())
        assert not logdet.numpy().any()

    def test_scale_two(self):
        flow = DomainFlow(3, 2)
        flow.log_scale.bias.data = np.full(3, math.log(2))
        z = Tensor([[1.0, -2.0, 0.5]])
        out, logdet = flow(z, 1)
        assert np.allclose(out.numpy(), 2 * z.numpy())
        assert logdet.item() == pytest.approx(3 * math.log(2), rel=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_logdet_against_numerical_jacobian(self, seed):
        rng = np.random.default_rng(seed)
        flow = randomize(DomainFlow(4, 3, PrngStream(seed)), seed)
        u = np.array([seed % 3])
        x = rng.normal(size=(1, 4))
        jac = numerical_jacobian(lambda z: flow(z, u)[0], x)
        _, numeric = np.linalg.slogdet(jac)
        value = flow(Tensor(x), u)[1].item()
        assert value == pytest.approx(numeric, rel=1e-4, abs=1e-8)

    def test_inverse(self):
        flow = randomize(DomainFlow(3, 2), 0)
        z = Tensor(np.random.default_rng(0).normal(size=(5, 3)))
        u = np.array([0, 1, 0, 1, 1])
        out, _ = flow(z, u)
        assert np.allclose(flow.inverse(out, u).numpy(), z.numpy(), atol=1e-12)

    def test_unknown_environment(self):
        with pytest.raises(UnknownEnvironmentError):
            DomainFlow(3, 2)(Tensor(np.zeros((1, 3))), 5)


class TestPrototypes:
    def test_logit_at_prototype(self):
        protos = Prototypes(3, 3, temperature=1.0)
        logits = prototype_logits(protos, Tensor([[0.0, 3.0, 0.0]])).numpy()
        assert logits.tolist() == [[0.0, 1.0, 0.0]]

    def test_single_prototype(self):
        protos = Prototypes(1, 2, PrngStream(0))
        probs = prototype_logits(protos, Tensor([[0.3, -1.0]])).softmax(axis=1)
        assert probs.numpy().tolist() == [[1.0]]

    def test_zero_norm(self):
        with pytest.raises(DomainError):
            prototype_logits(Prototypes(2, 2), Tensor(np.zeros((1, 2))))

    def test_renormalize(self):
        protos = Prototypes(4, 3, PrngStream(0))
        protos.weight.data = 5 * protos.weight.data
        protos.renormalize()
        assert np.allclose(np.linalg.norm(protos.weight.numpy(), axis=1), 1.0)

    def test_invalid_temperature(self):
        with pytest.raises(ValueError):
            Prototypes(2, 2, temperature=0.0)
