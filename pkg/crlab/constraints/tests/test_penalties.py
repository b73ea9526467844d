import numpy as np
import pytest

from crlab.constraints import (
    Codebook,
    ConstraintError,
    ConstraintSpec,
    EdgeWeights,
    QuadraticEnergy,
    aux_latent_and_delta,
    bernoulli_kl,
    decoder_jacobian_l1,
    energy_penalty,
    gated_transition_inputs,
    invariance_penalty,
    l1_sparsity,
    mechanism_sparsity,
    sparsity_penalties,
    vector_quantize,
)
from crlab.nets import Decoder, Linear
from crlab.tensor import (
    PrngStream,
    Tape,
    Tensor,
    backward,
    finite_diff_check,
    grad,
    numerical_jacobian,
)


class TestSpec:
    def test_unknown_kind(self):
        with pytest.raises(ConstraintError):
            ConstraintSpec("adversarial")

    @pytest.mark.parametrize("field", ["weight", "beta", "beta_commit"])
    def test_negative_weights(self, field):
        with pytest.raises(ConstraintError):
            ConstraintSpec("vae_kl", **{field: -1.0})

    def test_capacity_stop(self):
        with pytest.raises(ConstraintError):
            ConstraintSpec("capacity_kl", t_stop=0)


class TestSparsity:
    def test_l1_zero(self):
        assert l1_sparsity(Tensor(np.zeros((3, 2)))).item() == 0.0

    def test_l1_value(self):
        z = Tensor([[1.0, -2.0], [0.0, 3.0]])
        assert sparsity_penalties(z, ConstraintSpec("l1_sparsity")).item() == 3.0

    def test_kl_at_target(self):
        value = bernoulli_kl(0.3, Tensor([0.3, 0.3])).item()
        assert value == pytest.approx(0, abs=1e-15)

    def test_kl_value(self):
        value = bernoulli_kl(0.1, Tensor([0.5])).item()
        assert value == pytest.approx(0.368064, abs=1e-5)

    def test_kl_clamped(self):
        value = bernoulli_kl(0.1, Tensor([0.0, 1.0])).item()
        assert np.isfinite(value) and value > 0

    def test_target_sparsity_of_latents(self):
        spec = ConstraintSpec("target_sparsity", rho=0.5)
        value = sparsity_penalties(Tensor(np.zeros((4, 3))), spec).item()
        assert value == pytest.approx(0, abs=1e-15)

    def test_not_sparsity(self):
        with pytest.raises(ConstraintError):
            sparsity_penalties(Tensor([[1.0]]), ConstraintSpec("vae_kl"))

    def test_gradients(self):
        spec = ConstraintSpec("target_sparsity", rho=0.2)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            z = Tensor(rng.uniform(0.1, 2.0, (4, 3)) * rng.choice([-1, 1], (4, 3)))
            assert finite_diff_check(l1_sparsity, z) < 1e-4
            assert finite_diff_check(lambda t: sparsity_penalties(t, spec), z) < 1e-4


class TestEnergy:
    def test_origin(self):
        assert energy_penalty(Tensor(np.zeros((2, 2)))).item() == 0.0

    def test_ones(self):
        assert energy_penalty(Tensor([[1.0, 1.0]])).item() == 1.0

    def test_gradient_is_z(self):
        z = Tensor([[0.5, -1.5]], requires_grad=True)
        with Tape():
            g = backward(energy_penalty(z)).wrt(z)
        assert g.numpy().tolist() == z.numpy().tolist()
        assert finite_diff_check(energy_penalty, z) < 1e-4

    def test_learned_starts_at_default(self):
        z = Tensor(np.random.default_rng(0).normal(size=(5, 3)))
        spec = ConstraintSpec("energy", learned=True)
        learned = energy_penalty(z, spec, QuadraticEnergy(3))
        expected = energy_penalty(z).item() + 3e-4
        assert learned.item() == pytest.approx(expected, rel=1e-12)

    def test_learned_factor_lower_triangular(self):
        energy = QuadraticEnergy(2)
        energy.factor.data = np.array([[1.0, 5.0], [0.0, 1.0]])
        assert energy(Tensor([[1.0, 0.0]])).item() == 0.5


class TestVectorQuantize:
    def test_on_codeword(self):
        codebook = Tensor([[0.0, 0.0], [1.0, 2.0]])
        z_q, loss, index = vector_quantize(Tensor([[1.0, 2.0]]), codebook)
        assert loss.item() == 0.0
        assert index.tolist() == [1]
        assert z_q.numpy().tolist() == [[1.0, 2.0]]

    def test_nearest(self):
        _, _, index = vector_quantize(Tensor([[0.9]]), Tensor([[0.0], [1.0]]))
        assert index.tolist() == [1]

    def test_straight_through(self):
        z_e = Tensor([[0.9, -0.2], [0.1, 0.4]], requires_grad=True)
        codebook = Tensor([[1.0, 0.0], [0.0, 0.5]], requires_grad=True)
        with Tape():
            z_q, loss, _ = vector_quantize(z_e, codebook)
            (g,) = grad(z_q.square().sum(), [z_e])
            (g_code,) = grad(loss, [codebook])
        assert np.allclose(g.numpy(), 2 * z_q.numpy(), rtol=0, atol=1e-15)
        assert g_code.numpy().any()

    def test_commitment_weight(self):
        _, loss, _ = vector_quantize(Tensor([[0.5]]), Tensor([[0.0]]), beta_commit=0.25)
        assert loss.item() == pytest.approx(0.25 * 1.25)

    def test_empty_codebook(self):
        with pytest.raises(ConstraintError):
            vector_quantize(Tensor([[0.5]]), Tensor(np.zeros((0, 1))))

    def test_module(self):
        book = Codebook(4, 2, PrngStream(0))
        z_q, _, index = book(Tensor(book.weight.numpy()[[2, 0]]))
        assert index.tolist() == [2, 0]


def linear_decoder(W):
    dec = Linear(W.shape[1], W.shape[0])
    dec.weight.data = W.copy()
    return dec


class TestDecoderJacobian:
    def test_linear_decoder(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            W = rng.normal(size=(4, 3))
            z = Tensor(rng.normal(size=(5, 3)))
            value = decoder_jacobian_l1(linear_decoder(W), z).item()
            assert value == pytest.approx(np.abs(W).sum(), rel=0, abs=1e-10)

    def test_zero_decoder(self):
        z = Tensor(np.ones((2, 3)))
        assert decoder_jacobian_l1(Linear(3, 4), z).item() == 0.0

    def test_against_finite_differences(self):
        rng = np.random.default_rng(0)
        dec = Decoder(3, 4, PrngStream(0), hidden=(5,), activation="tanh")
        z = rng.normal(size=(2, 3))
        expected = np.mean(
            [
                np.abs(numerical_jacobian(lambda t: dec(t.reshape(1, 3)), row)).sum()
                for row in z
            ]
        )
        value = decoder_jacobian_l1(dec, Tensor(z)).item()
        assert value == pytest.approx(expected, rel=1e-4)

    def test_cap(self):
        with pytest.raises(ConstraintError, match="jacobian_rows"):
            decoder_jacobian_l1(Linear(2, 5), Tensor(np.ones((1, 2))), cap=4)

    def test_row_sampling(self):
        W = np.sign(np.random.default_rng(1).normal(size=(6, 2)))
        value = decoder_jacobian_l1(
            linear_decoder(W),
            Tensor(np.ones((3, 2))),
            cap=4,
            rows=2,
            stream=PrngStream(0),
        )
        assert value.item() == pytest.approx(12.0, rel=1e-12)

    def test_differentiable_in_the_decoder(self):
        rng = np.random.default_rng(2)
        z = Tensor(rng.normal(size=(3, 2)))
        for seed in range(20):
            W = Tensor(np.random.default_rng(seed).uniform(0.2, 1.0, (3, 2)))
            check = finite_diff_check(
                lambda w: decoder_jacobian_l1(lambda t: (t @ w.T).tanh(), z), W
            )
            assert check < 1e-4


class TestInvariance:
    def test_identical_views(self):
        z = Tensor(np.random.default_rng(0).normal(size=(4, 3)))
        assert invariance_penalty(z, z, [0, 2]).item() == 0.0

    def test_empty_subset(self):
        a, b = Tensor(np.zeros((1, 2))), Tensor(np.ones((1, 2)))
        assert invariance_penalty(a, b, []).item() == 0.0

    def test_unit_difference(self):
        a, b = Tensor([[1.0, 0.0, 5.0]]), Tensor([[0.0, 0.0, -5.0]])
        assert invariance_penalty(a, b, [0, 1]).item() == 0.5

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            zeros = Tensor(np.zeros((1, 2)))
            invariance_penalty(zeros, zeros, [2])

    def test_moments_ignore_order(self):
        z = np.random.default_rng(1).normal(size=(6, 2))
        perm = z[::-1].copy()
        value = invariance_penalty(Tensor(z), Tensor(perm), [0, 1], "moments").item()
        assert value == pytest.approx(0, abs=1e-25)

    def test_gradients(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            a, b = Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=(4, 3)))
            for statistic in ("identity", "moments"):
                check = finite_diff_check(
                    lambda t: invariance_penalty(t, b, [0, 2], statistic), a
                )
                assert check < 1e-4


class TestMechanismSparsity:
    def test_zero(self):
        assert mechanism_sparsity(Tensor(np.zeros((3, 3)))).item() == 0.0

    def test_identity(self):
        assert mechanism_sparsity(Tensor(np.eye(3))).item() == 3.0

    def test_edge_weights_start_dense(self):
        edges = EdgeWeights(3, lag=2)
        assert edges().shape == (6, 3)
        assert mechanism_sparsity(edges()).item() == 18.0

    def test_gating(self):
        E = np.ones((2, 2))
        E[0, 1] = 0.0
        history = Tensor([[2.0, 3.0]])
        gated = gated_transition_inputs(Tensor(E), history, 2)
        assert [g.numpy().tolist() for g in gated] == [[[2.0, 3.0]], [[0.0, 3.0]]]


class TestAuxiliary:
    def test_equal(self):
        h = Tensor(np.random.default_rng(0).normal(size=(2, 3, 4)))
        latent, delta = aux_latent_and_delta(h, h)
        assert latent.item() == delta.item() == 0.0

    def test_constant_offset(self):
        h = np.random.default_rng(1).normal(size=(2, 3, 2))
        c = np.array([0.5, -2.0])
        latent, delta = aux_latent_and_delta(Tensor(h), Tensor(h + c))
        assert latent.item() == pytest.approx(4.25, rel=1e-12)
        assert delta.item() == pytest.approx(0, abs=1e-25)

    def test_random(self):
        rng = np.random.default_rng(2)
        h, h_hat = rng.normal(size=(3, 4, 2)), rng.normal(size=(3, 4, 2))
        latent, delta = aux_latent_and_delta(Tensor(h), Tensor(h_hat))
        assert latent.item() == pytest.approx(((h_hat - h) ** 2).sum(axis=2).mean())
        d = np.diff(h_hat, axis=1) - np.diff(h, axis=1)
        assert delta.item() == pytest.approx((d**2).sum(axis=2).mean())

    def test_single_step(self):
        with pytest.raises(ConstraintError):
            h = Tensor(np.zeros((1, 1, 2)))
            aux_latent_and_delta(h, h)
