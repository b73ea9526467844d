import numpy as np
import pytest

from crlab.scm import (
    DagError,
    DagSpec,
    Dataset,
    EnvironmentSpec,
    InterventionSpec,
    MechanismSpec,
    MixingSpec,
    NoiseSpec,
    ScmSpec,
    TemporalScmSpec,
    generate_paired,
    generate_static,
    generate_temporal,
    load_dataset,
    pair_datasets,
    sample_scm,
    sample_temporal_scm,
    save_dataset,
)
from crlab.scm.mechanisms import MAX_CONDITION, spectral_radius
from crlab.tensor import PrngStream, Stream
from crlab.utils import CorruptFileError, FormatError


def empty_scm(d, noise=NoiseSpec()):
    mechanisms = MechanismSpec.linear(np.zeros((d, d)), [noise] * d)
    return ScmSpec(DagSpec.empty(d), mechanisms)


def linear_temporal(d, inst=(), inst_weight=1.0, lag_weight=0.0, enabled=True):
    w = np.zeros((2 * d, d))
    w[:d][np.eye(d, dtype=bool)] = lag_weight
    for i, j in inst:
        w[d + i, j] = inst_weight
    return TemporalScmSpec(
        DagSpec.from_edges(d, inst),
        [np.eye(d, dtype=bool)],
        MechanismSpec.linear(w),
        enabled,
    )


class TestStatic:
    def test_independent_latents(self):
        ds = generate_static(
            empty_scm(3),
            MixingSpec.identity(3),
            None,
            10**4,
            PrngStream(0, Stream.DATA),
        )
        cov = np.cov(ds.z_true[:, 0].T)
        assert np.abs(cov - np.eye(3)).max() <= 0.08

    def test_identity_mixing(self):
        scm = sample_scm(4, 0.5, PrngStream(1), kind="mlp")
        ds = generate_static(scm, MixingSpec.identity(4), None, 100, PrngStream(2))
        assert np.array_equal(ds.x_obs, ds.z_true)

    def test_environment_noise_scale(self):
        noise = np.ones((2, 2))
        noise[1, 0] = 2.0
        envs = EnvironmentSpec(noise, np.ones((2, 2)))
        ds = generate_static(
            empty_scm(2), MixingSpec.identity(2), envs, 2 * 10**4, PrngStream(3)
        )
        z0 = ds.z_true[ds.u == 1, 0, 0]
        assert abs(z0.var() - 4.0) < 0.3
        assert abs(ds.z_true[ds.u == 0, 0, 0].var() - 1.0) < 0.1

    def test_structural_equations(self):
        dag = DagSpec.from_edges(2, [(0, 1)])
        weights = np.array([[0.0, 2.0], [0.0, 0.0]])
        mech = MechanismSpec.linear(weights, [NoiseSpec(), NoiseSpec(scale=0.0)])
        ds = generate_static(
            ScmSpec(dag, mech), MixingSpec.identity(2), None, 50, PrngStream(4)
        )
        z = ds.z_true[:, 0]
        assert np.array_equal(z[:, 1], 2.0 * z[:, 0])

    def test_laplace_noise(self):
        ds = generate_static(
            empty_scm(1, NoiseSpec("laplace", 1.0)),
            MixingSpec.identity(1),
            None,
            10**5,
            PrngStream(5),
        )
        assert abs(ds.z_true.var() - 2.0) < 0.1

    def test_dimension_mismatch(self):
        with pytest.raises(DagError, match="Mixing"):
            mixing = MixingSpec.identity(2)
            generate_static(empty_scm(3), mixing, None, 10, PrngStream(0))

    def test_deterministic(self):
        scm = sample_scm(3, 0.5, PrngStream(7))
        mixing = MixingSpec.sample(3, PrngStream(8), n=5)
        a = generate_static(scm, mixing, None, 20, PrngStream(9))
        b = generate_static(scm, mixing, None, 20, PrngStream(9))
        assert np.array_equal(a.x_obs, b.x_obs)
        assert a.meta["spec_hash"] == b.meta["spec_hash"]


class TestMixing:
    def test_conditioning(self):
        for init in ("orthogonal", "gaussian"):
            mixing = MixingSpec.sample(5, PrngStream(11), n=8, n_layers=3, init=init)
            for w in mixing.layers:
                assert np.linalg.cond(w) <= MAX_CONDITION
            assert np.linalg.matrix_rank(mixing.lift) == 5

    def test_injective_on_random_pairs(self):
        mixing = MixingSpec.sample(4, PrngStream(12), n=6)
        rng = np.random.default_rng(0)
        z, z2 = rng.normal(size=(1000, 4)), rng.normal(size=(1000, 4))
        assert np.all(np.linalg.norm(mixing(z) - mixing(z2), axis=1) > 0)

    def test_rank_deficient_lift(self):
        with pytest.raises(DagError, match="rank"):
            MixingSpec([np.eye(2)], lift=np.ones((3, 2)))


class TestTemporal:
    def test_white_noise(self):
        ds = generate_temporal(linear_temporal(3), 100, 1000, PrngStream(0))
        z = ds.z_true
        for i in range(3):
            a, b = z[:, 1:-1, i].ravel(), z[:, 2:, i].ravel()
            assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_zero_noise_repeatable(self):
        spec = linear_temporal(2, lag_weight=0.5)
        spec.mechanisms.noise = [NoiseSpec(scale=0.0)] * 2
        a = generate_temporal(spec, 3, 10, PrngStream(1))
        b = generate_temporal(spec, 3, 10, PrngStream(1))
        assert np.array_equal(a.z_true, b.z_true)
        assert np.allclose(a.z_true[:, 1:], 0.5 * a.z_true[:, :-1])

    def test_instantaneous_edge(self):
        spec = linear_temporal(2, inst=[(0, 1)])
        ds = generate_temporal(spec, 100, 1001, PrngStream(2))
        z = ds.z_true[:, 1:].reshape(-1, 2)
        assert np.corrcoef(z.T)[0, 1] > 0.7
        assert ds.meta["instantaneous"] is True

    def test_disabled_instantaneous(self):
        spec = linear_temporal(2, inst=[(0, 1)], enabled=False)
        with pytest.raises(DagError, match="Instantaneous"):
            generate_temporal(spec, 2, 5, PrngStream(0))

    def test_too_short(self):
        with pytest.raises(DagError):
            generate_temporal(linear_temporal(2), 2, 1, PrngStream(0))

    def test_no_instantaneous_partial_correlation(self):
        spec = sample_temporal_scm(3, 1, PrngStream(4), instantaneous=False)
        ds = generate_temporal(spec, 50, 2001, PrngStream(5))
        past = ds.z_true[:, :-1].reshape(-1, 3)
        now = ds.z_true[:, 1:].reshape(-1, 3)
        design = np.hstack([past, np.ones((len(past), 1))])
        coef, *_ = np.linalg.lstsq(design, now, rcond=None)
        resid = now - design @ coef
        corr = np.corrcoef(resid.T)
        assert np.abs(corr[np.triu_indices(3, 1)]).max() <= 0.05

    def test_sampled_dynamics_are_stable(self):
        for seed in range(5):
            spec = sample_temporal_scm(6, 2, PrngStream(seed), p_instantaneous=0.5)
            assert spectral_radius(spec) <= 0.9
            assert not spec.base.edges.diagonal().any()

    def test_mixing_and_environments(self):
        spec = sample_temporal_scm(3, 1, PrngStream(6), kind="mlp")
        mixing = MixingSpec.sample(3, PrngStream(7), n=5)
        envs = EnvironmentSpec(np.array([[1.0] * 3, [2.0] * 3]), np.ones((2, 3)))
        ds = generate_temporal(spec, 4, 20, PrngStream(8), mixing, envs)
        assert ds.x_obs.shape == (4, 20, 5)
        assert ds.u.tolist() == [0, 1, 0, 1]


class TestPaired:
    @pytest.fixture
    def scm(self):
        return ScmSpec(
            DagSpec.from_edges(4, [(0, 1), (1, 2), (0, 3)]),
            MechanismSpec.linear(
                np.array(
                    [[0, 1.0, 0, -1.0], [0, 0, 0.8, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
                )
            ),
        )

    def test_null(self, scm):
        v1, v2, A = generate_paired(
            scm, MixingSpec.identity(4), InterventionSpec.none(), 100, PrngStream(0)
        )
        assert np.array_equal(v1.z_true, v2.z_true)
        assert A == [0, 1, 2, 3]

    def test_do_value(self, scm):
        intervention = InterventionSpec((1,), "do_value", 3.0)
        v1, v2, A = generate_paired(
            scm, MixingSpec.identity(4), intervention, 100, PrngStream(1)
        )
        assert np.all(v2.z_true[:, 0, 1] == 3.0)
        assert A == [0, 3]
        assert np.array_equal(v1.z_true[..., A], v2.z_true[..., A])
        assert not np.array_equal(v1.z_true[..., 2], v2.z_true[..., 2])

    def test_noise_shift(self, scm):
        intervention = InterventionSpec((1,), "noise_shift", 1.0)
        v1, v2, _ = generate_paired(
            scm, MixingSpec.identity(4), intervention, 10, PrngStream(1)
        )
        assert np.allclose(v2.z_true[:, 0, 1] - v1.z_true[:, 0, 1], 1.0)
        assert np.allclose(v2.z_true[:, 0, 2] - v1.z_true[:, 0, 2], 0.8)

    def test_random_models_share_invariant_coordinates(self):
        for seed in range(10):
            scm = sample_scm(5, 0.5, PrngStream(seed), kind="mixed")
            mixing = MixingSpec.sample(5, PrngStream(seed + 100))
            intervention = InterventionSpec((seed % 5,), value=2.0)
            v1, v2, A = generate_paired(scm, mixing, intervention, 50, PrngStream(seed))
            assert np.array_equal(v1.z_true[..., A], v2.z_true[..., A])
            paired = pair_datasets(v1, v2, A)
            assert paired.paired and paired.invariant == A

    def test_empty_targets_need_null(self):
        with pytest.raises(DagError):
            InterventionSpec(())

    def test_out_of_range(self, scm):
        with pytest.raises(DagError):
            intervention = InterventionSpec((7,))
            generate_paired(scm, MixingSpec.identity(4), intervention, 5, PrngStream(0))


class TestPersistence:
    @pytest.fixture
    def dataset(self):
        spec = sample_temporal_scm(3, 1, PrngStream(1))
        mixing = MixingSpec.sample(3, PrngStream(3), n=4)
        return generate_temporal(spec, 3, 6, PrngStream(2), mixing)

    def test_round_trip(self, tmp_path, dataset):
        path = tmp_path / "data.crl"
        save_dataset(path, dataset)
        loaded = load_dataset(path)
        for name in ("z_true", "x_obs", "u"):
            assert np.array_equal(getattr(loaded, name), getattr(dataset, name))
        assert loaded.meta["spec_hash"] == dataset.meta["spec_hash"]
        assert loaded.meta["instantaneous"] is True

    def test_registry_reader(self, tmp_path, dataset):
        path = str(tmp_path / "data.crl")
        dataset.write(path)
        assert isinstance(Dataset.read(path), Dataset)

    def test_paired_round_trip(self, tmp_path):
        scm = sample_scm(3, 0.5, PrngStream(4))
        v1, v2, A = generate_paired(
            scm, MixingSpec.identity(3), InterventionSpec((0,)), 8, PrngStream(5)
        )
        path = tmp_path / "pair.crl"
        save_dataset(path, pair_datasets(v1, v2, A))
        loaded = load_dataset(path)
        assert np.array_equal(loaded.z_pair, v2.z_true)
        assert loaded.invariant == A

    def test_truncated(self, tmp_path, dataset):
        path = tmp_path / "data.crl"
        save_dataset(path, dataset)
        path.write_bytes(path.read_bytes()[:100])
        with pytest.raises(CorruptFileError):
            load_dataset(path)

    def test_foreign_magic(self, tmp_path):
        path = tmp_path / "data.crl"
        path.write_bytes(b"\x89PNG\r\n\x1a\n" + bytes(64))
        with pytest.raises(FormatError):
            load_dataset(path)

    def test_spec_hash_checked(self, tmp_path, dataset):
        dataset.meta["spec_hash"] = "0" * 64
        path = tmp_path / "data.crl"
        save_dataset(path, dataset)
        with pytest.raises(CorruptFileError, match="spec hash"):
            load_dataset(path)
