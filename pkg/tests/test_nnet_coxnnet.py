import numpy as np
import pytest
from scipy import stats

from survbench.core import SurvivalDataset, risk_set_sums
from survbench.nnet import TrainConfig, coxnnet_fit, coxnnet_loss_and_grad
from survbench.nnet.coxnnet import coxnnet_scores, coxnnet_survival
from survbench.nnet.mlp import MlpParams, init_mlp, pack, unpack
from survbench.simgen import ModelFamily, SimulationSpec, Weibull, generate


def random_instance(n, p, hidden, seed):
    rng = np.random.default_rng(seed)
    data = SurvivalDataset(rng.standard_normal((n, p)),
                           rng.uniform(1, 10, n), rng.integers(0, 2, n))
    params = init_mlp((p, hidden, 1), ("tanh", "identity"),
                      seed=seed + 1, output_bias=False)
    return data, params


def finite_diff_loss(params, data, lam, eps=1e-6):
    vec = pack(params)
    fd = np.zeros_like(vec)
    for j in range(vec.size):
        up, dn = vec.copy(), vec.copy()
        up[j] += eps
        dn[j] -= eps
        fd[j] = (coxnnet_loss_and_grad(unpack(params, up), data, lam)[0]
                 - coxnnet_loss_and_grad(unpack(params, dn), data, lam)[0]) / (2 * eps)
    return fd


class TestLossAndGrad:
    def test_zero_weights_loss_is_log_risk_sizes(self):
        rng = np.random.default_rng(0)
        n, p = 8, 3
        data = SurvivalDataset(rng.standard_normal((n, p)),
                               rng.uniform(1, 9, n), rng.integers(0, 2, n))
        params = MlpParams(weights=(np.zeros((p, 2)), np.zeros((2, 1))),
                           biases=(np.zeros(2), None),
                           activations=("tanh", "identity"))
        sizes = risk_set_sums(data.time, np.ones(n))
        want = float(np.sum(np.log(sizes[data.event == 1])))
        loss, _ = coxnnet_loss_and_grad(params, data, 0.0)
        assert loss == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_gradient_matches_finite_differences(self, seed):
        data, params = random_instance(n=10, p=3, hidden=2, seed=seed)
        if data.event.sum() == 0:
            data = SurvivalDataset(data.X, data.time,
                                   np.ones(data.n, dtype=int))
        lam = 0.05
        _, grad = coxnnet_loss_and_grad(params, data, lam)
        fd = finite_diff_loss(params, data, lam)
        err = np.abs(grad - fd) / np.maximum(1e-8, np.abs(fd))
        assert np.max(np.where(np.abs(fd) > 1e-10, err, 0.0)) < 1e-5

    def test_all_censored_warns_and_gives_penalty(self):
        data, params = random_instance(n=6, p=2, hidden=2, seed=3)
        data = SurvivalDataset(data.X, data.time, np.zeros(6, dtype=int))
        with pytest.warns(RuntimeWarning, match="censored"):
            loss, _ = coxnnet_loss_and_grad(params, data, 2.0)
        penalty = 2.0 * sum(float(np.sum(w * w)) for w in params.weights)
        penalty += 2.0 * sum(float(np.sum(b * b)) for b in params.biases
                             if b is not None)
        assert loss == pytest.approx(penalty, rel=1e-12)

    def test_negative_ridge_rejected(self):
        data, params = random_instance(n=5, p=2, hidden=2, seed=4)
        with pytest.raises(ValueError):
            coxnnet_loss_and_grad(params, data, -1.0)


def small_sim(n=300, p=5, seed=0):
    spec = SimulationSpec(family=ModelFamily.COX, baseline=Weibull(2.0, 1.3e-7),
                          n=n, p=p, k=3, censor_target=0.3, seed=seed)
    return generate(spec)


class TestFit:
    def test_scores_track_truth(self):
        sim = small_sim(n=500)
        cfg = TrainConfig(ridge=5.0, seed=0, epochs=250)
        fit = coxnnet_fit(sim.data, cfg)
        truth = np.exp(sim.data.X @ sim.true_beta)
        rho = stats.spearmanr(fit.train_scores, truth).statistic
        assert rho > 0.7

    def test_deterministic_given_seed(self):
        sim = small_sim(n=120)
        cfg = TrainConfig(ridge=2.0, seed=7, epochs=60, min_epochs=10)
        a = coxnnet_fit(sim.data, cfg)
        b = coxnnet_fit(sim.data, cfg)
        np.testing.assert_array_equal(a.train_scores, b.train_scores)

    def test_huge_ridge_collapses_parameters(self):
        sim = small_sim(n=100)
        # val_fraction too small to form a monitor set, so the loop tracks
        # the training objective, which the penalty dominates
        cfg = TrainConfig(ridge=1e6, seed=1, epochs=600, min_epochs=600,
                          patience=1000, learning_rate=0.05, val_fraction=0.01)
        fit = coxnnet_fit(sim.data, cfg)
        assert float(np.max(np.abs(pack(fit.params)))) < 0.01
        np.testing.assert_allclose(fit.train_scores, 1.0, atol=0.01)

    def test_loss_decreases_on_smoothed_window(self):
        sim = small_sim(n=200)
        cfg = TrainConfig(ridge=2.0, seed=2, epochs=120, min_epochs=120,
                          patience=200)
        fit = coxnnet_fit(sim.data, cfg)
        trace = fit.loss_trace
        k = 10
        smooth = np.convolve(trace, np.ones(k) / k, mode="valid")
        assert smooth[-1] < smooth[0]

    def test_single_hidden_unit_recovers_monotone_ordering(self):
        # one relevant covariate, H=1: fitted scores must order like it
        rng = np.random.default_rng(11)
        n = 200
        x = rng.standard_normal((n, 1))
        u = np.clip(rng.random(n), 1e-9, 1 - 1e-9)
        times = -np.log1p(-u) / np.exp(1.2 * x[:, 0])
        data = SurvivalDataset(x, times + 1e-9, np.ones(n, dtype=int))
        cfg = TrainConfig(ridge=1.0, seed=5, epochs=300, min_epochs=150,
                          patience=100, hidden=1)
        fit = coxnnet_fit(data, cfg)
        rho = stats.spearmanr(fit.train_scores, x[:, 0]).statistic
        assert abs(rho) > 0.95 and rho > 0  # higher x, higher risk

    def test_cv_picks_from_grid(self):
        sim = small_sim(n=150)
        cfg = TrainConfig(seed=3, epochs=60, min_epochs=10, cv_folds=2,
                          ridge_grid=(1e-2, 1e-1))
        fit = coxnnet_fit(sim.data, cfg)
        n_events = int(sim.data.event.sum())
        assert fit.ridge in {f * n_events for f in (1e-2, 1e-1)}


class TestSurvival:
    def test_curves_match_score_times_cumhaz(self):
        from survbench.baseline import default_grid, ramlau_hansen

        sim = small_sim(n=200)
        fit = coxnnet_fit(sim.data, TrainConfig(ridge=2.0, seed=4, epochs=80,
                                                min_epochs=20))
        base = ramlau_hansen(sim.data, fit.train_scores, 400.0,
                             default_grid(sim.data, 80))
        x = sim.data.X[5]
        curve = coxnnet_survival(fit, base, x)
        score = coxnnet_scores(fit, x)[0]
        np.testing.assert_allclose(curve.probs, np.exp(-score * base.cumulative),
                                   rtol=1e-12)
        assert curve.probs[0] <= 1.0
        assert np.all(np.diff(curve.probs) <= 1e-15)
