import math

import numpy as np
import pytest
from scipy import stats

from onebit.posterior import PriorSpec
from onebit.simulation import (
    CSV_HEADER,
    RiskCurve,
    SimConfig,
    aggregate,
    config_from_mapping,
    export_csv,
    load_config,
    log_checkpoints,
    read_config_text,
    read_csv,
    run_monte_carlo,
    run_trial,
    run_trials,
    trial_seed,
)


def small_config(**kw):
    base = dict(
        prior=PriorSpec.cosine_squared(0, 3),
        n_max=300,
        checkpoints=(1, 10, 100, 300),
        trials=12,
        grid_m=1024,
        master_seed=5,
    )
    base.update(kw)
    return SimConfig(**base)


class TestSeeds:
    def test_splitmix_reference(self):
        # reference outputs of SplitMix64 started from state 0
        assert trial_seed(0, 0) == 0xE220A8397B1DCDAF
        assert trial_seed(0, 1) == 0x6E789E6AA1B965F4
        assert trial_seed(0, 2) == 0x06C45D188009454F

    def test_distinct(self):
        seeds = {trial_seed(7, i) for i in range(10_000)}
        assert len(seeds) == 10_000


class TestConfig:
    def test_defaults(self):
        c = SimConfig()
        assert c.prior == PriorSpec.uniform(-3, 3)
        assert c.checkpoints == log_checkpoints(20000)
        assert c.start_point == 0.0
        assert c.bayes_horizon == 10_000

    def test_log_checkpoints(self):
        cps = log_checkpoints(1000)
        assert cps[0] == 1 and cps[-1] == 1000
        assert 100 in cps and len(cps) == len(set(cps))
        assert log_checkpoints(1) == (1,)
        assert log_checkpoints(1234)[-1] == 1234

    @pytest.mark.parametrize(
        "kw, key",
        [
            ({"sigma": 0.0}, "sigma"),
            ({"sigma": -1.0}, "sigma"),
            ({"trials": 0}, "trials"),
            ({"n_max": 0}, "n_max"),
            ({"beta": 1.2}, "beta"),
            ({"grid_m": 10}, "grid_m"),
            ({"schemes": ("sgd", "median")}, "schemes"),
            ({"checkpoints": (5, 3)}, "checkpoints"),
            ({"checkpoints": (1, 400)}, "checkpoints"),
            ({"checkpoints": ()}, "checkpoints"),
            ({"master_seed": -1}, "master_seed"),
            ({"averaging": "mid"}, "averaging"),
        ],
    )
    def test_invalid(self, kw, key):
        with pytest.raises(ValueError, match=f"^{key}:"):
            small_config(**kw)

    def test_text_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\nprior = cos2:0,3\nsigma = 0.5  ; inline comment\nn_max = 500\n"
            "trials = 3\nschemes = sgd, bayes\ncheckpoints = 10,100,500\nseed = 11\n"
        )
        c = load_config(path)
        assert c.prior == PriorSpec.cosine_squared(0, 3)
        assert c.sigma == 0.5 and c.n_max == 500 and c.trials == 3
        assert c.schemes == ("sgd", "bayes") and c.checkpoints == (10, 100, 500)
        assert c.master_seed == 11

    def test_overrides_win(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("sigma = 2\nn_max = 1000\ncheckpoints = 10,100,1000\n")
        c = load_config(path, {"sigma": "1.5", "n_max": "200"})
        assert c.sigma == 1.5
        assert c.n_max == 200 and c.checkpoints == (10, 100, 200)

    def test_log_spec(self):
        c = config_from_mapping({"n_max": "1000", "checkpoints": "log:5"})
        assert c.checkpoints == log_checkpoints(1000, 5)

    def test_errors_name_key(self, tmp_path):
        with pytest.raises(ValueError, match="^sigma:"):
            config_from_mapping({"sigma": "abc"})
        with pytest.raises(ValueError, match="^colour:"):
            config_from_mapping({"colour": "red"})
        with pytest.raises(OSError, match="missing.cfg"):
            load_config(tmp_path / "missing.cfg")

    def test_read_config_text(self):
        assert read_config_text("a = 1\nb=x # c\n") == {"a": "1", "b": "x"}


class TestTrials:
    def test_run_trial_deterministic(self):
        c = small_config()
        a, b = run_trial(c, 3), run_trial(c, 3)
        assert a.theta_true == b.theta_true
        for s in c.schemes:
            np.testing.assert_array_equal(a.sq_errors[s], b.sq_errors[s])
            assert np.all(a.sq_errors[s] >= 0)

    def test_trial_independent_of_batch(self):
        c = small_config()
        theta, errors = run_trials(c)
        for i in (0, 5, 11):
            r = run_trial(c, i)
            assert r.theta_true == theta[i]
            for s in c.schemes:
                np.testing.assert_array_equal(r.sq_errors[s], errors[s][i])

    def test_workers_do_not_change_results(self):
        c = small_config(trials=9)
        t1, e1 = run_trials(c, workers=1)
        t3, e3 = run_trials(c, workers=3)
        np.testing.assert_array_equal(t1, t3)
        for s in c.schemes:
            np.testing.assert_array_equal(e1[s], e3[s])

    def test_env_workers(self, monkeypatch):
        c = small_config(trials=4, schemes=("sgd",))
        monkeypatch.setenv("ONEBIT_WORKERS", "2")
        _, e2 = run_trials(c)
        monkeypatch.setenv("ONEBIT_WORKERS", "0")
        with pytest.raises(ValueError):
            run_trials(c)
        monkeypatch.delenv("ONEBIT_WORKERS")
        _, e1 = run_trials(c)
        np.testing.assert_array_equal(e1["sgd"], e2["sgd"])

    def test_documented_stream(self):
        # rebuild trial 4 from the documented pipeline: PCG64(SplitMix64 seed),
        # one uniform for theta, then inverse-cdf normals for the samples
        c = small_config(n_max=5, checkpoints=(1, 5), schemes=("sgd", "empirical_mean"), theta0=0.0)
        gen = np.random.Generator(np.random.PCG64(trial_seed(c.master_seed, 4)))
        theta = float(c.prior.sample(gen.random(1)[0]))
        x = theta + c.sigma * stats.norm.ppf(gen.random(5))
        r = run_trial(c, 4)
        assert r.theta_true == pytest.approx(theta, abs=1e-14)
        assert r.sq_errors["empirical_mean"][0] == pytest.approx((x[0] - theta) ** 2, rel=1e-12)
        assert r.sq_errors["empirical_mean"][1] == pytest.approx((x.mean() - theta) ** 2, rel=1e-10)
        # both schemes see the same X_1: the first iterate is sgn(X_1)
        assert r.sq_errors["sgd"][0] == pytest.approx((math.copysign(1.0, x[0]) - theta) ** 2, rel=1e-14)

    def test_first_sample_chi_square(self):
        c = SimConfig(
            prior=PriorSpec.uniform(-3, 3),
            sigma=1.7,
            n_max=1,
            checkpoints=(1,),
            trials=10_000,
            schemes=("empirical_mean",),
            master_seed=99,
        )
        _, errors = run_trials(c)
        scaled = errors["empirical_mean"][:, 0] / 1.7**2
        assert stats.kstest(scaled, stats.chi2(1).cdf).pvalue > 1e-3
        assert scaled.mean() == pytest.approx(1.0, abs=0.05)

    def test_bayes_horizon(self):
        c = small_config(bayes_max_n=50)
        r = run_trial(c, 0)
        assert np.all(np.isnan(r.sq_errors["bayes"][2:]))
        assert np.all(np.isfinite(r.sq_errors["bayes"][:2]))
        assert np.all(np.isfinite(r.sq_errors["sgd"]))

    def test_negative_index(self):
        with pytest.raises(ValueError):
            run_trial(small_config(), -1)

    def test_failure_reports_trial(self):
        c = small_config(prior=PriorSpec.uniform(0, 1), grid_m=64, sigma=1e-4, n_max=50, checkpoints=(50,))
        with pytest.raises(RuntimeError, match="trial 2"):
            run_trial(c, 2)


class TestAggregate:
    def test_single_trial(self):
        c = small_config(trials=1)
        curve = run_monte_carlo(c)
        r = run_trial(c, 0)
        for s in c.schemes:
            np.testing.assert_array_equal(curve.mse[s], r.sq_errors[s])
            np.testing.assert_array_equal(curve.stderr[s], 0.0)

    def test_stderr_definition(self):
        c = small_config(trials=7)
        _, errors = run_trials(c)
        curve = aggregate(c, errors)
        e = errors["sgd"]
        np.testing.assert_allclose(curve.stderr["sgd"], e.std(axis=0, ddof=1) / math.sqrt(7), rtol=1e-15)
        np.testing.assert_array_equal(curve.n_mse("sgd"), np.array(c.checkpoints) * curve.mse["sgd"])
        np.testing.assert_array_equal(curve.n_mse_over_sigma2("sgd"), curve.n_mse("sgd") / c.sigma**2)

    def test_ordering_and_stabilization(self):
        c = SimConfig(n_max=20000, trials=500, schemes=("sgd", "empirical_mean"), master_seed=17)
        curve = run_monte_carlo(c)
        for i, n in enumerate(curve.checkpoints):
            if n < 100:
                continue
            gap = curve.mse["empirical_mean"][i] - curve.mse["sgd"][i]
            se = math.hypot(curve.stderr["empirical_mean"][i], curve.stderr["sgd"][i])
            assert gap <= 2 * se
        a = curve.n_mse("sgd")[curve.checkpoints.index(10000)]
        b = curve.n_mse("sgd")[curve.checkpoints.index(20000)]
        assert abs(b - a) / a <= 0.10


    def test_empirical_mean_beats_bayes(self):
        c = SimConfig(
            prior=PriorSpec.cosine_squared(0, 3),
            n_max=1000,
            trials=100,
            grid_m=1024,
            schemes=("bayes", "empirical_mean"),
            master_seed=23,
        )
        curve = run_monte_carlo(c)
        for i, n in enumerate(curve.checkpoints):
            if n < 100:
                continue
            gap = curve.mse["empirical_mean"][i] - curve.mse["bayes"][i]
            assert gap <= 2 * math.hypot(curve.stderr["empirical_mean"][i], curve.stderr["bayes"][i])

class TestCsv:
    def test_round_trip(self, tmp_path):
        c = small_config(bayes_max_n=50)
        curve = run_monte_carlo(c)
        path = tmp_path / "risk.csv"
        export_csv(curve, path)
        back = read_csv(path)
        assert back.checkpoints == curve.checkpoints
        for s in curve.schemes:
            np.testing.assert_array_equal(back.mse[s], curve.mse[s])
            np.testing.assert_array_equal(back.stderr[s], curve.stderr[s])

    def test_layout(self, tmp_path):
        curve = RiskCurve((10, 100), {"sgd": np.array([0.1, 0.01])}, {"sgd": np.array([0.01, 0.001])}, 5)
        path = tmp_path / "r.csv"
        export_csv(curve, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 3
        assert lines[1].startswith("10,sgd,0.10000000000000001,")

    def test_sorted_by_scheme_then_n(self, tmp_path):
        curve = run_monte_carlo(small_config(trials=2))
        path = tmp_path / "r.csv"
        export_csv(curve, path)
        keys = [(r.split(",")[1], int(r.split(",")[0])) for r in path.read_text().splitlines()[1:]]
        assert keys == sorted(keys)

    def test_empty(self, tmp_path):
        path = tmp_path / "e.csv"
        export_csv(RiskCurve((10,), {}, {}, 1), path)
        assert path.read_text() == "n,scheme,mse,stderr,n_mse\n"

    def test_unwritable(self, tmp_path):
        curve = RiskCurve((10,), {}, {}, 1)
        with pytest.raises(OSError, match="nodir"):
            export_csv(curve, tmp_path / "nodir" / "x.csv")
