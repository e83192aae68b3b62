import json

import numpy as np
import pytest

from uibo.acquisition import AcquisitionConfig, BetaSchedule
from uibo.config import ConfigError, ExperimentConfig, ObjectiveSpec
from uibo.harness import (
    instantaneous_regret,
    prepare_trial,
    rho_q,
    run_experiment,
    run_trial,
)
from uibo.kernels import SEKernelParams
from uibo.noise import NoiseConfig
from uibo.objectives import (
    BenchmarkObjective,
    RKHSObjective,
    expected_optimum,
    sample_rkhs_objective,
)

UNIT_SQUARE = [[0.0, 1.0], [0.0, 1.0]]
PARAMS = SEKernelParams(1.0, [0.1, 0.1])


def small_config(methods=None, trials=1, iterations=8, lam=0.3, seed=5, noise=None):
    spec = ObjectiveSpec(kind="rkhs_expansion", domain_bounds=UNIT_SQUARE,
                         kernel=PARAMS, m=30)
    if noise is None:
        noise = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
    if methods is None:
        methods = (
            AcquisitionConfig(method="ugp_ucb", beta=BetaSchedule.fixed(3.0),
                              candidates=60, refinements=1),
            AcquisitionConfig(method="igp_ucb", beta=BetaSchedule.fixed(3.0),
                              candidates=60, refinements=1),
            AcquisitionConfig(method="uei", beta=BetaSchedule.fixed(0.0),
                              candidates=60, refinements=1),
        )
    return ExperimentConfig(seed=seed, trials=trials, iterations=iterations,
                            objective=spec, noise=noise, methods=methods, lam=lam)


class TestRegretAccounting:
    def test_zero_regret_at_reference_location(self):
        f = sample_rkhs_objective(3, 30, UNIT_SQUARE, PARAMS)
        obj = BenchmarkObjective("rkhs_expansion", UNIT_SQUARE, f)
        cfg = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
        loc, value = expected_optimum(obj, cfg.exec_cov)
        assert instantaneous_regret(obj, cfg, loc, value) == pytest.approx(0.0, abs=1e-12)

    def test_noiseless_argmax_zero_regret(self):
        f = RKHSObjective([[0.5, 0.5]], [1.0], PARAMS)
        obj = BenchmarkObjective("rkhs_expansion", UNIT_SQUARE, f)
        cfg = NoiseConfig.isotropic(2, exec_std=0.0, obs_sigma=0.0, loc_std=0.0)
        _, value = expected_optimum(obj, cfg.exec_cov)
        assert instantaneous_regret(obj, cfg, [0.5, 0.5], value) == pytest.approx(
            0.0, abs=1e-6)

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(6)
        f = sample_rkhs_objective(9, 30, UNIT_SQUARE, PARAMS)
        obj = BenchmarkObjective("rkhs_expansion", UNIT_SQUARE, f)
        cfg = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
        _, ref = expected_optimum(obj, cfg.exec_cov)
        target = rng.uniform(0.0, 1.0, 2)
        got = instantaneous_regret(obj, cfg, target, ref)
        # from-scratch recomputation through the kernel expansion
        from uibo.kernels import GaussianInput, expected_rkhs_value

        hand = ref - expected_rkhs_value(f, GaussianInput(target, cfg.exec_cov))
        assert got == pytest.approx(hand, abs=1e-6)


class TestRhoQ:
    def test_zero_without_execution_noise(self):
        f = sample_rkhs_objective(4, 30, UNIT_SQUARE, PARAMS)
        obj = BenchmarkObjective("rkhs_expansion", UNIT_SQUARE, f)
        cfg = NoiseConfig.isotropic(2, exec_std=0.0, obs_sigma=0.1)
        assert rho_q(obj, cfg) == pytest.approx(0.0, abs=1e-9)

    def test_single_bump_closed_form(self):
        f = RKHSObjective([[0.5, 0.5]], [1.0], PARAMS)
        obj = BenchmarkObjective("rkhs_expansion", UNIT_SQUARE, f)
        cfg = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
        # smoothing a unit SE bump flattens its peak by the lifted-kernel factor
        expected = 1.0 - 1.0 / (1.0 + 0.1 ** 2 / 0.1 ** 2)
        assert rho_q(obj, cfg) == pytest.approx(expected, abs=1e-3)

    def test_monotone_in_execution_noise(self):
        f = sample_rkhs_objective(8, 30, UNIT_SQUARE, PARAMS)
        obj = BenchmarkObjective("rkhs_expansion", UNIT_SQUARE, f)
        values = []
        for std in (0.0, 0.05, 0.1, 0.2):
            cfg = NoiseConfig.isotropic(2, exec_std=std, obs_sigma=0.1)
            values.append(rho_q(obj, cfg))
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


class TestRunTrial:
    def test_zero_iterations_empty_trace(self):
        config = small_config(iterations=0)
        trace = run_trial(config, config.methods[0], 0)
        assert trace.iterations == 0
        assert trace.recommendation is None
        assert trace.recommendation_value is None

    def test_deterministic(self):
        config = small_config()
        a = run_trial(config, config.methods[0], 0)
        b = run_trial(config, config.methods[0], 0)
        assert np.array_equal(a.targets, b.targets)
        assert np.array_equal(a.observations, b.observations)
        assert np.array_equal(a.regrets, b.regrets)

    def test_mean_regret_identity(self):
        config = small_config(iterations=12)
        trace = run_trial(config, config.methods[0], 0)
        for t in range(trace.iterations):
            assert trace.mean_regrets[t] == pytest.approx(
                trace.regrets[:t + 1].mean(), abs=1e-12)

    def test_min_regret_below_mean(self):
        config = small_config(iterations=12)
        for method in config.methods:
            trace = run_trial(config, method, 0)
            for t in range(trace.iterations):
                assert trace.regrets[:t + 1].min() <= trace.mean_regrets[t] + 1e-12

    def test_regret_above_negative_tolerance(self):
        config = small_config(iterations=15, trials=1)
        setup = prepare_trial(config, 0)
        for method in config.methods:
            trace = run_trial(config, method, 0, setup)
            assert np.all(trace.regrets >= -setup.reference_tolerance)

    def test_noiseless_pipeline_ugp_equals_igp(self):
        noise = NoiseConfig.isotropic(2, exec_std=0.0, obs_sigma=0.0, loc_std=0.0)
        zero = np.zeros((2, 2))
        methods = (
            AcquisitionConfig(method="ugp_ucb", beta=BetaSchedule.fixed(3.0),
                              model_cov=zero, candidates=60, refinements=1),
            AcquisitionConfig(method="igp_ucb", beta=BetaSchedule.fixed(3.0),
                              model_cov=zero, candidates=60, refinements=1),
        )
        config = small_config(methods=methods, iterations=10, noise=noise)
        tu = run_trial(config, methods[0], 0)
        ti = run_trial(config, methods[1], 0)
        assert np.array_equal(tu.targets, ti.targets)
        assert np.array_equal(tu.observations, ti.observations)

    def test_theory_beta_resolution_uses_objective_norm(self):
        methods = (AcquisitionConfig(method="ugp_ucb",
                                     beta=BetaSchedule(mode="theory", delta=0.4),
                                     candidates=40, refinements=0),)
        config = small_config(methods=methods, iterations=3)
        setup = prepare_trial(config, 0)
        trace = run_trial(config, methods[0], 0, setup)
        assert trace.resolved_beta["mode"] == "theory"
        assert trace.resolved_beta["norm_b"] == pytest.approx(
            setup.objective.payload.norm_b)
        # first iteration evaluates the schedule at zero information gain
        sched_b0 = (trace.resolved_beta["norm_b"] + trace.resolved_beta["sigma_nu"]
                    * np.sqrt(2.0 * (1.0 + np.log(1.0 / 0.4))))
        assert trace.betas[0] == pytest.approx(sched_b0, abs=1e-12)

    def test_michalewicz_requires_explicit_lambda(self):
        spec = ObjectiveSpec(kind="michalewicz_4d", domain_bounds=[[0.0, np.pi]] * 4,
                             kernel=SEKernelParams(1.0, [0.5] * 4))
        noise = NoiseConfig.isotropic(4, exec_std=0.1, obs_sigma=0.1)
        method = AcquisitionConfig(method="igp_ucb", beta=BetaSchedule.fixed(3.0),
                                   candidates=30, refinements=0)
        config = ExperimentConfig(seed=1, trials=1, iterations=2, objective=spec,
                                  noise=noise, methods=(method,), lam=None,
                                  expected_optimum_budget=200,
                                  expected_optimum_mc_samples=20,
                                  regret_mc_samples=20)
        with pytest.raises(ConfigError):
            run_trial(config, method, 0)

    def test_michalewicz_theory_beta_rejected(self):
        spec = ObjectiveSpec(kind="michalewicz_4d", domain_bounds=[[0.0, np.pi]] * 4,
                             kernel=SEKernelParams(1.0, [0.5] * 4))
        noise = NoiseConfig.isotropic(4, exec_std=0.1, obs_sigma=0.1)
        method = AcquisitionConfig(method="igp_ucb",
                                   beta=BetaSchedule(mode="theory", delta=0.4),
                                   candidates=30, refinements=0)
        config = ExperimentConfig(seed=1, trials=1, iterations=2, objective=spec,
                                  noise=noise, methods=(method,), lam=1.0,
                                  expected_optimum_budget=200,
                                  expected_optimum_mc_samples=20,
                                  regret_mc_samples=20)
        with pytest.raises(ConfigError):
            run_trial(config, method, 0)

    def test_michalewicz_small_run_completes(self):
        spec = ObjectiveSpec(kind="michalewicz_4d", domain_bounds=[[0.0, np.pi]] * 4,
                             kernel=SEKernelParams(1.0, [0.5] * 4))
        noise = NoiseConfig.isotropic(4, exec_std=0.1, obs_sigma=0.1)
        method = AcquisitionConfig(method="ugp_ucb", beta=BetaSchedule.fixed(3.0),
                                   candidates=30, refinements=1)
        config = ExperimentConfig(seed=1, trials=1, iterations=4, objective=spec,
                                  noise=noise, methods=(method,), lam=1.0,
                                  expected_optimum_budget=500,
                                  expected_optimum_mc_samples=50,
                                  regret_mc_samples=50)
        trace = run_trial(config, method, 0)
        assert trace.iterations == 4
        assert np.all(np.isfinite(trace.regrets))

    def test_dataset_inputs_query_model_flag(self):
        methods = (AcquisitionConfig(method="ugp_ucb", beta=BetaSchedule.fixed(3.0),
                                     candidates=40, refinements=0,
                                     dataset_inputs="query_model"),)
        config = small_config(methods=methods, iterations=5)
        trace = run_trial(config, methods[0], 0)
        assert trace.iterations == 5


class TestRunExperiment:
    def test_single_trial_aggregate_equals_trace(self):
        config = small_config(trials=1, iterations=6)
        result = run_experiment(config)
        for label, runs in result.traces.items():
            agg = result.aggregates[label]
            assert np.allclose(agg["mean_regret_mean"], runs[0].mean_regrets)
            assert np.allclose(agg["mean_regret_std"], 0.0)

    def test_aggregate_matches_hand_average(self):
        config = small_config(trials=3, iterations=6)
        result = run_experiment(config)
        for label, runs in result.traces.items():
            stacked = np.stack([r.mean_regrets for r in runs])
            assert np.allclose(result.aggregates[label]["mean_regret_mean"],
                               stacked.mean(axis=0), atol=1e-12)

    def test_method_order_does_not_change_traces(self):
        config = small_config(trials=2, iterations=5)
        reversed_config = small_config(trials=2, iterations=5,
                                       methods=tuple(reversed(config.methods)))
        a = run_experiment(config)
        b = run_experiment(reversed_config)
        for label in a.traces:
            for ta, tb in zip(a.traces[label], b.traces[label]):
                assert np.array_equal(ta.targets, tb.targets)

    def test_standalone_trial_matches_experiment_trace(self):
        config = small_config(trials=2, iterations=5)
        result = run_experiment(config)
        for method in config.methods:
            for trial in range(2):
                solo = run_trial(config, method, trial)
                batch = result.traces[method.label][trial]
                assert np.array_equal(solo.targets, batch.targets)
                assert np.array_equal(solo.regrets, batch.regrets)

    def test_paired_objectives_across_methods(self):
        config = small_config(trials=2, iterations=3)
        setups = [prepare_trial(config, t) for t in range(2)]
        again = [prepare_trial(config, t) for t in range(2)]
        for s1, s2 in zip(setups, again):
            assert np.array_equal(s1.objective.payload.support_points,
                                  s2.objective.payload.support_points)
        assert not np.array_equal(setups[0].objective.payload.support_points,
                                  setups[1].objective.payload.support_points)


class TestOutputs:
    def test_csv_layout_and_determinism(self, tmp_path):
        config = small_config(trials=2, iterations=4)
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        run_experiment(config, out_dir=out1)
        run_experiment(config, out_dir=out2)
        for label in ("ugp_ucb", "igp_ucb", "uei"):
            p1 = out1 / f"trace_{label}.csv"
            p2 = out2 / f"trace_{label}.csv"
            assert p1.read_bytes() == p2.read_bytes()
            lines = p1.read_text().splitlines()
            assert lines[0] == "trial,t,method,x_target,x_true,y,beta,regret,mean_regret"
            assert len(lines) == 1 + 2 * 4
            first = lines[1].split(",")
            assert first[0] == "0" and first[1] == "1" and first[2] == label
            assert ";" in first[3] and ";" in first[4]
        assert (out1 / "aggregate.json").read_bytes() == (out2 / "aggregate.json").read_bytes()

    def test_aggregate_json_contents(self, tmp_path):
        config = small_config(trials=2, iterations=4)
        result = run_experiment(config, out_dir=tmp_path)
        doc = json.loads((tmp_path / "aggregate.json").read_text())
        assert doc["config"]["seed"] == config.seed
        assert doc["config"]["lambda"] == config.lam
        assert set(doc["methods"]) == {"ugp_ucb", "igp_ucb", "uei"}
        assert len(doc["trials"]) == 2
        for entry in doc["trials"]:
            assert entry["rho_q"] >= -entry["reference_tolerance"]
            assert "objective_seed" in entry and "reference_seed" in entry
        assert doc["failures"] == []

    def test_vector_fields_have_17_significant_digits(self, tmp_path):
        config = small_config(trials=1, iterations=2)
        result = run_experiment(config, out_dir=tmp_path)
        line = (tmp_path / "trace_ugp_ucb.csv").read_text().splitlines()[1]
        x_target = line.split(",")[3].split(";")
        trace = result.traces["ugp_ucb"][0]
        for text, value in zip(x_target, trace.targets[0]):
            assert float(text) == value
