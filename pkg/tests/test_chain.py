import math

import numpy as np
import pytest

import oracles
from cms import (
    ChainConfig,
    EmpiricalMeasure,
    InputError,
    State,
    estimate_invariant_measure,
    first_moment,
    operator_iterate,
    push_forward_once,
    simulate,
    step,
)
from cms.mc import combined_se


class FixedRng:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


class TestStep:
    def test_inverse_cdf_chain(self, chain2):
        e, s = step(chain2, State(1), FixedRng(0.95))
        assert (e, s) == (2, State(2))  # 0.95 beyond cum 0.9 -> edge 1->2
        e, s = step(chain2, State(1), FixedRng(0.5))
        assert (e, s) == (1, State(1))

    def test_inverse_cdf_bernoulli(self, bern):
        e, _ = step(bern, State(1, (0.25,)), FixedRng(0.3))
        assert e == 1

    def test_planar_median_draw(self, planar):
        e, s = step(planar, State(1, (0.0, 1.0)), FixedRng(0.5))
        assert e == 1  # p_1(0,1) ~ 0.552 > 0.5
        assert s == State(2, (-1.0, -1.25))

    def test_invalid_state(self, planar):
        with pytest.raises(InputError):
            step(planar, State(1, (0.0, 0.0)), FixedRng(0.1))


class TestSimulate:
    def test_single_step_matches_step(self, chain2):
        traj = simulate(chain2, None, 1, seed=123)
        e, s = step(chain2, chain2.default_state(), np.random.default_rng(123))
        assert int(traj.edges[0]) == e
        assert traj.state(1) == s

    def test_same_seed_bit_identical(self, planar):
        a = simulate(planar, None, 5_000, seed=99)
        b = simulate(planar, None, 5_000, seed=99)
        assert np.array_equal(a.edges, b.edges)
        assert np.array_equal(a.coords, b.coords)

    def test_path_condition_fuzz(self, planar, chain2, bern):
        for system in (planar, chain2, bern):
            for seed in range(10):
                assert simulate(system, None, 2_000, seed=seed).path_condition_holds()

    def test_states_reproducible_from_maps(self, planar):
        traj = simulate(planar, None, 300, seed=17)
        state = traj.initial
        for k in range(traj.n_steps):
            e, state_next = int(traj.edges[k]), traj.state(k + 1)
            state = planar.apply_map(e, state)
            assert state == state_next

    def test_visit_frequency_matches_stationary(self, chain2):
        traj = simulate(chain2, None, 1_000_000, seed=11)
        ind = (traj.vertices[1:] == 1).astype(float)
        from cms.mc import mean_with_se

        freq, se, _ = mean_with_se(ind)
        assert abs(freq - oracles.CHAIN_PI[0]) <= 3 * se

    def test_input_checks(self, planar):
        with pytest.raises(InputError):
            simulate(planar, None, 0, seed=1)
        with pytest.raises(InputError):
            simulate(planar, State(1, (0.0, 0.0)), 10, seed=1)

    def test_symbol_export(self, chain2, tmp_path):
        traj = simulate(chain2, None, 5, seed=0)
        text = traj.symbol_text()
        assert text.split() == [str(int(e)) for e in traj.edges]
        out = tmp_path / "symbols.txt"
        traj.save_symbols(out)
        assert out.read_text().split() == text.split()


class TestInvariantMeasure:
    def test_chain_masses_match_stationary(self, chain2):
        mu = estimate_invariant_measure(
            chain2, ChainConfig(n_samples=100_000, seed=21, burn_in=10_000))
        masses, ses = mu.part_masses(), mu.part_mass_se()
        for m, se, target in zip(masses, ses, oracles.CHAIN_PI):
            assert abs(m - target) <= 3 * se

    def test_bernoulli_mean_is_half(self, bern):
        mu = estimate_invariant_measure(
            bern, ChainConfig(n_samples=50_000, seed=22, burn_in=1_000))
        mean, se, _ = mu.mean_with_se(mu.coords[:, 0])
        assert abs(mean - 0.5) <= 3 * se

    def test_planar_charges_both_parts(self, planar):
        mu = estimate_invariant_measure(
            planar, ChainConfig(n_samples=50_000, seed=23))
        assert np.all(mu.part_masses() > 0)

    def test_determinism(self, chain2):
        cfg = ChainConfig(n_samples=5_000, seed=5, burn_in=100)
        a = estimate_invariant_measure(chain2, cfg)
        b = estimate_invariant_measure(chain2, cfg)
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.weights, b.weights)

    def test_thinning_and_burnin_layout(self, chain2):
        cfg = ChainConfig(n_samples=10, seed=5, burn_in=7, thinning=3)
        mu = estimate_invariant_measure(chain2, cfg)
        traj = simulate(chain2, None, 7 + 30, seed=5)
        expect = traj.vertices[7 + 3 * np.arange(1, 11)]
        assert np.array_equal(mu.vertices, expect)

    def test_config_validation(self):
        with pytest.raises(InputError):
            ChainConfig(n_samples=0, seed=1)
        with pytest.raises(InputError):
            ChainConfig(n_samples=1, seed=1, thinning=0)

    def test_csv_round_trippable_columns(self, bern, tmp_path):
        mu = estimate_invariant_measure(bern, ChainConfig(n_samples=50, seed=2, burn_in=10))
        path = tmp_path / "measure.csv"
        mu.save_csv(path)
        header = path.read_text().splitlines()[0].split(",")
        assert header == ["vertex", "coord_1", "weight"]
        assert (tmp_path / "measure.csv.provenance.json").exists()


class TestOperatorIterate:
    def test_constant_function_preserved(self, planar, chain2, bern):
        for system in (planar, chain2, bern):
            for n in (0, 1, 7):
                val = operator_iterate(system, lambda s: 1.0, system.default_state(), n)
                assert val == pytest.approx(1.0, abs=1e-12)

    def test_chain_one_step(self, chain2):
        ind1 = lambda s: 1.0 if s.vertex == 1 else 0.0
        assert operator_iterate(chain2, ind1, State(1), 1) == pytest.approx(0.9, abs=0)

    def test_chain_depth_independent_merge(self, chain2):
        ind1 = lambda s: 1.0 if s.vertex == 1 else 0.0
        for start in (1, 2):
            val = operator_iterate(chain2, ind1, State(start), 50)
            assert val == pytest.approx(5.0 / 6.0, abs=1e-6)
            oracle = oracles.power_iterate(oracles.CHAIN_P, [1.0, 0.0], start - 1, 50)
            assert val == pytest.approx(oracle, abs=1e-12)

    def test_planar_matches_tree_recursion(self, planar):
        f = lambda s: math.sin(s.coords[0]) + 0.1 * s.vertex
        x = planar.default_state()
        for n in (1, 2, 5):
            assert operator_iterate(planar, f, x, n) == pytest.approx(
                oracles.tree_operator_iterate(planar, f, x, n), abs=1e-12)

    def test_monte_carlo_collapse(self, bern):
        f = lambda s: s.coords[0]
        val = operator_iterate(bern, f, State(1, (0.0,)), 40, seed=9,
                               max_exact_states=8, mc_samples=20_000)
        assert val == pytest.approx(0.5, abs=0.02)
        exact_one = operator_iterate(bern, lambda s: 1.0, State(1, (0.0,)), 40,
                                     seed=9, max_exact_states=8, mc_samples=500)
        assert exact_one == 1.0

    def test_negative_depth_rejected(self, chain2):
        with pytest.raises(InputError):
            operator_iterate(chain2, lambda s: 1.0, State(1), -1)


class TestFirstMoment:
    def test_chain_anchors_are_the_states(self, chain2):
        mu = estimate_invariant_measure(chain2, ChainConfig(n_samples=1_000, seed=3, burn_in=10))
        assert first_moment(mu, chain2.default_anchors(), chain2) == 0.0

    def test_single_particle(self, planar):
        mu = EmpiricalMeasure(
            family=planar.family, metric=planar.metric, n_parts=2,
            vertices=np.array([1]), coords=np.array([[0.0, 1.0]]),
            weights=np.array([1.0]))
        anchors = {1: State(1, (0.0, 0.5)), 2: State(2, (0.0, -0.5))}
        assert first_moment(mu, anchors, planar) == pytest.approx(0.5, abs=0)

    def test_bernoulli_uniform_mean(self, bern):
        mu = estimate_invariant_measure(bern, ChainConfig(n_samples=50_000, seed=6, burn_in=500))
        c = first_moment(mu, {1: State(1, (0.0,))}, bern)
        _, se, _ = mu.mean_with_se(np.abs(mu.coords[:, 0]))
        assert abs(c - 0.5) <= 3 * se

    def test_misplaced_anchor_rejected(self, planar):
        mu = estimate_invariant_measure(planar, ChainConfig(n_samples=100, seed=1, burn_in=10))
        with pytest.raises(InputError):
            first_moment(mu, {1: State(1, (0.0, 0.5))}, planar)  # missing part 2


class TestPushForwardInvariance:
    @pytest.mark.parametrize("family,seed", [("planar", 31), ("chain2", 32), ("bern", 33)])
    def test_one_step_preserves_part_masses(self, family, seed, request):
        system = request.getfixturevalue(family)
        mu = estimate_invariant_measure(
            system, ChainConfig(n_samples=50_000, seed=seed, burn_in=10_000))
        pushed = push_forward_once(system, mu, seed=seed + 1000)
        gaps = np.abs(mu.part_masses() - pushed.part_masses())
        tol = 3 * np.array([combined_se(a, b)
                            for a, b in zip(mu.part_mass_se(), pushed.part_mass_se())])
        assert np.all(gaps <= tol)


def test_weights_must_normalize():
    with pytest.raises(InputError):
        EmpiricalMeasure(family="bernoulli_ifs", metric="l1", n_parts=1,
                         vertices=np.array([1, 1]), coords=np.zeros((2, 1)),
                         weights=np.array([0.5, 0.6]))
