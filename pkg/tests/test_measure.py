import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cms import (
    ChainConfig,
    CodingConfig,
    Cylinder,
    InputError,
    State,
    conditional_test,
    cylinder_measure,
    estimate_invariant_measure,
    path_probability,
    simulate,
)
from cms.mc import combined_se


class TestPathProbability:
    def test_empty_word(self, planar):
        assert path_probability(planar, State(1, (0.0, 1.0)), []) == 1.0

    def test_single_edge_is_pointwise_probability(self, planar):
        x = State(1, (0.0, 1.0))
        assert path_probability(planar, x, [1]) == pytest.approx(
            oracles.PLANAR_P1_AT_01, abs=1e-15)

    def test_chain_two_step_product(self, chain2):
        assert path_probability(chain2, State(1), [1, 2]) == pytest.approx(0.09, abs=1e-15)

    def test_wrong_part_gives_zero(self, chain2):
        assert path_probability(chain2, State(2), [1]) == 0.0

    def test_non_path_gives_zero(self, planar):
        assert path_probability(planar, State(1, (0.0, 1.0)), [1, 1]) == 0.0

    def test_matches_scalar_recursion(self, planar):
        x = State(1, (0.3, 2.0))
        for word in ([1, 3], [2, 2, 1], [1, 4, 2], [2, 1, 3, 2]):
            assert path_probability(planar, x, word) == pytest.approx(
                oracles.scalar_path_probability(planar, x, word), abs=1e-15)

    @given(st.floats(-10, 10), st.floats(0.5, 10))
    @settings(max_examples=50, deadline=None)
    def test_one_step_extensions_telescope(self, x, y):
        # additivity: P(w) = sum over extensions e of P(w + e)
        import cms

        planar = cms.PlanarAffineTrig()
        state = State(1, (x, y))
        for word in ([], [1], [2, 1]):
            if word and planar.graph.edge(word[0]).initial != 1:
                continue
            base = path_probability(planar, state, word)
            last_vertex = (1 if not word else planar.graph.terminal(word[-1]))
            ext = sum(path_probability(planar, state, word + [e.id])
                      for e in planar.graph.out_edges(last_vertex))
            assert abs(base - ext) <= 1e-12


class TestCylinderMeasure:
    def test_chain_single_edge(self, chain2):
        mu = estimate_invariant_measure(chain2, ChainConfig(n_samples=100_000, seed=41))
        est = cylinder_measure(chain2, mu, [1])
        assert abs(est.value - oracles.CHAIN_PI[0] * 0.9) <= 3 * est.std_error

    def test_length_one_words_partition_unity(self, planar):
        mu = estimate_invariant_measure(planar, ChainConfig(n_samples=5_000, seed=42))
        total = sum(cylinder_measure(planar, mu, [e]).value
                    for e in planar.graph.edge_ids)
        assert abs(total - 1.0) <= 1e-12

    def test_bernoulli_words_are_dyadic(self, bern):
        mu = estimate_invariant_measure(bern, ChainConfig(n_samples=2_000, seed=43, burn_in=50))
        for word in ([1], [1, 2], [2, 2, 1]):
            est = cylinder_measure(bern, mu, word)
            assert est.value == pytest.approx(0.5 ** len(word), abs=1e-15)
            assert est.std_error == 0.0

    def test_word_must_be_path(self, planar):
        mu = estimate_invariant_measure(planar, ChainConfig(n_samples=100, seed=2))
        with pytest.raises(InputError):
            cylinder_measure(planar, mu, [1, 1])

    def test_cylinder_type_checks_path(self, planar):
        Cylinder(-3, (1, 3)).validate(planar)
        with pytest.raises(InputError):
            Cylinder(0, (3, 3)).validate(planar)

    def test_stream_frequency_consistent(self, chain2):
        # estimator vs empirical word frequency in one long realization
        mu = estimate_invariant_measure(chain2, ChainConfig(n_samples=100_000, seed=44))
        traj = simulate(chain2, None, 200_000, seed=45)
        est = cylinder_measure(chain2, mu, [1, 2])
        sym = traj.symbols[10_000:]
        hits = np.mean((sym[:-1] == 1) & (sym[1:] == 2))
        n = sym.shape[0] - 1
        se_freq = np.sqrt(max(hits * (1 - hits), 1e-12) / n) * 3  # overlap-inflated
        assert abs(est.value - hits) <= 3 * est.std_error + se_freq


class TestConditionalTest:
    def test_chain_rows_recovered(self, chain2):
        traj = simulate(chain2, None, 60_000, seed=46)
        rep = conditional_test(chain2, traj, CodingConfig(max_window=1),
                               past_length=1, n_windows=50_000, start=5_000)
        assert rep.passed
        P = np.asarray(oracles.CHAIN_P)
        for row in rep.details:
            e = row["word"][0]
            edge = chain2.graph.edge(e)
            expected = P[edge.initial - 1, edge.terminal - 1] if edge.initial == row["vertex"] else 0.0
            assert row["predicted"] == pytest.approx(expected, abs=1e-15)
            slack = 3 * row["std_error"] if row["std_error"] else 1e-12
            assert abs(row["empirical"] - expected) <= slack

    def test_bernoulli_independence(self, bern):
        traj = simulate(bern, None, 40_000, seed=47)
        rep = conditional_test(bern, traj, CodingConfig(max_window=60),
                               past_length=60, n_windows=30_000, start=1_000,
                               bins_per_axis=8, min_bin_count=500)
        assert rep.passed
        for row in rep.details:
            assert row["predicted"] == 0.5
            assert abs(row["empirical"] - 0.5) <= 4 * row["std_error"]

    def test_two_symbol_words(self, chain2):
        traj = simulate(chain2, None, 80_000, seed=48)
        words = [(1, 1), (1, 2), (2, 3), (2, 4)]
        rep = conditional_test(chain2, traj, CodingConfig(max_window=1),
                               past_length=1, n_windows=60_000, start=5_000,
                               words=words)
        P = np.asarray(oracles.CHAIN_P)
        by_word = {tuple(r["word"]): r for r in rep.details if r["vertex"] == 1}
        assert by_word[(1, 1)]["predicted"] == pytest.approx(0.81, abs=1e-12)
        assert by_word[(1, 2)]["predicted"] == pytest.approx(0.09, abs=1e-12)
        assert rep.passed

    def test_insufficient_stream_rejected(self, chain2):
        traj = simulate(chain2, None, 100, seed=1)
        with pytest.raises(InputError):
            conditional_test(chain2, traj, past_length=10, n_windows=1_000)

    def test_overfine_bins_rejected(self, bern):
        traj = simulate(bern, None, 5_000, seed=2)
        with pytest.raises(InputError):
            conditional_test(bern, traj, CodingConfig(max_window=30),
                             past_length=30, n_windows=2_000, start=100,
                             min_bin_count=10_000)

    def test_invalid_word_rejected(self, planar):
        traj = simulate(planar, None, 2_000, seed=3)
        with pytest.raises(InputError):
            conditional_test(planar, traj, past_length=50, n_windows=100,
                             words=[(1, 1)])
