import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cms import DirectedMultigraph, InputError, structure_flags, validate_path


def example2_graph():
    return DirectedMultigraph(2, [(1, 1, 2), (2, 1, 1), (3, 2, 1), (4, 2, 1)])


class TestValidatePath:
    def test_consecutive_edges_connect(self):
        g = example2_graph()
        assert validate_path(g, [1, 3])       # t(1)=2 = i(3)
        assert not validate_path(g, [1, 1])   # t(1)=2 != 1 = i(1)

    def test_empty_word(self):
        assert validate_path(example2_graph(), [])

    def test_unknown_edge_id(self):
        with pytest.raises(InputError):
            validate_path(example2_graph(), [1, 99])

    def test_longer_paths(self):
        g = example2_graph()
        assert validate_path(g, [2, 2, 1, 3, 2, 1, 4])
        assert not validate_path(g, [3, 3])


class TestStructureFlags:
    def test_single_self_loop(self):
        g = DirectedMultigraph(1, [(1, 1, 1)])
        f = structure_flags(g)
        assert (f.irreducible, f.aperiodic, f.i_surjective) == (True, True, True)

    def test_example2(self):
        f = structure_flags(example2_graph())
        assert (f.irreducible, f.aperiodic, f.i_surjective) == (True, True, True)

    def test_two_cycle_is_periodic(self):
        g = DirectedMultigraph(2, [(1, 1, 2), (2, 2, 1)])
        f = structure_flags(g)
        assert (f.irreducible, f.aperiodic, f.i_surjective) == (True, False, True)

    def test_not_strongly_connected(self):
        g = DirectedMultigraph(2, [(1, 1, 2), (2, 2, 2)])
        f = structure_flags(g)
        assert not f.irreducible
        assert not f.aperiodic  # reported false when reducible
        assert f.i_surjective

    def test_missing_out_edge(self):
        g = DirectedMultigraph(2, [(1, 1, 2)])
        assert not structure_flags(g).i_surjective


class TestConstruction:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(InputError):
            DirectedMultigraph(2, [(1, 1, 2), (1, 2, 1)])

    def test_vertex_out_of_range(self):
        with pytest.raises(InputError):
            DirectedMultigraph(2, [(1, 1, 3)])

    def test_edges_sorted_by_id(self):
        g = DirectedMultigraph(2, [(5, 1, 2), (2, 2, 1), (9, 1, 1)])
        assert g.edge_ids == (2, 5, 9)


# -- properties --------------------------------------------------------------

@st.composite
def graph_and_walk(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(1, 8))
    edges = [(k + 1, draw(st.integers(1, n)), draw(st.integers(1, n)))
             for k in range(m)]
    g = DirectedMultigraph(n, edges)
    # random walk along edge connectivity yields a valid word
    word = []
    e = g.edges[draw(st.integers(0, m - 1))]
    word.append(e.id)
    for _ in range(draw(st.integers(0, 6))):
        nxt = [c for c in g.edges if c.initial == e.terminal]
        if not nxt:
            break
        e = nxt[draw(st.integers(0, 10)) % len(nxt)]
        word.append(e.id)
    return g, word


@given(graph_and_walk())
@settings(max_examples=100, deadline=None)
def test_valid_words_are_prefix_closed(gw):
    g, word = gw
    assert validate_path(g, word)
    for k in range(len(word) + 1):
        assert validate_path(g, word[:k])


@given(graph_and_walk(), st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_flags_invariant_under_id_relabeling(gw, rnd):
    g, _ = gw
    ids = [e.id for e in g.edges]
    shuffled = ids[:]
    rnd.shuffle(shuffled)
    relabeled = DirectedMultigraph(
        g.vertex_count,
        [(new, e.initial, e.terminal) for new, e in zip(shuffled, g.edges)],
    )
    assert structure_flags(relabeled) == structure_flags(g)
