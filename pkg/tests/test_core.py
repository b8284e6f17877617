import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from planarmatch.core import (
    BipartiteInstance,
    Edge,
    PlanarMatching,
    count_length_bounded_edges,
    edge_length,
    read_instance,
    read_witness,
    validate_planar,
    write_instance,
    write_witness,
)
from planarmatch.errors import InstanceFormatError, InvalidCap, LengthExceeded, NotPlanar

FIG1 = [(2, 1), (3, 4), (5, 5), (6, 7), (7, 9)]


@pytest.mark.parametrize("edge, length", [((7, 9), 2), ((5, 5), 0), ((2, 1), 1)])
def test_edge_length(edge, length):
    assert edge_length(Edge(*edge)) == length


def test_figure_one_matching_is_two_constrained():
    m = validate_planar(FIG1, 9, L=2)
    assert m.size() == 5
    assert m.max_length() == 2
    with pytest.raises(LengthExceeded):
        validate_planar(FIG1, 9, L=1)


def test_empty_matching():
    m = validate_planar([], 5)
    assert m.size() == 0 and m.max_length() == 0


@pytest.mark.parametrize("edges", [[(1, 2), (2, 1)], [(1, 1), (1, 2)], [(1, 3), (2, 3)]])
def test_crossing_or_shared_vertex_rejected(edges):
    with pytest.raises(NotPlanar):
        validate_planar(edges, 3)


def test_edge_outside_graph_rejected():
    with pytest.raises(NotPlanar):
        validate_planar([(1, 4)], 3)


def brute_zeta(n, L):
    return sum(1 for i in range(1, n + 1) for j in range(1, n + 1) if abs(i - j) <= L)


@pytest.mark.parametrize("n, L, expected", [(9, 2, 39), (5, 0, 5), (4, 3, 16)])
def test_zeta_examples(n, L, expected):
    assert brute_zeta(n, L) == expected
    assert count_length_bounded_edges(n, L) == expected


def test_zeta_matches_enumeration_up_to_50():
    for n in range(1, 51):
        idx = np.arange(n)
        dist = np.abs(idx[:, None] - idx[None, :])
        for L in range(n):
            assert count_length_bounded_edges(n, L) == int((dist <= L).sum())
            if L >= 1:
                z = count_length_bounded_edges(n, L)
                assert n * L <= z <= 3 * n * L


def test_zeta_clamps_full_cap_and_rejects_out_of_range():
    assert count_length_bounded_edges(4, 4) == 16
    with pytest.raises(InvalidCap):
        count_length_bounded_edges(4, 5)
    with pytest.raises(InvalidCap):
        count_length_bounded_edges(4, -1)


def pairwise_planar(edges):
    return all(
        (a[0] < b[0] and a[1] < b[1]) or (a[0] > b[0] and a[1] > b[1])
        for a, b in itertools.combinations(edges, 2)
    )


edge_lists = st.lists(st.tuples(st.integers(1, 7), st.integers(1, 7)), max_size=7, unique=True)


@given(edge_lists)
def test_validate_planar_agrees_with_pairwise_check(edges):
    try:
        validate_planar(edges, 7)
        accepted = True
    except NotPlanar:
        accepted = False
    assert accepted == pairwise_planar(edges)


@given(edge_lists, st.data())
def test_sublists_of_planar_matchings_are_planar(edges, data):
    if not pairwise_planar(edges):
        return
    sub = data.draw(st.lists(st.sampled_from(edges), unique=True) if edges else st.just([]))
    assert validate_planar(sub, 7).size() == len(sub)


def test_instance_is_frozen_and_validated():
    w = np.ones((3, 3))
    inst = BipartiteInstance(3, weights=w)
    w[0, 0] = 5.0
    assert inst.weights[0, 0] == 1.0
    with pytest.raises(ValueError):
        inst.weights[0, 0] = 2.0
    with pytest.raises(ValueError):
        BipartiteInstance(3)
    with pytest.raises(ValueError):
        BipartiteInstance(2, weights=[[1, -1], [0, 0]])
    with pytest.raises(ValueError):
        BipartiteInstance(2, weights=[[1, np.inf], [0, 0]])


def test_present_edges_filters_by_length():
    inst = BipartiteInstance.from_edges(9, FIG1)
    assert inst.present_edges() == sorted(Edge(*e) for e in FIG1)
    assert inst.present_edges(L=0) == [Edge(5, 5)]


def test_instance_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    w = BipartiteInstance(4, weights=rng.random((4, 4)))
    write_instance(w, tmp_path / "w.csv")
    text = (tmp_path / "w.csv").read_text().splitlines()
    assert text[0] == "# planarmatch v1 n=4 kind=weights"
    back = read_instance(tmp_path / "w.csv")
    assert np.array_equal(back.weights, w.weights)

    s = BipartiteInstance.from_edges(9, FIG1)
    write_instance(s, tmp_path / "s.csv")
    assert np.array_equal(read_instance(tmp_path / "s.csv").states, s.states)


@pytest.mark.parametrize(
    "content",
    [
        "1,2\n3,4\n",
        "# planarmatch v1 n=2 kind=states\n0,1\n",
        "# planarmatch v1 n=2 kind=states\n0,2\n1,0\n",
        "# planarmatch v1 n=2 kind=weights\n0,-1\n1,0\n",
        "# planarmatch v1 n=2 kind=weights\n0,x\n1,0\n",
    ],
)
def test_malformed_instance_files(tmp_path, content):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    with pytest.raises(InstanceFormatError):
        read_instance(p)


def test_witness_round_trip(tmp_path):
    m = validate_planar(FIG1, 9)
    write_witness(m, tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text().splitlines()[:2] == ["k,i,j", "1,2,1"]
    assert read_witness(tmp_path / "w.csv", 9) == m
    assert isinstance(m, PlanarMatching)
