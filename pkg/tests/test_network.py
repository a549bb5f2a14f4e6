import json

import numpy as np
import pytest

from strutnet import (StentNetwork, incidence, load_network, palmaz, refine, save_network,
                      single_strut, zigzag_cylinder)
from conftest import graph


def test_palmaz_counts():
    net = palmaz()
    assert (net.n_vertices, net.n_struts) == (144, 276)
    assert net.degrees.sum() == 2 * net.n_struts


def test_palmaz_geometry_on_cylinder():
    net = palmaz()
    r = np.hypot(net.positions[:, 1], net.positions[:, 2])
    np.testing.assert_allclose(r, 1.5e-3, rtol=1e-12)
    assert net.positions[:, 0].min() == 0.0
    assert net.positions[:, 0].max() == pytest.approx(1.68e-2)


@pytest.mark.parametrize("n_circ,n_long,ring,expected", [
    (3, 2, False, (6, 6)),
    (6, 4, True, (24, 42)),
    (12, 12, False, (144, 264)),
])
def test_cylinder_counts(n_circ, n_long, ring, expected):
    net = zigzag_cylinder(n_circ, n_long, 1.0, 1.0, end_ring=ring)
    assert (net.n_vertices, net.n_struts) == expected


def test_incidence_matrix_structure():
    net = palmaz()
    inc = incidence(net)
    a = inc.a.toarray()
    assert a.shape == (3 * 144, 3 * 276)
    # each strut column has one +I block and one -I block
    np.testing.assert_array_equal(a.sum(axis=0), np.zeros(a.shape[1]))
    np.testing.assert_array_equal(np.abs(a).sum(axis=0), 2 * np.ones(a.shape[1]))
    # connected graph: graph Laplacian kernel is the constants, per component of R^3
    assert np.linalg.matrix_rank(a) == 3 * (144 - 1)


def test_incidence_triangle_blocks():
    net = graph([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1), (1, 2), (2, 0)])
    inc = incidence(net)
    plus = inc.a_plus.toarray()
    minus = inc.a_minus.toarray()
    # strut 0 leaves vertex 0 and enters vertex 1
    np.testing.assert_array_equal(minus[0:3, 0:3], np.eye(3))
    np.testing.assert_array_equal(plus[3:6, 0:3], np.eye(3))
    assert not plus[0:3, 0:3].any()


def test_refine_counts_and_lengths():
    net = palmaz()
    fine = refine(net, 8)
    assert (fine.n_vertices, fine.n_struts) == (2076, 2208)
    assert fine.total_length == pytest.approx(net.total_length, rel=1e-13)
    np.testing.assert_allclose(fine.lengths, np.repeat(net.lengths, 8) / 8, rtol=1e-12)


def test_refine_single_split_is_identity():
    net = palmaz()
    assert refine(net, 1) is net


def test_refine_chain_positions():
    net = single_strut((0, 0, 0), (1, 0, 0))
    fine = refine(net, 4)
    np.testing.assert_allclose(np.sort(fine.positions[:, 0]), [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(fine.lengths, 0.25)
    np.testing.assert_allclose(fine.origin[:, 1], [0, 0.25, 0.5, 0.75])


def test_refine_rejects_zero():
    with pytest.raises(ValueError):
        refine(single_strut(), 0)


def test_json_round_trip(tmp_path):
    net = zigzag_cylinder(4, 3, 1.0, 2.0)
    path = tmp_path / "net.json"
    save_network(net, path)
    back = load_network(path)
    np.testing.assert_array_equal(back.positions, net.positions)
    np.testing.assert_array_equal(back.tails, net.tails)
    np.testing.assert_array_equal(back.heads, net.heads)
    assert back.sections == net.sections
    assert back.materials == net.materials
    json.loads(path.read_text())


@pytest.mark.parametrize("positions,edges,message", [
    ([[0, 0, 0], [0, 0, 0]], [(0, 1)], "zero length|duplicate"),
    ([[0, 0, 0], [1, 0, 0]], [(0, 0)], "tail == head"),
    ([[0, 0, 0], [1, 0, 0]], [(0, 2)], "unknown vertex"),
    ([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [(0, 1)], "isolated"),
    ([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], [(0, 1), (2, 3)], "not connected"),
])
def test_invalid_networks_rejected(positions, edges, message):
    with pytest.raises(ValueError, match=message):
        graph(positions, edges)
