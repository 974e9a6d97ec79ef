from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slaglab.hermitian import ComplexLineCP2
from slaglab.reflection import (
    DegeneratePolygonError,
    Face,
    GroupTooLargeError,
    center_order,
    close_group,
    element_order,
    enlarged_group_order,
    evaluate_word,
    finiteness_test,
    gamma_k3,
    generators_k3,
    polygon_from_faces,
    reflection_matrix,
    tessellation_report,
    verify_relations,
)


# -- polygon ------------------------------------------------------------------


@pytest.mark.parametrize("k", [3, 4, 12])
def test_gamma_angles(k):
    angles = [v.angle for v in gamma_k3(k).vertices]
    assert np.allclose(angles, [np.pi / 3, np.pi / 3, np.pi / k], atol=1e-12)


@pytest.mark.parametrize("k", [2, 0, 3.5])
def test_gamma_rejects_bad_k(k):
    with pytest.raises(ValueError):
        gamma_k3(k)


def test_reflections_fix_their_faces():
    k = 5
    eps = np.exp(2j * np.pi / k)
    for f in gamma_k3(k).faces:
        r = reflection_matrix(f)
        for v in f.plane.span:
            assert np.allclose(r.matrix @ v, v, atol=1e-13)
        assert np.allclose(r.matrix @ r.matrix, np.eye(3), atol=1e-13)
    r1 = reflection_matrix(next(f for f in gamma_k3(k).faces if f.name == "P1")).matrix
    v = np.array([eps, 1, 0])
    assert np.allclose(r1 @ v, v)


@pytest.mark.parametrize("k", [3, 4, 7])
def test_r1r2_is_diagonal_of_order_k(k):
    g = generators_k3(k)
    M = g["1"] @ g["2"]
    eps = np.exp(2j * np.pi / k)
    assert np.allclose(M, np.diag([eps, np.conj(eps), 1]), atol=1e-13)
    assert element_order(M) == k


# -- closure ------------------------------------------------------------------


@pytest.mark.parametrize("k", [3, 4, 5, 6, 7, 8])
def test_closure_order(k):
    G = close_group(generators_k3(k))
    assert G.order == 6 * k * k
    assert G.min_separation > 1e-4


def test_closure_is_deterministic():
    a = close_group(generators_k3(4))
    b = close_group(generators_k3(4))
    assert np.array_equal(a.elements, b.elements) and a.words == b.words


def test_closure_elements_unitary_and_contain_identity():
    G = close_group(generators_k3(5))
    E = G.elements
    UU = np.conj(np.swapaxes(E, -1, -2)) @ E
    assert np.max(np.abs(UU - np.eye(3))) < 1e-9
    assert np.min(np.max(np.abs(E - np.eye(3)), axis=(-2, -1))) < 1e-12


def test_symmetric_group_from_two_generators():
    g = generators_k3(5)
    assert close_group({"2": g["2"], "3": g["3"]}).order == 6


def test_safety_bound():
    with pytest.raises(GroupTooLargeError):
        close_group(generators_k3(8), bound=100)


def test_words_evaluate_to_elements():
    G = close_group(generators_k3(3))
    for i in range(0, G.order, 7):
        assert np.allclose(evaluate_word(G.words[i], G.generators), G.elements[i], atol=1e-12)


@pytest.mark.parametrize("k", [3, 7])
def test_relations_hold(k):
    assert max(verify_relations(k).values()) <= 1e-12


def test_perturbed_generator_violates_relations():
    res = verify_relations(3, generators_k3(3, perturb=1e-3))
    assert max(res.values()) > 1e-4


@pytest.mark.parametrize("k", range(3, 13))
def test_center_order(k):
    assert center_order(close_group(generators_k3(k))) == gcd(3, k)


# -- finiteness ---------------------------------------------------------------


@pytest.mark.parametrize("k", [3, 4, 6])
def test_gamma_vertices_finite(k):
    verts, finite = finiteness_test(gamma_k3(k))
    assert finite
    assert [v.dihedral_order for v in verts] == [6, 6, 2 * k]


def _line(normal):
    return Face("F", "complex", ComplexLineCP2.from_normal(normal))


def test_angle_one_radian_is_irrational():
    c, s = np.cos(1.0), np.sin(1.0)
    poly = polygon_from_faces([_line([1, 0, 0]), _line([c, s, 0]), _line([0, 0, 1])])
    verts, finite = finiteness_test(poly)
    assert not finite
    assert [v.rational for v in verts] == [False, True, True]
    assert verts[0].angle == pytest.approx(1.0, abs=1e-12)


def test_coincident_faces_degenerate():
    with pytest.raises(DegeneratePolygonError):
        polygon_from_faces([_line([1, 0, 0]), _line([1, 0, 0]), _line([0, 0, 1])])


# -- tessellation -------------------------------------------------------------


@pytest.mark.parametrize("k", [3, 4, 5, 6, 7, 8])
def test_tessellation_counts(k):
    r = tessellation_report(k)
    assert r.order == 6 * k * k
    assert r.faces == 6 * k * k and r.vertices == 3 * k + 2 * k * k
    assert sorted(r.orbits) == sorted([k * k, k * k, 3 * k])
    assert r.chi == r.chi_vef == r.chi_gauss_bonnet == k * (3 - k)
    assert r.genus == 1 + k * (k - 3) // 2
    assert r.lift_degree == (3 if k % 3 == 0 else 1)
    assert r.center == gcd(3, k)
    assert r.relations_residual <= 1e-10


def test_k3_lifted_genus():
    r = tessellation_report(3)
    assert (r.faces, r.vertices, r.chi, r.genus, r.lifted_genus) == (54, 27, 0, 1, 3)
    assert tuple(r.orbits) == (9, 9, 9)


def test_k4_report():
    r = tessellation_report(4)
    assert (r.faces, r.vertices, r.chi, r.genus, r.lift_degree) == (96, 44, -4, 3, 1)


def test_k5_report():
    r = tessellation_report(5)
    assert (r.chi, r.genus) == (-10, 6)


def test_report_schema():
    d = tessellation_report(3).as_dict()
    for key in ("k", "order", "relations_residual", "center", "faces", "vertices",
                "edges", "orbits", "chi", "genus", "lift_degree"):
        assert key in d


def test_enlarged_group_is_finite():
    assert enlarged_group_order(3) == 108
    assert enlarged_group_order(4) == 192


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 9), st.lists(st.sampled_from("123"), min_size=1, max_size=12))
def test_group_closed_under_generator_words(k, word):
    # any word in the generators is an element of the closure
    G = close_group(generators_k3(k))
    M = evaluate_word("".join(word), G.generators)
    assert np.min(np.max(np.abs(G.elements - M), axis=(-2, -1))) < 1e-9
