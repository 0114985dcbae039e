import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from povmdiscord import povm as pv
from povmdiscord.qmath import KET0, KET1, KET_PLUS, projector

Z = (0.0, 0.0, 1.0)
MZ = (0.0, 0.0, -1.0)
X = (1.0, 0.0, 0.0)
MX = (-1.0, 0.0, 0.0)
TRINE = [0.0, 2 * math.pi / 3, 4 * math.pi / 3]


def trine():
    return pv.RankOnePovm(tuple(pv.PovmElement.planar(2 / 3, t) for t in TRINE), planar=True)


def pair(b):
    return pv.RankOnePovm((pv.PovmElement(1, b), pv.PovmElement(1, tuple(-c for c in b))))


def test_validate_examples():
    assert pv.validate(pair(Z))
    assert pv.validate(trine())
    report = pv.validate([pv.PovmElement(1, Z), pv.PovmElement(0.5, MZ)])
    assert not report
    assert report.vector_residual == pytest.approx(0.5, abs=1e-15)
    assert report.weight_residual == pytest.approx(0.5, abs=1e-15)
    assert len(report.problems) == 2


def test_element_validation():
    with pytest.raises(ValueError):
        pv.PovmElement(-0.1, Z)
    with pytest.raises(ValueError):
        pv.PovmElement(1.0, (0.0, 0.0, 1.1))


def test_weights_examples():
    np.testing.assert_allclose(pv.weights_from_directions([Z, MZ]), [1, 1], atol=1e-15)
    dirs = [pv.planar_direction(t) for t in TRINE]
    np.testing.assert_allclose(pv.weights_from_directions(dirs), [2 / 3] * 3, atol=1e-15)


def test_weights_infeasible_right_angle():
    dirs = np.array([pv.planar_direction(t) for t in (0.0, math.pi / 2, math.pi)])
    # oracle: direct 3x3 solve of the x, z and sum rows gives r_2 = 0
    a = np.vstack([dirs[:, 0], dirs[:, 2], np.ones(3)])
    r = np.linalg.solve(a, [0, 0, 2])
    assert abs(r[1]) < 1e-15
    with pytest.raises(pv.InfeasiblePovmError):
        pv.weights_from_directions(dirs)


def test_weights_other_infeasible_cases():
    with pytest.raises(pv.InfeasiblePovmError):
        pv.weights_from_directions([Z, X])
    with pytest.raises(pv.InfeasiblePovmError):
        pv.weights_from_directions([Z, Z, MZ])
    # four coplanar directions: singular square system
    with pytest.raises(pv.InfeasiblePovmError):
        pv.weights_from_directions([Z, X, MZ, MX])
    with pytest.raises(pv.InfeasiblePovmError):
        pv.weights_from_directions([Z])


def test_tetrahedron_weights():
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3)
    r = pv.weights_from_directions(tet)
    np.testing.assert_allclose(r, [0.5] * 4, atol=1e-14)


def test_planar_weights_match_linear_solve(rng):
    for _ in range(2000):
        thetas = rng.uniform(0, 2 * math.pi, size=3)
        closed = pv.planar_weights(thetas)
        try:
            solved = pv.weights_from_directions([pv.planar_direction(t) for t in thetas])
        except pv.InfeasiblePovmError:
            solved = None
        assert (closed is None) == (solved is None)
        if closed is not None:
            np.testing.assert_allclose(closed, solved, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.floats(-1e-3, 1e-3))
def test_two_outcome_feasible_iff_antipodal(theta, phi, tilt):
    b = pv.sphere_direction(theta, phi)
    c = -pv.sphere_direction(theta + tilt, phi)
    antipodal = np.linalg.norm(b + c) <= 1e-9
    try:
        r = pv.weights_from_directions([b, c])
        feasible = True
        np.testing.assert_allclose(r, [1, 1], atol=1e-9)
    except pv.InfeasiblePovmError:
        feasible = False
    assert feasible == antipodal


def test_convex_combine_examples():
    g = pv.convex_combine(pair(Z), pair(X), 0.5)
    assert len(g) == 4
    assert [e.weight for e in g] == [0.5] * 4
    assert [e.direction for e in g] == [Z, MZ, X, MX]

    p = pair(Z)
    same = pv.convex_combine(p, p, 0.3)
    assert same[0].weight + same[2].weight == pytest.approx(1.0, abs=1e-15)
    assert sum(e.weight for e in same) == pytest.approx(2.0, abs=1e-15)

    five = pv.convex_combine(pair(Z), trine(), 0.25)
    assert len(five) == 5
    # oracle: direct summation
    vec = sum(np.asarray(e.direction) * e.weight for e in five)
    assert np.linalg.norm(vec) <= 1e-12
    assert abs(sum(e.weight for e in five) - 2) <= 1e-12
    assert pv.validate(five)


def test_convex_combine_rejects_bad_input():
    with pytest.raises(ValueError):
        pv.convex_combine(pair(Z), pair(X), 1.0)
    bad = pv.RankOnePovm((pv.PovmElement(1, Z), pv.PovmElement(0.5, MZ)))
    with pytest.raises(ValueError):
        pv.convex_combine(bad, pair(X), 0.5)


def test_element_operator_examples():
    np.testing.assert_allclose(pv.element_operator(pv.PovmElement(1, Z)), projector(KET0), atol=1e-16)
    np.testing.assert_allclose(pv.element_operator(pv.PovmElement(1, MZ)), projector(KET1), atol=1e-16)
    np.testing.assert_allclose(
        pv.element_operator(pv.PovmElement(2 / 3, X)), 2 / 3 * projector(KET_PLUS), atol=1e-16
    )


def test_element_operator_is_psd_rank_one(rng):
    for _ in range(100):
        e = pv.PovmElement(rng.uniform(0.01, 2), tuple(pv.uniform_sphere(rng)))
        lam = np.linalg.eigvalsh(pv.element_operator(e))
        assert lam[0] == pytest.approx(0, abs=1e-14)
        assert lam[1] == pytest.approx(e.weight, abs=1e-14)


def test_random_povm_two_outcomes(rng):
    for planar in (True, False):
        for _ in range(50):
            d = pv.random_povm(2, planar, rng)
            m = d.povm
            assert d.rejections == 0
            np.testing.assert_array_equal(m.weights, [1, 1])
            np.testing.assert_allclose(m.directions[0], -m.directions[1], atol=0)
            if planar:
                assert 0 <= m.elements[0].theta < math.pi


def test_random_povm_is_reproducible():
    a = pv.random_povm(3, True, np.random.default_rng(7)).povm
    b = pv.random_povm(3, True, np.random.default_rng(7)).povm
    assert a == b
    assert np.all(a.weights > 0)


@pytest.mark.parametrize("n, planar", [(3, True), (3, False), (4, False)])
def test_random_povm_samples_are_valid(n, planar, rng):
    count = 10_000 if (n, planar) == (3, True) else 1000
    for _ in range(count):
        m = pv.random_povm(n, planar, rng).povm
        assert len(m) == n
        assert pv.validate(m)


def test_random_povm_contract_errors(rng):
    with pytest.raises(ValueError):
        pv.random_povm(4, True, rng)
    with pytest.raises(ValueError):
        pv.random_povm(5, False, rng)


def test_completeness_sums_to_identity(rng):
    for n, planar in [(2, True), (3, True), (3, False), (4, False)]:
        for _ in range(200):
            m = pv.random_povm(n, planar, rng).povm
            np.testing.assert_allclose(sum(m.operators()), np.eye(2), atol=1e-9)


def test_projective_canonical_order():
    m = pv.RankOnePovm.projective_angle(3 * math.pi / 2)
    assert m.elements[0].theta == pytest.approx(math.pi / 2, abs=1e-15)
    m = pv.RankOnePovm.projective((0.0, -1.0, 0.0))
    assert m.elements[0].direction == (0.0, 1.0, 0.0)
    assert not m.planar
