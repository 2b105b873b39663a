import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holocap.capacity import (
    CapacityConfig,
    CapacityResult,
    ConvergenceError,
    Ensemble,
    RankDeficiencyError,
    capacity,
    chi_gradient,
    extract_support,
    holevo_chi,
    maximize_over_probs,
    mesh_lower_bound,
    refine,
    supporting_hyperplane,
    verify_hyperplane,
)
from holocap.qubit import InvalidStateError, NotCompletelyPositiveError, QubitChannel, random_bloch, relent_bloch
from holocap.relent import sup_relent
from holocap.sphere import angular_distance, mesh_points

TABLE1_PROBS = [0.2322825705, 0.2133220819, 0.2771976738, 0.2771976738]
TABLE1_INPUTS = [
    [0.2530759862, 0.0, 0.9674464043],
    [0.9783950999, 0.0, 0.2067438718],
    [-0.4734087533, 0.8646461389, -0.1681404376],
    [-0.4734087533, -0.8646461389, -0.1681404376],
]
IDENTITY = QubitChannel(1, 1, 1)


def table1_ensemble():
    return Ensemble.from_arrays(np.array(TABLE1_PROBS) / sum(TABLE1_PROBS), TABLE1_INPUTS, normalize_points=True)


# --- mesh -----------------------------------------------------------------

def test_mesh_counts_and_norms():
    assert len(mesh_points(40)) == 1562
    pts = mesh_points(2)
    assert len(pts) == 4
    expect = {(0.0, 0.0, 1.0), (0.0, 0.0, -1.0), (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)}
    assert {tuple(np.round(p, 12) + 0.0) for p in pts} == expect
    for k in (3, 17, 60):
        pts = mesh_points(k)
        assert len(pts) == k * k - k + 2
        assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) <= 1e-14
        assert len({tuple(np.round(p, 12)) for p in pts}) == len(pts)
    with pytest.raises(ValueError):
        mesh_points(1)


# --- ensembles and chi -----------------------------------------------------

def test_ensemble_validation():
    from holocap.qubit import BlochVector

    with pytest.raises(ValueError):
        Ensemble((0.5, 0.4), (BlochVector(0, 0, 1), BlochVector(0, 0, -1)))
    # from_arrays renormalizes
    assert sum(Ensemble.from_arrays([0.5, 0.4], [[0, 0, 1], [0, 0, -1]]).probs) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Ensemble.from_arrays([1.0, 0.0], [[0, 0, 1], [0, 0, -1]])


def test_holevo_chi_examples(four_state):
    assert holevo_chi(four_state, table1_ensemble()) == pytest.approx(0.3214851589, abs=1e-8)
    assert holevo_chi(four_state, Ensemble.from_arrays([1.0], [[0, 0, 1]])) == 0.0
    assert holevo_chi(IDENTITY, Ensemble.from_arrays([0.5, 0.5], [[0, 0, 1], [0, 0, -1]])) == pytest.approx(1.0)


def test_ensemble_json_roundtrip():
    e = table1_ensemble()
    assert Ensemble.from_dict(e.as_dict()) == e


# --- simplex ---------------------------------------------------------------

def test_maximize_over_probs_examples(four_state):
    sol = maximize_over_probs(four_state, mesh_points(40), tol=1e-11)
    assert 0 <= 0.3214851589 - sol.chi <= 5e-5
    assert 0 <= sol.dual_gap <= 1e-11
    assert sol.probs.sum() == pytest.approx(1.0, abs=1e-12) and sol.probs.min() >= 0
    single = maximize_over_probs(four_state, [[0, 0, 1]])
    assert single.probs.tolist() == [1.0] and single.chi == 0.0
    pair = maximize_over_probs(IDENTITY, [[0, 0, 1], [0, 0, -1]])
    np.testing.assert_allclose(pair.probs, [0.5, 0.5], atol=1e-9)
    assert pair.chi == pytest.approx(1.0, abs=1e-12)


def test_maximize_over_probs_reports_stall(four_state):
    with pytest.raises(ConvergenceError) as info:
        maximize_over_probs(four_state, mesh_points(20), tol=1e-30, max_iter=3)
    assert info.value.best is not None and info.value.best.chi > 0


def test_dual_gap_is_exact_margin(four_state):
    sol = maximize_over_probs(four_state, mesh_points(12), tol=1e-6)
    avg = sol.probs @ four_state(mesh_points(12))
    assert np.max(relent_bloch(four_state(mesh_points(12)), avg)) - sol.chi == pytest.approx(sol.dual_gap, abs=1e-14)


# --- support extraction ------------------------------------------------------

def test_extract_support_examples(four_state):
    single = extract_support([1.0, 0.0, 0.0], [[0, 0, 1], [1, 0, 0], [0, 1, 0]], 1e-6)
    assert len(single) == 1
    d = 1e-8
    two = extract_support([0.5, 0.5 - d, d], [[0, 0, 1], [1, 0, 0], [0, 1, 0]], 1e-6)
    assert len(two) == 2 and sum(two.probs) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        extract_support([0.0, 0.0], [[0, 0, 1], [1, 0, 0]])
    sol = mesh_lower_bound(four_state, 40)
    ens = extract_support(sol.probs, mesh_points(40), cluster_radius=3 * math.pi / 40)
    assert len(ens) == 4
    for ref in TABLE1_INPUTS:
        assert min(angular_distance(ref, p) for p in ens.points_array) < 3 * math.pi / 40


# --- refinement ---------------------------------------------------------------

def test_refine_from_mesh(four_state):
    sol = mesh_lower_bound(four_state, 40)
    ens = extract_support(sol.probs, mesh_points(40), cluster_radius=3 * math.pi / 40)
    res = refine(four_state, ens)
    assert res.capacity == pytest.approx(0.3214851589, abs=1e-9)
    assert res.grad_norm <= 1e-10
    worst = min(max(min(angular_distance(r, p * [1, s, 1]) for p in res.ensemble.points_array) for r in TABLE1_INPUTS)
                for s in (1, -1))
    assert worst <= 1e-6


def test_refine_identity_antipodal():
    ens = Ensemble.from_arrays([0.3, 0.7], [[0.1, 0, 1], [0, 0.1, -1]], normalize_points=True)
    res = refine(IDENTITY, ens, certify=False)
    assert res.capacity == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(sorted(res.ensemble.probs), [0.5, 0.5], atol=1e-9)


def test_planar_three_state(planar_result):
    assert planar_result.capacity == pytest.approx(0.3214609877, abs=1e-6)
    assert len(planar_result.ensemble) == 3
    assert np.max(np.abs(planar_result.ensemble.points_array[:, 1])) <= 1e-12


def test_gradient_matches_finite_differences(four_state, rng):
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        probs = rng.dirichlet(np.ones(n))
        pts = random_bloch(rng, n, pure=True)
        value, gradient, size = chi_gradient(four_state, Ensemble.from_arrays(probs, pts))
        z = rng.normal(scale=0.05, size=size)
        z[-(n - 1):] *= 0.1
        g = gradient(z)
        fd = np.empty(size)
        for j in range(size):
            e = np.zeros(size)
            e[j] = 1e-6
            fd[j] = (value(z + e) - value(z - e)) / 2e-6
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-8))
    assert worst <= 1e-5


# --- certificate -------------------------------------------------------------

def test_supporting_hyperplane_table1(four_state, four_result):
    xi, xi0 = supporting_hyperplane(four_state, four_result.ensemble)
    np.testing.assert_allclose(xi, [-0.0396622022, 0, -0.9621071440], atol=1e-6)
    assert xi0 == pytest.approx(0.9785055621, abs=1e-6)
    outs = four_state(four_result.ensemble.points_array)
    from holocap.qubit import entropy_of_length, log_coefficients

    resid = outs @ xi + xi0 - entropy_of_length(np.linalg.norm(outs, axis=1))
    assert np.max(np.abs(resid)) <= 1e-10
    _, c = log_coefficients(four_state(four_result.ensemble.average().as_array()))
    np.testing.assert_allclose(-c, xi, atol=1e-9)


def test_supporting_hyperplane_rank_errors():
    with pytest.raises(RankDeficiencyError):
        supporting_hyperplane(IDENTITY, Ensemble.from_arrays([1.0], [[0, 0, 1]]))
    dup = Ensemble.from_arrays([0.5, 0.5], [[0, 0, 1], [0, 0, 1]])
    with pytest.raises(RankDeficiencyError) as info:
        supporting_hyperplane(IDENTITY, dup)
    assert 1 in info.value.dependent


def test_verify_hyperplane_examples(four_state, four_result, planar_result):
    assert verify_hyperplane(four_state, four_result.xi, four_result.xi0, 200) <= 1e-8
    # the planar 3-state certificate fails off the plane, near the table 4 pair
    assert verify_hyperplane(four_state, planar_result.xi, planar_result.xi0, 200) > 0
    assert verify_hyperplane(IDENTITY, np.zeros(3), 1.0, 40) == pytest.approx(1.0)


# --- driver -----------------------------------------------------------------

@pytest.mark.parametrize("ch, target, size", [
    # rotationally symmetric about z: optimal ensembles form a continuum
    (QubitChannel(0.6, 0.6, 0.5, 0.0, 0.0, 0.5), 0.324990, None),
    (QubitChannel(0.6, 0.601, 0.5, 0.0, 0.0, 0.495), 0.320535, 3),
])
def test_table2_cp_channels(ch, target, size):
    res = capacity(ch, CapacityConfig(rotations=2))
    assert res.capacity == pytest.approx(target, abs=1e-5)
    assert len(res.ensemble) <= 4
    if size:
        assert len(res.ensemble) == size


def test_table2_noncp_channel_requires_flag():
    ch = QubitChannel(0.6, 0.601, 0.5, 0.0, 0.0, 0.5)
    with pytest.raises(NotCompletelyPositiveError):
        capacity(ch)
    res = capacity(ch, CapacityConfig(rotations=2, allow_noncp=True))
    assert res.capacity == pytest.approx(0.325555, abs=1e-5)
    assert any("not completely positive" in n for n in res.notes)


def test_image_outside_ball_rejected():
    with pytest.raises(InvalidStateError):
        capacity(QubitChannel(0.8, 0.8015, 0.75, 0.22, 0, 0.245), CapacityConfig(allow_noncp=True))


def test_simple_channels():
    assert capacity(IDENTITY, CapacityConfig(rotations=1)).capacity == pytest.approx(1.0, abs=1e-10)
    dep = capacity(QubitChannel(0.5, 0.5, 0.5), CapacityConfig(rotations=1))
    assert dep.capacity == pytest.approx(0.18872187554, abs=1e-10)


def test_non_injective_flag():
    res = capacity(QubitChannel(0, 0, 0), CapacityConfig(rotations=1, mesh_ks=(10,)))
    assert res.capacity == pytest.approx(0.0, abs=1e-15)
    assert res.non_unique


def test_result_json_roundtrip(four_result):
    back = CapacityResult.from_dict(four_result.as_dict())
    assert back.capacity == four_result.capacity
    np.testing.assert_array_equal(back.xi, four_result.xi)
    assert back.ensemble == four_result.ensemble


def test_support_bound_and_sandwich(four_state, four_result):
    assert len(four_result.ensemble) <= 4
    for k in (10, 20, 40):
        sol = mesh_lower_bound(four_state, k, tol=1e-9)
        # the mesh gap only covers mesh points; the sphere-wide gap bounds the true optimum
        upper, _ = sup_relent(four_state, sol.probs @ mesh_points(k))
        assert sol.chi <= four_result.capacity + 1e-12
        assert four_result.capacity <= upper + 1e-12
        assert four_result.capacity - sol.chi <= upper - sol.chi


def test_reflection_symmetry(four_state, four_result):
    e = four_result.ensemble
    assert holevo_chi(four_state, e.reflect_y()) == pytest.approx(holevo_chi(four_state, e), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(0.05, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
                min_size=1, max_size=5))
def test_chi_reflection_invariant_random(entries):
    pts = np.array([e[1:] for e in entries])
    if np.min(np.linalg.norm(pts, axis=1)) < 1e-3:
        return
    probs = np.array([e[0] for e in entries])
    ens = Ensemble.from_arrays(probs / probs.sum(), pts, normalize_points=True)
    ch = QubitChannel(0.6, 0.601, 0.5, 0.021, 0.0, 0.495)
    assert holevo_chi(ch, ens.reflect_y()) == pytest.approx(holevo_chi(ch, ens), abs=1e-12)


def test_deterministic(four_state):
    cfg = CapacityConfig(mesh_ks=(20,), rotations=2, seed=3)
    a, b = capacity(four_state, cfg), capacity(four_state, cfg)
    assert a.as_dict() == b.as_dict()
