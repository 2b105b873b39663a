import math

import numpy as np
import pytest

from holocap.capacity import Ensemble
from holocap.qubit import QubitChannel, random_bloch
from holocap.relent import (
    RelentLandscape,
    SupportMismatchError,
    critical_census,
    equidistance,
    landscape,
    log_output_coefficients,
    sup_relent,
)
from holocap.sphere import angular_distance

DEPOL = QubitChannel(0.5, 0.5, 0.5)
TABLE1_ANGLES = [(0.127929, 0.0), (0.681275, 0.0), (0.869870, 2.071131), (0.869870, -2.071131)]


@pytest.fixture(scope="module")
def census(four_state, four_result):
    return critical_census(four_state, four_result.ensemble.average())


def test_equidistance_four_state(four_state, four_result):
    vals = equidistance(four_state, four_result.ensemble)
    assert max(vals) - min(vals) <= 1e-8
    assert np.allclose(vals, 0.3214851589, atol=1e-9)


def test_equidistance_three_state(four_state, planar_result):
    vals = equidistance(four_state, planar_result.ensemble)
    assert len(vals) == 3
    assert np.allclose(vals, 0.321460988, atol=1e-8)


def test_equidistance_single_entry(four_state):
    assert equidistance(four_state, Ensemble.from_arrays([1.0], [[0, 0, 1]])) == [pytest.approx(0.0, abs=1e-14)]


def test_sup_relent_at_optimum(four_state, four_result):
    sup, maxima = sup_relent(four_state, four_result.ensemble.average())
    assert sup == pytest.approx(four_result.capacity, abs=1e-8)
    top = [m for m in maxima if m.value >= sup - 1e-8]
    assert len(top) == 4
    for r in four_result.ensemble.points_array:
        assert min(angular_distance(r, m.location.as_array()) for m in top) <= 1e-6


def test_sup_relent_table4(four_state, planar_result):
    sup, maxima = sup_relent(four_state, planar_result.ensemble.average())
    assert sup == pytest.approx(0.321505535, abs=1e-6)
    locs = [m.location.as_array() for m in maxima if m.value >= sup - 1e-9]
    for target in ([-0.539291, 0.822613, -0.180202], [-0.539291, -0.822613, -0.180202]):
        assert min(np.max(np.abs(loc - target)) for loc in locs) <= 1e-3


def test_sup_relent_depolarizing():
    sup, maxima = sup_relent(DEPOL, (0, 0, 0), grid_k=40)
    assert sup == pytest.approx(1 - 0.8112781244591328, abs=1e-12)


def test_pure_reference_rejected():
    with pytest.raises(SupportMismatchError):
        sup_relent(QubitChannel(1, 1, 1), (0, 0, 1))


def test_landscape_examples(four_state, four_result):
    grid = landscape(four_state, four_result.ensemble.average(), 200, 400)
    assert grid.values.shape == (grid.phi_steps, grid.theta_steps) == (200, 400)
    assert np.all(grid.values >= 0)
    i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert grid.values[i, j] == pytest.approx(0.3214852, abs=1e-6)
    best = min(abs(grid.phi[i] - p) + abs(grid.theta[j] - t) for p, t in TABLE1_ANGLES)
    assert best <= 2 * (math.pi / 2 / 199 + 2 * math.pi / 400)
    # F = S(out) - xi . out with the certificate's xi; H + F is the constant -c0
    from holocap.qubit import entropy_of_length

    outs = four_state(grid.points)
    f = entropy_of_length(np.linalg.norm(outs, axis=-1)) - outs @ four_result.xi
    np.testing.assert_allclose(grid.values + f, 1.299989, atol=1e-5)
    c0, _ = log_output_coefficients(four_state, four_result.ensemble.average())
    assert -c0 == pytest.approx(1.299989, abs=1e-5)


def test_landscape_constant_channel():
    ch = QubitChannel(0, 0, 0, 0.1, 0.2, 0.3)
    grid = landscape(ch, (0, 0, 0), 20, 40)
    np.testing.assert_allclose(grid.values, 0.0, atol=1e-15)


def test_landscape_csv(tmp_path, four_state):
    grid = landscape(four_state, (0.005, 0, 0.17), 5, 8)
    path = tmp_path / "grid.csv"
    grid.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "phi,theta,x,y,z,H"
    assert len(lines) == 1 + 40


def test_landscape_reflection_symmetry(four_state, four_result):
    land = RelentLandscape(four_state, four_result.ensemble.average())
    pts = random_bloch(np.random.default_rng(0), 500, pure=True)
    np.testing.assert_allclose(land.value(pts), land.value(pts * [1, -1, 1]), atol=1e-12)


def test_upper_bound_on_random_samples(four_state, four_result, rng):
    # any sample maximum bounds the capacity from above for any reference
    for _ in range(5):
        avg = 0.5 * random_bloch(rng)
        pts = random_bloch(rng, 20000, pure=True)
        land = RelentLandscape(four_state, avg)
        sup, _ = sup_relent(four_state, avg, grid_k=60)
        assert sup >= four_result.capacity - 1e-12
        assert land.value(pts).max() <= sup + 1e-10


def test_census_counts(census):
    kinds = [c.kind for c in census]
    assert len(census) == 10
    assert kinds.count("maximum") == 4 and kinds.count("saddle") == 4 and kinds.count("minimum") == 2
    for c in census:
        assert c.grad_norm <= 1e-8
        if c.kind == "maximum":
            assert c.value == pytest.approx(0.3214851589, abs=1e-7)


def test_census_reflection_closed(census):
    locs = [c.location.as_array() for c in census]
    for loc in locs:
        assert min(angular_distance(loc * [1, -1, 1], other) for other in locs) <= 1e-8


def test_census_flat_landscape():
    pts = critical_census(DEPOL, (0, 0, 0), 40, 80)
    assert len(pts) == 1 and pts[0].kind == "degenerate"


def test_equidistance_and_certificate_agree(four_state, four_result, planar_result):
    from holocap.capacity import verify_hyperplane

    spread4 = np.ptp(equidistance(four_state, four_result.ensemble))
    assert spread4 <= 1e-8 and four_result.max_violation <= 1e-8
    # the planar ensemble is equidistant but not optimal: its certificate fails off-plane
    assert verify_hyperplane(four_state, planar_result.xi, planar_result.xi0) > 1e-8
