import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holocap.qubit import (
    BlochVector,
    InvalidStateError,
    QubitChannel,
    apply_channel,
    binary_entropy,
    bloch_to_density,
    choi_matrix,
    cp_margin,
    cp_quartic,
    density_to_bloch,
    entropy,
    entropy_matrix,
    is_cp,
    log_coefficients,
    random_bloch,
    relative_entropy,
    relent_bloch,
)

FOUR = QubitChannel(0.6, 0.601, 0.5, 0.021, 0.0, 0.495)
IDENTITY = QubitChannel(1, 1, 1)

ball = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: sum(c * c for c in v) <= 1)
interior = st.tuples(*[st.floats(-0.57, 0.57)] * 3)


def family(t1):
    return QubitChannel(0.6, 0.601, 0.5, t1, 0.0, 0.495)


# --- states ---------------------------------------------------------------

def test_bloch_vector_rejects_outside_ball():
    with pytest.raises(InvalidStateError):
        BlochVector(1.0, 0.1, 0.0)
    BlochVector(1.0 + 1e-13, 0.0, 0.0)  # inside construction tolerance


def test_bloch_to_density_examples():
    np.testing.assert_allclose(bloch_to_density((0, 0, 0)), np.eye(2) / 2)
    np.testing.assert_allclose(bloch_to_density((0, 0, 1)), np.diag([1, 0]))
    np.testing.assert_allclose(bloch_to_density((1, 0, 0)), 0.5 * np.ones((2, 2)))
    with pytest.raises(InvalidStateError):
        bloch_to_density((0.8, 0.8, 0.0))


@given(ball)
def test_density_roundtrip(r):
    m = bloch_to_density(r)
    np.testing.assert_allclose(m, m.conj().T)
    assert abs(np.trace(m) - 1) < 1e-12
    assert np.linalg.eigvalsh(m).min() >= -1e-12
    np.testing.assert_allclose(density_to_bloch(m), r, atol=1e-15)


def test_pure_flag():
    assert BlochVector(0, 0, 1).is_pure
    assert not BlochVector(0, 0, 0.9).is_pure


# --- channel --------------------------------------------------------------

def test_apply_channel_examples():
    out = apply_channel(FOUR, BlochVector(0.2530759862, 0, 0.9674464043))
    np.testing.assert_allclose(out.as_array(), [0.1728455917, 0, 0.9787232022], atol=1e-9)
    r = BlochVector(0.3, -0.4, 0.5)
    assert apply_channel(IDENTITY, r) == r
    np.testing.assert_allclose(QubitChannel(0.6, 0.6, 0.5, 0, 0, 0.5)((0, 0, 1)), [0, 0, 1])


# --- entropy --------------------------------------------------------------

def test_entropy_examples():
    assert entropy((0, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert entropy((0, 0, 1)) == 0.0
    # 10-digit reference output; the entropy slope there is ~3.3 bits per unit length
    assert entropy((0.1728455917, 0, 0.9787232022)) == pytest.approx(0.0300135405, abs=1e-9)


def test_entropy_matrix_examples():
    assert entropy_matrix(np.eye(4) / 4) == pytest.approx(2.0, abs=1e-14)
    assert entropy_matrix(np.diag([9, 3, 3, 1]) / 16) == pytest.approx(1.6225562489, abs=1e-9)
    assert entropy_matrix(bloch_to_density((0, 0, 1))) == 0.0
    with pytest.raises(InvalidStateError):
        entropy_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        entropy_matrix(np.array([[0.5, 1], [0, 0.5]]))


def test_binary_entropy_limits():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0


@given(ball)
def test_entropy_matrix_agrees_with_bloch_formula(r):
    out = FOUR(np.array(r))
    assert abs(entropy_matrix(bloch_to_density(out)) - entropy(out)) <= 1e-12


@given(ball, ball, st.floats(0, 1))
def test_entropy_concave_on_segments(a, b, t):
    a, b = np.array(a), np.array(b)
    mid = t * a + (1 - t) * b
    assert entropy(mid) >= t * entropy(a) + (1 - t) * entropy(b) - 1e-12


def test_eigh_residual_on_four_by_four(rng):
    for _ in range(20):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = a @ a.conj().T
        m /= np.trace(m).real
        w, v = np.linalg.eigh(m)
        assert np.max(np.linalg.norm(m @ v - v * w, axis=0)) <= 1e-12


# --- relative entropy -------------------------------------------------------

def test_relative_entropy_examples():
    rho = bloch_to_density((0.1, 0.2, 0.3))
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-14)
    avg = np.array([0.0050428099, 0.0, 0.1756076944])
    h = relative_entropy(bloch_to_density(FOUR((0.2530759862, 0, 0.9674464043))), bloch_to_density(FOUR(avg)))
    assert h == pytest.approx(0.3214851589, abs=1e-8)
    assert relative_entropy(bloch_to_density((1, 0, 0)), bloch_to_density((0, 0, 1))) == math.inf


def test_relative_entropy_matches_closed_form(rng):
    for _ in range(50):
        a, b = random_bloch(rng), 0.99 * random_bloch(rng)
        assert relative_entropy(bloch_to_density(a), bloch_to_density(b)) == pytest.approx(
            relent_bloch(a, b), abs=1e-11)


@settings(max_examples=100)
@given(interior, interior, interior, interior)
def test_relative_entropy_additive_on_products(a, b, c, d):
    ra, rb, rc, rd = (bloch_to_density(v) for v in (a, b, c, d))
    lhs = relative_entropy(np.kron(ra, rb), np.kron(rc, rd))
    assert lhs == pytest.approx(relative_entropy(ra, rc) + relative_entropy(rb, rd), abs=1e-10)


@given(ball, interior)
def test_relative_entropy_nonnegative(a, b):
    assert relent_bloch(np.array(a), np.array(b)) >= 0


def test_log_coefficients_reconstruct_log():
    b = np.array([0.1, -0.2, 0.4])
    c0, c = log_coefficients(b)
    w, v = np.linalg.eigh(bloch_to_density(b))
    log_m = v @ np.diag(np.log2(w)) @ v.conj().T
    expect = c0 * np.eye(2) + c[0] * np.array([[0, 1], [1, 0]]) + c[1] * np.array([[0, -1j], [1j, 0]]) \
        + c[2] * np.diag([1, -1])
    np.testing.assert_allclose(log_m, expect, atol=1e-12)


# --- complete positivity -----------------------------------------------------

def test_choi_examples():
    j = choi_matrix(IDENTITY)
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    np.testing.assert_allclose(j, np.outer(bell, bell), atol=1e-15)
    np.testing.assert_allclose(choi_matrix(QubitChannel(0, 0, 0)), np.eye(4) / 4, atol=1e-15)
    assert cp_margin(FOUR) > 0


def test_is_cp_examples():
    assert is_cp(family(0.021))
    assert not is_cp(family(0.06))
    assert is_cp(IDENTITY)


def test_cp_boundary_between_0527_and_0528():
    assert is_cp(family(0.0527))
    assert not is_cp(family(0.0528))


def test_is_cp_agrees_with_quartic(rng):
    # the rounded quartic coefficients place the root within 1e-6 of the Choi boundary
    root = math.sqrt((101.0098436 - math.sqrt(101.0098436 ** 2 - 4 * 100.2531329 * 0.2805326349)) / (2 * 100.2531329))
    for t1 in rng.uniform(-0.06, 0.06, 1000):
        if abs(abs(t1) - root) < 1e-6:
            continue
        assert is_cp(family(t1)) == (cp_quartic(t1) >= 0)


def test_non_ball_channel_is_not_cp():
    ch = QubitChannel(0.8, 0.8015, 0.75, 0.22, 0, 0.245)
    assert not ch.image_in_ball()
    assert not is_cp(ch)
