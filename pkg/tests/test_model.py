import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cicopula.copulas import FGM, Clayton, Independence
from cicopula.marginals import Exponential, Power, Uniform01
from cicopula.model import (
    CandidateCopula,
    CiModel,
    Component,
    conditional_cdf,
    default_rule,
    direct_fgm_candidate,
    fgm_pair_candidate,
    joint_cdf,
    joint_copula,
    joint_copula_with_z,
    joint_copula_with_z_batch,
    model_candidate,
    product_candidate,
    rectangle_probability,
    stress_strength,
    validate_candidate,
    verify_ci,
)
from cicopula.numerics import gauss_rule

from conftest import load, random_model

unit = st.floats(0.0, 1.0)


def midpoint_fgm_pair(u, v, alpha, upper, points=10**7, chunk=10**6):
    """Midpoint sum of prod_i d/dt[u_i t (1 + alpha (1-u_i)(1-t))] over [0, upper]."""
    total = 0.0
    step = upper / points
    for start in range(0, points, chunk):
        t = (np.arange(start, min(start + chunk, points)) + 0.5) * step
        gu = u * (1 + alpha * (1 - u) * (1 - t)) - u * t * alpha * (1 - u)
        gv = v * (1 + alpha * (1 - v) * (1 - t)) - v * t * alpha * (1 - v)
        total += float(np.sum(gu * gv))
    return total * step


def test_fgm_pair_joint_copula_against_riemann_oracle():
    model = load("fgm_pair")
    assert joint_copula(model, [0.5, 0.5]) == pytest.approx(13 / 48, abs=1e-12)
    assert joint_copula(model, [0.5, 0.5]) == pytest.approx(midpoint_fgm_pair(0.5, 0.5, 1.0, 1.0), abs=1e-8)


def test_fgm_pair_copula_with_z_against_riemann_oracle():
    model = load("fgm_pair")
    got = joint_copula_with_z(model, [0.5, 0.5], 0.5)
    assert got == pytest.approx(19 / 96, abs=1e-12)
    assert got == pytest.approx(midpoint_fgm_pair(0.5, 0.5, 1.0, 0.5), abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-1, 1), u=unit, v=unit)
def test_two_fgm_closed_form(alpha, u, v):
    model = CiModel((Component(FGM(alpha), Uniform01()),) * 2)
    expected = u * v * (1 + alpha**2 / 3 * (1 - u) * (1 - v))
    assert joint_copula(model, [u, v]) == pytest.approx(expected, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), data=st.data())
def test_joint_copula_is_a_copula(seed, n, data):
    model = random_model(np.random.default_rng(seed), n)
    u = np.array(data.draw(st.lists(unit, min_size=n, max_size=n)))
    c = joint_copula(model, u)
    # Frechet bounds
    assert max(0.0, u.sum() - (n - 1)) - 1e-10 <= c <= u.min() + 1e-10
    # grounded and uniform margins
    i = data.draw(st.integers(0, n - 1))
    zeroed = u.copy()
    zeroed[i] = 0.0
    assert joint_copula(model, zeroed) == pytest.approx(0.0, abs=1e-14)
    ones = np.ones(n)
    ones[i] = u[i]
    assert joint_copula(model, ones) == pytest.approx(u[i], abs=1e-9)


def test_with_z_reaches_joint_copula_at_w_one():
    model = load("mixed_clayton")
    u = [0.3, 0.6, 0.8, 0.5]
    assert joint_copula_with_z(model, u, 1.0) == pytest.approx(joint_copula(model, u), abs=1e-12)
    assert joint_copula_with_z(model, u, 0.0) == 0.0
    batch = joint_copula_with_z_batch(model, np.array([u, u]), np.array([0.25, 1.0]))
    assert batch[0] == pytest.approx(joint_copula_with_z(model, u, 0.25), abs=1e-14)
    assert batch[1] == pytest.approx(joint_copula(model, u), abs=1e-12)


def test_joint_cdf_maps_through_marginals():
    model = load("power_uniform_opposed_fgm")
    # F(x1, x2) = C(x1^2, x2)
    assert joint_cdf(model, [0.5, 0.5]) == pytest.approx(7 / 64, abs=1e-13)
    assert joint_cdf(model, [0.5, 0.5]) == pytest.approx(joint_copula(model, [0.25, 0.5]), abs=1e-15)


def test_conditional_cdf():
    model = load("power_uniform_opposed_fgm")
    # h(u, 0) = u + alpha u (1 - u) with alpha = -1 and u = F_X1(0.5) = 1/4
    assert conditional_cdf(model, 1, 0.5, 0.0) == pytest.approx(0.0625)
    assert conditional_cdf(load("power_uniform_same_sign_fgm"), 1, 0.5, 0.0) == pytest.approx(0.4375)
    with pytest.raises(IndexError):
        conditional_cdf(model, 3, 0.5, 0.0)


def test_rectangle_probability():
    model = load("fgm_pair_plus_independent")
    full = [(0.0, 1.0)] * 4
    assert rectangle_probability(model, full) == pytest.approx(1.0, abs=1e-12)
    halves = [[(0.0, 0.5), (0.5, 1.0)]] * 4
    total = sum(
        rectangle_probability(model, [halves[k][(mask >> k) & 1] for k in range(4)]) for mask in range(16)
    )
    assert total == pytest.approx(1.0, abs=1e-12)
    box = [(0.2, 0.7), (0.1, 0.4), (0.0, 1.0), (0.0, 1.0)]
    a = joint_cdf
    expected = (
        a(model, [0.7, 0.4, 1, 1]) - a(model, [0.2, 0.4, 1, 1]) - a(model, [0.7, 0.1, 1, 1]) + a(model, [0.2, 0.1, 1, 1])
    )
    assert rectangle_probability(model, box) == pytest.approx(expected, abs=1e-13)


def test_stress_strength_power_uniform_models():
    assert stress_strength(load("power_uniform_opposed_fgm"), 1, 2) == pytest.approx(31 / 90, abs=1e-10)
    assert stress_strength(load("power_uniform_same_sign_fgm"), 1, 2) == pytest.approx(29 / 90, abs=1e-10)


def test_stress_strength_independent_closed_form():
    model = CiModel((Component(Independence(), Power(2.0)), Component(Independence(), Uniform01())))
    # P(X1 < X2) = int_0^1 x^2 dx
    assert stress_strength(model, 1, 2) == pytest.approx(1 / 3, abs=1e-12)
    model = CiModel((Component(Independence(), Exponential(1.0)), Component(Independence(), Exponential(3.0))))
    assert stress_strength(model, 1, 2) == pytest.approx(1 / 4, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_stress_strength_complementary(seed):
    model = random_model(np.random.default_rng(seed), 2)
    total = stress_strength(model, 1, 2) + stress_strength(model, 2, 1)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_model_validation():
    with pytest.raises(ValueError, match="at least one component"):
        CiModel(())
    with pytest.raises(ValueError):
        CiModel((Component(FGM(3.0, check=False), Uniform01()),))


def test_default_quadrature_choice():
    assert default_rule([FGM(0.5), Independence()]).order == 64
    assert default_rule([FGM(0.5), Clayton(1.0)]).order > 64
    m = load("fgm_pair").with_quad(gauss_rule(16))
    assert m.quad.order == 16
    assert joint_copula(m, [0.5, 0.5]) == pytest.approx(13 / 48, abs=1e-14)


def test_verify_ci_outcomes():
    indep = CiModel((Component(Independence(), Uniform01()),) * 2)
    assert verify_ci(product_candidate(2), indep).passed
    fgm = load("fgm_pair")
    assert verify_ci(fgm_pair_candidate(1.0), fgm).passed
    assert verify_ci(model_candidate(fgm), fgm).passed
    report = verify_ci(direct_fgm_candidate(1.0), fgm)
    assert not report.passed
    assert report.residual >= 0.01


def test_verify_ci_rejects_non_copula_candidate():
    bad = CandidateCopula(lambda u, w: np.full(u.shape[0], 0.5), 2, "constant")
    assert validate_candidate(bad)["grounded"] > 0.1
    with pytest.raises(ValueError):
        verify_ci(bad, load("fgm_pair"))


@pytest.mark.parametrize("alpha", [-1.0, -0.4, 0.0, 0.7, 1.0])
def test_fgm_pair_candidate_grounded(alpha):
    cand = fgm_pair_candidate(alpha)
    pts = np.array([[0.3, 0.6], [0.9, 0.2]])
    np.testing.assert_allclose(cand(pts, np.zeros(2)), 0.0, atol=1e-15)
    errs = validate_candidate(cand)
    assert max(errs.values()) < 1e-12
