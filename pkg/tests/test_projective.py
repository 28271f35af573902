import numpy as np
import pytest

from finsler_lab import projective as pj
from finsler_lab.alphabeta import PhiFamily
from finsler_lab.errors import DegenerateFit, DomainError
from finsler_lab.fields import riemann_from_doc
from finsler_lab.riemann import point_data
from finsler_lab.spray import finsler_jet

from _builders import EUCLID, MATS, QUAD, affine, conformal, constant, gradient, spec

C = [0.1, 0.2, -0.1]
FLAT_Q = spec(EUCLID, constant(C), QUAD)
FLAT_M = spec(EUCLID, constant(C), MATS)
GRAD = gradient([[0.2, [2, 0, 0]], [0.1, [1, 1, 0]], [0.1, [0, 0, 2]]])
KILLING = affine([0.0, 0.0, 0.3], [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
AXIS_PLAN = pj.SamplePlan([(0.0, 0.0, z) for z in np.linspace(-0.5, 0.5, 6)], fibers=12)


@pytest.fixture(scope="module")
def plan():
    return pj.SamplePlan.for_specs([FLAT_Q, FLAT_M], points=4, fibers=8, seed=3)


def quadratic_douglas_witness(tau, k=0.7, c=(0.1, -0.2, 0.15), x0=(0.1, 0.2, -0.3)):
    """Affine b with b_{i|j}(x0) = 2 tau ((1 + 2k b^2) I - 3k b b^T) at b(x0) = c."""
    c, x0 = np.array(c), np.array(x0)
    M = 2 * tau * ((1 + 2 * k * c @ c) * np.eye(3) - 3 * k * np.outer(c, c))
    s = spec(EUCLID, affine(c - M @ x0, M), {"family": "quadratic", "epsilon": 0.3, "k": k})
    return s, pj.SamplePlan([tuple(x0)], fibers=10, seed=1)


# -- sample plans --------------------------------------------------------------


def test_plan_is_deterministic_and_regular(plan):
    again = pj.SamplePlan.for_specs([FLAT_Q, FLAT_M], points=4, fibers=8, seed=3)
    assert again == plan
    for i, x, ys in plan.samples():
        assert np.all(np.abs(x) <= 1)
        assert all(np.isclose(np.linalg.norm(y), 1.0) for y in ys)
        assert [list(y) for y in ys] == [list(y) for y in again.fiber_vectors(i)]
    assert pj.SamplePlan.for_specs([FLAT_Q], seed=4) != pj.SamplePlan.for_specs([FLAT_Q], seed=5)


def test_plan_rejects_impossible_regions():
    huge = spec(EUCLID, constant([0.6, 0.0, 0.0]), MATS)
    with pytest.raises(DomainError):
        pj.SamplePlan.for_specs([huge], points=2)


# -- projective relatedness -----------------------------------------------------


def test_spray_proportional_examples(plan):
    v = pj.check_spray_proportional(FLAT_Q, FLAT_Q, plan)
    assert v.passed and v.fitted["P_max_abs"] == 0.0
    v = pj.check_spray_proportional(FLAT_Q, FLAT_M, plan)
    assert v.passed and v.fitted["P_max_abs"] == 0.0
    conf = spec(conformal([[0.3, [1, 0, 0]]]), constant(C), MATS)
    v = pj.check_spray_proportional(FLAT_Q, conf, plan)
    assert not v.passed and v.residual > 1e-2


def test_spray_proportional_riemannian_against_flat_matsumoto(plan):
    # beta = 0 reduces F to the euclidean alpha; both sprays vanish
    s = spec(EUCLID, constant([0.0, 0.0, 0.0]), QUAD)
    assert pj.check_spray_proportional(s, FLAT_M, plan).passed


def test_riemann_projective_examples():
    p2 = pj.SamplePlan.in_box([-1, -1], [1, 1], points=4, fibers=6)
    e = riemann_from_doc(EUCLID, 2)
    c = riemann_from_doc(conformal([[1.0, [1, 0]]]), 2)
    scaled = riemann_from_doc(conformal([[0.7, [0, 0]]]), 2)
    assert pj.check_riemann_projective(e, e, p2).passed
    assert pj.check_riemann_projective(e, scaled, p2).passed
    v = pj.check_riemann_projective(e, c, p2)
    assert not v.passed and v.residual > 1e-3


# -- Douglas conditions ---------------------------------------------------------


def test_douglas_quadratic_flat(plan):
    v = pj.check_douglas_quadratic(FLAT_Q, plan)
    assert v.passed and v.fitted["tau"] == [0.0] * 4 and v.fitted["max_abs_D"] == 0.0


def test_douglas_quadratic_symmetric_traceless_fails(plan):
    M = [[0.2, 0.1, 0.0], [0.1, -0.1, 0.05], [0.0, 0.05, -0.1]]
    s = spec(EUCLID, affine(C, M), QUAD)
    v = pj.check_douglas_quadratic(s, plan)
    assert not v.passed and v.residual > 1e-3
    assert v.fitted["max_abs_D"] > 1e-3


@pytest.mark.parametrize("tau", [0.05, -0.12])
def test_douglas_quadratic_pointwise_witness(tau):
    s, wplan = quadratic_douglas_witness(tau)
    v = pj.check_douglas_quadratic(s, wplan)
    assert v.passed
    assert v.fitted["tau"][0] == pytest.approx(tau, rel=1e-12)
    assert v.fitted["max_abs_D"] < 1e-7 and v.fitted["douglas_consistent"]


def test_douglas_quadratic_biconditional(plan):
    cases = [FLAT_Q, quadratic_douglas_witness(0.08)[0], spec(EUCLID, GRAD, QUAD),
             spec(conformal([[0.2, [1, 0, 0]]]), constant(C), QUAD)]
    for s in cases:
        p = quadratic_douglas_witness(0.08)[1] if s is cases[1] else plan
        v = pj.check_douglas_quadratic(s, p)
        assert v.passed == (v.fitted["max_abs_D"] < 1e-7)


def test_douglas_quadratic_wrong_family(plan):
    with pytest.raises(DomainError):
        pj.check_douglas_quadratic(FLAT_M, plan)


def test_douglas_degenerate_flag():
    s = spec(EUCLID, constant([0.0, 0.0, 0.0]), QUAD)
    v = pj.check_douglas_quadratic(s, pj.SamplePlan([(0.0, 0.0, 0.0)], fibers=4))
    assert v.passed and v.fitted["degenerate_points"] == 1


def test_scalar_fit_degenerate_basis():
    with pytest.raises(DegenerateFit):
        pj._scalar_fit([np.ones(3)], [np.zeros(3)])


@pytest.mark.parametrize("eps,k", [(0.0, 1.0), (0.3, 0.7), (-0.8, -0.4), (1.5, 2.0)])
def test_douglas_ode_quadratic_triple(eps, k):
    fam = PhiFamily("quadratic", eps, k)
    assert pj.check_douglas_ode(fam, 2 * k, 0.0, -3 * k).passed
    assert not pj.check_douglas_ode(fam, 2 * k, 0.0, 3 * k).passed


def test_douglas_ode_randers_type_and_matsumoto():
    class Linear:
        """phi = 1 + eps s, outside the shipped families."""

        b0 = 0.9

        def derivs(self, s, count):
            return [1.0 + 0.4 * s, 0.4] + [0.0] * (count - 1)

    assert pj.check_douglas_ode(Linear(), 0.0, 0.0, 0.0).passed
    v = pj.check_douglas_ode(PhiFamily("matsumoto"), 0.0, 0.0, 0.0)
    assert not v.passed and v.residual >= 2.0


def test_douglas_ode_requires_phi0_one():
    class Shifted:
        b0 = 1.0

        def derivs(self, s, count):
            return [2.0, 0.0, 0.0][: count + 1]

    with pytest.raises(DomainError):
        pj.check_douglas_ode(Shifted(), 0, 0, 0)


def test_matsumoto_douglas_examples(plan):
    assert pj.check_matsumoto_douglas(FLAT_M, plan).passed
    v = pj.check_matsumoto_douglas(spec(EUCLID, affine(C, [[0, 0.1, 0], [0.1, 0, 0], [0, 0, 0.05]]), MATS), plan)
    assert not v.passed and v.residual == pytest.approx(0.1)
    s = spec(conformal([[0.2, [1, 0, 0]]]), gradient([[0.1, [1, 0, 0]], [0.05, [0, 2, 0]]]), MATS)
    v = pj.check_matsumoto_douglas(s, plan)
    worst = max(np.max(np.abs(point_data(s, x)[1].cov)) for x in plan.points)
    assert v.residual == worst and not v.passed
    assert v.fitted["douglas_consistent"]


def test_theorem31_flat_witness(plan):
    v = pj.check_theorem31(FLAT_Q, FLAT_M, plan)
    assert v.passed
    assert all(c["pass"] for c in v.fitted["conditions"].values())
    assert v.fitted["tau"] == [0.0] * 4 and np.all(np.array(v.fitted["theta"]) == 0)
    assert v.fitted["spray_proportional_pass"]
    # the specialization with F of vanishing r_00, s_0: tau = 0 and b_{i|j} = 0
    assert all(not np.any(point_data(FLAT_Q, x)[1].cov) for x in plan.points)


def test_theorem31_non_closed_bar(plan):
    anti = spec(EUCLID, affine(C, [[0, 0.2, 0], [-0.2, 0, 0], [0, 0, 0]]), MATS)
    v = pj.check_theorem31(FLAT_Q, anti, plan)
    conds = v.fitted["conditions"]
    assert conds["i"]["pass"] and conds["ii"]["pass"] and not conds["iii"]["pass"]
    assert not v.passed
    assert not pj.check_spray_proportional(FLAT_Q, anti, plan).passed


def test_theorem31_conformal_bar(plan):
    conf = spec(conformal([[0.3, [1, 0, 0]]]), constant(C), MATS)
    v = pj.check_theorem31(FLAT_Q, conf, plan)
    conds = v.fitted["conditions"]
    assert conds["i"]["pass"] and not conds["ii"]["pass"] and conds["iii"]["pass"]


def test_theorem31_needs_three_dimensions():
    a = spec(EUCLID, constant([0.1, 0.0]), QUAD, dim=2)
    b = spec(EUCLID, constant([0.1, 0.0]), MATS, dim=2)
    with pytest.raises(DomainError):
        pj.check_theorem31(a, b, pj.SamplePlan([(0.0, 0.0)]))


def test_theorem31_sufficiency_on_a_family_of_witnesses():
    rng = np.random.default_rng(31)
    for _ in range(3):
        c = rng.uniform(-0.2, 0.2, 3)
        q = {"family": "quadratic", "epsilon": float(rng.uniform(-1, 1)), "k": float(rng.uniform(0.2, 1.0))}
        F, Fb = spec(EUCLID, constant(c), q), spec(EUCLID, constant(c), MATS)
        p = pj.SamplePlan.for_specs([F, Fb], points=3, fibers=6, seed=int(rng.integers(1000)))
        v = pj.check_theorem31(F, Fb, p)
        assert v.passed and v.fitted["spray_proportional_pass"]


# -- isotropy -----------------------------------------------------------------


def test_killing_examples(plan):
    assert pj.check_killing_constant_length(FLAT_Q, plan).passed
    kill = spec(EUCLID, KILLING, QUAD)
    v = pj.check_killing_constant_length(kill, AXIS_PLAN)
    assert v.passed
    assert np.max(np.abs(point_data(kill, AXIS_PLAN.points[0])[1].s)) == 1.0
    v = pj.check_killing_constant_length(spec(EUCLID, GRAD, QUAD), plan)
    assert not v.passed and v.fitted["max_abs_r00"] > 1e-3


def test_isotropic_mean_berwald_examples(plan):
    v = pj.check_isotropic_mean_berwald(FLAT_Q, plan)
    assert v.passed and all(c == 0.0 for c in v.fitted["c"]) and v.fitted["consistent_with_killing"]
    kill = spec(EUCLID, KILLING, QUAD)
    v = pj.check_isotropic_mean_berwald(kill, AXIS_PLAN)
    assert v.passed and v.residual < 1e-8 and v.fitted["consistent_with_killing"]
    v = pj.check_isotropic_mean_berwald(spec(EUCLID, GRAD, QUAD), plan)
    assert (not v.passed) or any(abs(c) > 1e-7 for c in v.fitted["c"])
    assert v.fitted["consistent_with_killing"]


def test_isotropic_berwald_examples(plan):
    riem = spec(conformal([[0.2, [1, 0, 0]]]), constant([0.0, 0.0, 0.0]), QUAD)
    for s in (riem, FLAT_Q, FLAT_M):
        v = pj.check_isotropic_berwald(s, plan)
        assert v.passed and all(abs(c) < 1e-12 for c in v.fitted["c"])
        m = pj.check_isotropic_mean_berwald(s, plan, consistency=False)
        assert m.passed and np.allclose(m.fitted["c"], v.fitted["c"], atol=1e-12)
    assert not pj.check_isotropic_berwald(spec(EUCLID, GRAD, QUAD), plan).passed


def test_berwald_ansatz_contracts_to_mean_ansatz():
    s = spec(EUCLID, GRAD, MATS)
    x, y = np.array([0.1, -0.2, 0.3]), np.array([0.3, 0.5, -0.8])
    Fj = finsler_jet(s, x, y, order=3)
    A = pj.berwald_ansatz(Fj, y)
    assert np.allclose(0.5 * np.einsum("mjkm->jk", A), 0.5 * (3 + 1) * Fj.d2, atol=1e-12)


def test_verdict_records_are_deterministic(plan):
    a = pj.check_douglas_quadratic(spec(EUCLID, GRAD, QUAD), plan).to_record()
    b = pj.check_douglas_quadratic(spec(EUCLID, GRAD, QUAD), plan).to_record()
    assert a == b
    assert set(a) >= {"check", "pass", "residual", "tolerance", "fitted", "seed"}


def test_threads_do_not_change_results(plan, monkeypatch):
    s = spec(EUCLID, GRAD, QUAD)
    serial = pj.check_isotropic_mean_berwald(s, plan).to_record()
    monkeypatch.setenv("FINSLER_LAB_THREADS", "4")
    assert pj.check_isotropic_mean_berwald(s, plan).to_record() == serial
