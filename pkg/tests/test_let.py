import numpy as np
import pytest

from hkgeo.measures import DiscreteMeasure, dilate, hellinger_sq, wasserstein_sq
from hkgeo.let import (
    LetProblem,
    ghk_sq,
    hk_sq,
    let_problem,
    lift_to_cone,
    limit_diagnostics,
    solve_let,
    solve_let_exact_small,
    verify_optimality,
)

TOL = 1e-9


def dirac(x, w):
    return DiscreteMeasure([np.atleast_1d(x)], [w])


def random_measure(rng, n, dim=2, scale=1.0):
    return DiscreteMeasure(rng.normal(0, scale, (n, dim)), rng.uniform(0.1, 2.0, n))


def ghk_single_atom(a, b, d):
    return a + b - 2.0 * np.sqrt(a * b) * np.exp(-d * d / 2.0)


def hk_single_atom(a, b, d):
    return a + b - 2.0 * np.sqrt(a * b) * np.cos(min(d, np.pi / 2))


class TestSolveLetBasics:
    def test_zero_target_gives_total_mass(self):
        # gamma = 0 and F(0) = 1 on every atom of mu0
        rng = np.random.default_rng(0)
        mu = random_measure(rng, 5)
        zero = DiscreteMeasure(np.empty((0, 2)), [], dim=2)
        s = solve_let(let_problem(mu, zero, "ghk"), TOL)
        assert s.primal_value == pytest.approx(mu.mass, rel=1e-12)
        assert s.gap == pytest.approx(0.0, abs=1e-12)
        assert np.all(s.sigma0 == 0.0)

    def test_identical_measures_zero(self):
        rng = np.random.default_rng(1)
        mu = random_measure(rng, 6)
        s = solve_let(let_problem(mu, mu, "ghk"), TOL)
        assert s.primal_value == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(s.sigma0, 1.0, atol=1e-6)
        assert np.allclose(s.sigma1, 1.0, atol=1e-6)

    def test_single_atom_closed_form_and_plan_mass(self):
        a, b, d = 0.9, 2.3, 1.1
        s = solve_let(let_problem(dirac(0.0, a), dirac(d, b), "ghk"), TOL)
        assert s.primal_value == pytest.approx(ghk_single_atom(a, b, d), rel=1e-9)
        m_opt = np.sqrt(a * b) * np.exp(-d * d / 2)
        assert s.plan[0, 0] == pytest.approx(m_opt, rel=1e-7)

    def test_nan_cost_rejected(self):
        mu = dirac(0.0, 1.0)
        with pytest.raises(ValueError):
            LetProblem(mu, mu, np.array([[np.nan]]))

    def test_matches_exact_small_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(15):
            n0, n1 = rng.integers(1, 4, 2)
            m0 = random_measure(rng, n0)
            m1 = random_measure(rng, n1)
            p = let_problem(m0, m1, "ghk")
            v_scaling = solve_let(p, TOL).primal_value
            v_exact = solve_let_exact_small(p).primal_value
            assert v_scaling == pytest.approx(v_exact, rel=1e-8, abs=1e-10)


class TestGhkHk:
    def test_ghk_single_atoms_randomized(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.uniform(0.1, 10, 2)
            d = rng.uniform(0, 3)
            v = ghk_sq(dirac(0.0, a), dirac(d, b), TOL)
            assert v == pytest.approx(ghk_single_atom(a, b, d), rel=1e-6)

    def test_hk_single_atoms_randomized(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a, b = rng.uniform(0.1, 10, 2)
            d = rng.uniform(0, 3)
            v = hk_sq(dirac(0.0, a), dirac(d, b), TOL)
            assert v == pytest.approx(hk_single_atom(a, b, d), rel=1e-6)

    def test_hk_forbidden_forces_full_mass(self):
        # d >= pi/2 with a = b = 1: coupling forbidden, value = 2
        v = hk_sq(dirac(0.0, 1.0), dirac(2.0, 1.0), TOL)
        assert v == pytest.approx(2.0, rel=1e-12)

    def test_ghk_zero_measure(self):
        rng = np.random.default_rng(5)
        mu = random_measure(rng, 4)
        zero = DiscreteMeasure(np.empty((0, 2)), [], dim=2)
        assert ghk_sq(mu, zero, TOL) == pytest.approx(mu.mass, rel=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            m0 = random_measure(rng, 4)
            m1 = random_measure(rng, 5)
            assert ghk_sq(m0, m1, TOL) == pytest.approx(ghk_sq(m1, m0, TOL), rel=2 * TOL, abs=1e-10)
            assert hk_sq(m0, m1, TOL) == pytest.approx(hk_sq(m1, m0, TOL), rel=2 * TOL, abs=1e-10)

    def test_mass_homogeneity(self):
        rng = np.random.default_rng(7)
        m0 = random_measure(rng, 4)
        m1 = random_measure(rng, 3)
        base = hk_sq(m0, m1, TOL)
        for c in (0.5, 2.0, 10.0):
            s0 = DiscreteMeasure(m0.points, c * m0.weights)
            s1 = DiscreteMeasure(m1.points, c * m1.weights)
            assert hk_sq(s0, s1, TOL) == pytest.approx(c * base, rel=2e-9)

    def test_hk_triangle_inequality(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            ms = [random_measure(rng, rng.integers(1, 6)) for _ in range(3)]
            d01 = np.sqrt(hk_sq(ms[0], ms[1], TOL))
            d12 = np.sqrt(hk_sq(ms[1], ms[2], TOL))
            d02 = np.sqrt(hk_sq(ms[0], ms[2], TOL))
            assert d02 <= d01 + d12 + 1e-6

    def test_dilation_isometry(self):
        # HK with rescaled cost equals HK between dilated measures
        rng = np.random.default_rng(9)
        m0 = random_measure(rng, 5)
        m1 = random_measure(rng, 5)
        lam = 2.5
        direct = hk_sq(dilate(m0, lam), dilate(m1, lam), TOL)
        from hkgeo.measures import cost_matrix_sq
        from hkgeo.cone import let_cost

        d = np.sqrt(cost_matrix_sq(m0, m1))
        p = LetProblem(m0, m1, let_cost("hk", lam * d))
        assert solve_let(p, TOL).primal_value == pytest.approx(direct, rel=1e-8)


class TestCertificates:
    def test_random_instances_certified(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            m0 = random_measure(rng, rng.integers(2, 9))
            m1 = random_measure(rng, rng.integers(2, 9))
            for kind in ("ghk", "hk"):
                p = let_problem(m0, m1, kind)
                s = solve_let(p, TOL)
                assert s.converged
                assert -1e-9 <= s.gap <= TOL * (1 + abs(s.primal_value)) + 1e-15
                rep = verify_optimality(p, s, 1e-6)
                assert rep.ok(), rep.as_dict()

    def test_perturbed_sigma_fails_support_condition(self):
        rng = np.random.default_rng(11)
        m0 = random_measure(rng, 4)
        m1 = random_measure(rng, 4)
        p = let_problem(m0, m1, "ghk")
        s = solve_let(p, TOL)
        s.sigma0 = s.sigma0.copy()
        s.sigma0[np.argmax(s.sigma0)] *= 1.1
        rep = verify_optimality(p, s, 1e-6)
        assert rep.product_support_violation > 1e-6

    def test_single_atom_sigma_closed_form(self):
        a, b, d = 1.4, 0.6, 0.8
        s = solve_let(let_problem(dirac(0.0, a), dirac(d, b), "ghk"), TOL)
        assert s.sigma0[0] == pytest.approx(np.sqrt(b / a) * np.exp(-d * d / 2), rel=1e-7)
        assert s.sigma1[0] == pytest.approx(np.sqrt(a / b) * np.exp(-d * d / 2), rel=1e-7)
        assert s.sigma0[0] * s.sigma1[0] == pytest.approx(np.exp(-d * d), rel=1e-7)

    def test_dual_feasibility_entrywise(self):
        rng = np.random.default_rng(12)
        m0 = random_measure(rng, 6)
        m1 = random_measure(rng, 6)
        p = let_problem(m0, m1, "ghk")
        s = solve_let(p, TOL)
        lhs = s.phi0[:, None] + s.phi1[None, :]
        assert np.max(lhs - p.cost / 2) <= 1e-9


class TestConeLift:
    def test_marginals_and_cost(self):
        rng = np.random.default_rng(13)
        for kind in ("ghk", "hk"):
            m0 = random_measure(rng, 5)
            m1 = random_measure(rng, 6)
            p = let_problem(m0, m1, kind)
            s = solve_let(p, TOL)
            cp = lift_to_cone(p, s)
            h0, h1 = cp.homogeneous_marginals()
            assert h0.allclose(m0, atol=1e-8)
            assert h1.allclose(m1, atol=1e-8)
            assert cp.cone_cost() == pytest.approx(s.primal_value, abs=1e-8 * (1 + abs(s.primal_value)))

    def test_single_atom_radii(self):
        a, b, d = 0.8, 1.9, 0.5
        p = let_problem(dirac(0.0, a), dirac(d, b), "ghk")
        s = solve_let(p, TOL)
        cp = lift_to_cone(p, s)
        assert len(cp.pairs) == 1
        p0, p1, w, _ = cp.pairs[0]
        assert p0.radius == pytest.approx(1 / np.sqrt(s.sigma0[0]))
        assert p1.radius == pytest.approx(1 / np.sqrt(s.sigma1[0]))

    def test_killed_atoms_become_vertex_pairs(self):
        # far-apart single atoms under HK: plan empty, two vertex pairs
        p = let_problem(dirac(0.0, 1.0), dirac(3.0, 2.0), "hk")
        s = solve_let(p, TOL)
        cp = lift_to_cone(p, s)
        assert len(cp.pairs) == 2
        h0, h1 = cp.homogeneous_marginals()
        assert h0.mass == pytest.approx(1.0)
        assert h1.mass == pytest.approx(2.0)
        assert cp.cone_cost() == pytest.approx(3.0)


class TestLimitDiagnostics:
    def test_ladder_monotone_and_converges(self):
        rng = np.random.default_rng(14)
        n = 4
        m0 = DiscreteMeasure(rng.uniform(-1, 1, (n, 2)), rng.uniform(0.2, 1.5, n))
        w = rng.uniform(0.2, 1.5, n)
        w *= m0.mass / w.sum()
        m1 = DiscreteMeasure(rng.uniform(-1, 1, (n, 2)), w)
        tab = limit_diagnostics(m0, m1, [1, 2, 4, 8, 16, 32, 64], TOL)
        assert tab["hk_monotone"] and tab["w_monotone"]
        assert tab["hk_lambda_sq"][-1] == pytest.approx(tab["hellinger_sq"], rel=0.02)
        assert tab["w_ladder_sq"][-1] == pytest.approx(tab["wasserstein_sq"], rel=0.02)

    def test_mutually_singular_saturates_to_hellinger(self):
        a, b = 0.7, 1.3
        m0 = dirac(0.0, a)
        m1 = dirac(1.0, b)
        tab = limit_diagnostics(m0, m1, [1, 2, 4, 8], TOL)
        assert tab["hk_lambda_sq"][-1] == pytest.approx(a + b, rel=1e-9)
        assert tab["hellinger_sq"] == pytest.approx(a + b)

    def test_grid_must_increase(self):
        m = dirac(0.0, 1.0)
        with pytest.raises(ValueError):
            limit_diagnostics(m, m, [1.0, 1.0], TOL)


class TestIsometricImmersion:
    def test_hk_single_atoms_match_cone_distance(self):
        # hk_sq(a delta_x, b delta_y) equals the squared cone distance of
        # ([x, sqrt(a)], [y, sqrt(b)]) with the base distance capped at pi/2
        from hkgeo.cone import ConePoint, cone_dist

        rng = np.random.default_rng(99)
        for _ in range(100):
            a, b = rng.uniform(0.1, 5.0, 2)
            d = rng.uniform(0.0, 3.0)
            v = hk_sq(dirac(0.0, a), dirac(d, b), TOL)
            cd = cone_dist(np.pi, ConePoint([0.0], np.sqrt(a)), ConePoint([d], np.sqrt(b)), min(d, np.pi / 2))
            assert v == pytest.approx(cd**2, rel=1e-6, abs=1e-10)
