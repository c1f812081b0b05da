import numpy as np
import pytest

from hmsolve.analysis import contraction_factor
from hmsolve.operators import OperatorConstants, ScaledIdentity, ScaledIdentityMulti
from hmsolve.problems import gen_scalar_affine, gen_spd_linear
from hmsolve.schemes import (
    ProblemInstance,
    StoppingRule,
    make_step_sequence,
    run_fh,
    run_mann,
    run_new,
    run_zgy,
)

ONE = make_step_sequence("constant", value=1.0)
ZERO = make_step_sequence("constant", value=0.0)
HALF = make_step_sequence("constant", value=0.5)


class TestStepSequences:
    def test_constant_properties(self):
        seq = make_step_sequence("constant", value=0.9)
        assert seq.sums_to_infinity
        assert seq.lower_bound == 0.9
        assert not seq.tends_to_zero
        assert seq.value(17) == 0.9

    def test_harmonic(self):
        seq = make_step_sequence("harmonic", offset=1)
        assert [seq.value(n) for n in range(3)] == [1.0, 0.5, 1 / 3]
        assert seq.sums_to_infinity and seq.tends_to_zero

    def test_zero_constant_does_not_diverge(self):
        assert not make_step_sequence("constant", value=0.0).sums_to_infinity

    def test_one_minus_harmonic(self):
        seq = make_step_sequence("one-minus-harmonic", offset=2)
        assert seq.value(0) == 0.5
        assert seq.lower_bound == 0.5
        assert not seq.tends_to_zero

    def test_custom_table_repeats_last(self):
        seq = make_step_sequence("custom-table", table=[0.1, 0.4])
        assert seq.value(0) == 0.1 and seq.value(5) == 0.4
        assert seq.sums_to_infinity

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            make_step_sequence("constant", value=1.5)


def _identity_problem(lam):
    return ProblemInstance(
        h=ScaledIdentity(1),
        a=ScaledIdentity(1),
        m=ScaledIdentityMulti(1),
        constants=OperatorConstants(1, 1, 1, 1, 1),
        lam=lam,
        dim=1,
        known_solution=[0.0],
    )


class TestFMap:
    def test_identity_problem_maps_to_origin(self):
        p = _identity_problem(1.0)
        assert np.allclose(p.f_map([7.0]), [0.0], atol=1e-12)

    def test_scalar_resolvent_value(self):
        # R[3 - 1.5] = 1.5/1.5 = 1 with lam = 0.5
        p = _identity_problem(0.5)
        assert p.f_map([3.0])[0] == pytest.approx(1.0, abs=1e-12)

    def test_known_solution_is_fixed_point(self):
        p = gen_scalar_affine(b=2.0, lam=0.5)
        assert p.residual(p.known_solution) <= 1e-10


class TestRunFH:
    def test_one_step_exact_when_kappa_zero(self):
        p = gen_scalar_affine(b=2.0, lam=1.0)
        assert p.contraction_factor() == 0.0
        trace = run_fh(p, [40.0])
        assert trace.steps_used == 1
        assert trace.errors[-1] == 0.0
        assert trace.converged

    def test_exact_one_third_contraction(self):
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_fh(p, [4.0], StoppingRule(tol=-1.0, max_steps=10))
        for n in range(10):
            assert trace.errors[n + 1] / trace.errors[n] == pytest.approx(1 / 3, abs=1e-12)

    def test_start_at_solution_is_stationary(self):
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_fh(p, p.known_solution)
        assert trace.steps_used == 0
        assert trace.errors == [0.0]
        assert trace.converged

    def test_monotone_error_decrease(self):
        p = gen_spd_linear(20, seed=4)
        kappa = p.contraction_factor()
        assert kappa < 1
        trace = run_fh(p, np.zeros(20))
        for n in range(trace.steps_used):
            assert trace.errors[n + 1] <= kappa * trace.errors[n] + 1e-8

    def test_trace_lengths(self):
        p = gen_spd_linear(10, seed=1)
        trace = run_fh(p, np.zeros(10))
        assert len(trace.errors) == trace.steps_used + 1
        assert len(trace.residuals) == trace.steps_used + 1
        assert trace.residuals[-1] <= 1e-10


class TestRunZGY:
    def test_frozen_when_xi_zero(self):
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_zgy(p, [5.0], ZERO, HALF, StoppingRule(tol=-1.0, max_steps=5))
        assert all(it[0] == 5.0 for it in trace.iterates)

    def test_hand_rolled_five_steps(self):
        # independent scalar recursion for b = 2, lam = 0.5, xi = mu = 1/2
        p = gen_scalar_affine(b=2.0, lam=0.5)
        f = lambda x: (0.5 * x + 1.0) / 1.5
        q = 4.0
        expected = [q]
        for _ in range(5):
            r = 0.5 * q + 0.5 * f(q)
            q = 0.5 * q + 0.5 * f(r)
            expected.append(q)
        trace = run_zgy(p, [4.0], HALF, HALF, StoppingRule(tol=-1.0, max_steps=5))
        got = [it[0] for it in trace.iterates]
        assert got == pytest.approx(expected, abs=1e-12)


class TestRunMann:
    def test_per_step_bound(self):
        # e_{n+1} <= (1 - xi (1 - kappa)) e_n with kappa = 1/3, xi = 1/2
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_mann(p, [4.0], HALF, StoppingRule(tol=-1.0, max_steps=20))
        for n in range(20):
            assert trace.errors[n + 1] <= (2 / 3) * trace.errors[n] + 1e-12

    def test_stationary_at_solution(self):
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_mann(p, p.known_solution, HALF)
        assert trace.steps_used == 0


class TestRunNew:
    def test_mu_one_squares_contraction(self):
        # s_{n+1} = F(F(s_n)): errors contract by kappa^2 = 1/9 per step
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_new(p, [1.0 + 3.0 ** 12], ONE, StoppingRule(tol=-1.0, max_steps=5))
        for n in range(5):
            assert trace.errors[n + 1] / trace.errors[n] == pytest.approx(1 / 9, rel=1e-12)

    def test_stationary_at_solution(self):
        p = gen_scalar_affine(b=2.0, lam=0.5)
        trace = run_new(p, p.known_solution, HALF)
        assert trace.steps_used == 0

    def test_per_step_contraction_bound(self):
        p = gen_spd_linear(20, seed=9)
        kappa = p.contraction_factor()
        mu = make_step_sequence("constant", value=0.7)
        trace = run_new(p, np.zeros(20), mu)
        factor = kappa * (1 - 0.7 * (1 - kappa))
        for n in range(trace.steps_used):
            assert trace.errors[n + 1] <= factor * trace.errors[n] + 1e-8


class TestCollapseIdentities:
    @pytest.mark.parametrize("dim", [1, 8])
    def test_bitwise_equal_to_fh(self, dim):
        p = gen_spd_linear(dim, seed=2) if dim > 1 else gen_scalar_affine(b=2.0, lam=0.5)
        x0 = np.full(p.dim, 3.0)
        stop = StoppingRule(tol=1e-10, max_steps=200)
        fh = run_fh(p, x0, stop)
        for trace in (
            run_zgy(p, x0, ONE, ZERO, stop),
            run_mann(p, x0, ONE, stop),
            run_new(p, x0, ZERO, stop),
        ):
            assert len(trace.iterates) == len(fh.iterates)
            for a, b in zip(trace.iterates, fh.iterates):
                assert np.array_equal(a, b)


class TestContractionOfF:
    def test_random_pair_audit(self):
        p = gen_spd_linear(15, seed=6)
        kappa = contraction_factor(p.constants, p.lam)
        rng = np.random.default_rng(0)
        for _ in range(300):
            x = rng.standard_normal(15)
            y = rng.standard_normal(15)
            lhs = np.linalg.norm(p.f_map(x) - p.f_map(y))
            assert lhs <= kappa * np.linalg.norm(x - y) + 1e-8

    def test_divergent_run_flagged(self):
        # F(x) = (1 - 2*lam) x / (1 + lam) has slope -5/4 at lam = 3
        p = ProblemInstance(
            h=ScaledIdentity(1),
            a=ScaledIdentity(2),
            m=ScaledIdentityMulti(1),
            constants=OperatorConstants(1, 1, 2, 2, 1),
            lam=3.0,
            dim=1,
            known_solution=[0.0],
        )
        assert p.contraction_factor() >= 1.0
        trace = run_fh(p, [4.0], StoppingRule(tol=1e-10, max_steps=10))
        assert trace.hypothesis_violated
        assert not trace.converged
