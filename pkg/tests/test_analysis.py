import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractalips import (
    EmpiricalMeasure,
    PiecewiseConstantField,
    SelfSimilarMeasure,
    Trajectory,
    Word,
    bl_distance_proxy,
    field_lp_norm,
    kuramoto_model,
    lipschitz_norm_estimate,
    local_empirical_measure,
    lp_projection_bound,
    modulus_of_continuity,
    modulus_profile,
    projection_error,
    rate_fit,
    refine,
    traj_error,
    translation_vector,
    vlasov_self_convergence,
)
from fractalips.quadrature import stationary_mean


def make_traj(k, level, times, values, **meta):
    return Trajectory(k, level, np.asarray(times, float), np.asarray(values, float), meta)


def brute_force_w1(atoms_a, weights_a, atoms_b, weights_b):
    """Exact 1-D transport by LP over the full coupling polytope (small n)."""
    from scipy.optimize import linprog

    na, nb = len(atoms_a), len(atoms_b)
    cost = np.abs(np.subtract.outer(atoms_a, atoms_b)).ravel()
    A_eq = []
    b_eq = []
    for i in range(na):
        row = np.zeros((na, nb))
        row[i, :] = 1.0
        A_eq.append(row.ravel())
        b_eq.append(weights_a[i])
    for j in range(nb):
        row = np.zeros((na, nb))
        row[:, j] = 1.0
        A_eq.append(row.ravel())
        b_eq.append(weights_b[j])
    res = linprog(cost, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None))
    assert res.success
    return res.fun


class TestTrajError:
    def test_identical_trajectories_zero(self, sg_measure):
        vals = np.random.default_rng(0).random((5, 9, 1))
        t = make_traj(3, 2, np.linspace(0, 1, 5), vals)
        assert traj_error(t, t, sg_measure).max_error == 0.0

    def test_constant_fields_give_absolute_gap(self, sg_measure):
        times = np.linspace(0, 1, 4)
        a = make_traj(3, 2, times, np.full((4, 9, 1), 1.25))
        b = make_traj(3, 3, times, np.full((4, 27, 1), 2.0))
        rep = traj_error(a, b, sg_measure)
        np.testing.assert_allclose(rep.errors, 0.75, rtol=1e-12)

    def test_coarsening_gap_equals_within_parent_dispersion(self, sg_measure):
        # coarse = exact coarsening of fine: the gap is the L2 norm of the
        # within-parent deviations, expanded directly
        rng = np.random.default_rng(1)
        fine_vals = rng.random((3, 27, 1))
        times = np.array([0.0, 0.5, 1.0])
        fine = make_traj(3, 3, times, fine_vals)
        coarse_vals = fine_vals.reshape(3, 9, 3, 1).mean(axis=2)
        coarse = make_traj(3, 2, times, coarse_vals)
        rep = traj_error(coarse, fine, sg_measure)
        blocks = fine_vals.reshape(3, 9, 3)
        disp = blocks - blocks.mean(axis=2, keepdims=True)
        expect = np.sqrt((disp**2).mean(axis=(1, 2)))
        np.testing.assert_allclose(rep.errors, expect, rtol=1e-10)

    def test_grid_mismatch_rejected(self, sg_measure):
        a = make_traj(3, 2, [0.0, 1.0], np.zeros((2, 9, 1)))
        b = make_traj(3, 2, [0.0, 0.5], np.zeros((2, 9, 1)))
        with pytest.raises(ValueError):
            traj_error(a, b, sg_measure)

    def test_symmetric_after_refinement(self, sg_measure):
        rng = np.random.default_rng(2)
        times = np.array([0.0, 1.0])
        a = make_traj(3, 2, times, rng.random((2, 9, 1)))
        b_coeffs = rng.random((2, 27, 1))
        b = make_traj(3, 3, times, b_coeffs)
        ab = traj_error(a, b, sg_measure).max_error
        a_ref = make_traj(3, 3, times, np.repeat(a.values, 3, axis=1))
        ba = traj_error(b, a_ref, sg_measure).max_error
        assert ab == pytest.approx(ba, rel=1e-12)


class TestProjectionError:
    def test_constant_function_zero(self, sg_measure):
        assert projection_error(sg_measure, lambda x: np.full(len(x), 3.0), 3) <= 1e-14

    def test_level_one_indicator_already_resolved(self, sg_measure):
        s3 = np.sqrt(3.0)
        phi = lambda x: (x[:, 0] + x[:, 1] / s3 < 0.5 - 1e-9).astype(float)
        for m in (1, 2, 3):
            assert projection_error(sg_measure, phi, m) <= 1e-13

    def test_exp_kernel_errors_strictly_decrease(self, sg_measure):
        phi = lambda x: np.exp(-np.abs(x[:, 0] - x[:, 1]))
        errs = [projection_error(sg_measure, phi, m) for m in range(2, 9)]
        assert all(e1 < e0 for e0, e1 in zip(errs, errs[1:]))

    def test_projection_contraction_across_levels(self, sg_measure):
        phi = lambda x: np.sin(2 * np.pi * x[:, 0]) * x[:, 1]
        sup = 1.0
        errs = [projection_error(sg_measure, phi, m) for m in range(1, 6)]
        for e0, e1 in zip(errs, errs[1:]):
            assert e1 <= e0 + 1e-3 * sup


class TestModulus:
    def test_constant_function_zero(self, sg_measure):
        assert modulus_of_continuity(sg_measure, lambda x: np.full(len(x), 1.0),
                                     3, max_ell=5) == 0.0

    def test_linear_function_exact_scaling(self, sg, sg_measure):
        # |phi(x + tau) - phi(x)| = |c . tau| pointwise: the matched-pair
        # estimator equals (1/k)^(1/p) lambda^l max_ij |c . tau_ij|
        c = np.array([1.0, -0.5])
        phi = lambda x: x @ c
        taus = [
            translation_vector(sg, i, j)
            for i, j in itertools.permutations((1, 2, 3), 2)
        ]
        tmax = max(abs(float(t @ c)) for t in taus)
        for m in (2, 3, 4):
            got = modulus_of_continuity(sg_measure, phi, m, p_exponent=2.0,
                                        max_ell=m + 3, sublevel=2)
            expect = (1.0 / 3.0) ** 0.5 * 0.5**m * tmax
            assert got == pytest.approx(expect, rel=1e-10)
            assert got <= np.linalg.norm(c) * 0.5**m * max(
                np.linalg.norm(t) for t in taus
            )

    def test_omega_nonincreasing_in_level(self, sg_measure):
        for phi in (
            lambda x: np.exp(-np.abs(x[:, 0] - x[:, 1])),
            lambda x: np.cos(3.0 * x[:, 0]),
            lambda x: (x[:, 0] > 0.4).astype(float),
        ):
            levels, omega = modulus_profile(sg_measure, phi, range(2, 8),
                                            max_ell=8, sublevel=2)
            assert np.all(np.diff(omega) <= 1e-15)
            assert np.all(omega >= 0)

    def test_rejects_mixed_linear_parts(self):
        from fractalips import IFS, Similitude

        ifs = IFS(
            (
                Similitude.homothety(0.5, np.zeros(2)),
                Similitude.rotation_2d(0.5, 0.4, np.array([1.0, 0.0])),
            )
        )
        meas = SelfSimilarMeasure.uniform(ifs)
        with pytest.raises(ValueError):
            modulus_of_continuity(meas, lambda x: x[:, 0], 2, max_ell=4)

    def test_fitted_alpha_for_linear_function(self, sg_measure):
        phi = lambda x: x @ np.array([1.0, -0.5])
        levels, omega = modulus_profile(sg_measure, phi, range(2, 7), max_ell=8)
        rep = lipschitz_norm_estimate(levels, omega, lam=0.5)
        assert rep.fitted_alpha == pytest.approx(1.0, abs=0.15)

    def test_projection_bound_holds_for_linear_function(self, sg_measure):
        # observed errors stay below (k^(-1/2) (k-1)^(1/2) / (1 - lambda))
        # * lip_norm * lambda^m on the gasket, m = 2..7
        phi = lambda x: x @ np.array([1.0, -0.5])
        levels = np.arange(2, 8)
        errors = np.array(
            [projection_error(sg_measure, phi, m, 2.0, 3) for m in levels]
        )
        mls, omega = modulus_profile(sg_measure, phi, levels, max_ell=10)
        rep = lipschitz_norm_estimate(mls, omega, lam=0.5)
        pref = 3.0**-0.5 * 2.0**0.5 / (1.0 - 0.5)
        bound = pref * rep.lip_norm * 0.5**levels
        assert np.all(errors <= bound)


class TestLipschitzNormEstimate:
    def test_exact_loglinear_alpha_one(self):
        levels = np.arange(2, 9)
        omega = 2.0 ** (-levels.astype(float))
        rep = lipschitz_norm_estimate(levels, omega, lam=0.5)
        assert rep.fitted_alpha == pytest.approx(1.0, rel=1e-12)
        assert rep.lip_norm == pytest.approx(1.0, rel=1e-10)

    def test_exact_loglinear_alpha_half(self):
        levels = np.arange(2, 9)
        omega = 2.0 ** (-levels / 2.0)
        rep = lipschitz_norm_estimate(levels, omega, lam=0.5)
        assert rep.fitted_alpha == pytest.approx(0.5, rel=1e-12)

    def test_too_few_levels_rejected(self):
        with pytest.raises(ValueError):
            lipschitz_norm_estimate([2, 3], [0.1, 0.05], lam=0.5)


class TestRateFit:
    def test_quadratic_decay_reported_with_cap_note(self):
        levels = np.arange(2, 7)
        errors = 0.25**levels
        fit = rate_fit(errors, 0.5, levels=levels)
        assert fit.fitted_alpha == pytest.approx(2.0, rel=1e-12)
        assert fit.capped and fit.alpha_capped == 1.0

    def test_linear_decay(self):
        levels = np.arange(2, 7)
        fit = rate_fit(0.5**levels, 0.5, levels=levels)
        assert fit.fitted_alpha == pytest.approx(1.0, rel=1e-12)
        assert not fit.capped

    def test_nonpositive_errors_floored_with_warning(self):
        levels = np.arange(2, 7)
        errs = 0.5**levels
        errs[3] = 0.0
        with pytest.warns(UserWarning):
            fit = rate_fit(errs, 0.5, levels=levels)
        assert fit.floor_replaced == 1

    def test_bound_column_against_projection_bound(self):
        levels = np.arange(2, 8)
        errors = 0.9 * lp_projection_bound(3, 0.5, 1.0, 2.0, levels)
        fit = rate_fit(errors, 0.5, levels=levels, k=3, lip_norm=2.0)
        assert fit.below_bound
        fit_bad = rate_fit(errors * 10.0, 0.5, levels=levels, k=3, lip_norm=2.0)
        assert not fit_bad.below_bound

    def test_levels_zero_one_discarded(self):
        levels = np.arange(0, 6)
        errors = np.concatenate([[5.0, 4.0], 0.5 ** np.arange(2, 6)])
        fit = rate_fit(errors, 0.5, levels=levels)
        assert fit.fitted_alpha == pytest.approx(1.0, rel=1e-12)


class TestEmpiricalMeasure:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.zeros((2, 1)), np.array([0.5, 0.6]))

    def test_point_mass_from_identical_states(self):
        times = np.array([0.0])
        vals = np.full((1, 9, 1), 0.7)
        traj = make_traj(3, 2, times, vals)
        em = local_empirical_measure(traj, Word(3, (2,)), 0.0)
        assert em.atoms.shape == (3, 1)
        assert np.all(em.atoms == 0.7)
        assert em.weights.sum() == pytest.approx(1.0)

    def test_atom_count_and_block_selection(self):
        times = np.array([0.0])
        vals = np.arange(27.0).reshape(1, 27, 1)
        traj = make_traj(3, 3, times, vals)
        em = local_empirical_measure(traj, Word(3, (2,)), 0.0)
        np.testing.assert_array_equal(em.atoms[:, 0], np.arange(9.0, 18.0))
        np.testing.assert_allclose(em.weights, 1.0 / 9.0)

    def test_off_grid_time_rejected(self):
        traj = make_traj(3, 2, [0.0, 0.5], np.zeros((2, 9, 1)))
        with pytest.raises(ValueError):
            local_empirical_measure(traj, Word(3, (1,)), 0.3)

    def test_word_longer_than_level_rejected(self):
        traj = make_traj(3, 1, [0.0], np.zeros((1, 3, 1)))
        with pytest.raises(ValueError):
            local_empirical_measure(traj, Word(3, (1, 2)), 0.0)


class TestBLDistanceProxy:
    def delta(self, x):
        return EmpiricalMeasure(np.array([[float(x)]]), np.array([1.0]))

    def test_identical_measures_zero(self):
        em = EmpiricalMeasure(np.array([[0.1], [0.9]]), np.array([0.5, 0.5]))
        assert bl_distance_proxy(em, em) == 0.0

    def test_point_masses_at_unit_distance(self):
        assert bl_distance_proxy(self.delta(0.0), self.delta(1.0)) == 1.0

    def test_two_atom_shift_against_brute_force(self):
        a = EmpiricalMeasure(np.array([[0.0], [0.5]]), np.array([0.5, 0.5]))
        b = EmpiricalMeasure(np.array([[0.25], [0.75]]), np.array([0.5, 0.5]))
        got = bl_distance_proxy(a, b)
        assert got == pytest.approx(0.25, abs=1e-12)
        assert got == pytest.approx(
            brute_force_w1([0.0, 0.5], [0.5, 0.5], [0.25, 0.75], [0.5, 0.5]),
            abs=1e-9,
        )

    def test_weighted_case_against_lp_oracle(self):
        a_atoms, a_w = [0.0, 1.0, 2.0], [0.2, 0.5, 0.3]
        b_atoms, b_w = [0.5, 1.5], [0.6, 0.4]
        a = EmpiricalMeasure(np.array(a_atoms)[:, None], np.array(a_w))
        b = EmpiricalMeasure(np.array(b_atoms)[:, None], np.array(b_w))
        assert bl_distance_proxy(a, b) == pytest.approx(
            brute_force_w1(a_atoms, a_w, b_atoms, b_w), abs=1e-9
        )

    def test_vector_states_exact_assignment(self):
        a = EmpiricalMeasure(np.array([[0.0, 0.0], [1.0, 0.0]]), np.full(2, 0.5))
        b = EmpiricalMeasure(np.array([[0.0, 1.0], [1.0, 1.0]]), np.full(2, 0.5))
        assert bl_distance_proxy(a, b) == pytest.approx(1.0)

    def test_vector_states_unequal_counts_rejected(self):
        a = EmpiricalMeasure(np.zeros((2, 2)), np.full(2, 0.5))
        b = EmpiricalMeasure(np.zeros((3, 2)), np.full(3, 1.0 / 3.0))
        with pytest.raises(ValueError):
            bl_distance_proxy(a, b)

    @settings(max_examples=60, deadline=None)
    @given(
        data=st.lists(
            st.floats(min_value=-5, max_value=5, allow_nan=False),
            min_size=6,
            max_size=6,
        )
    )
    def test_metric_axioms_on_random_triples(self, data):
        ems = [
            EmpiricalMeasure(np.array(data[i : i + 2])[:, None], np.full(2, 0.5))
            for i in range(0, 6, 2)
        ]
        d01 = bl_distance_proxy(ems[0], ems[1])
        d10 = bl_distance_proxy(ems[1], ems[0])
        d02 = bl_distance_proxy(ems[0], ems[2])
        d12 = bl_distance_proxy(ems[1], ems[2])
        assert d01 == pytest.approx(d10, abs=1e-12)
        assert d02 <= d01 + d12 + 1e-12


class TestFieldNorm:
    def test_probability_weighting(self, sg_measure):
        f = PiecewiseConstantField(3, 2, np.full(9, -2.0))
        assert field_lp_norm(f, sg_measure, 2.0) == pytest.approx(2.0)

    def test_refinement_invariance(self, sg_measure):
        rng = np.random.default_rng(3)
        f = PiecewiseConstantField(3, 2, rng.normal(size=(9, 3)))
        g = refine(f, 5)
        assert field_lp_norm(g, sg_measure, 1.0) == pytest.approx(
            field_lp_norm(f, sg_measure, 1.0), rel=1e-13
        )


class TestVlasovSelfConvergence:
    def test_frozen_dynamics_and_deterministic_init(self, sg_measure):
        # f = 0, D = 0, identical initial data per cell: distances are zero
        # at every time
        from fractalips import ModelSpec, builtin_kernels

        def builder(level):
            return ModelSpec(
                name="frozen",
                state_dim=1,
                drift=lambda t, u, p: np.zeros_like(u),
                interaction=lambda u, v: np.zeros(
                    np.broadcast_shapes(u.shape, v.shape)
                ),
                spot_check=False,
            )

        def init_sampler(rng, cell_index, n):
            return np.full((n, 1), 0.25 * cell_index)

        table = vlasov_self_convergence(
            sg_measure,
            builder,
            builtin_kernels(2)["constant"](0.5),
            init_sampler,
            m=1,
            ells=(1, 2),
            T=0.1,
            dt=0.01,
            seeds=(1, 2),
            sublevel=2,
            output_stride=5,
        )
        assert table.distances.shape[0] == 2
        assert np.all(table.distances == 0.0)

    def test_frozen_dynamics_random_init_distances_constant_in_time(
        self, sg_measure
    ):
        # states frozen (f = 0, D = 0): per-time distances never change
        from fractalips import ModelSpec, builtin_kernels

        def builder(level):
            return ModelSpec(
                name="frozen",
                state_dim=1,
                drift=lambda t, u, p: np.zeros_like(u),
                interaction=lambda u, v: np.zeros(
                    np.broadcast_shapes(u.shape, v.shape)
                ),
                spot_check=False,
            )

        table = vlasov_self_convergence(
            sg_measure,
            builder,
            builtin_kernels(2)["constant"](0.5),
            lambda rng, ci, n: rng.random((n, 1)),
            m=1,
            ells=(1, 2),
            T=0.1,
            dt=0.01,
            seeds=(3,),
            sublevel=2,
            output_stride=2,
        )
        first = np.broadcast_to(table.distances[:, :, :1], table.distances.shape)
        assert np.all(table.distances > 0)
        np.testing.assert_allclose(table.distances, first, rtol=1e-12)

    def test_kuramoto_distances_decrease_with_refinement(self, sg_measure):
        from fractalips import builtin_kernels

        def builder(level):
            return kuramoto_model(1.0, 0.0)

        def init_sampler(rng, cell_index, n):
            return rng.random((n, 1))

        table = vlasov_self_convergence(
            sg_measure,
            builder,
            builtin_kernels(2)["expdist"],
            init_sampler,
            m=1,
            ells=(1, 2, 3),
            T=0.2,
            dt=0.01,
            seeds=tuple(range(6)),
            sublevel=2,
            output_stride=10,
        )
        # max over time, median over seeds, per successive pair
        worst = table.distances.max(axis=2)
        med = np.median(worst, axis=0)
        assert med[1] < med[0]


class TestStationaryMean:
    def test_matches_direct_fixed_point_solve(self, sg_measure):
        b = stationary_mean(sg_measure)
        np.testing.assert_allclose(b, [0.5, np.sqrt(3.0) / 6.0], rtol=1e-14)
