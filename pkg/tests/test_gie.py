import numpy as np
import pytest
from scipy.linalg import block_diag

from gielab.errors import InvalidCM, NotPure
from gielab.gie import (
    MeasurementParam,
    OptimizerConfig,
    ghz_internal,
    gie,
    gie_ghz_closed,
    gie_pure_closed,
    inf_over_eve,
    mutual_info_f,
    sym_classical_mi,
    upper_bound_U,
)
from gielab.measurements import Measurement
from gielab.states import (
    Purification,
    conditional_cm,
    ghz_cm,
    minimal_purification,
    random_cm,
    tmsv_cm,
)
from gielab.symplectic import standard_form

from conftest import random_local_symplectic

GHZ_05_GIE = 0.08954514823451633  # ln(x_- / (e^r sqrt(x_+))) at r = 0.5

FAST = OptimizerConfig(grid_points=5, refine_iters=1, seed=7)


def std_frame_homodyne_angles(gc):
    """x-homodyne directions after local standard-form symplectics."""
    sf = standard_form(gc)
    SA, SB = sf.local_symplectics
    wA = SA.T @ np.array([1.0, 0.0])
    wB = SB.T @ np.array([1.0, 0.0])
    return np.arctan2(wA[1], wA[0]), np.arctan2(wB[1], wB[0])


class TestMeasurementParam:
    def test_clamp_enforces_uncertainty(self):
        p = MeasurementParam(0.0, -30.0, -30.0).clamped(10.0)
        assert p.log_vx * p.log_vp <= 0 or p.log_vx + p.log_vp >= -1e-9
        assert np.exp(p.log_vx) * np.exp(p.log_vp) >= 1 - 1e-9

    def test_clamp_box(self):
        p = MeasurementParam(0.0, 100.0, 50.0).clamped(10.0)
        assert abs(p.log_vx) <= 20.0 and abs(p.log_vp) <= 20.0

    def test_homodyne_variant(self):
        p = MeasurementParam(0.3, homodyne=True)
        m = p.measurement()
        assert m.variants[0].kind == "homodyne"


class TestMutualInfoF:
    def test_product_state_gives_zero(self, rng):
        SA = random_local_symplectic(rng)
        SB = random_local_symplectic(rng)
        g = block_diag(SA @ SA.T, SB @ SB.T)
        pi = minimal_purification(g)
        for mA, mB in [(Measurement.heterodyne(1), Measurement.heterodyne(1)),
                       (Measurement.homodyne([0.4]), Measurement.homodyne([1.0]))]:
            assert mutual_info_f(pi, mA, mB, Measurement.empty()) < 1e-12

    def test_tmsv_double_homodyne(self):
        for r in (0.3, 0.5, 1.2):
            pi = minimal_purification(tmsv_cm(r))
            f = mutual_info_f(pi, Measurement.homodyne([0.0]),
                              Measurement.homodyne([0.0]), Measurement.empty())
            assert abs(f - np.log(np.cosh(2 * r))) < 1e-12

    def test_ghz_triple_homodyne_reaches_closed_form(self):
        r = 0.5
        g3, _ = ghz_cm(r)
        pi = Purification.from_pure_cm(g3.m, 1, 1)
        meas_E = Measurement.homodyne([0.0])
        gc = conditional_cm(pi, meas_E)
        aA, aB = std_frame_homodyne_angles(gc)
        f = mutual_info_f(pi, Measurement.homodyne([aA]), Measurement.homodyne([aB]), meas_E)
        assert abs(f - GHZ_05_GIE) < 1e-12

    def test_nonnegative_random(self, rng):
        for _ in range(20):
            pi = minimal_purification(random_cm(2, rng))
            mE = (Measurement.from_cm(random_cm(pi.n_E, rng)) if pi.n_E
                  else Measurement.empty())
            f = mutual_info_f(pi, Measurement.heterodyne(1), Measurement.heterodyne(1), mE)
            assert f >= 0

    def test_scaling_invariance_of_determinant_ratio(self, rng):
        # f depends on the outcome CCM only through a determinant ratio,
        # so a global rescale of the distribution leaves it unchanged
        g = random_cm(2, rng)
        pi = minimal_purification(g)
        gc = conditional_cm(pi, Measurement.heterodyne(pi.n_E)) + np.eye(4)
        for c in (0.5, 2.0, 7.3):
            s = c * gc
            dA = np.linalg.det(s[:2, :2])
            dB = np.linalg.det(s[2:, 2:])
            d = np.linalg.det(s)
            ref = c * 1.0 * gc
            assert np.isclose(0.5 * np.log(dA * dB / d),
                              0.5 * np.log(np.linalg.det(gc[:2, :2])
                                           * np.linalg.det(gc[2:, 2:])
                                           / np.linalg.det(gc)))


class TestInfOverEve:
    def test_no_purifier_passthrough(self):
        pi = minimal_purification(tmsv_cm(0.5))
        val, param = inf_over_eve(pi, Measurement.homodyne([0.0]),
                                  Measurement.homodyne([0.0]), FAST)
        assert abs(val - np.log(np.cosh(1.0))) < 1e-12
        assert param is None

    def test_ghz_std_frame_homodyne_hits_u3(self):
        sf = standard_form(ghz_cm(0.5)[1])
        pi = minimal_purification(sf.matrix)
        val, param = inf_over_eve(pi, Measurement.homodyne([0.0]),
                                  Measurement.homodyne([0.0]), FAST)
        assert abs(val - GHZ_05_GIE) < 1e-6

    def test_infimum_below_heterodyne_point(self):
        pi = minimal_purification(standard_form(ghz_cm(0.5)[1]).matrix)
        het = Measurement.heterodyne(1)
        f_het = mutual_info_f(pi, het, het, Measurement.heterodyne(pi.n_E))
        val, _ = inf_over_eve(pi, het, het, FAST)
        assert val <= f_het + 1e-12


class TestGie:
    def test_tmsv(self):
        res = gie(tmsv_cm(0.5).m, FAST)
        assert abs(res.value - np.log(np.cosh(1.0))) < 1e-3
        assert res.converged

    def test_ghz(self):
        res = gie(ghz_cm(0.5)[1].m, FAST)
        assert abs(res.value - GHZ_05_GIE) < 1e-3

    def test_ppt_short_circuit(self):
        res = gie(np.diag([2.0, 2.0, 3.0, 3.0]), FAST)
        assert res.value == 0.0
        assert res.reason == "ppt-separable"

    def test_ghz_zero_squeezing(self):
        res = gie(ghz_cm(0.0)[1].m, FAST)
        assert res.value == 0.0

    def test_rejects_unphysical(self):
        with pytest.raises(InvalidCM):
            gie(0.3 * np.eye(4), FAST)

    def test_local_unitary_invariance(self, rng):
        g = ghz_cm(0.4)[1].m
        T = block_diag(random_local_symplectic(rng), random_local_symplectic(rng))
        a = gie(g, FAST).value
        b = gie(T @ g @ T.T, FAST).value
        assert abs(a - b) < 1e-5

    def test_result_fields_serialize(self):
        res = gie(ghz_cm(0.3)[1].m, FAST)
        d = res.to_jsonable()
        assert d["value"] >= -1e-9
        assert "iterations" in d and d["iterations"] > 0


class TestUpperBound:
    def test_ghz_matches_closed_form(self):
        u = upper_bound_U(ghz_cm(0.5)[1].m, FAST)
        assert abs(u - GHZ_05_GIE) < 1e-3

    def test_pure_equals_gie(self):
        u = upper_bound_U(tmsv_cm(0.5).m, FAST)
        assert abs(u - np.log(np.cosh(1.0))) < 1e-3

    def test_maxmin_inequality_random(self, rng):
        from conftest import random_rank_one_mixed

        for _ in range(3):
            g = random_rank_one_mixed(rng)
            lo = gie(g, FAST).value
            hi = upper_bound_U(g, FAST)
            assert hi >= lo - 1e-6


class TestClosedForms:
    def test_pure_vacuum(self):
        assert gie_pure_closed(np.eye(4)) == 0.0

    def test_pure_tmsv(self):
        assert abs(gie_pure_closed(tmsv_cm(1.0)) - np.log(np.cosh(2.0))) < 1e-12

    def test_pure_locally_squeezed_invariant(self, rng):
        g = tmsv_cm(0.8).m
        T = block_diag(random_local_symplectic(rng), random_local_symplectic(rng))
        # det gamma_A is invariant under local symplectics
        assert abs(gie_pure_closed(T @ g @ T.T) - gie_pure_closed(g)) < 1e-10

    def test_pure_rejects_mixed(self):
        with pytest.raises(NotPure):
            gie_pure_closed(np.diag([2.0] * 4))

    def test_ghz_zero(self):
        val, _ = gie_ghz_closed(0.0)
        assert abs(val) < 1e-15

    def test_ghz_at_half(self):
        val, diag = gie_ghz_closed(0.5)
        assert abs(val - GHZ_05_GIE) < 1e-15
        assert abs(diag["r_th"] - 0.684) < 1e-3
        assert abs(diag["a_max"] - np.sqrt(5 + 4 * np.cosh(2.0)) / 3) < 1e-12

    def test_ghz_threshold_value(self):
        # nu(r_th) = 2 exactly by construction of the threshold
        r_th = gie_ghz_closed(0.5)[1]["r_th"]
        assert abs(r_th - 0.6841628656223014) < 1e-12
        assert abs(np.sqrt(5 + 4 * np.cosh(4 * r_th)) / 3 - 2.0) < 1e-12

    def test_ghz_branch_ordering(self):
        for r in (0.1, 0.5, 1.0, 2.0):
            _, d = gie_ghz_closed(r)
            assert d["U3"] <= d["U1"] + 1e-12
            assert d["U3"] <= d["U2"] + 1e-12

    def test_ghz_rejects_negative(self):
        with pytest.raises(ValueError):
            gie_ghz_closed(-0.2)


class TestGhzInternal:
    def test_thermal_corner_maximizes_a(self):
        r = 0.5
        nu = np.sqrt(5 + 4 * np.cosh(4 * r)) / 3
        for phi in (0.0, 0.7, np.pi / 2):
            a, g, s = ghz_internal(nu, nu, phi, r)
            assert abs(a - nu) < 1e-12

    def test_zero_squeezing_degenerates(self):
        a, g, s = ghz_internal(1.0, 1.0, 0.0, 0.0)
        assert abs(a - 1.0) < 1e-12
        assert abs(g) < 1e-12

    def test_s_maximum_at_thermal_corner(self):
        r = 0.5
        xp = (np.exp(2 * r) + 2 * np.exp(-2 * r)) / 3
        xm = (np.exp(-2 * r) + 2 * np.exp(2 * r)) / 3
        nu = np.sqrt(xp * xm)
        _, _, s = ghz_internal(nu, nu, 0.3, r)
        assert abs(s - xm / (np.exp(r) * np.sqrt(xp))) < 1e-12

    def test_region_violation_rejected(self):
        nu = np.sqrt(5 + 4 * np.cosh(2.0)) / 3
        with pytest.raises(ValueError):
            ghz_internal(2 * nu, 1.0, 0.0, 0.5)

    def test_extremal_structure_on_grid(self):
        # a <= nu and s <= x_-/(e^r sqrt(x_+)) over the admissible region
        for r in (0.3, 0.7, 1.5):
            xp = (np.exp(2 * r) + 2 * np.exp(-2 * r)) / 3
            xm = (np.exp(-2 * r) + 2 * np.exp(2 * r)) / 3
            nu = np.sqrt(xp * xm)
            smax = xm / (np.exp(r) * np.sqrt(xp))
            for vp in np.linspace(1 / nu, nu, 9):
                for vx in np.linspace(max(vp, 1 / vp), nu, 9):
                    for phi in np.linspace(0, np.pi, 5):
                        a, g, s = ghz_internal(vx, vp, phi, r)
                        assert a <= nu + 1e-9
                        assert s <= smax + 1e-9
                        assert 2 + 1 / a - s >= 2 - 2 / np.sqrt(3) - 1e-9


class TestSymClassicalMI:
    @staticmethod
    def make_std(a, c1, c2):
        g = np.diag([a, a, a, a])
        g[0, 2] = g[2, 0] = c1
        g[1, 3] = g[3, 1] = c2
        return g

    def test_product_state_zero(self):
        val, cond = sym_classical_mi(self.make_std(1.4, 0.0, 0.0))
        assert val == 0.0
        assert cond

    def test_reference_value(self):
        val, cond = sym_classical_mi(self.make_std(1.2, 0.5, -0.3))
        assert abs(val - 0.5 * np.log(1.44 / 1.19)) < 1e-12
        assert cond

    def test_brute_force_agreement(self):
        # sup over t of the symmetric-measurement mutual information
        def brute(a, c1, c2):
            t = np.linspace(0, 10, 1000)
            h = (1 - c1 ** 2 / (a + np.exp(-2 * t)) ** 2) \
                * (1 - c2 ** 2 / (a + np.exp(2 * t)) ** 2)
            return np.max(-0.5 * np.log(h))

        for (a, c1, c2) in [(1.2, 0.5, -0.3), (1.5, 0.9, 0.2), (2.0, 1.2, -1.0)]:
            val, cond = sym_classical_mi(self.make_std(a, c1, c2))
            if cond:
                assert abs(val - brute(a, c1, c2)) < 1e-6

    def test_rejects_asymmetric(self):
        g = np.diag([1.2, 1.2, 1.5, 1.5])
        with pytest.raises(InvalidCM):
            sym_classical_mi(g)


class TestOptimizerConfig:
    def test_from_json(self):
        cfg = OptimizerConfig.from_json(
            '{"grid_points": 7, "refine_iters": 3, "tol": 1e-5, "t_max": 8.0, "seed": 99}')
        assert cfg.grid_points == 7
        assert cfg.refine_iters == 3
        assert cfg.tol == 1e-5
        assert cfg.t_max == 8.0
        assert cfg.seed == 99

    def test_defaults_from_empty(self):
        assert OptimizerConfig.from_json("") == OptimizerConfig()


class TestClassicalMiSupremum:
    def test_interior_optimum_found(self):
        # when the double-homodyne condition fails the supremum can sit at a
        # noisy interior seed; compare against a fine symmetric-seed scan
        from gielab.gie import _best_classical_mi

        t = np.linspace(0, 10, 40001)
        for (a, c1, c2) in [(6.0, 0.5, 0.5), (4.0, 0.8, 0.6), (3.0, 0.4, 0.35)]:
            g = np.diag([a, a, a, a])
            g[0, 2] = g[2, 0] = c1
            g[1, 3] = g[3, 1] = c2
            h = (1 - c1 ** 2 / (a + np.exp(-2 * t)) ** 2) \
                * (1 - c2 ** 2 / (a + np.exp(2 * t)) ** 2)
            brute = np.max(-0.5 * np.log(h))
            val, _, _ = _best_classical_mi(g, FAST, [0])
            _, cond = sym_classical_mi(g)
            assert not cond
            assert val >= brute - 1e-8


class TestDeterminism:
    def test_same_seed_same_value(self):
        g = ghz_cm(0.45)[1].m
        a = gie(g, FAST).value
        b = gie(g, FAST).value
        assert a == b
