import numpy as np
import pytest
from scipy.linalg import block_diag

from gielab.errors import InvalidCM
from gielab.gie import ghz_internal, mutual_info_f
from gielab.measurements import Measurement
from gielab.states import (
    LocalChannel,
    Purification,
    apply_local_channel,
    conditional_cm,
    find_separable_decomposition,
    ghz_cm,
    minimal_purification,
    outcome_ccm,
    ppt_separable,
    product_projecting_measurement,
    random_cm,
    tmsv_cm,
)
from gielab.symplectic import schur_complement, symplectic_eigenvalues

from conftest import random_local_symplectic


class TestTmsv:
    def test_zero_squeezing_is_vacuum(self):
        assert np.allclose(tmsv_cm(0.0).m, np.eye(4))

    def test_half_squeezing_entries(self):
        g = tmsv_cm(0.5).m
        assert np.isclose(g[0, 0], np.cosh(1.0))
        assert np.isclose(g[0, 2], np.sinh(1.0))
        assert np.isclose(g[1, 3], -np.sinh(1.0))

    def test_purity(self):
        for r in (0.1, 1.0, 2.0):
            assert np.allclose(symplectic_eigenvalues(tmsv_cm(r)), 1.0, atol=1e-9)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            tmsv_cm(-0.1)


class TestGhz:
    def test_zero_squeezing(self):
        g3, g2 = ghz_cm(0.0)
        assert np.allclose(g2.m, np.eye(4))
        assert np.allclose(g3.m, np.eye(6))

    def test_xpm_values(self):
        g3, _ = ghz_cm(0.5)
        assert np.isclose(g3.m[0, 0], 1.1513469036006432)
        assert np.isclose(g3.m[1, 1], 1.934814366029844)

    def test_symmetric_under_mode_exchange(self):
        g3 = ghz_cm(0.7)[0].m
        for perm in ([1, 0, 2], [2, 1, 0], [0, 2, 1]):
            idx = np.concatenate([[2 * p, 2 * p + 1] for p in perm])
            assert np.allclose(g3[np.ix_(idx, idx)], g3)

    def test_three_mode_purity(self):
        for r in (0.2, 0.684, 1.5):
            assert np.allclose(symplectic_eigenvalues(ghz_cm(r)[0]), 1.0, atol=1e-9)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ghz_cm(-0.5)


class TestMinimalPurification:
    def test_pure_input_needs_no_purifier(self):
        pi = minimal_purification(tmsv_cm(0.6))
        assert pi.n_E == 0
        assert pi.gamma_ABE.shape == (4, 0)

    def test_ghz_reduction_single_purifier(self):
        pi = minimal_purification(ghz_cm(0.5)[1])
        assert pi.n_E == 1
        assert pi.is_pure(tol=1e-7)

    def test_thermal_product_two_purifiers(self):
        pi = minimal_purification(np.diag([2.0, 2.0, 2.0, 2.0]))
        assert pi.n_E == 2
        assert pi.is_pure()

    def test_purity_random(self, rng):
        for _ in range(50):
            pi = minimal_purification(random_cm(2, rng))
            assert np.abs(symplectic_eigenvalues(pi.full) - 1).max() < 1e-7

    def test_rejects_unphysical(self):
        with pytest.raises(InvalidCM):
            minimal_purification(0.5 * np.eye(4))


class TestConditionalCm:
    def test_no_purifier_passthrough(self):
        pi = minimal_purification(tmsv_cm(0.4))
        out = conditional_cm(pi, Measurement.empty())
        assert np.allclose(out, pi.gamma_AB)

    def test_infinite_temperature_drops_mode(self):
        g3, g2 = ghz_cm(0.5)
        pi = Purification.from_pure_cm(g3.m, 1, 1)
        out = conditional_cm(pi, Measurement.drop(1))
        assert np.allclose(out, g2.m)
        # large finite thermal seed converges to the same limit
        approx = conditional_cm(pi, Measurement.from_cm(np.exp(18.0) * np.eye(2)))
        assert np.abs(approx - g2.m).max() < 1e-6

    def test_x_homodyne_matches_internal_formula(self):
        r = 0.5
        g3, _ = ghz_cm(r)
        pi = Purification.from_pure_cm(g3.m, 1, 1)
        gc = conditional_cm(pi, Measurement.homodyne([0.0]))
        a_num = np.sqrt(np.linalg.det(gc[:2, :2]))
        nu = np.sqrt(5 + 4 * np.cosh(4 * r)) / 3
        a_formula, _, _ = ghz_internal(nu, 1 / nu, np.pi / 2, r)
        assert abs(a_num - a_formula) < 1e-12

    def test_general_measurement_matches_internal_formula(self, rng):
        r = 0.7
        g3, _ = ghz_cm(r)
        pi = Purification.from_pure_cm(g3.m, 1, 1)
        xp = (np.exp(2 * r) + 2 * np.exp(-2 * r)) / 3
        xm = (np.exp(-2 * r) + 2 * np.exp(2 * r)) / 3
        nu = np.sqrt(xp * xm)
        gtmsv = np.block([
            [nu * np.eye(2), np.sqrt(nu ** 2 - 1) * np.diag([1.0, -1.0])],
            [np.sqrt(nu ** 2 - 1) * np.diag([1.0, -1.0]), nu * np.eye(2)]])
        for _ in range(10):
            seed = random_cm(1, rng, nu_max=2.5)
            gc = conditional_cm(pi, Measurement.from_cm(seed))
            a_num = np.sqrt(np.linalg.det(gc[:2, :2]))
            # map the measurement into the squeezed frame of the purifying arm
            SAi = np.diag([(xm / xp) ** 0.25, (xp / xm) ** 0.25])
            seed_f = SAi @ seed @ SAi.T
            gA = conditional_cm(Purification.from_pure_cm(gtmsv, 1, 0),
                                Measurement.from_cm(seed_f))
            w, V = np.linalg.eigh(gA)
            phi = np.arctan2(V[1, np.argmax(w)], V[0, np.argmax(w)])
            a_f, _, _ = ghz_internal(max(w), min(w), phi, r)
            assert abs(a_num - a_f) < 1e-10

    def test_conditional_always_physical(self, rng):
        for _ in range(20):
            pi = minimal_purification(random_cm(2, rng))
            if pi.n_E == 0:
                continue
            seed = random_cm(pi.n_E, rng, nu_max=3.0)
            out = conditional_cm(pi, Measurement.from_cm(seed))
            assert symplectic_eigenvalues(out).min() >= 1 - 1e-8


class TestOutcomeCcm:
    def test_heterodyne_on_pure(self):
        g3, _ = ghz_cm(0.4)
        pi = Purification.from_pure_cm(g3.m, 1, 1)
        sigma = outcome_ccm(pi, np.eye(2), np.eye(2), np.eye(2))
        assert np.allclose(sigma, pi.full + np.eye(6))

    def test_schur_complement_consistency(self, rng):
        # conditioning through the CCM equals conditional_cm + Gamma_A ⊕ Gamma_B
        for _ in range(10):
            pi = minimal_purification(random_cm(2, rng))
            if pi.n_E == 0:
                continue
            GA = random_cm(1, rng, nu_max=2.0)
            GB = random_cm(1, rng, nu_max=2.0)
            GE = random_cm(pi.n_E, rng, nu_max=2.0)
            sigma = outcome_ccm(pi, GA, GB, GE)
            sc = schur_complement(sigma, list(range(4)))
            direct = conditional_cm(pi, Measurement.from_cm(GE)) + block_diag(GA, GB)
            assert np.abs(sc - direct).max() < 1e-9

    def test_positive_definite(self, rng):
        for _ in range(10):
            pi = minimal_purification(random_cm(2, rng))
            GE = random_cm(pi.n_E, rng) if pi.n_E else np.zeros((0, 0))
            sigma = outcome_ccm(pi, np.eye(2), np.eye(2), GE)
            assert np.linalg.det(sigma) > 0
            assert np.linalg.eigvalsh(sigma).min() > 0


class TestPptSeparable:
    def test_vacuum(self):
        assert ppt_separable(np.eye(4))

    def test_tmsv_entangled(self):
        assert not ppt_separable(tmsv_cm(0.5))

    def test_ghz_zero_squeezing(self):
        assert ppt_separable(ghz_cm(0.0)[1])


class TestSeparableDecomposition:
    def test_thermal_product(self):
        g = np.diag([2.0, 2.0, 3.0, 3.0])
        dec = find_separable_decomposition(g)
        assert dec is not None
        assert np.linalg.eigvalsh(dec.Q).min() > -1e-8
        assert np.isclose(np.linalg.det(dec.gamma_A_pure), 1.0, atol=1e-6)
        assert np.isclose(np.linalg.det(dec.gamma_B_pure), 1.0, atol=1e-6)

    def test_entangled_returns_none(self):
        assert find_separable_decomposition(tmsv_cm(0.5)) is None

    def test_recovers_constructed_mixtures(self, rng):
        found = 0
        for _ in range(5):
            SA = random_local_symplectic(rng)
            SB = random_local_symplectic(rng)
            P = rng.normal(size=(4, 2)) * 0.6
            g = block_diag(SA @ SA.T, SB @ SB.T) + P @ P.T
            dec = find_separable_decomposition(g)
            if dec is None:
                continue
            found += 1
            recon = block_diag(dec.gamma_A_pure, dec.gamma_B_pure) + dec.Q
            assert np.abs(recon - g).max() < 1e-6
        assert found >= 4


class TestProductProjectingMeasurement:
    def test_offdiagonal_decay_and_locals(self, rng):
        g = np.diag([2.0, 2.0, 3.0, 3.0])
        dec = find_separable_decomposition(g)
        pi = minimal_purification(g)
        prev = np.inf
        for s in (1.0, 3.0, 10.0):
            meas = product_projecting_measurement(dec, pi, s)
            gc = conditional_cm(pi, meas)
            off = np.linalg.norm(gc[:2, 2:])
            on = np.linalg.norm(gc[:2, :2])
            assert off <= prev + 1e-12
            prev = off
            if s == 10.0:
                assert off < 1e-3 * on
                assert np.abs(gc[:2, :2] - dec.gamma_A_pure).max() < 1e-3
                assert np.abs(gc[2:, 2:] - dec.gamma_B_pure).max() < 1e-3

    def test_f_vanishes_for_various_ab_measurements(self, rng):
        SA = random_local_symplectic(rng)
        SB = random_local_symplectic(rng)
        P = rng.normal(size=(4, 3)) * 0.5
        g = block_diag(SA @ SA.T, SB @ SB.T) + P @ P.T
        dec = find_separable_decomposition(g)
        assert dec is not None
        pi = minimal_purification(g)
        meas = product_projecting_measurement(dec, pi, s=10.0)
        for mA, mB in [(Measurement.homodyne([0.0]), Measurement.homodyne([0.0])),
                       (Measurement.heterodyne(1), Measurement.heterodyne(1)),
                       (Measurement.homodyne([0.8]), Measurement.heterodyne(1))]:
            assert mutual_info_f(pi, mA, mB, meas) < 1e-3


class TestLocalChannels:
    def test_identity_channel(self, rng):
        g = random_cm(2, rng)
        ch = LocalChannel.pure_loss(1.0, 1.0)
        assert np.allclose(apply_local_channel(g, ch), g)

    def test_full_attenuation_gives_vacuum(self):
        ch = LocalChannel.pure_loss(0.0, 0.0)
        assert np.allclose(apply_local_channel(tmsv_cm(1.0), ch), np.eye(4))

    def test_cp_violation_rejected(self):
        bad = LocalChannel(X_A=2.0 * np.eye(2), Y_A=np.zeros((2, 2)),
                           X_B=np.eye(2), Y_B=np.zeros((2, 2)))
        with pytest.raises(InvalidCM):
            apply_local_channel(np.eye(4), bad)

    def test_preserves_physicality(self, rng):
        for _ in range(20):
            g = random_cm(2, rng)
            eta = rng.uniform(0.05, 1.0, 2)
            ch = LocalChannel.pure_loss(*eta)
            out = apply_local_channel(g, ch)
            assert symplectic_eigenvalues(out).min() >= 1 - 1e-9

    def test_loss_commutes_with_swap_on_symmetric_states(self):
        g = ghz_cm(0.6)[1].m
        swap = np.zeros((4, 4))
        swap[:2, 2:] = np.eye(2)
        swap[2:, :2] = np.eye(2)
        ch = LocalChannel.pure_loss(0.7, 0.7)
        a = apply_local_channel(swap @ g @ swap.T, ch)
        b = swap @ apply_local_channel(g, ch) @ swap.T
        assert np.allclose(a, b)

    def test_json_roundtrip(self):
        ch = LocalChannel.from_json_dict({"eta_A": 0.8, "eta_B": 0.9,
                                          "noise_A": 0.1, "noise_B": 0.0})
        assert np.allclose(ch.X_A, np.sqrt(0.8) * np.eye(2))
        assert np.allclose(ch.Y_A, (0.2 + 0.1) * np.eye(2))
        assert ch.is_cp()
