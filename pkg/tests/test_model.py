import math

import numpy as np
import pytest

from dstirap.model import (
    DegenerateFrameError,
    DriveSample,
    PulseParameters,
    adiabatic_couplings,
    adiabatic_frame,
    adiabatic_transform,
    bare_hamiltonian,
    dissipative_hamiltonian,
    gaussian_drive,
    mixing_angles,
)


def random_drive(rng, gamma=None):
    return DriveSample(
        t=0.0,
        omega_p=rng.uniform(0.05, 3.0),
        omega_s=rng.uniform(0.05, 3.0),
        delta=rng.uniform(-2.0, 2.0),
        gamma_rate=rng.uniform(0.0, 2.0) if gamma is None else gamma,
        d_omega_p=rng.uniform(-2.0, 2.0),
        d_omega_s=rng.uniform(-2.0, 2.0),
        d_delta=rng.uniform(-2.0, 2.0),
    )


class TestGaussianDrive:
    def test_peak_values(self):
        p = PulseParameters(omega_peak=1.0, gamma=1.0)  # matched delay 0.5
        d = gaussian_drive(p, None, t=0.25)  # pump center tau0/2
        assert d.omega_p == pytest.approx(1.0)
        assert d.omega_s == pytest.approx(math.exp(-0.25))
        assert d.gamma_rate == pytest.approx(1.0)

    def test_zero_delay_pulses_coincide(self):
        p = PulseParameters(omega_peak=1.0, gamma=0.0)
        for t in (-1.0, 0.3, 2.0):
            d = gaussian_drive(p, None, t)
            assert d.omega_p == pytest.approx(d.omega_s)

    def test_ratio_identity(self):
        p = PulseParameters(omega_peak=1.0, gamma=1.0)
        for t in np.linspace(-2.0, 2.0, 101):
            d = gaussian_drive(p, None, t)
            assert d.omega_p / d.omega_s == pytest.approx(math.exp(t), rel=1e-12)

    def test_derivatives_match_finite_differences(self):
        p = PulseParameters(omega_peak=1.3, gamma=0.8)
        h = 1e-6
        for t in (-1.2, 0.0, 0.7):
            d = gaussian_drive(p, None, t)
            dp = gaussian_drive(p, None, t + h)
            dm = gaussian_drive(p, None, t - h)
            assert d.d_omega_p == pytest.approx((dp.omega_p - dm.omega_p) / (2 * h), rel=1e-6)
            assert d.d_omega_s == pytest.approx((dp.omega_s - dm.omega_s) / (2 * h), rel=1e-6)

    def test_detuning_derivative_sources(self):
        p = PulseParameters(omega_peak=1.0, gamma=1.0)

        def det(t):
            return 0.3 * t**2

        d = gaussian_drive(p, det, 0.5)
        assert d.delta == pytest.approx(0.075)
        assert d.d_delta == pytest.approx(0.3, rel=1e-6)  # central differences

        det.derivative = lambda t: -7.0  # deliberately inconsistent marker
        d = gaussian_drive(p, det, 0.5)
        assert d.d_delta == -7.0  # attribute wins over differencing

    def test_scale_factors(self):
        p = PulseParameters(omega_peak=1.0, gamma=0.5, scale_C=2.0, scale_alpha=0.5)
        d = gaussian_drive(p, None, 0.0)
        base = PulseParameters(omega_peak=1.0, gamma=0.5)
        d0 = gaussian_drive(base, None, 0.0)
        assert d.omega_p == pytest.approx(2.0 * d0.omega_p)
        assert d.omega_s == pytest.approx(0.5 * d0.omega_s)

    def test_pulse_width_scaling(self):
        # same dimensionless point scales as 1/T
        p1 = PulseParameters(omega_peak=1.0, gamma=1.0, pulse_width=1.0)
        p2 = PulseParameters(omega_peak=1.0, gamma=1.0, pulse_width=2.0)
        d1 = gaussian_drive(p1, None, 0.4)
        d2 = gaussian_drive(p2, None, 0.8)
        assert d2.omega_p == pytest.approx(0.5 * d1.omega_p)
        assert d2.gamma_rate == pytest.approx(0.5 * d1.gamma_rate)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            PulseParameters(omega_peak=0.0)
        with pytest.raises(ValueError):
            PulseParameters(gamma=-1.0)
        with pytest.raises(ValueError):
            PulseParameters(scale_C=0.0)


class TestMixingAngles:
    def test_symmetric_resonant(self):
        d = DriveSample(0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        f = mixing_angles(d)
        assert f.theta == pytest.approx(np.pi / 4)
        assert f.phi == pytest.approx(np.pi / 4)
        assert f.lambda_plus == pytest.approx(d.omega_0 / 2)
        assert f.lambda_minus == pytest.approx(-d.omega_0 / 2)

    def test_pump_off_gives_zero_theta(self):
        d = DriveSample(0, 0.0, 0.8, 0.3, 0.0, 0.0, 0.0, 0.0)
        assert mixing_angles(d).theta == 0.0

    def test_stokes_off_gives_right_angle(self):
        d = DriveSample(0, 0.8, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0)
        assert mixing_angles(d).theta == pytest.approx(np.pi / 2)

    def test_matched_delay_identity_on_grid(self):
        # with the matched delay, 2 theta' / sin(2 theta) equals gamma exactly
        p = PulseParameters(omega_peak=1.0, gamma=1.0)
        for t in np.linspace(-1.5, 1.5, 1000):
            f = mixing_angles(gaussian_drive(p, None, t))
            assert 2 * f.d_theta / math.sin(2 * f.theta) == pytest.approx(1.0, abs=1e-12)

    def test_eigenvalue_identities(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            d = random_drive(rng)
            f = mixing_angles(d)
            assert f.lambda_plus * f.lambda_minus == pytest.approx(-d.omega_0**2 / 4, rel=1e-12)
            assert f.lambda_plus + f.lambda_minus == pytest.approx(d.delta, rel=1e-12)
            assert f.lambda_plus >= 0.0 or d.delta != 0.0

    def test_dphi_matches_finite_difference(self):
        p = PulseParameters(omega_peak=1.0, gamma=1.0)

        def det(t):
            return 1.12 + 1.12 * math.cos(1.92 * t)

        det_obj = lambda t: det(t)
        h = 1e-6
        for t in (-1.0, -0.2, 0.9):
            f = mixing_angles(gaussian_drive(p, det_obj, t))
            fp = mixing_angles(gaussian_drive(p, det_obj, t + h))
            fm = mixing_angles(gaussian_drive(p, det_obj, t - h))
            assert f.d_phi == pytest.approx((fp.phi - fm.phi) / (2 * h), rel=1e-5, abs=1e-8)
            assert f.d_theta == pytest.approx((fp.theta - fm.theta) / (2 * h), rel=1e-5)

    def test_degenerate_frame_error(self):
        d = DriveSample(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(DegenerateFrameError):
            mixing_angles(d)


class TestHamiltonians:
    def test_zero_drive_is_zero_matrix(self):
        d = DriveSample(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        assert np.all(bare_hamiltonian(d) == 0)

    def test_entries(self):
        d = DriveSample(0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        H = bare_hamiltonian(d)
        assert H[0, 1] == 0.5 and H[1, 2] == 0.5
        assert np.all(np.diag(H) == 0)

    def test_trace_equals_detuning(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            d = random_drive(rng)
            assert np.trace(bare_hamiltonian(d)) == pytest.approx(d.delta)
            assert np.trace(dissipative_hamiltonian(d)) == pytest.approx(d.delta)

    def test_bare_is_hermitian_and_extra_part_antihermitian(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            d = random_drive(rng)
            H0 = bare_hamiltonian(d)
            HG = dissipative_hamiltonian(d)
            assert np.abs(H0 - H0.conj().T).max() == 0.0
            A = HG - H0
            assert np.abs(A + A.conj().T).max() == 0.0

    def test_dissipative_reduces_at_zero_rate(self):
        d = DriveSample(0, 0.4, 0.7, 0.2, 0.0, 0, 0, 0)
        assert np.array_equal(dissipative_hamiltonian(d), bare_hamiltonian(d))

    def test_dissipative_diagonal(self):
        d = DriveSample(0, 0.0, 0.0, 0.0, 1.0, 0, 0, 0)
        H = dissipative_hamiltonian(d)
        assert H[0, 0] == -0.5j and H[2, 2] == 0.5j and H[1, 1] == 0


class TestAdiabaticTransform:
    def test_zero_angles(self):
        R = adiabatic_transform(0.0, 0.0)
        assert np.array_equal(R, [[0, 1, 0], [1, 0, 0], [0, 0, 1]])

    def test_orthogonality(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            R = adiabatic_transform(rng.uniform(0, np.pi / 2), rng.uniform(0, np.pi / 2))
            assert np.abs(R @ R.T - np.eye(3)).max() < 1e-12

    def test_columns_diagonalize_bare_hamiltonian(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            d = random_drive(rng)
            f = mixing_angles(d)
            R = adiabatic_transform(f.theta, f.phi)
            H = bare_hamiltonian(d).real
            D = R.T @ H @ R
            off = D - np.diag(np.diag(D))
            assert np.abs(off).max() < 1e-10
            assert np.diag(D) == pytest.approx(
                [f.lambda_plus, 0.0, f.lambda_minus], abs=1e-10
            )
            # cross-check the eigenvalues against an independent eigensolver
            evals = np.sort(np.linalg.eigvalsh(H))
            assert np.sort([f.lambda_plus, 0.0, f.lambda_minus]) == pytest.approx(
                evals, abs=1e-10
            )


class TestAdiabaticCouplings:
    def test_zero_dephasing_reduces_to_geometric_form(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            d = random_drive(rng, gamma=0.0)
            f = mixing_angles(d)
            c = adiabatic_couplings(f, 0.0)
            sp, cp = math.sin(f.phi), math.cos(f.phi)
            expected = np.array(
                [
                    [f.lambda_plus, 1j * f.d_theta * sp, 1j * f.d_phi],
                    [-1j * f.d_theta * sp, 0.0, -1j * f.d_theta * cp],
                    [-1j * f.d_phi, 1j * f.d_theta * cp, f.lambda_minus],
                ],
                dtype=complex,
            )
            assert np.abs(c - expected).max() < 1e-14

    def test_dark_self_energy_vanishes_at_equal_mixing(self):
        d = DriveSample(0, 1.0, 1.0, 0.7, 1.3, 0.2, -0.1, 0.4)
        f = mixing_angles(d)  # theta = pi/4
        c = adiabatic_couplings(f, d.gamma_rate)
        assert abs(c[1, 1]) < 1e-16

    def test_matched_delay_nulls_dark_bright_couplings(self):
        p = PulseParameters(omega_peak=1.0, gamma=1.0)
        for t in np.linspace(-1.5, 1.5, 1000):
            d = gaussian_drive(p, None, t)
            c = adiabatic_couplings(mixing_angles(d), d.gamma_rate)
            assert abs(c[0, 1]) < 1e-12
            assert abs(c[2, 1]) < 1e-12

    def test_matches_numerical_frame_transformation(self):
        # R^T H R - i R^T dR/dt with dR/dt built from the angle rates
        p = PulseParameters(omega_peak=1.0, gamma=1.0)

        def det(t):
            return 1.12 + 1.12 * math.cos(1.92 * t)

        for t in np.linspace(-1.4, 1.4, 25):
            d = gaussian_drive(p, det, t)
            f = mixing_angles(d)
            R = adiabatic_transform(f.theta, f.phi)
            st, ct = math.sin(f.theta), math.cos(f.theta)
            sp, cp = math.sin(f.phi), math.cos(f.phi)
            dR_dtheta = np.array(
                [[ct * sp, -st, ct * cp], [0, 0, 0], [-st * sp, -ct, -st * cp]]
            )
            dR_dphi = np.array(
                [[st * cp, 0, -st * sp], [-sp, 0, -cp], [ct * cp, 0, -ct * sp]]
            )
            dR = dR_dtheta * f.d_theta + dR_dphi * f.d_phi
            HG = dissipative_hamiltonian(d)
            expected = R.T @ HG @ R - 1j * (R.T @ dR)
            c = adiabatic_couplings(f, d.gamma_rate)
            assert np.abs(c - expected).max() < 1e-10

    def test_bright_pair_antisymmetry_relation(self):
        # coupling(- <- +) = -2i phi' + coupling(+ <- -)
        rng = np.random.default_rng(29)
        for _ in range(20):
            d = random_drive(rng)
            f = mixing_angles(d)
            c = adiabatic_couplings(f, d.gamma_rate)
            assert c[2, 0] == pytest.approx(-2j * f.d_phi + c[0, 2], rel=1e-12)

    def test_full_frame_helper(self):
        d = DriveSample(0, 0.9, 1.1, 0.2, 0.5, 0.1, -0.4, 0.2)
        f = adiabatic_frame(d)
        assert f.R is not None and f.couplings is not None
        assert np.abs(f.R @ f.R.T - np.eye(3)).max() < 1e-12
