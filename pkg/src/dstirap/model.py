"""Three-level lambda-system model: drives, Hamiltonians, adiabatic frame.

Conventions. State order is (ground |1>, excited |2>, ground |3>); the pump
couples 1-2 and the Stokes couples 2-3, both with single-photon detuning
delta. Ground-state dephasing enters as complex energies -/+ i*gamma/2 on
levels 1 and 3. All times are measured in units of the pulse width T and all
rates in 1/T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class DegenerateFrameError(ValueError):
    """Both fields and the detuning vanish: mixing angles are undefined."""


_FD_STEP = 1e-6  # central-difference step for callable detunings, units of T


@dataclass(frozen=True)
class PulseParameters:
    """Dimensionless Gaussian pulse-pair description.

    omega_peak is the peak Rabi frequency times T, gamma the ground dephasing
    rate times T, tau the pulse delay in units of T (None means the
    dephasing-matched value gamma / 2). scale_C multiplies the pump and
    scale_alpha the Stokes envelope.
    """

    omega_peak: float = 1.0
    pulse_width: float = 1.0
    tau: float | None = None
    gamma: float = 0.0
    scale_C: float = 1.0
    scale_alpha: float = 1.0

    def __post_init__(self):
        if self.omega_peak <= 0:
            raise ValueError("omega_peak must be positive")
        if self.pulse_width <= 0:
            raise ValueError("pulse_width must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.scale_C == 0 or self.scale_alpha == 0:
            raise ValueError("scale factors must be non-zero")

    @property
    def delay(self) -> float:
        """Pulse delay in units of T (matched to gamma/2 when tau is None)."""
        return 0.5 * self.gamma if self.tau is None else self.tau

    def with_deviation(self, rel_omega: float = 0.0, rel_tau: float = 0.0):
        """Multiplicative control-parameter deviations.

        rel_omega scales the peak Rabi frequency. rel_tau scales the delay
        together with the dephasing rate: the delay is defined through the
        matching relation tau0 = Gamma*T^2/2, so a fractional error in one is
        a fractional error in the other.
        """
        return replace(
            self,
            omega_peak=self.omega_peak * (1.0 + rel_omega),
            tau=self.delay * (1.0 + rel_tau),
            gamma=self.gamma * (1.0 + rel_tau),
        )


@dataclass(frozen=True)
class DriveSample:
    """Instantaneous control values and their time derivatives."""

    t: float
    omega_p: float
    omega_s: float
    delta: float
    gamma_rate: float
    d_omega_p: float
    d_omega_s: float
    d_delta: float

    @property
    def omega_0(self) -> float:
        return math.hypot(self.omega_p, self.omega_s)


@dataclass
class AdiabaticFrame:
    """Mixing angles, eigenvalues, and frame data at one instant.

    R columns are ordered (upper, dark, lower); the couplings matrix, when
    filled, uses the same (row, column) order.
    """

    theta: float
    phi: float
    d_theta: float
    d_phi: float
    omega_0: float
    lambda_plus: float
    lambda_minus: float
    R: np.ndarray | None = None
    couplings: np.ndarray | None = None


def gaussian_drive(params: PulseParameters, detuning, t: float) -> DriveSample:
    """Sample the Gaussian pulse pair and a detuning waveform at time ``t``.

    The pump peaks at +tau0/2 and the Stokes at -tau0/2 (counterintuitive
    order), with tau0 = delay * T. ``detuning`` is a callable t -> value or
    None for zero detuning; its derivative is taken from a ``derivative``
    attribute when present, otherwise by central differences.
    """
    T = params.pulse_width
    tau0 = params.delay * T
    peak = params.omega_peak / T
    xp = (t - 0.5 * tau0) / T
    xs = (t + 0.5 * tau0) / T
    omega_p = params.scale_C * peak * math.exp(-(xp**2))
    omega_s = params.scale_alpha * peak * math.exp(-(xs**2))
    d_omega_p = omega_p * (-2.0 * xp / T)
    d_omega_s = omega_s * (-2.0 * xs / T)

    if detuning is None:
        delta = d_delta = 0.0
    else:
        delta = float(detuning(t))
        deriv = getattr(detuning, "derivative", None)
        if deriv is not None:
            d_delta = float(deriv(t))
        else:
            h = _FD_STEP * T
            d_delta = (float(detuning(t + h)) - float(detuning(t - h))) / (2.0 * h)

    return DriveSample(
        t=t,
        omega_p=omega_p,
        omega_s=omega_s,
        delta=delta,
        gamma_rate=params.gamma / T,
        d_omega_p=d_omega_p,
        d_omega_s=d_omega_s,
        d_delta=d_delta,
    )


def bare_hamiltonian(d: DriveSample) -> np.ndarray:
    """Rotating-wave Hamiltonian (1/2)[[0, Wp, 0], [Wp, 2D, Ws], [0, Ws, 0]]."""
    return 0.5 * np.array(
        [
            [0.0, d.omega_p, 0.0],
            [d.omega_p, 2.0 * d.delta, d.omega_s],
            [0.0, d.omega_s, 0.0],
        ],
        dtype=complex,
    )


def dissipative_hamiltonian(d: DriveSample) -> np.ndarray:
    """Bare Hamiltonian plus the ground-level complex energies -/+ i*Gamma/2."""
    H = bare_hamiltonian(d)
    H[0, 0] += -0.5j * d.gamma_rate
    H[2, 2] += +0.5j * d.gamma_rate
    return H


def mixing_angles(d: DriveSample) -> AdiabaticFrame:
    """Mixing angles, their rates, and the bright-state eigenvalues.

    theta is the two-argument arctangent of (omega_p, omega_s); phi is half
    the rotation angle of the (omega_0, delta) pair, kept on the principal
    branch [0, pi/2). The eigenvalues use the closed forms
    (delta +/- sqrt(delta^2 + omega_0^2)) / 2.
    """
    om0 = d.omega_0
    if om0 == 0.0 and d.delta == 0.0:
        raise DegenerateFrameError(
            f"degenerate adiabatic frame at t={d.t!r}: no fields and no detuning"
        )
    theta = math.atan2(d.omega_p, d.omega_s)
    phi = 0.5 * math.atan2(om0, d.delta)
    om0sq = om0 * om0
    if om0sq > 0.0:
        d_theta = (d.d_omega_p * d.omega_s - d.omega_p * d.d_omega_s) / om0sq
        d_omega_0 = (d.omega_p * d.d_omega_p + d.omega_s * d.d_omega_s) / om0
    else:
        d_theta = 0.0
        d_omega_0 = math.hypot(d.d_omega_p, d.d_omega_s)
    denom = d.delta * d.delta + om0sq
    d_phi = (d_omega_0 * d.delta - om0 * d.d_delta) / (2.0 * denom)
    root = math.sqrt(denom)
    return AdiabaticFrame(
        theta=theta,
        phi=phi,
        d_theta=d_theta,
        d_phi=d_phi,
        omega_0=om0,
        lambda_plus=0.5 * (d.delta + root),
        lambda_minus=0.5 * (d.delta - root),
    )


def adiabatic_transform(theta: float, phi: float) -> np.ndarray:
    """Orthogonal bare-to-adiabatic transformation, columns (upper, dark, lower)."""
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    return np.array(
        [
            [st * sp, ct, st * cp],
            [cp, 0.0, -sp],
            [ct * sp, -st, ct * cp],
        ]
    )


def adiabatic_couplings(frame: AdiabaticFrame, gamma_rate: float) -> np.ndarray:
    """Adiabatic-frame generator including dephasing, rows/columns (+, 0, -).

    Equals R^T H R - i R^T dR/dt for the dissipative Hamiltonian, with the
    angle rates taken from ``frame``. For gamma_rate = 0 only the geometric
    couplings i*theta', i*phi' survive next to the diagonal eigenvalues.
    """
    th, ph = frame.theta, frame.phi
    dth, dph = frame.d_theta, frame.d_phi
    sp, cp = math.sin(ph), math.cos(ph)
    s2t, c2t = math.sin(2 * th), math.cos(2 * th)
    s2p = math.sin(2 * ph)
    g = gamma_rate

    off = 0.5j * g * s2t  # dephasing-induced dark-bright mixing amplitude
    cross = 0.25j * g * c2t * s2p
    return np.array(
        [
            [
                frame.lambda_plus + 0.5j * g * c2t * sp * sp,
                1j * dth * sp - off * sp,
                1j * dph + cross,
            ],
            [
                -1j * dth * sp - off * sp,
                -0.5j * g * c2t,
                -1j * dth * cp - off * cp,
            ],
            [
                -1j * dph + cross,
                1j * dth * cp - off * cp,
                frame.lambda_minus + 0.5j * g * c2t * cp * cp,
            ],
        ],
        dtype=complex,
    )


def adiabatic_frame(d: DriveSample) -> AdiabaticFrame:
    """Full frame at one drive sample: angles, R, and the coupling matrix."""
    frame = mixing_angles(d)
    frame.R = adiabatic_transform(frame.theta, frame.phi)
    frame.couplings = adiabatic_couplings(frame, d.gamma_rate)
    return frame
