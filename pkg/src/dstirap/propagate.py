"""Time evolution: non-Hermitian Schrodinger dynamics and master equations.

The ground-state dephasing makes the Schrodinger generator non-Hermitian, so
the state norm is not conserved; populations are therefore tracked both as
absolute values P_i and as relative populations P_i / (P_1 + P_2 + P_3).

Two matrix conventions are supported. "full" builds
[[-i*gamma, omega_p, 0], [omega_p, 2*delta, omega_s], [0, omega_s, +i*gamma]],
interpreting the drive values as the full angular rates; the packaged
reference scenarios reproduce their benchmark populations in this
convention. "half" halves every entry, i.e. the textbook RWA form with
omega/2 couplings (equal to :func:`dstirap.model.dissipative_hamiltonian`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DriveSample
from .numerics import TimeGrid, integrate_ivp


class TraceConsistencyError(RuntimeError):
    """Trace drift of a trace-preserving master equation exceeded 1e-6."""


@dataclass
class StateVector:
    """Three complex amplitudes (c1, c2, c3) at time ``t``."""

    amplitudes: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (3,):
            raise ValueError("amplitudes must have shape (3,)")
        if not np.all(np.isfinite(self.amplitudes.view(float))):
            raise ValueError("amplitudes must be finite")

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass
class DensityMatrix:
    """3x3 density operator at time ``t``."""

    rho: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.shape != (3, 3):
            raise ValueError("rho must have shape (3, 3)")

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        c = state.amplitudes
        return cls(rho=np.outer(c, c.conj()), t=state.t)


@dataclass(frozen=True)
class DissipationRates:
    """Jump rates: ground dephasing, excited damping, excited dephasing."""

    gamma_ground: float = 0.0
    gamma_damp: float = 0.0
    gamma_dephase: float = 0.0
    sign_convention: str = "standard"

    def __post_init__(self):
        for name in ("gamma_ground", "gamma_damp", "gamma_dephase"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.sign_convention not in ("standard", "paper"):
            raise ValueError("sign_convention must be 'standard' or 'paper'")


def initial_state(epsilon: float) -> StateVector:
    """Mostly-|1> state with a small deviation: (sqrt(1-2e^2), -e, +e)."""
    if 1.0 - 2.0 * epsilon**2 < 0.0:
        raise ValueError(f"|epsilon| may not exceed 1/sqrt(2), got {epsilon!r}")
    return StateVector(
        amplitudes=np.array(
            [math.sqrt(1.0 - 2.0 * epsilon**2), -epsilon, epsilon], dtype=complex
        )
    )


def propagation_matrix(d: DriveSample, convention: str = "full") -> np.ndarray:
    """Assemble the 3x3 generator for a drive sample (see module docstring)."""
    H = np.array(
        [
            [-1j * d.gamma_rate, d.omega_p, 0.0],
            [d.omega_p, 2.0 * d.delta, d.omega_s],
            [0.0, d.omega_s, 1j * d.gamma_rate],
        ],
        dtype=complex,
    )
    if convention == "half":
        return 0.5 * H
    if convention != "full":
        raise ValueError(f"convention must be 'full' or 'half', got {convention!r}")
    return H


def bare_matrix(d: DriveSample, convention: str = "full") -> np.ndarray:
    """Hermitian part of :func:`propagation_matrix` (no dephasing energies)."""
    H = propagation_matrix(d, convention)
    H[0, 0] = 0.0
    H[2, 2] = 0.0
    return H


@dataclass
class Trajectory:
    """Time series of states with the derived population observables."""

    times: np.ndarray
    states: np.ndarray          # (n, 3) amplitudes or (n, 3, 3) density matrices
    populations: np.ndarray     # (n, 3) absolute populations P_i
    norm: np.ndarray            # (n,) total population
    relative: np.ndarray        # (n, 3) P_i / sum, rows summing to 1

    @property
    def kind(self) -> str:
        return "state" if self.states.ndim == 2 else "density"

    @classmethod
    def from_states(cls, times, states) -> "Trajectory":
        states = np.asarray(states, dtype=complex)
        if states.ndim == 2:
            populations = np.abs(states) ** 2
        else:
            populations = np.abs(np.einsum("tii->ti", states))
        norm = populations.sum(axis=1)
        if np.any(norm <= 0.0):
            raise ValueError("total population vanished along the trajectory")
        return cls(
            times=np.asarray(times, dtype=float),
            states=states,
            populations=populations,
            norm=norm,
            relative=populations / norm[:, None],
        )

    def final_summary(self) -> dict:
        P, Pr = self.populations[-1], self.relative[-1]
        return {
            "final_P1": float(P[0]),
            "final_P2": float(P[1]),
            "final_P3": float(P[2]),
            "final_P1r": float(Pr[0]),
            "final_P2r": float(Pr[1]),
            "final_P3r": float(Pr[2]),
            "final_norm": float(self.norm[-1]),
            "max_P2": float(self.populations[:, 1].max()),
        }


def observables(state) -> tuple:
    """(P1, P2, P3, norm, P1r, P2r, P3r) for a state vector or density matrix."""
    if isinstance(state, StateVector):
        P = np.abs(state.amplitudes) ** 2
    elif isinstance(state, DensityMatrix):
        P = np.abs(np.diag(state.rho))
    else:
        arr = np.asarray(state, dtype=complex)
        P = np.abs(arr) ** 2 if arr.ndim == 1 else np.abs(np.diag(arr))
    norm = float(P.sum())
    if norm == 0.0:
        raise ValueError("relative populations are undefined for a zero-norm state")
    Pr = P / norm
    return (float(P[0]), float(P[1]), float(P[2]), norm,
            float(Pr[0]), float(Pr[1]), float(Pr[2]))


def propagate_schrodinger(
    drive,
    psi0: StateVector,
    grid: TimeGrid,
    tol: float = 1e-9,
    method: str = "adaptive",
    convention: str = "full",
) -> Trajectory:
    """Integrate i c' = H(t) c for the (generally non-Hermitian) generator.

    ``drive`` maps t to a :class:`DriveSample`. Norm conservation is neither
    assumed nor enforced; with zero dephasing the evolution is unitary.
    """

    def rhs(t, c):
        return -1j * (propagation_matrix(drive(t), convention) @ c)

    states = integrate_ivp(rhs, psi0.amplitudes, grid, tol=tol, method=method)
    return Trajectory.from_states(grid.times, states)


def _jump_operators(rates: DissipationRates) -> list[np.ndarray]:
    ops = []
    if rates.gamma_damp > 0.0:
        L = np.zeros((3, 3), dtype=complex)
        L[0, 1] = L[2, 1] = math.sqrt(rates.gamma_damp)
        ops.append(L)
    if rates.gamma_dephase > 0.0:
        L = np.zeros((3, 3), dtype=complex)
        L[1, 1] = math.sqrt(rates.gamma_dephase)
        ops.append(L)
    if rates.gamma_ground > 0.0:
        g = math.sqrt(rates.gamma_ground)
        ops.append(np.diag([g, 0.0, -g]).astype(complex))
    return ops


def propagate_lindblad(
    drive,
    rates: DissipationRates,
    rho0: DensityMatrix,
    grid: TimeGrid,
    tol: float = 1e-9,
    method: str = "adaptive",
    convention: str = "full",
    hamiltonian: str = "bare",
) -> Trajectory:
    """Integrate the master equation on the 9-component vectorized density.

    With ``hamiltonian="bare"`` the coherent part is the Hermitian drive
    matrix and ground dephasing acts only through its jump operator; with
    ``"dissipative"`` the complex-energy generator is used instead,
    rho' ⊃ -i (H rho - rho H+), and rates.gamma_ground would double-count it.
    ``sign_convention="standard"`` adds the dissipators; ``"paper"``
    subtracts them. The density is re-Hermitized at every output sample; for
    the trace-preserving configuration (bare + standard) a trace drift above
    1e-6 raises :class:`TraceConsistencyError`.
    """
    if hamiltonian not in ("bare", "dissipative"):
        raise ValueError("hamiltonian must be 'bare' or 'dissipative'")
    rho = np.asarray(rho0.rho, dtype=complex)
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("rho0 must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise ValueError("rho0 must have unit trace")

    sign = 1.0 if rates.sign_convention == "standard" else -1.0
    jumps = [(L, L.conj().T @ L) for L in _jump_operators(rates)]
    build = bare_matrix if hamiltonian == "bare" else propagation_matrix

    def rhs(t, y):
        r = y.reshape(3, 3)
        H = build(drive(t), convention)
        dr = -1j * (H @ r - r @ H.conj().T)
        for L, LL in jumps:
            dr += sign * (L @ r @ L.conj().T - 0.5 * (LL @ r + r @ LL))
        return dr.ravel()

    raw = integrate_ivp(rhs, rho.ravel(), grid, tol=tol, method=method)
    rhos = raw.reshape(-1, 3, 3)
    rhos = 0.5 * (rhos + np.conj(np.swapaxes(rhos, 1, 2)))

    if hamiltonian == "bare" and rates.sign_convention == "standard":
        drift = np.abs(np.einsum("tii->t", rhos).real - 1.0).max()
        if drift > 1e-6:
            raise TraceConsistencyError(
                f"trace drifted by {drift:.3g} under a trace-preserving equation"
            )
    return Trajectory.from_states(grid.times, rhos)


def optimum_shutdown_time(
    traj: Trajectory, p3_tol: float = 0.01, pr_threshold: float = 0.99
):
    """Earliest time with |P3 - 1| <= p3_tol and relative P3 >= pr_threshold.

    Refines the entry into the |P3 - 1| band by linear interpolation between
    the bracketing samples; returns None when the conditions are never met.
    """
    P3 = traj.populations[:, 2]
    ok = (np.abs(P3 - 1.0) <= p3_tol) & (traj.relative[:, 2] >= pr_threshold)
    if not ok.any():
        return None
    i = int(np.argmax(ok))
    if i == 0:
        return float(traj.times[0])
    lo, hi = P3[i - 1], P3[i]
    boundary = 1.0 - p3_tol if lo < 1.0 - p3_tol else (1.0 + p3_tol if lo > 1.0 + p3_tol else None)
    if boundary is None or hi == lo:
        return float(traj.times[i])
    frac = (boundary - lo) / (hi - lo)
    if not 0.0 <= frac <= 1.0:
        return float(traj.times[i])
    return float(traj.times[i - 1] + frac * (traj.times[i] - traj.times[i - 1]))
