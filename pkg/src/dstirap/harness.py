"""Scenario runner, parameter-sweep engine, and data exporter.

A scenario bundles the pulse pair, the window, the initial-state deviation,
the detuning source, and the dynamics (state vector or density matrix).
Scans evaluate a scenario over one or two parameter axes with deterministic
cell ordering; results export to csv, json, or a gnuplot script.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .design import fit_detuning, solve_detuning
from .model import PulseParameters, gaussian_drive
from .numerics import FitFamily, FitResult, TimeGrid
from .propagate import (
    DensityMatrix,
    DissipationRates,
    Trajectory,
    bare_matrix,
    initial_state,
    optimum_shutdown_time,
    propagate_lindblad,
    propagate_schrodinger,
    propagation_matrix,
)


class ConfigError(ValueError):
    """A scenario or scan is internally inconsistent."""


SCAN_QUANTITIES = ("P3", "P3r", "shutdown_time", "max_P2", "final_norm")
SCAN_AXES = (
    "epsilon",
    "deviation.omega",
    "deviation.tau",
    "deviation.delta0",
    "deviation.omega_fit",
    "rates.damp",
    "rates.dephase",
    "t",
)

# Compact detuning fits for the six benchmark design points, keyed by
# (gamma, half-window / T): family and parameter vector.
REFERENCE_DETUNINGS = {
    (1.0, 1.5): (FitFamily.FOURIER, (1.12, 1.12, 1.92)),
    (1.0, 2.0): (FitFamily.GAUSSIAN_SUM, (8.94, 0.0, 1.92, 0.0, 0.0, 1.0)),
    (1.0, 2.5): (FitFamily.GAUSSIAN_SUM, (51.83, 0.0, 0.88, 0.0, 0.0, 1.0)),
    (2.0, 1.5): (FitFamily.FOURIER, (1.43, 2.09, 1.57)),
    (2.0, 2.0): (FitFamily.FOURIER, (4.49, 4.49, 1.39)),
    (2.0, 2.5): (FitFamily.GAUSSIAN_SUM, (28.85, -0.6, 0.9, 28.85, 0.6, 0.9)),
}


@dataclass(frozen=True)
class DeviationSpec:
    """Relative control-parameter deviations, each within [-0.5, 0.5].

    rel_omega scales the peak Rabi frequency; rel_tau scales the pulse delay
    together with the ground dephasing rate it was matched to; rel_delta0
    scales the fitted detuning amplitudes; rel_omega_fit scales the fitted
    modulation frequency.
    """

    rel_omega: float = 0.0
    rel_tau: float = 0.0
    rel_delta0: float = 0.0
    rel_omega_fit: float = 0.0

    def __post_init__(self):
        for name in ("rel_omega", "rel_tau", "rel_delta0", "rel_omega_fit"):
            if not -0.5 <= getattr(self, name) <= 0.5:
                raise ConfigError(f"{name} must lie in [-0.5, 0.5]")

    def any(self) -> bool:
        return any(
            (self.rel_omega, self.rel_tau, self.rel_delta0, self.rel_omega_fit)
        )


@dataclass(frozen=True)
class ScenarioConfig:
    pulse: PulseParameters = field(default_factory=PulseParameters)
    window: TimeGrid = field(default_factory=lambda: TimeGrid(-1.5, 1.5, 3000))
    epsilon: float = 0.0
    detuning_source: str = "none"  # none | ode | fitted:fourier | fitted:gaussian
    dynamics: str = "schrodinger"  # schrodinger | lindblad
    rates: DissipationRates = field(default_factory=DissipationRates)
    deviations: DeviationSpec = field(default_factory=DeviationSpec)
    detuning_parameters: tuple | None = None
    exact_cancellation: bool = False
    cancel: str = "upper"
    lindblad_hamiltonian: str = "bare"
    convention: str = "full"
    tol: float = 1e-9
    method: str = "adaptive"

    def __post_init__(self):
        if self.detuning_source not in (
            "none",
            "ode",
            "fitted:fourier",
            "fitted:gaussian",
        ):
            raise ConfigError(f"unknown detuning source {self.detuning_source!r}")
        if self.dynamics not in ("schrodinger", "lindblad"):
            raise ConfigError(f"unknown dynamics {self.dynamics!r}")
        if self.detuning_source == "none" and (
            self.deviations.rel_delta0 or self.deviations.rel_omega_fit
        ):
            raise ConfigError("detuning deviations require a detuning source")

    @property
    def fit_family(self) -> FitFamily | None:
        if self.detuning_source == "fitted:fourier":
            return FitFamily.FOURIER
        if self.detuning_source == "fitted:gaussian":
            return FitFamily.GAUSSIAN_SUM
        return None


def _deviated_fit_parameters(family: FitFamily, params, dev: DeviationSpec):
    p = np.asarray(params, dtype=float).copy()
    if family is FitFamily.FOURIER:
        p[0] *= 1.0 + dev.rel_delta0
        p[1] *= 1.0 + dev.rel_delta0
        p[2] *= 1.0 + dev.rel_omega_fit
    else:
        if dev.rel_omega_fit:
            raise ConfigError(
                "rel_omega_fit is defined for the fourier family only"
            )
        p[0] *= 1.0 + dev.rel_delta0
        p[3] *= 1.0 + dev.rel_delta0
    return p


def resolve_detuning(config: ScenarioConfig):
    """Detuning callable for a scenario, honoring fit-parameter deviations.

    Returns (callable_or_None, info). The design always uses the undeviated
    pulse (deviations model errors in executing a fixed design); fitted
    parameters come from ``config.detuning_parameters`` when given, otherwise
    from an inline solve-and-fit over the scenario window.
    """
    source = config.detuning_source
    if source == "none":
        return None, {"detuning": "none"}
    if source == "ode":
        sol = solve_detuning(
            config.pulse,
            config.window,
            exact_cancellation=config.exact_cancellation,
            cancel=config.cancel,
        )
        return sol, {"detuning": "ode", "peak": sol.peak,
                     "boundary_violation": sol.boundary_violation}
    family = config.fit_family
    if config.detuning_parameters is not None:
        params = np.asarray(config.detuning_parameters, dtype=float)
        residual = None
    else:
        sol = solve_detuning(
            config.pulse,
            config.window,
            exact_cancellation=config.exact_cancellation,
            cancel=config.cancel,
        )
        det_fit = fit_detuning(sol, family)
        params = det_fit.fit.parameters
        residual = det_fit.fit.residual_rms
    params = _deviated_fit_parameters(family, params, config.deviations)
    fit = FitResult(family=family, parameters=params,
                    residual_rms=0.0 if residual is None else residual)
    info = {"detuning": source, "parameters": [float(x) for x in params]}
    if residual is not None:
        info["fit_residual_rms"] = float(residual)
    return fit, info


def make_drive(pulse: PulseParameters, detuning):
    """Drive callable t -> DriveSample for a pulse pair and detuning."""
    return lambda t: gaussian_drive(pulse, detuning, t)


def run_scenario(config: ScenarioConfig):
    """Execute design (if requested) and propagation for one scenario.

    Returns (trajectory, summary); the summary carries the final populations,
    the largest excited-state population, the shutdown time under the default
    thresholds, and the resolved-detuning info.
    """
    detuning, info = resolve_detuning(config)
    pulse = config.pulse.with_deviation(
        config.deviations.rel_omega, config.deviations.rel_tau
    )
    drive = make_drive(pulse, detuning)
    if config.dynamics == "schrodinger":
        traj = propagate_schrodinger(
            drive,
            initial_state(config.epsilon),
            config.window,
            tol=config.tol,
            method=config.method,
            convention=config.convention,
        )
    else:
        rho0 = DensityMatrix.from_state(initial_state(config.epsilon))
        traj = propagate_lindblad(
            drive,
            config.rates,
            rho0,
            config.window,
            tol=config.tol,
            method=config.method,
            convention=config.convention,
            hamiltonian=config.lindblad_hamiltonian,
        )
    summary = traj.final_summary()
    shutdown = optimum_shutdown_time(traj)
    summary["shutdown_time"] = None if shutdown is None else float(shutdown)
    summary.update(info)
    return traj, summary


@dataclass(frozen=True)
class ScanSpec:
    """One or two scan axes plus the summary quantities to record."""

    axis1: tuple  # (parameter name, value sequence)
    axis2: tuple | None = None
    output_quantities: tuple = ("P3r", "P3")
    cell_cap: int = 401 * 401
    steps_per_unit: int = 1000

    def __post_init__(self):
        for axis in (self.axis1, self.axis2):
            if axis is None:
                continue
            name, values = axis
            if name not in SCAN_AXES:
                raise ConfigError(f"unknown scan axis {name!r}")
            values = np.asarray(values, dtype=float)
            if not np.all(np.isfinite(values)):
                raise ConfigError(f"axis {name!r} has non-finite values")
        for q in self.output_quantities:
            if q not in SCAN_QUANTITIES:
                raise ConfigError(f"unknown scan quantity {q!r}")
        n1 = len(self.axis1[1])
        n2 = 1 if self.axis2 is None else len(self.axis2[1])
        if n1 * n2 > self.cell_cap:
            raise ConfigError(f"scan size {n1}x{n2} exceeds the cap {self.cell_cap}")


@dataclass
class GridResult:
    """Scan output: one record per cell, row-major in (axis1, axis2)."""

    axis1: tuple
    axis2: tuple | None
    quantities: tuple
    records: list

    @property
    def shape(self) -> tuple:
        n2 = 1 if self.axis2 is None else len(self.axis2[1])
        return (len(self.axis1[1]), n2)

    def values(self, quantity: str) -> np.ndarray:
        out = np.array(
            [
                np.nan if r.get(quantity) is None else r.get(quantity, np.nan)
                for r in self.records
            ],
            dtype=float,
        )
        return out.reshape(self.shape)


def _apply_axis(config: ScenarioConfig, name: str, value: float) -> ScenarioConfig:
    if name == "epsilon":
        return replace(config, epsilon=float(value))
    if name.startswith("deviation."):
        key = {"omega": "rel_omega", "tau": "rel_tau", "delta0": "rel_delta0",
               "omega_fit": "rel_omega_fit"}[name.split(".", 1)[1]]
        return replace(config, deviations=replace(config.deviations, **{key: float(value)}))
    if name == "rates.damp":
        return replace(config, rates=replace(config.rates, gamma_damp=float(value)))
    if name == "rates.dephase":
        return replace(config, rates=replace(config.rates, gamma_dephase=float(value)))
    raise ConfigError(f"axis {name!r} cannot be applied to a scenario")


def _scan_workers() -> int:
    env = os.environ.get("RPL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"RPL_THREADS must be an integer, got {env!r}") from exc
    return min(4, os.cpu_count() or 1)


def _cell_record(base: ScenarioConfig, assignments, quantities):
    cfg = base
    for name, value in assignments:
        cfg = _apply_axis(cfg, name, value)
    try:
        _, summary = run_scenario(cfg)
    except Exception as exc:  # per-cell failures stay in-cell
        return {"error": f"{type(exc).__name__}: {exc}"}
    return _summary_to_quantities(summary, quantities)


def _summary_to_quantities(summary, quantities):
    rec = {}
    for q in quantities:
        if q == "P3":
            rec[q] = summary["final_P3"]
        elif q == "P3r":
            rec[q] = summary["final_P3r"]
        elif q == "max_P2":
            rec[q] = summary["max_P2"]
        elif q == "final_norm":
            rec[q] = summary["final_norm"]
        else:
            rec[q] = summary["shutdown_time"]
    return rec


def scan_grid(base: ScenarioConfig, scan: ScanSpec) -> GridResult:
    """Evaluate ``base`` over the scan grid; cells are independent.

    Cell ordering is row-major over (axis1, axis2) and deterministic. A fast
    vectorized path covers state-vector scans over epsilon/deviation axes and
    density-matrix scans over jump-rate axes; a time axis ("t") reads the
    requested quantities off one trajectory per remaining cell. Anything else
    falls back to one scenario run per cell. RPL_THREADS caps the worker
    count of the fallback path.
    """
    name1, vals1 = scan.axis1[0], np.asarray(scan.axis1[1], dtype=float)
    if scan.axis2 is None:
        name2, vals2 = None, np.array([0.0])
    else:
        name2, vals2 = scan.axis2[0], np.asarray(scan.axis2[1], dtype=float)

    if "t" in (name1, name2):
        records = _scan_time_axis(base, scan, name1, vals1, name2, vals2)
    else:
        records = _scan_parameter_axes(base, scan, name1, vals1, name2, vals2)
    return GridResult(
        axis1=(name1, [float(v) for v in vals1]),
        axis2=None if scan.axis2 is None else (name2, [float(v) for v in vals2]),
        quantities=tuple(scan.output_quantities),
        records=records,
    )


def _scan_parameter_axes(base, scan, name1, vals1, name2, vals2):
    names = [name1] + ([name2] if name2 else [])
    schro_axes = {"epsilon", "deviation.omega", "deviation.tau",
                  "deviation.delta0", "deviation.omega_fit"}
    lind_axes = {"rates.damp", "rates.dephase", "epsilon"}
    fourier_ok = base.detuning_source in ("none", "ode", "fitted:fourier")
    if (
        base.dynamics == "schrodinger"
        and set(names) <= schro_axes
        and fourier_ok
    ):
        return _batch_schrodinger_scan(base, scan, name1, vals1, name2, vals2)
    if base.dynamics == "lindblad" and set(names) <= lind_axes:
        return _batch_lindblad_scan(base, scan, name1, vals1, name2, vals2)

    cells = []
    for v1 in vals1:
        for v2 in vals2:
            assignments = [(name1, v1)] + ([(name2, v2)] if name2 else [])
            cells.append(assignments)
    workers = _scan_workers()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(
            pool.map(
                lambda a: _cell_record(base, a, scan.output_quantities), cells
            )
        )
    return records


def _scan_time_axis(base, scan, name1, vals1, name2, vals2):
    """Axis "t" reads trajectory quantities at the requested times."""
    if name1 == "t" and name2 == "t":
        raise ConfigError("only one axis may be 't'")
    t_first = name1 == "t"
    t_vals = vals1 if t_first else vals2
    other = (name2, vals2) if t_first else (name1, vals1)
    other_name, other_vals = other
    if np.any(t_vals < base.window.t_start) or np.any(t_vals > base.window.t_end):
        raise ConfigError("'t' axis values must lie inside the scenario window")

    per_variant = []
    for v in other_vals:
        cfg = base if other_name is None else _apply_axis(base, other_name, v)
        try:
            traj, summary = run_scenario(cfg)
        except Exception as exc:
            per_variant.append({"error": f"{type(exc).__name__}: {exc}"})
            continue
        rows = {}
        for q in scan.output_quantities:
            if q == "P3":
                rows[q] = np.interp(t_vals, traj.times, traj.populations[:, 2])
            elif q == "P3r":
                rows[q] = np.interp(t_vals, traj.times, traj.relative[:, 2])
            elif q == "max_P2":
                rows[q] = np.full(t_vals.size, summary["max_P2"])
            elif q == "final_norm":
                rows[q] = np.interp(t_vals, traj.times, traj.norm)
            else:
                rows[q] = np.full(t_vals.size, np.nan if summary["shutdown_time"] is None
                                  else summary["shutdown_time"])
        per_variant.append(rows)

    records = []
    n_t, n_o = t_vals.size, other_vals.size
    outer = range(n_t) if t_first else range(n_o)
    inner = range(n_o) if t_first else range(n_t)
    for i in outer:
        for j in inner:
            k_t, k_o = (i, j) if t_first else (j, i)
            rows = per_variant[k_o]
            if "error" in rows:
                records.append({"error": rows["error"]})
            else:
                records.append({q: float(rows[q][k_t]) for q in scan.output_quantities})
    return records


# ---------------------------------------------------------------------------
# Vectorized fixed-step engines for scans


def _batch_rk4(deriv, y0, t_start, t_end, n_steps):
    y = y0.astype(complex)
    h = (t_end - t_start) / n_steps
    t = t_start
    for _ in range(n_steps):
        k1 = deriv(t, y)
        k2 = deriv(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = deriv(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = deriv(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def _batch_schrodinger_scan(base, scan, name1, vals1, name2, vals2):
    """All cells advance together; the cell index is a vector dimension."""
    n1, n2 = vals1.size, vals2.size
    n = n1 * n2
    g1 = np.repeat(vals1, n2)
    g2 = np.tile(vals2, n1)

    def axis_values(name):
        out = {}
        for nm, vv in ((name1, g1), (name2, g2)):
            if nm is not None:
                out[nm] = vv
        return out.get(name)

    dev_omega = axis_values("deviation.omega")
    dev_tau = axis_values("deviation.tau")
    dev_d0 = axis_values("deviation.delta0")
    dev_wf = axis_values("deviation.omega_fit")
    eps_ax = axis_values("epsilon")

    zeros = np.zeros(n)
    dv = base.deviations
    dev_omega = zeros + dv.rel_omega if dev_omega is None else dev_omega
    dev_tau = zeros + dv.rel_tau if dev_tau is None else dev_tau
    dev_d0 = zeros + dv.rel_delta0 if dev_d0 is None else dev_d0
    dev_wf = zeros + dv.rel_omega_fit if dev_wf is None else dev_wf
    eps = zeros + base.epsilon if eps_ax is None else eps_ax

    bad = 1.0 - 2.0 * eps**2 < 0.0
    if not bad.any():
        return _batch_cells_schrodinger(base, scan, dev_omega, dev_tau,
                                        dev_d0, dev_wf, eps)
    # keep failed cells in place and batch only the valid ones
    err = {"error": "ValueError: |epsilon| may not exceed 1/sqrt(2)"}
    good = ~bad
    if not good.any():
        return [dict(err) for _ in range(n)]
    valid = iter(
        _batch_cells_schrodinger(base, scan, dev_omega[good], dev_tau[good],
                                 dev_d0[good], dev_wf[good], eps[good])
    )
    return [dict(err) if bad[k] else next(valid) for k in range(n)]


def _batch_cells_schrodinger(base, scan, dev_omega, dev_tau, dev_d0, dev_wf, eps):
    n = eps.size

    pulse = base.pulse
    T = pulse.pulse_width
    omega = pulse.omega_peak * (1.0 + dev_omega) / T * pulse.scale_C
    omega_s_scale = pulse.scale_alpha / pulse.scale_C
    tau0 = pulse.delay * (1.0 + dev_tau) * T
    gamma = pulse.gamma * (1.0 + dev_tau) / T

    det_source = base.detuning_source
    if det_source == "none":
        delta_of_t = lambda t: 0.0
    elif det_source == "ode":
        sol, _ = resolve_detuning(replace(base, deviations=DeviationSpec()))
        delta_of_t = lambda t: float(sol(t))
    else:
        base_cfg = replace(base, deviations=DeviationSpec())
        fit0, _ = resolve_detuning(base_cfg)
        p = fit0.parameters
        D0 = p[0] * (1.0 + dev_d0)
        D1 = p[1] * (1.0 + dev_d0)
        W = p[2] * (1.0 + dev_wf)
        delta_of_t = lambda t: D0 + D1 * np.cos(W * t)

    factor = 0.5 if base.convention == "half" else 1.0

    def deriv(t, c):
        op = omega * np.exp(-(((t - 0.5 * tau0) / T) ** 2))
        os_ = omega * omega_s_scale * np.exp(-(((t + 0.5 * tau0) / T) ** 2))
        dl = delta_of_t(t)
        c1, c2, c3 = c[:, 0], c[:, 1], c[:, 2]
        d1 = -1j * factor * (-1j * gamma * c1 + op * c2)
        d2 = -1j * factor * (op * c1 + 2.0 * dl * c2 + os_ * c3)
        d3 = -1j * factor * (os_ * c2 + 1j * gamma * c3)
        return np.stack([d1, d2, d3], axis=1)

    c0 = np.stack(
        [np.sqrt(1.0 - 2.0 * eps**2), -eps, eps], axis=1
    ).astype(complex)
    grid = base.window
    n_steps = max(1, int(math.ceil(grid.span * scan.steps_per_unit)))

    want_extra = {"shutdown_time", "max_P2"} & set(scan.output_quantities)
    if want_extra:
        # longer path: record the whole trajectory on the output grid
        times = grid.times
        traj = np.empty((times.size, n, 3), dtype=complex)
        traj[0] = c0
        y = c0
        for i in range(times.size - 1):
            sub = max(1, int(math.ceil((times[i + 1] - times[i]) * scan.steps_per_unit)))
            y = _batch_rk4(deriv, y, times[i], times[i + 1], sub)
            traj[i + 1] = y
        P = np.abs(traj) ** 2
        norm = P.sum(axis=2)
        records = []
        for k in range(n):
            tr = Trajectory.from_states(times, traj[:, k, :])
            summary = tr.final_summary()
            sd = optimum_shutdown_time(tr)
            summary["shutdown_time"] = None if sd is None else float(sd)
            records.append(_summary_to_quantities(summary, scan.output_quantities))
        return records

    y = _batch_rk4(deriv, c0, grid.t_start, grid.t_end, n_steps)
    P = np.abs(y) ** 2
    norm = P.sum(axis=1)
    records = []
    for k in range(n):
        summary = {
            "final_P3": float(P[k, 2]),
            "final_P3r": float(P[k, 2] / norm[k]),
            "final_norm": float(norm[k]),
            "max_P2": None,
            "shutdown_time": None,
        }
        records.append(_summary_to_quantities(summary, scan.output_quantities))
    return records


_M_DAMP = np.zeros((3, 3), dtype=complex)
_M_DAMP[0, 0] = _M_DAMP[0, 2] = _M_DAMP[2, 0] = _M_DAMP[2, 2] = 1.0
_P2 = np.zeros((3, 3), dtype=complex)
_P2[1, 1] = 1.0
_D3 = np.diag([1.0, 0.0, -1.0]).astype(complex)
_D3SQ = np.diag([1.0, 0.0, 1.0]).astype(complex)


def _batch_lindblad_scan(base, scan, name1, vals1, name2, vals2):
    n1, n2 = vals1.size, vals2.size
    n = n1 * n2
    a1 = np.repeat(vals1, n2)
    a2 = np.tile(vals2, n1)
    per_axis = {name1: a1}
    if name2 is not None:
        per_axis[name2] = a2
    G1 = per_axis.get("rates.damp", np.full(n, base.rates.gamma_damp))
    G2 = per_axis.get("rates.dephase", np.full(n, base.rates.gamma_dephase))
    eps = per_axis.get("epsilon", np.full(n, base.epsilon))
    Gg = base.rates.gamma_ground
    sign = 1.0 if base.rates.sign_convention == "standard" else -1.0

    detuning, _ = resolve_detuning(base)
    pulse = base.pulse.with_deviation(
        base.deviations.rel_omega, base.deviations.rel_tau
    )
    drive = make_drive(pulse, detuning)
    build = bare_matrix if base.lindblad_hamiltonian == "bare" else propagation_matrix
    g1c = G1[:, None, None]
    g2c = G2[:, None, None]

    def deriv(t, r):
        H = build(drive(t), base.convention)
        Hc = H.conj().T
        dr = -1j * (np.einsum("ij,njk->nik", H, r) - np.einsum("nij,jk->nik", r, Hc))
        r22 = r[:, 1, 1][:, None, None]
        # damping jump (|1>+|3>)<2|
        dr += sign * g1c * (r22 * _M_DAMP)
        dr -= sign * g1c * (np.einsum("ij,njk->nik", _P2, r) + np.einsum("nij,jk->nik", r, _P2))
        # excited dephasing |2><2|
        dr += sign * g2c * (r22 * _P2)
        dr -= sign * 0.5 * g2c * (np.einsum("ij,njk->nik", _P2, r) + np.einsum("nij,jk->nik", r, _P2))
        if Gg > 0.0:
            dr += sign * Gg * np.einsum("ij,njk,kl->nil", _D3, r, _D3)
            dr -= sign * 0.5 * Gg * (
                np.einsum("ij,njk->nik", _D3SQ, r) + np.einsum("nij,jk->nik", r, _D3SQ)
            )
        return dr

    c0 = np.stack([np.sqrt(1.0 - 2.0 * eps**2), -eps, eps], axis=1).astype(complex)
    r0 = np.einsum("ni,nj->nij", c0, c0.conj())
    grid = base.window
    n_steps = max(1, int(math.ceil(grid.span * scan.steps_per_unit)))
    r = _batch_rk4(deriv, r0, grid.t_start, grid.t_end, n_steps)
    r = 0.5 * (r + np.conj(np.swapaxes(r, 1, 2)))
    P = np.abs(np.einsum("nii->ni", r))
    norm = P.sum(axis=1)
    records = []
    for k in range(n):
        summary = {
            "final_P3": float(P[k, 2]),
            "final_P3r": float(P[k, 2] / norm[k]),
            "final_norm": float(norm[k]),
            "max_P2": None,
            "shutdown_time": None,
        }
        records.append(_summary_to_quantities(summary, scan.output_quantities))
    return records


# ---------------------------------------------------------------------------
# Deviation-robustness table

TABLE2_ROWS = tuple(
    DeviationSpec(rel_omega=a, rel_tau=b, rel_delta0=c, rel_omega_fit=d)
    for a in (0.05, 0.025, -0.025, -0.05)
    for b, c, d in ((0.05, 0.10, 0.10), (0.025, 0.05, 0.05),
                    (-0.025, -0.05, -0.05), (-0.05, -0.10, -0.10))
)


def table2_report(base: ScenarioConfig, rows=TABLE2_ROWS) -> list:
    """Final P3r and P3 with all four deviations applied simultaneously."""
    out = []
    for row in rows:
        cfg = replace(base, deviations=row)
        _, summary = run_scenario(cfg)
        out.append(
            {
                "rel_omega": row.rel_omega,
                "rel_tau": row.rel_tau,
                "rel_delta0": row.rel_delta0,
                "rel_omega_fit": row.rel_omega_fit,
                "P3r": summary["final_P3r"],
                "P3": summary["final_P3"],
            }
        )
    return out


# ---------------------------------------------------------------------------
# Canned benchmark scenarios


def design_window(half_width: float, n_steps: int = 3000) -> TimeGrid:
    return TimeGrid(-half_width, half_width, n_steps)


def matched_pulse(gamma: float, omega: float = 1.0) -> PulseParameters:
    """Pulse pair with the dephasing-matched delay."""
    return PulseParameters(omega_peak=omega, gamma=gamma)


def reference_detuning_parameters(gamma: float, half_width: float):
    key = (float(gamma), float(half_width))
    if key not in REFERENCE_DETUNINGS:
        raise ConfigError(f"no bundled compact detuning for gamma={gamma}, t_f={half_width}")
    return REFERENCE_DETUNINGS[key]


def baseline_transfer_config(epsilon: float = -0.038, n_steps: int = 3000) -> ScenarioConfig:
    """Designed transfer at gamma=1 over [-1.5T, 1.5T]: the deviation baseline."""
    family, params = reference_detuning_parameters(1.0, 1.5)
    return ScenarioConfig(
        pulse=matched_pulse(1.0),
        window=design_window(1.5, n_steps),
        epsilon=epsilon,
        detuning_source="fitted:fourier",
        detuning_parameters=params,
    )


def traditional_stirap_config(
    gamma: float = 0.0, epsilon: float = 0.0, tau: float = 0.5,
    half_width: float = 1.5, n_steps: int = 3000,
) -> ScenarioConfig:
    """Pulse pair without any detuning (the no-design reference)."""
    return ScenarioConfig(
        pulse=PulseParameters(omega_peak=1.0, gamma=gamma, tau=tau),
        window=design_window(half_width, n_steps),
        epsilon=epsilon,
        detuning_source="none",
    )


def shutdown_scenario_config(
    gamma: float = 2.0, epsilon: float = 0.2, half_width: float = 1.5,
    n_steps: int = 3000,
) -> ScenarioConfig:
    """Large-deviation fast-transfer scenario used for shutdown-time studies."""
    family, params = reference_detuning_parameters(gamma, half_width)
    source = "fitted:fourier" if family is FitFamily.FOURIER else "fitted:gaussian"
    return ScenarioConfig(
        pulse=matched_pulse(gamma),
        window=design_window(half_width, n_steps),
        epsilon=epsilon,
        detuning_source=source,
        detuning_parameters=params,
    )


def excited_state_config(
    gamma_damp: float = 0.1, gamma_dephase: float = 0.1,
    sign_convention: str = "standard", n_steps: int = 3000,
) -> ScenarioConfig:
    """Baseline transfer with excited-state damping and dephasing.

    Ground dephasing stays in the complex-energy part of the generator
    (lindblad_hamiltonian="dissipative"); the jump operators carry only the
    excited-state rates.
    """
    base = baseline_transfer_config(n_steps=n_steps)
    return replace(
        base,
        dynamics="lindblad",
        lindblad_hamiltonian="dissipative",
        rates=DissipationRates(
            gamma_ground=0.0,
            gamma_damp=gamma_damp,
            gamma_dephase=gamma_dephase,
            sign_convention=sign_convention,
        ),
    )


def pulse_deviation_scan(n: int = 41, span: float = 0.05) -> ScanSpec:
    vals = np.linspace(-span, span, n)
    return ScanSpec(
        axis1=("deviation.omega", vals),
        axis2=("deviation.tau", vals.copy()),
        output_quantities=("P3r", "P3"),
    )


def detuning_deviation_scan(n: int = 41, span: float = 0.10) -> ScanSpec:
    vals = np.linspace(-span, span, n)
    return ScanSpec(
        axis1=("deviation.delta0", vals),
        axis2=("deviation.omega_fit", vals.copy()),
        output_quantities=("P3r", "P3"),
    )


def excited_state_scan(n: int = 51, top: float = 0.5) -> ScanSpec:
    vals = np.linspace(0.0, top, n)
    return ScanSpec(
        axis1=("rates.damp", vals),
        axis2=("rates.dephase", vals.copy()),
        output_quantities=("P3r", "P3"),
        steps_per_unit=400,
    )


# ---------------------------------------------------------------------------
# Export / import

TRAJECTORY_COLUMNS = ("t", "P1", "P2", "P3", "norm", "P1r", "P2r", "P3r")


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.17g}"


def _trajectory_rows(traj: Trajectory):
    for i in range(traj.times.size):
        yield (
            traj.times[i],
            traj.populations[i, 0],
            traj.populations[i, 1],
            traj.populations[i, 2],
            traj.norm[i],
            traj.relative[i, 0],
            traj.relative[i, 1],
            traj.relative[i, 2],
        )


def export(result, format: str, path) -> None:
    """Write a trajectory, grid, or table to ``path`` in the chosen format.

    csv trajectories use exactly the columns t,P1,P2,P3,norm,P1r,P2r,P3r;
    grids are long-format axis1,axis2,quantity,value; json mirrors the
    records; gnuplot-script writes a plotting script next to a csv of the
    same stem.
    """
    path = os.fspath(path)
    if format == "csv":
        _export_csv(result, path)
    elif format == "json":
        _export_json(result, path)
    elif format == "gnuplot-script":
        csv_path = os.path.splitext(path)[0] + ".csv"
        _export_csv(result, csv_path)
        _export_gnuplot(result, path, csv_path)
    else:
        raise ConfigError(f"unknown export format {format!r}")


def _export_csv(result, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            if isinstance(result, Trajectory):
                fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
                for row in _trajectory_rows(result):
                    fh.write(",".join(_fmt(x) for x in row) + "\n")
            elif isinstance(result, GridResult):
                fh.write("axis1,axis2,quantity,value\n")
                n2 = 1 if result.axis2 is None else len(result.axis2[1])
                for idx, rec in enumerate(result.records):
                    v1 = result.axis1[1][idx // n2]
                    v2 = "" if result.axis2 is None else _fmt(result.axis2[1][idx % n2])
                    if "error" in rec:
                        fh.write(f"{_fmt(v1)},{v2},error,nan\n")
                        continue
                    for q in result.quantities:
                        fh.write(f"{_fmt(v1)},{v2},{q},{_fmt(rec[q])}\n")
            elif isinstance(result, list):  # table of records
                if not result:
                    raise ConfigError("cannot export an empty table")
                cols = list(result[0].keys())
                fh.write(",".join(cols) + "\n")
                for rec in result:
                    fh.write(",".join(_fmt(rec[c]) if isinstance(rec[c], (int, float))
                                      else str(rec[c]) for c in cols) + "\n")
            else:
                raise ConfigError(f"cannot export object of type {type(result).__name__}")
    except OSError as exc:
        raise OSError(f"export to {path!r} failed: {exc}") from exc


def _json_payload(result):
    if isinstance(result, Trajectory):
        rows = list(_trajectory_rows(result))
        return {
            "kind": "trajectory",
            "columns": list(TRAJECTORY_COLUMNS),
            "data": [[float(x) for x in row] for row in rows],
        }
    if isinstance(result, GridResult):
        return {
            "kind": "grid",
            "axis1": {"name": result.axis1[0], "values": result.axis1[1]},
            "axis2": None if result.axis2 is None else
                     {"name": result.axis2[0], "values": result.axis2[1]},
            "quantities": list(result.quantities),
            "records": result.records,
        }
    if isinstance(result, list):
        return {"kind": "table", "records": result}
    raise ConfigError(f"cannot export object of type {type(result).__name__}")


def _export_json(result, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_json_payload(result), fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"export to {path!r} failed: {exc}") from exc


def _export_gnuplot(result, path, csv_path):
    lines = [
        "set datafile separator ','",
        "set grid",
    ]
    if isinstance(result, Trajectory):
        lines += [
            "set xlabel 't (units of T)'",
            "set ylabel 'population'",
            "plot \\",
            f"  '{csv_path}' using 1:2 with lines title 'P1', \\",
            f"  '{csv_path}' using 1:3 with lines title 'P2', \\",
            f"  '{csv_path}' using 1:4 with lines title 'P3', \\",
            f"  '{csv_path}' using 1:5 with lines title 'norm'",
        ]
    elif isinstance(result, GridResult):
        q = result.quantities[0]
        lines += [
            f"set xlabel '{result.axis1[0]}'",
            "" if result.axis2 is None else f"set ylabel '{result.axis2[0]}'",
            "set view map",
            f"splot '< grep \",{q},\" {csv_path}' using 1:2:4 with points pt 5 ps 2 palette title '{q}'",
        ]
    else:
        lines += [
            "set xlabel 'row'",
            f"plot '{csv_path}' every ::1 using 0:5 with linespoints title 'P3r', \\",
            f"     '{csv_path}' every ::1 using 0:6 with linespoints title 'P3'",
        ]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"export to {path!r} failed: {exc}") from exc


def load_records(path):
    """Re-import a json export; returns the records list (grid/table) or rows."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") in ("grid", "table"):
        return payload["records"]
    return payload.get("data")
