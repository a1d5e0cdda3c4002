"""Design walkthrough: matched pulse pairs and their decoupling detunings.

For six design points (two ground-dephasing rates, three window widths) this
script solves the detuning that suppresses the unwanted adiabatic-frame
couplings, fits it to the compact forms (raised cosine or two Gaussians),
and reports the residual coupling magnitudes. Outputs land in
demos/output/: one csv per design point plus a summary table.
"""

from pathlib import Path

import numpy as np

from dstirap import (
    FitFamily,
    PulseParameters,
    TimeGrid,
    decoupling_residuals,
    fit_detuning,
    solve_detuning,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

design_points = [(gamma, tf) for gamma in (1.0, 2.0) for tf in (1.5, 2.0, 2.5)]

print(f"{'gamma':>5} {'t_f':>4} {'peak':>7}  {'family':<8} parameters")
rows = []
for gamma, tf in design_points:
    pulse = PulseParameters(omega_peak=1.0, gamma=gamma)
    window = TimeGrid(-tf, tf, 2001)
    sol = solve_detuning(pulse, window)

    # short windows fit a raised cosine, long ones a sum of two Gaussians
    family = FitFamily.FOURIER if tf < 2.0 or (gamma == 2.0 and tf < 2.5) \
        else FitFamily.GAUSSIAN_SUM
    fit = fit_detuning(sol, family)
    res = decoupling_residuals(pulse, sol, TimeGrid(-tf, tf, 501))

    params = np.round(fit.fit.parameters, 3)
    print(f"{gamma:>5.1f} {tf:>4.1f} {sol.peak:>7.3f}  {family.value:<8} {params.tolist()}")
    rows.append((gamma, tf, sol.peak, family.value, params,
                 res.upper_dark, res.upper_lower))

    name = OUT / f"detuning_g{gamma:.0f}_tf{tf:.1f}.csv"
    with open(name, "w") as fh:
        fh.write("t,delta,fit\n")
        for t, v in sol.samples:
            fh.write(f"{t:.8g},{v:.8g},{fit(t):.8g}\n")

print("\nresidual couplings with the compact detuning "
      "(dark-bright is exactly nulled by the matched delay):")
for gamma, tf, peak, family, params, dark, bright in rows:
    print(f"  gamma={gamma:.0f} t_f={tf}: |dark-bright| <= {dark:.1e}, "
          f"|bright-bright| = {bright:.2f}")

# the exact-cancellation variant nulls the bright-bright coupling too, at the
# price of a much smaller (and different) detuning waveform
pulse = PulseParameters(omega_peak=1.0, gamma=1.0)
window = TimeGrid(-1.5, 1.5, 2001)
exact = solve_detuning(pulse, window, exact_cancellation=True)
res = decoupling_residuals(pulse, exact, TimeGrid(-1.5, 1.5, 501))
print(f"\nexact-cancellation variant (gamma=1, t_f=1.5): peak={exact.peak:.3f}, "
      f"|bright-bright| = {res.upper_lower:.1e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 3, figsize=(13, 7), sharex=False)
    for ax, (gamma, tf) in zip(axes.ravel(), design_points):
        pulse = PulseParameters(omega_peak=1.0, gamma=gamma)
        window = TimeGrid(-tf, tf, 801)
        sol = solve_detuning(pulse, window)
        ts = window.times
        from dstirap import gaussian_drive

        omega_p = [gaussian_drive(pulse, None, t).omega_p for t in ts]
        omega_s = [gaussian_drive(pulse, None, t).omega_s for t in ts]
        ax.plot(ts, omega_p, label="pump")
        ax.plot(ts, omega_s, label="Stokes")
        ax.plot(ts, sol.values / max(1.0, sol.peak), "--",
                label=f"detuning / {max(1.0, sol.peak):.0f}")
        ax.set_title(f"gamma={gamma:.0f}, t_f={tf}T (peak {sol.peak:.2f}/T)")
        ax.set_xlabel("t / T")
    axes[0, 0].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(OUT / "design_overview.png", dpi=120)
    print(f"wrote {OUT / 'design_overview.png'}")
except ImportError:
    print("matplotlib not available; csv outputs only")
