"""Which SFWM processes phasematch, and where.

Enumerates cross-polarized mode quadruples allowed by the azimuthal
selection rule, solves the mismatch at a 692 nm pump and sweeps the pump to
draw the phasematching diagram.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sfwm_fiber import TABLE1, FiberSpec, enumerate_processes, gamma, guided_modes, phasematch_diagram, solve_peaks
from sfwm_fiber.dispersion import ModeId, nm_to_omega
from sfwm_fiber.phasematching import candidate_processes, candidate_separation, in_bands

fiber = FiberSpec(r=1.6, na=0.27, delta=4.2e-4, length=0.12)
lambda_p = 692.0

# every quadruple over the guided pump modes with a non-zero azimuthal overlap
modes = guided_modes(fiber, lambda_p)
print("guided at the pump:", ", ".join(m.name for m in modes))
print(f"{len(candidate_processes(modes))} candidate quadruples pass the selection rule")
named = [ModeId(0, 1), ModeId(1, 1), ModeId(2, 1)]
print(f"{len(candidate_processes(named))} of them use only LP01, LP11, LP21")

# the named processes, their overlaps and phasematched wavelengths
om = nm_to_omega(lambda_p)
for name, proc in TABLE1.items():
    sols = [s for s in solve_peaks(fiber, proc, lambda_p) if in_bands(s)]
    where = ", ".join(f"s {s.lambda_s:.2f} / i {s.lambda_i:.2f} nm" for s in sols) or "none in band"
    print(f"{name} {proc.quadruple}  gamma = {gamma(fiber, proc, om).value:.4f} /um^2  {where}")

found = [p.name for p in enumerate_processes(fiber, lambda_p)]
print("in-band processes:", found)

# C and F land within half a nanometre of each other
sep = candidate_separation(fiber, lambda_p)
print(f"C/F separation: {sep['separation_s_nm']:.3f} nm signal, {sep['separation_i_nm']:.3f} nm idler")

fig, ax = plt.subplots(figsize=(6, 5))
for name in "ABCFG":
    d = phasematch_diagram(fiber, TABLE1[name], (670.0, 715.0), n_pump=60)
    ax.plot(d.lambda_p, d.lambda_s, ".", ms=2, label=name)
    ax.plot(d.lambda_p, d.lambda_i, ".", ms=2, color=ax.lines[-1].get_color())
ax.axvline(lambda_p, color="k", lw=0.5)
ax.set_xlabel("pump wavelength (nm)")
ax.set_ylabel("signal / idler wavelength (nm)")
ax.legend(markerscale=5)
fig.tight_layout()
fig.savefig("phasematching.png", dpi=120)
print("saved phasematching.png")
