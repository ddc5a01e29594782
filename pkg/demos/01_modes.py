"""Guided modes of a birefringent step-index fiber.

Walks through the V-number, the LP modes guided at the pump and in the two
detection bands, and the effective-index dispersion of each mode.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sfwm_fiber import Axis, FiberSpec, ModeId, effective_index, guided_modes, v_number
from sfwm_fiber.dispersion import cutoff_v, nm_to_omega

fiber = FiberSpec(r=1.6, na=0.27, delta=4.2e-4, length=0.12)

# V decides how many LP modes the core holds
for lam in (692.0, 600.0, 810.0):
    modes = guided_modes(fiber, lam)
    print(f"{lam:6.1f} nm  V = {v_number(fiber, lam):.4f}  guided: {', '.join(m.name for m in modes)}")

# cutoffs are Bessel zeros: j_{l-1,m}, or j_{1,m-1} for l = 0
for md in guided_modes(fiber, 692.0):
    print(f"{md.name}: cutoff V = {cutoff_v(md.l, md.m):.5f}")

# effective index across the visible/near-IR, NaN beyond cutoff
lam = np.linspace(560.0, 900.0, 300)
om = nm_to_omega(lam)
fig, ax = plt.subplots(figsize=(6, 4))
for md in (ModeId(0, 1), ModeId(1, 1), ModeId(2, 1), ModeId(0, 2)):
    n = effective_index(fiber, md, om, strict=False)
    ax.plot(lam, n, label=md.name)
n_clad = fiber.cladding_index(lam * 1e-3)
ax.plot(lam, n_clad, "k:", label="cladding")
ax.set_xlabel("wavelength (nm)")
ax.set_ylabel("effective index")
ax.legend()
fig.tight_layout()
fig.savefig("modes.png", dpi=120)
print("saved modes.png")

# the slow axis sits a constant delta above the fast axis
n_fast = effective_index(fiber, ModeId(0, 1), nm_to_omega(692.0))
n_slow = effective_index(fiber, ModeId(0, 1, Axis.SLOW), nm_to_omega(692.0))
print(f"LP01 at 692 nm: fast {n_fast:.9f}, slow {n_slow:.9f}, difference {n_slow - n_fast:.2e}")
