"""
Relative-motion spectrum and an avoided crossing
================================================

Levels of two contact-interacting atoms in displaced traps.  For an
attractive coupling the molecular ground state meets the first trap level
as the traps are pulled apart.
"""

# %%
import numpy as np

from trapchsh.spectrum import TrapConfig, find_resonances, relative_spectrum, spectrum_sweep

for g in (0.0, 1.0, 10.0, 1000.0):
    levels = [round(r.nu, 6) for r in relative_spectrum(TrapConfig(g, 0.0), 4)]
    print(f"g={g:>7}: nu = {levels}")

# %%
# Sweep the separation at g = -1.5 and locate the smallest gap.
d = np.arange(2.5, 4.51, 0.05)
table = spectrum_sweep(-1.5, d, 3)
for res in find_resonances(table):
    print(f"levels {res.levels}: avoided crossing at d = {res.location:.4f}, gap {res.min_gap:.4f}")
