"""
Wigner function and negativity volume
=====================================

The relative-motion Wigner function of the interacting ground state is
negative near the origin; temperature washes the negativity out.
"""

# %%
from trapchsh.spectrum import TrapConfig
from trapchsh.wigner import lab_wigner, negativity_volume, relative_wigner_grid, thermal_weights

cfg = TrapConfig(10.0, 0.0)
ground = lab_wigner(thermal_weights(cfg, 0.0))
grid = relative_wigner_grid(ground.rel_states[0])
print(f"min W_rel = {grid.values.min():.4f}")

# %%
for T in (0.0, 0.25, 0.5, 1.0):
    nv = negativity_volume(lab_wigner(thermal_weights(cfg, T)), "relative")
    print(f"T={T}: N_V(relative) = {nv:.4f}")
