"""
Ground-state entanglement entropy
=================================

Schmidt spectrum of the one-atom reduced density matrix and its von
Neumann entropy, as the coupling grows and as the traps separate.
"""

# %%
from trapchsh.density import ground_state_entropy
from trapchsh.spectrum import TrapConfig

for g in (0.0, 1.0, 10.0, 40.0):
    print(f"d=0  g={g:>5}: S = {ground_state_entropy(TrapConfig(g, 0.0)):.4f}")

# %%
# Separating the traps suppresses the overlap and with it the entanglement.
for d in (0.0, 1.0, 2.0, 4.0):
    print(f"g=1  d={d}: S = {ground_state_entropy(TrapConfig(1.0, d)):.4f}")
