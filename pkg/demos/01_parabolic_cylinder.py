"""
Parabolic cylinder functions
============================

``D_nu(x)`` for real order, checked against the Hermite closed form at
integer order and against its three-term recurrence.
"""

# %%
import math

import numpy as np
from scipy.special import eval_hermite

from trapchsh.specfun import pcf_arrays, pcf_d

x = np.linspace(-6, 6, 7)
for n in range(4):
    closed = 2.0 ** (-n / 2) * np.exp(-x * x / 4) * eval_hermite(n, x / math.sqrt(2))
    print(f"n={n}  max |D_n - closed form| = {np.max(np.abs(pcf_d(n, x) - closed)):.1e}")

# %%
# Non-integer orders have no closed form; the recurrence
# D_{nu+1} - x D_nu + nu D_{nu-1} = 0 is a cheap self-consistency check.
nu = np.array([-3.7, -0.5, 0.25, 2.5, 17.3])
xs = np.array([-4.0, 1.0, 2.0, -0.5, 6.0])
d0, dm1 = pcf_arrays(nu, xs)
dp1, _ = pcf_arrays(nu + 1, xs)
print("recurrence residuals:", np.abs(dp1 - xs * d0 + nu * dm1))
