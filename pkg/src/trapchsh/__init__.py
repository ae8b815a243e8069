"""Two interacting atoms in displaced harmonic traps.

Relative-motion spectra, ground-state entanglement, Wigner functions and
phase-space CHSH tests, with and without loss.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from .density import ProductState, entropy_sweep, ground_state, ground_state_entropy, reduced_density_kernel, schmidt_spectrum, von_neumann_entropy
from .eigenstates import ComEigenstate, RelativeEigenstate, build_relative_state, relative_states
from .losschannel import LossChannel, lossy_chsh, lossy_marginal_at_origin, lossy_wigner, loss_sweep, loss_threshold, optimize_witness, witness_value
from .nonlocality import ChshResult, chsh_b, chsh_sweep, optimize_chsh, parity_correlation, thermal_source
from .specfun import kummer_m, pcf_d, rgamma
from .spectrum import TrapConfig, find_resonances, relative_spectrum, spectrum_sweep
from .wigner import TwoBodyWigner, lab_wigner, negativity_volume, relative_wigner_grid, thermal_weights

__all__ = [
    "__version__",
    "TrapConfig",
    "relative_spectrum",
    "spectrum_sweep",
    "find_resonances",
    "pcf_d",
    "kummer_m",
    "rgamma",
    "RelativeEigenstate",
    "ComEigenstate",
    "build_relative_state",
    "relative_states",
    "ProductState",
    "ground_state",
    "reduced_density_kernel",
    "schmidt_spectrum",
    "von_neumann_entropy",
    "ground_state_entropy",
    "entropy_sweep",
    "TwoBodyWigner",
    "lab_wigner",
    "thermal_weights",
    "relative_wigner_grid",
    "negativity_volume",
    "ChshResult",
    "parity_correlation",
    "chsh_b",
    "optimize_chsh",
    "chsh_sweep",
    "thermal_source",
    "LossChannel",
    "lossy_wigner",
    "lossy_marginal_at_origin",
    "witness_value",
    "optimize_witness",
    "lossy_chsh",
    "loss_sweep",
    "loss_threshold",
]
