"""Structure-preserving time integration of a port-Hamiltonian synchronous
generator model: predictor-corrector schemes on the full model and Gauss
collocation on the reduced index-1 form."""

__version__ = "0.1.0"

from .params import PhysicalParams, fbm_ssr, load_params  # noqa: E402
from .model import FullState, GeneratorModel, ReducedState, make_consistent  # noqa: E402
from .tableau import ButcherTableau, gauss_tableau  # noqa: E402
from .collocation import GaussOptions, GaussStepper, gauss_dae_step  # noqa: E402
from .pc import PCState, pc1_step, pc2_step  # noqa: E402
from .ics import load_initial_state  # noqa: E402
from .simulation import Trajectory, TrajectoryFrame, integrate  # noqa: E402
from .convergence import ReferenceSpec, convergence_study  # noqa: E402
from .appendix import verify_appendix  # noqa: E402

__all__ = [
    "__version__", "PhysicalParams", "fbm_ssr", "load_params", "FullState", "GeneratorModel", "ReducedState",
    "make_consistent", "ButcherTableau", "gauss_tableau", "GaussOptions", "GaussStepper", "gauss_dae_step",
    "PCState", "pc1_step", "pc2_step", "load_initial_state", "Trajectory", "TrajectoryFrame", "integrate",
    "ReferenceSpec", "convergence_study", "verify_appendix",
]
