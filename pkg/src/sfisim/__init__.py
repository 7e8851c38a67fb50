"""Sequential fully implicit (SFI) simulation of immiscible multiphase flow with
inexact inner solves and quasi-Newton outer acceleration."""
from .assembly import Discretization, SimState, assemble_fi, assemble_pressure, assemble_transport
from .cases import CaseSpec, builtin_case, case_from_config, load_case_config
from .grid import StructuredGrid, build_cartesian_grid
from .newton import Strategy, TolerancePolicy
from .oracle import FiResult, fi_solve_step
from .qn import QnConfig
from .sfi import OuterConfig, run_simulation, sfi_step

__version__ = "0.1.0"
