"""Mixed finite elements for Poisson problems with line sources.

The solution is split into a closed-form singular part built from line
Green's functions and a regular remainder, which is approximated with
lowest-order Raviart-Thomas fluxes and piecewise-constant pressures. The
standard method with the source measure on the right-hand side is included
for comparison.
"""

from .analysis import ConvergenceTable, ErrorSpec, observed_rates, weighted_error
from .assembly import MixedSystem, assemble_darcy, removal_system, standard_system
from .errors import (ConsistencyError, ConvergenceError, LineSourceError, LocationError,
                     NetworkParseError, SingularEvaluationError, SolverError, ValidationError)
from .experiments import ExperimentConfig, run_experiment
from .femspace import MixedSpace
from .fields import ScalarField
from .greens import (INFINITE_LINE, SEGMENT, KernelParams, greens_infinite_line, greens_network,
                     greens_network_gradient, greens_segment, greens_segment_gradient)
from .mesh import SimplicialMesh, build_box_mesh
from .network import (LineNetwork, PointSource, Segment, distance_to_network, intensity_at,
                      parse_network)
from .solver import SolveReport, solve_saddle
from .splitting import (SplitProblem, reconstruct, remainder_boundary, remainder_source,
                        singular_flux, singular_pressure)
from .vtk import write_vtk

__version__ = "0.1.0"
