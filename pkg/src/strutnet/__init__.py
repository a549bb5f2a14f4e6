"""Mixed finite elements for networks of straight elastic struts.

Static equilibrium, convergence studies and time integration of the
differential-algebraic evolution problem.
"""

from .assembly import (DofLayout, FeOrders, SaddleSystem, assemble, assemble_a, assemble_b,
                       assemble_f, assemble_mass, layout)
from .basis import basis_multiplier, basis_primal
from .dynamics import (CanonicalForm, DynamicProblem, DynamicState, Trajectory, canonical_form,
                       consistent_initial_state, integrate_midpoint, integrate_reduced,
                       precompute_factorization, reduced_ode_rhs, traveling_wave_load)
from .linalg import SingularSystemError
from .loads import named_load
from .network import (IncidenceMatrices, StentNetwork, incidence, load_network, palmaz, refine,
                      save_network, single_strut, zigzag_cylinder)
from .rod import CrossSection, HMatrix, LocalFrame, Material, frame_for, h_matrix, torsion_constant
from .static import (ErrorReport, MixedSolution, StaticProblem, check_solution, convergence_rate,
                     convergence_study, error_norms, solve_static)

__version__ = "0.1.0"
