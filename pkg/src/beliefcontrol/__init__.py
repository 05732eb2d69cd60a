"""Steering limiting beliefs of receiving agents in weakly-connected social learning networks."""
from .network import (CombinationMatrix, DimensionError, NetworkTopology, ValidationConfig, ValidationReport,
                      agent_global_index, build_C, build_E, reduce_for_agent, validate_network)
from .limits import (InvalidWeakStructure, LimitMatrix, StateSpace, compute_W, fixed_point_residual,
                     limiting_beliefs, sending_limit)
from .tsr import (AttainabilityReport, ColumnSolutionFamily, InfeasibleDesign, check_attainable, compute_V,
                  design_TSR, solution_family, uniform_precheck)
from .joint import (Case, EpsilonPolicy, JointColumnProblem, JointDesign, Status, build_problem, classify_agent,
                    design_case1, design_case2, design_case3, joint_design, solve_constrained_ls)
from .qp import InfeasiblePolytope, QPSolution, solve_simplex_ls
from .sim import (LikelihoodModel, SimConfig, Trace, VerificationReport, bayesian_update, combine_step,
                  empirical_limit, run_simulation, verify_design)

__version__ = "0.1.0"
