from .problems import (GreedyRule, Orientation, RuleView, clustered_orientation, first_fit_coloring,
                       greedy_mis, is_mis, is_proper_coloring, local_consistency_violations,
                       orientation_from_coloring, sequential_greedy_oracle)
from .solvers import (ClusteredSolver, ColoringSolver, FullSolver, SolverInput, solve,
                      solve_given_colored_clustering, solve_given_coloring)
