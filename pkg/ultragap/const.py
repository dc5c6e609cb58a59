# relative tolerance for metric axioms on float input
METRIC_RTOL = 1e-9
# absolute tolerance on the two simplex constraints
SIMPLEX_ATOL = 1e-12
# absolute tolerance on block imbalances when certifying flatness
FLATNESS_ATOL = 1e-12
# absolute tolerance on the algebraic identity for two weight lists
IDENTITY_ATOL = 1e-12
# dual feasibility of the active set method, bound multipliers may dip this far below zero
MULTIPLIER_TOL = 1e-10
# primal feasibility of an equality-constrained step
FEASIBILITY_TOL = 1e-14
# sub-problem values this close to the minimum count as ties
TIE_TOL = 1e-12
# relative tolerance for verdicts comparing a constant against a gap
VERDICT_RTOL = 1e-9
# smallest eigenvalue on the mean-zero subspace, relative to the largest entry, still accepted
NEGATIVE_TYPE_RTOL = 1e-10

# exact enumeration is exponential in the number of points
MAX_ENUMERATION_POINTS = 16
# iteration cap of the active set method is this factor times the number of points
ACTIVE_SET_ITERATION_FACTOR = 10
# below this many points the sign partitions are solved in-process
PARALLEL_MIN_POINTS = 12
# environment variable capping the number of worker processes
THREADS_ENV = "ULTRAGAP_THREADS"

# largest supported exponent, keeps alpha^p inside double range
P_MAX = 30.0
# largest normalized distance accepted in float mode
MAX_FLOAT_ENTRY = 1e4
# default exponent grid for curves: start, stop, steps
DEFAULT_GRID = (0.0, P_MAX, 31)

# random search
DEFAULT_ORACLE_TRIALS = 100_000
DEFAULT_SEED = 0
ORACLE_BATCH_SIZE = 10_000
# number of best sign patterns refined by projected gradient
ORACLE_POLISH_PATTERNS = 128
ORACLE_POLISH_ITERATIONS = 5000
ORACLE_POLISH_ATOL = 1e-15

# random mean-zero vectors drawn when checking the enhanced inequality
DEFAULT_VERIFY_SAMPLES = 1000

# decimal output
SIGNIFICANT_DIGITS = 12
# offending indices named in a structural error message
MAX_REPORTED_INDICES = 10
