# Numerical tolerances.
ROW_TOLERANCE = 1e-9        # Probability rows must sum to 1 within this.
STRICT_SLACK = 1e-12        # Margin for every strict "better than" test.
EQUALITY_SLACK = 1e-9       # Value tables compared for equality.
RESIDUAL_TOLERANCE = 1e-10  # Bellman residual of a linear-system solve.

# Candidate generation.
DEFAULT_BUDGET = 64
"""
Largest candidate set enumerated exhaustively.

Above it, the singleton switches plus the all-greedy switch are kept
(and topped up with sampled members when a random stream is given).
"""

# Communicating-MDP enumeration.
EXHAUSTIVE_CAP = 10**6  # Stationary policies.

# On-line controller.
DEFAULT_WINDOW_FACTOR = 2  # Window W = factor*|X| when not given.
DEFAULT_MAX_STEPS = 1000

# Random instances.
POSITIVE_EPSILON = 1e-2  # Added to every entry before renormalizing.

# Output.
TABLE_DIGITS = 12  # Significant digits in printed tables.

# Remaining-horizon tag written to policy and value files.
INDEXING_TAG = "remaining-horizon"

# Exit codes.
EXIT_OK = 0
EXIT_IO = 2
EXIT_DOMAIN = 3
EXIT_USAGE = 64
