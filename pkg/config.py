"""
Configuration file for the resonant NLS laboratory.
Process-wide defaults; experiment parameters live in lab.ExperimentConfig.
"""

import os

# Output and logging
OUTPUT_DIR = os.environ.get(
    'NLS_LAB_OUTPUT',
    os.path.join(os.path.dirname(os.path.abspath(__file__)), 'results')
)
LOG_LEVEL = os.environ.get('NLS_LAB_LOG_LEVEL', 'INFO')
DEFAULT_THREADS = int(os.environ.get('NLS_LAB_THREADS', 1))
DEFAULT_SEED = 20240611

# Lattice
DEFAULT_PAD_FACTOR = int(os.environ.get('NLS_LAB_PAD_FACTOR', 4))
MIN_LATTICE_K = 4  # smaller lattices cannot host the K/2 tail monitor
REAL_SYMMETRY_TOL = 1e-12

# Para-differential calculus
DEFAULT_CUTOFF_EPS = 0.1  # must stay inside (0, 1/4)
DEFAULT_CUTOFF_PROFILE = 'quintic'
PARAPRODUCT_DIRECT_MAX_K = 64  # above this input extent the shell-binned path is used

# Diagonalizer
NEUMANN_TOL = 1e-12
NEUMANN_MAX_TERMS = 60
CONTRACTION_PROBE_ITERATIONS = 8

# Solver
DEFAULT_SCHEME = 'strang'
DEFAULT_GUARD = 1.0  # a-priori ball for |u|_{s0,R}
MASS_DRIFT_WARN = 1e-8
GALERKIN_PHASE_TOL = 1e-15  # relative increment of the projected nonlinear sub-step
GALERKIN_PHASE_MAX_ITERATIONS = 50

# Inequality registry
DEFAULT_SAMPLES = 8
K_LADDER = (16, 32, 64)
N_LADDER = (8, 16, 32, 64)
RATIO_CEILING = 8.0  # ceiling on normalized constants
TREND_SLOPE_LIMIT = 0.1
TRUNC_SLOPE_RANGE = (-1.2, -0.8)
CONTRAST_SLOPE_MIN = 0.8
LITERAL_SLACK = 1e-12

# Lifespan experiments
TAIL_MASS_LIMIT = 1e-6
STEPS_PER_T_GOOD = 400
BASIC_INFLATION_LIMIT = 2.0
