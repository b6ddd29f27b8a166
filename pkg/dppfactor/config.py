"""Numerical tolerances and defaults shared across the package."""

# Sampling
PIVOT_TOLERANCE = 1e-8  # allowed drift of a pivot outside [0, 1] before clamping
PIVOT_TOLERANCE_SINGLE = 1e-3  # same, for 32-bit scalars
DIAGONAL_TOLERANCE = 1e-12  # kernel diagonal must lie in [0, 1] up to this
SINGULAR_CONDITIONING = 1e-12  # smallest eliminated pivot magnitude in conditioning
ZERO_PIVOT = 1e-300  # pivots below this are zero; forced branches below it are impossible
MAP_THRESHOLD = 0.5  # greedy MAP includes an index at p >= MAP_THRESHOLD

# Elementary / spectral
PROJECTION_TOLERANCE = 1e-8  # K^2 = K and K = K^H entrywise
RANK_TOLERANCE = 1e-6  # trace of a projection must be this close to an integer
SPECTRUM_TOLERANCE = 1e-8
NEGATIVE_DIAGONAL = 1e-8
DEGENERATE_MASS = 1e-10
MASS_CONSERVATION = 1e-6

# Per-step invariant assertions (mass conservation, hermitian pivots)
DEBUG_CHECKS = False

# Oracle
ADMISSIBILITY_TOLERANCE = 1e-10
MAX_ENUMERATION_ORDER = 20
ENUMERATION_BATCH = 4096  # determinants evaluated per numpy call
CHI_SQUARE_SIGNIFICANCE = 1e-3
CHI_SQUARE_MIN_EXPECTED = 5.0
IMPOSSIBLE_PROBABILITY = 1e-15  # subsets below this exact probability must never be drawn

# Dense blocking
SMALL_BLOCK_SIZE = 128
LARGE_BLOCK_SIZE = 256
BLOCK_SIZE_SWITCH = 2000  # n above which LARGE_BLOCK_SIZE is the default
DEFAULT_TILE_SIZE = 256

# Kernels
LENSEMBLE_TOLERANCE = 1e-10
AZTEC_DIAGONAL_TOLERANCE = 1e-10
LAPLACIAN_MAX_SIGMA = 8.0 / 9.0  # shifted Laplacian spectrum stays below 1

# Images
CELL_PIXELS = 8  # pixels per grid unit in rendered structures


def pivot_tolerance(precision: int) -> float:
    """Default pivot tolerance for a scalar precision."""
    return PIVOT_TOLERANCE_SINGLE if precision == 32 else PIVOT_TOLERANCE
