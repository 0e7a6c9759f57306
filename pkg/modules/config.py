"""Centralized configuration constants for subword-sampler."""

# Symbols and output conventions
END_OF_WORD = "</w>"  # Appended to every word at initialization, stripped on output
DEFAULT_JOINER = "@@"  # Suffix marking non-final subwords in segmented text

# Merge file format
MERGE_FILE_HEADER = "#version: 0.2"  # Same header family as subword-nmt merge lists
METADATA_SUFFIX = ".meta"  # Sidecar: <mergefile>.meta, one key=value per line

# Training defaults
DEFAULT_METHOD = "standard"  # standard | softmax | countprop | uniform
DEFAULT_SEED = 0
DEFAULT_SWEEP_BUDGETS = (200, 500)  # Desk-scale analogue used by `sweep`
PROGRESS_LOG_INTERVAL = 1000  # Log training progress every N merges

# Sampling
PROBABILITY_TOLERANCE = 1e-9  # Selection probabilities must sum to 1 within this
UINT64_MASK = 0xFFFFFFFFFFFFFFFF

# Diagnostics
DEFAULT_COVERAGE_THRESHOLD = 100  # Subword needs this many examples...
COVERAGE_TARGET = 0.95  # ...for this fraction of the vocabulary
TTR_DISPLAY_DECIMALS = 2  # Rounding applied only in formatted output

# Parallelism
DEFAULT_WORKERS = 1
APPLY_CHUNK_SIZE = 1000  # Lines per worker task in `apply --workers`
