"""Magic-state cultivation circuits, fault analysis, decoding and statistics."""

import warnings

# numba probes an old TBB on import of its parallel layer and falls back to OpenMP
warnings.filterwarnings("ignore", message="The TBB threading layer")
