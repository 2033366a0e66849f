"""Array-oriented bindings for ML training loops.

open_base wraps an immutable node pool (from a saved pool file or a
spec+seed triple); sample_epoch regenerates one training epoch as dense
numpy arrays whose canonical byte encoding is identical to the primary
pipeline's epoch serialization for the same arguments.
"""

import routepool

from .api import BaseHandle, EpochBatch, open_base, sample_epoch

__version__ = "0.1.0"

if __version__ != routepool.__version__:  # pragma: no cover
    raise ImportError(
        f"routepool-bindings {__version__} does not match routepool {routepool.__version__}"
    )

__all__ = ["BaseHandle", "EpochBatch", "open_base", "sample_epoch", "__version__"]
