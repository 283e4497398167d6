"""Multi-backend DBSCAN and Kmeans clustering benchmark.

Single-threaded, multithreaded, and OpenCL GPU backends over the same
algorithms, with cooperative cancellation, a runtime-loaded OpenCL
wrapper, seeded synthetic data, and a grid-sweeping benchmark harness.
"""

from .hotpath import KERNEL_IMPL

__version__ = "0.1.0"

__all__ = ["KERNEL_IMPL", "__version__"]
