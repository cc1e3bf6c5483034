"""Random features for operator-valued kernels with spectral regularization."""

__version__ = "0.1.0"

from . import conclab, dataio, estimator, features, neuralop, spectral, synthetic

__all__ = [
    "conclab",
    "dataio",
    "estimator",
    "features",
    "neuralop",
    "spectral",
    "synthetic",
    "__version__",
]
