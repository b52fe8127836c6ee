"""Monte Carlo tools for cluster fields, extremal indices and max-stable fields."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
