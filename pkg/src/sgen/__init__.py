"""Structure-controlled 3D point cloud generation and evaluation."""

__version__ = "0.1.0"

from .errors import SgenError

__all__ = ["SgenError", "__version__"]
