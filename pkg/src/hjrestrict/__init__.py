"""Hamilton-Jacobi equations restricted to, and extended from, embedded submanifolds."""

from . import errors, geometry, hamiltonian, hjsolver, transfer
from .config import DEFAULT_TOLERANCES, Tolerances

__version__ = "0.1.0"

__all__ = ["DEFAULT_TOLERANCES", "Tolerances", "errors", "geometry", "hamiltonian", "hjsolver", "transfer", "__version__"]
