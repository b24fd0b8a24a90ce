"""
Anisomesh - Anisotropic mesh adaptation toolkit

Builds metric tensors from recovered Hessians, adapts triangular meshes of the
unit square to them by local remeshing, and compares metrics on benchmark
convection-diffusion and Poisson problems.
"""

__version__ = "1.0.0"

from .main import Anisomesh

__all__ = ["Anisomesh", "__version__"]
