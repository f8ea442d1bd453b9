"""fraclab: numerical experiments on fractal boundaries and fractional Sobolev spaces.

The package estimates Minkowski and Assouad-type dimensions of planar domain
boundaries, evaluates Gagliardo seminorms and fractional Hardy quotients by
Monte Carlo and grid quadrature, and runs the cutoff-sequence experiments
that probe whether smooth compactly supported functions are dense in
W^{s,p} on a given domain.
"""

from fraclab.kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
