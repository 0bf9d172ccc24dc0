"""Normal forms and Lyapunov constants for planar piecewise-smooth systems.

The switching line is y = 0.  Each half-plane carries a polynomial vector
field; the origin is either a focus or an invisible tangency on each side.
"""

__version__ = "0.1.0"
