"""Performance-boundary search for a simulated braking controller.

Samples a three-parameter scenario space, labels points with a kinematic
simulator, trains a Gaussian process classifier (Laplace approximation),
and extracts the p = 0.5 performance boundary with confidence measures.
"""

__version__ = "0.1.0"
