"""equilab: equilibrium measures, balayage, and type-I Hermite-Pade polynomials.

Submodules (import them directly, the top-level package stays lightweight):

- ``equilab.kernels``        closed-form special functions of the inverse
  Zhukovskii map, Green function of [-1, 1], surface kernels
- ``equilab.measures``       discrete measures, potentials, KS distance
- ``equilab.equilibrium``    scalar / coupled / reduced equilibrium solvers
- ``equilab.balayage``       Chebyshev measure, balayage operators
- ``equilab.hermite_pade``   high-precision type-I Hermite-Pade polynomials
- ``equilab.verify``         verification harness and reports
- ``equilab.cli``            command-line entry point
"""

__version__ = "0.1.0"
