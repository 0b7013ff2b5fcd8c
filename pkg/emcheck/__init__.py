"""
emcheck - numerical verification of energy-momentum tensor identities

Operators and closed-form identities for p-harmonic bundle-valued forms and
Yang-Mills-Higgs pairs on model Riemannian manifolds, checked pointwise and by
geodesic-ball quadrature.
"""

__version__ = "0.1.0"
