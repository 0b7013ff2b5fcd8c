"""
emcheck test suite

Pointwise identities, quadrature and profiles, catalog registration and the CLI.
"""
