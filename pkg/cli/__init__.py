"""
emcheck CLI - command-line driver for pointwise suites and monotone profiles
"""

__version__ = "0.1.0"
