"""Tests for ball quadrature, monotone profiles and the example catalog"""
