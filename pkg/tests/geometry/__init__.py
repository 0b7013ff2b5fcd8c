"""Tests for model spaces, jets, forms and exterior calculus"""
