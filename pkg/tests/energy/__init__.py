"""Tests for stress-energy tensors and Yang-Mills-Higgs pairs"""
