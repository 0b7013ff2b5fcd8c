"""Tests for run configuration, runners and the command-line interface"""
