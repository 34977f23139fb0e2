"""Simulation application package."""
