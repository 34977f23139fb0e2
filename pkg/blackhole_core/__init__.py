"""Targeted blackhole emulation core package."""
