"""Runtime orchestration utilities."""
