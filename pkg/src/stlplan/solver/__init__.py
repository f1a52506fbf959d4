"""MILP solving without external software."""
