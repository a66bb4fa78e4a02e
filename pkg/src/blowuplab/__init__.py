"""Substitution calculus, recursive blow-up limits and exact motif densities
for finite canonical relational structures."""

__version__ = "0.1.0"
