"""Symbolic exterior calculus for multisymplectic geometry."""
