"""Outer invariance entropy for affine control systems on matrix Lie groups."""
