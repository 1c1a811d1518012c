"""
Dayflow
Almost-invariant molecular means on finitely generated groups and approximate fixed points of affine actions
"""

__version__ = "0.1.0"
