"""Numerical laboratory for a regularized boundary-layer system around a
non-monotone shear flow, with Gevrey-norm tracking and a verification harness."""

__version__ = "0.1.0"
