"""Conformal curvature, tractor calculus and normal conformal Killing forms."""

from __future__ import annotations

__version__ = "0.1.0"
