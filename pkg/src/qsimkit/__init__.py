"""Desk-scale emulation toolkit for quantum simulation of molecular chemistry."""

from __future__ import annotations

__version__ = "0.1.0"
