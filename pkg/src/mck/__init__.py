"""Workbench for a box-only constructive modal lambda calculus."""

__version__ = "0.1.0"
