"""
User interface components for anisomesh.
"""

from .terminal import TerminalUI

__all__ = ["TerminalUI"]
