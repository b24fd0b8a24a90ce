"""
Configuration management for anisomesh.
"""

from .manager import AnisomeshSettings, ConfigManager

__all__ = ["AnisomeshSettings", "ConfigManager"]
