"""
Configuration management for the carma-levy toolkit
"""

from .settings import CarmaLevyConfig

__all__ = [
    'CarmaLevyConfig'
]
