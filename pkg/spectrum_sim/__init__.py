"""Spectrum sharing simulator: operator/RB matching with Q-learning power control."""
__version__ = '0.1.0'
