"""
trajthermo
Trajectory-based heat, work and entropy production for open quantum systems.
"""

__version__ = "0.1.0"
