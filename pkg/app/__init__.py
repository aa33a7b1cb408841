"""
Razhi-ms Multi-Signature Service
Lattice-based one-round multi-signatures with a simulated Bitcoin flow
"""

__version__ = "1.0.0"
