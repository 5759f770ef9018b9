"""
Connection Router - bi-objective routing of long-lived user connections.
"""

__version__ = "1.0.0"
