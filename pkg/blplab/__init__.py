"""
blplab
Exact basic LP relaxations of valued constraint satisfaction problems, fractional
polymorphism detection and construction, and the tournament flip procedure.
"""

__version__ = "1.0.0"
__description__ = "Exact BLP and fractional polymorphism tools for valued CSPs"
