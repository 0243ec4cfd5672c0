"""Concentration, CLT and large deviations of the geometric/p-generalized mean ratio on l_p balls."""

__version__ = "0.1.0"
