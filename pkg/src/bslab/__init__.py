"""Simulation, fault-tolerance audit and analysis toolkit for the [[9,1,3]] Bacon-Shor code."""

__version__ = "0.1.0"
