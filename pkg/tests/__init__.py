"""
Radial Wave Lab - Tests Package
Unit checks on coarse lattices, command-line runs and slow acceptance scenarios
"""
