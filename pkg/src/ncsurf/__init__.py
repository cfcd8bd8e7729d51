"""Arithmetic invariants for module categories over a projective coordinate line.

Subpackages are layered bottom-up: exact integer linear algebra, finite
Z-orders and their right modules, twisted cohomology over the coordinate
line, a graded-module engine with an independent Cech oracle, determinant
lines and arithmetic degrees, and a scenario runner exposed through a
service and a command line client.
"""

__version__ = "0.1.0"
