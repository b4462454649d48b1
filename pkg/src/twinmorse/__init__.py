"""Exact-arithmetic Morse theory on twin buildings.

The package certifies, at desk scale, the geometric machinery behind
zonotope-perturbed codistance height functions: exact quadratic-space
geometry, Coxeter complexes, zonotope calculus, finite flag buildings,
the SL2 Laurent twin tree, the moves/depth secondary height, and the
lexicographic Morse function with descending-link decompositions.
"""

__version__ = "0.1.0"
