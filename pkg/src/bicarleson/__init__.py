"""Discrete bi-Carleson operators, symbol decompositions and tile combinatorics."""
