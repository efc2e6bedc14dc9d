"""Rational approximations of 1/sqrt(k) that make lambda/sqrt(k) nearly integral."""
from fractions import Fraction

from latticejl import InvSqrt, continued_fraction, find_scaling

for k in (2, 3, 5, 6):
    w = find_scaling(InvSqrt(k), Fraction(1, 20))
    print(f"k={k}: cf={list(continued_fraction(InvSqrt(k), 6).partial_quotients)} n1={w.n1} p={w.p} |n1/sqrt(k) - p|={float(w.achieved):.4f}")
