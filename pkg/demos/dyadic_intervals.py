"""
Dyadic interval sets
====================

Subsets of the Cantor space are finite unions of cylinders, written as
binary prefixes.  Measures stay exact because every size is a dyadic
rational.
"""

from fractions import Fraction

from cantor_games.dyadic import (
    IntervalSet, complement, eps_neighborhood, format_dyadic,
    largest_interval_size, measure, union,
)

# siblings merge, so the canonical form is unique
a = IntervalSet(["00", "01", "110"])
print("a =", a.addresses, "measure", format_dyadic(measure(a)))

b = IntervalSet(["10", "1110"])
ab = union(a, b)
print("a | b =", ab.addresses, "measure", format_dyadic(measure(ab)))
print("largest aligned interval inside a | b:", format_dyadic(largest_interval_size(ab)))

# what is left, and which 1/4-cells the set touches
print("complement:", complement(ab).addresses)
print("1/4-neighbourhood of b:", eps_neighborhood(b, Fraction(1, 4)).addresses)
