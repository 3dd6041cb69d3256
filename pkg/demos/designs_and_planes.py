"""
Designs, planes and the triangle count
======================================

Random index lists: every t-wise intersection of a few sets is close to
ell / r^t.  Projective planes: q^2 + q + 1 lines that pairwise meet in one
point, so their labels must all differ.  The triangle set: strings reachable
from 0^n by changing a prefix and a suffix of total length n/2.
"""

from fractions import Fraction

from cantor_games.designs import (
    design_length, gen_index_list, line_label_bound, projective_plane,
    triangle_counterexample, verify_item1,
)

r, N = 4, 32
ell = design_length(r, N)
ok = sum(verify_item1(gen_index_list(ell, r, N, seed=s, xi=Fraction(9, 20)), depth=3) is None
         for s in range(5))
print(f"ell = {ell}: {ok}/5 seeds pass pairs and triples")

for q in (2, 3, 5):
    p = projective_plane(q)
    bound, wit = line_label_bound(p)
    print(f"q={q}: {len(p.lines)} lines, some label has length >= {bound}  {wit}")

for n in (8, 12, 16):
    cnt, ratio = triangle_counterexample(n)
    print(f"n={n}: {cnt} strings, {ratio} per 2^(n/2)")
