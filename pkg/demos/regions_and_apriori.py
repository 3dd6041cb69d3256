"""
Region strategies and the a-priori allocator
============================================

Static regions reserve a slice of the space per size (sized by a quota of
requests per vertex); dynamic regions hand
each vertex a private slice per size on first use.  When all weights are
known in advance the a-priori allocator gives every pair exactly half its
weight, disjoint at each vertex.
"""

from fractions import Fraction

from cantor_games.bob import AprioriAllocator, DynamicRegions, StaticRegions
from cantor_games.dyadic import format_dyadic, measure
from cantor_games.game import GameConfig, ScriptedAlice, run_match

e1, e2 = Fraction(1, 8), Fraction(1, 32)
moves = [(("u", "v"), e1), (("u", "w"), e2), (("v", "w"), e2)]
cfg = GameConfig(d=Fraction(1, 4), allowed_sizes=(e1, e2))
for bob in (StaticRegions({e1: 1, e2: 2}), DynamicRegions()):
    tr = run_match(cfg, ScriptedAlice(moves), bob)
    got = [(r["vertices"], r["address"]) for r in tr.records if r["kind"] == "allocate"]
    print(bob.name, tr.outcome, got)

al = AprioriAllocator()
for x, y, r in [("a", "b", Fraction(1, 2)), ("a", "c", Fraction(1, 4)),
                ("b", "c", Fraction(1, 4)), ("a", "b", Fraction(1, 8))]:
    al.increment(x, y, r)
for x, y in [("a", "b"), ("a", "c"), ("b", "c")]:
    U = al.sets(x, y)
    print(f"U_{x}{y} = {U.addresses}  measure {format_dyadic(measure(U))}"
          f"  weight {format_dyadic(al.weight(x, y))}")
print("check:", al.check() or "exact and disjoint")
