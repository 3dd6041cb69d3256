"""
Greedy allocation on a bounded-degree graph
===========================================

Every request of size eps gets the leftmost eps-cell free at both
endpoints.  With budget d each endpoint already holds less than d, so two
endpoints block less than 2d and a cell is always free when d <= 1/2.
"""

from fractions import Fraction

from cantor_games.alice import RandomAdversary
from cantor_games.bob import GreedyPairs
from cantor_games.game import GameConfig, ScriptedAlice, run_match

eps = Fraction(1, 8)
cfg = GameConfig(d=Fraction(1, 2), allowed_sizes=(eps,))

# a triangle: three edges, pairwise sharing a vertex
tri = ScriptedAlice([(("a", "b"), eps), (("b", "c"), eps), (("a", "c"), eps)])
tr = run_match(cfg, tri, GreedyPairs())
for r in tr.records:
    if r["kind"] == "allocate":
        print(r["vertices"], "->", r["address"])
print(tr.outcome)

# a longer random stream on 64 vertices
cfg = GameConfig(n=6, d=Fraction(1, 2), allowed_sizes=(Fraction(1, 1024),), seed=3)
tr = run_match(cfg, RandomAdversary(5000), GreedyPairs(), keep=False)
print("5000 random requests:", tr.outcome, "| ball check:", tr.metrics["ball_check"])
