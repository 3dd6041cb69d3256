"""
The star adversary
==================

Alice grows stars around fresh centres, keeps the leaves whose next
interval landed in a common spot, and retires the rest.  Each stage adds at
least d to the measure the surviving leaves have touched, until a final
request has nowhere to go.

Greedy and the region strategies treat vertices symmetrically, so the
simulation clones one representative instead of materialising the
exponentially many vertices the real game needs.
"""

from fractions import Fraction

from cantor_games.alice import star_epsilons, star_for
from cantor_games.bob import DynamicRegions, GreedyPairs
from cantor_games.game import GameConfig, run_match

d = Fraction(1, 2)
cfg = GameConfig(d=d, allowed_sizes=tuple(star_epsilons(d)), params={"promise": "none"})

for bob in (GreedyPairs(), DynamicRegions()):
    tr = run_match(cfg, star_for(bob, d), bob, keep=False)
    a = tr.metrics["alice"]
    print(f"{bob.name}: {tr.outcome} after {tr.metrics['moves']} moves")
    for st in a["stages"]:
        print(f"  stage {st['stage']}: zone {st['zoneA']} -> {st['zoneB']}, "
              f"{st['substages']} substages")
    print("  vertices the uncompressed game would need:", a["N_k"])
