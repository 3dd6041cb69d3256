"""
Blocks, regions and blame
=========================

The space is cut into ell blocks.  A vertex owns a region (a design set of
blocks) per size; a request goes to a common block of both regions.  When
every common block is full one region is blamed and replaced by its extra
region.  The in-contract regime here is m = 2 sizes on 2^6 strings.
"""

from fractions import Fraction

from cantor_games.alice import RandomAdversary
from cantor_games.blocks import BlamingWithExtras
from cantor_games.game import GameConfig, run_match

sizes = (Fraction(1, 1 << 12), Fraction(1, 1 << 13))
for seed in range(3):
    cfg = GameConfig(mode="pair-prefix-free", n=6, d=Fraction(1, 64), allowed_sizes=sizes,
                     seed=seed, params={"r": "8", "ell": "2048"})
    bob = BlamingWithExtras()
    tr = run_match(cfg, RandomAdversary(10**4), bob, keep=False)
    m = bob.metrics()
    print(f"seed {seed}: {tr.outcome}, {m['allocated']} allocated, "
          f"{m['regions_assigned']} regions, blames {m['blames']}, "
          f"unallocated in contract {m['unallocated_in_contract']}")
