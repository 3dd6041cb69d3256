"""
Requests on sets of three strings
=================================

Leaders, friends and groups each extend the block scheme from pairs to
s-sets.  The groups strategy runs one substrategy per number of groups and
merges groups when they keep meeting; the scripted cascade below forces two
merges in a row.
"""

from fractions import Fraction

from cantor_games.alice import RandomAdversary
from cantor_games.blocks import SetFriends, SetGroups, SetLeaders
from cantor_games.game import GameConfig, ScriptedAlice, run_match

params = {"r": "4", "ell": "4096", "N": "4096", "f": "1/2^12"}
cfg = GameConfig(mode="set", s=3, n=4, d=Fraction(1, 256), seed=0, excuses=True,
                 allowed_sizes=(Fraction(1, 1 << 16), Fraction(1, 1 << 17)), params=params)
for bob in (SetLeaders(), SetFriends(), SetGroups()):
    tr = run_match(cfg, RandomAdversary(1000), bob, keep=False)
    print(bob.name, tr.outcome)

e = Fraction(1, 1 << 10)
cfg = GameConfig(mode="set", s=3, n=4, d=Fraction(1, 16), allowed_sizes=(e, 2 * e), excuses=True,
                 params={"r": "2", "ell": "64", "N": "256", "f": str(e), "ell1": "16"})
moves = [(("a", "b", "c"), e), (("a", "b", "d"), e), (("a", "b", "d"), 2 * e)]
tr = run_match(cfg, ScriptedAlice(moves), SetGroups())
for r in tr.records:
    if r["actor"] == "bob":
        print(f"  move {r['idx']}: {r['kind']} {r['vertices']} {r.get('address') or r.get('note', '')}")
