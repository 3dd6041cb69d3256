from fractions import Fraction

import pytest

from cantor_games.alice import RandomAdversary
from cantor_games.blocks import (
    BlamingWithExtras, ComposedFull, RegionBlockBlaming, SetFriends, SetGroups,
    SetLeaders, band_boundary,
)
from cantor_games.designs import DesignList
from cantor_games.game import GameConfig, ScriptedAlice, run_match

E = Fraction(1, 64)


def bob_records(tr, kind=None):
    out = [r for r in tr.records if r["actor"] == "bob"]
    return out if kind is None else [r for r in out if r["kind"] == kind]


def pair_cfg(**kw):
    kw.setdefault("mode", "pair-prefix-free")
    kw.setdefault("d", Fraction(1))
    kw.setdefault("allowed_sizes", (E,))
    kw.setdefault("excuses", True)
    return GameConfig(**kw)


# u's region spans blocks 0..7 of 16, everybody else only owns block 0;
# four requests at u fill block 0, so the fifth has no common slot
FILL = [(("u", f"a{i}"), E) for i in range(4)] + [(("u", "v"), E)]


def test_fresh_request_assigns_two_regions():
    bob = RegionBlockBlaming(DesignList(16, 2, 4, sets=[range(8)] + [[0]] * 3))
    tr = run_match(pair_cfg(), ScriptedAlice(FILL[:1]), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    assert bob.metrics()["regions_assigned"] == 2
    assert bob_records(tr, "allocate")[0]["address"] == "000000"


def test_blame_when_common_blocks_are_full():
    bob = RegionBlockBlaming(DesignList(16, 2, 6, sets=[range(8)] + [[0]] * 5))
    tr = run_match(pair_cfg(), ScriptedAlice(FILL), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    assert [r["address"] for r in bob_records(tr, "allocate")] == ["000000", "000001", "000010", "000011"]
    blame = bob_records(tr, "blame")
    assert len(blame) == 1 and blame[0]["vertices"] == ["u"]
    assert bob.blames == {"u": 1}
    # without excuses the blamed request is simply lost
    bob = RegionBlockBlaming(DesignList(16, 2, 6, sets=[range(8)] + [[0]] * 5))
    tr = run_match(pair_cfg(excuses=False), ScriptedAlice(FILL), bob)
    assert tr.outcome == "alice-wins-at-move-5"


def test_extras_take_over_after_blame():
    # pairs of (normal, extra) index sets: u, a0..a3, v
    sets = [range(8), range(8, 16)] + [[0], [1]] * 4 + [[0], [8]]
    bob = BlamingWithExtras(DesignList(16, 2, len(sets), sets=sets))
    tr = run_match(pair_cfg(excuses=False), ScriptedAlice(FILL), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    last = bob_records(tr, "allocate")[-1]
    assert last["vertices"] == ["u", "v"] and last["address"] == "100000"
    m = bob.metrics()
    assert m["blames"] == 1 and m["extra_blames"] == 0 and m["step3"] == 1


def blaming_cfg(seed, **params):
    p = {"r": "8", "ell": "2048"}
    p.update(params)
    return GameConfig(mode="pair-prefix-free", n=6, d=Fraction(1, 64),
                      allowed_sizes=(Fraction(1, 1 << 12), Fraction(1, 1 << 13)),
                      seed=seed, params=p)


@pytest.mark.parametrize("seed", range(5))
def test_blaming_with_extras_random_fuzz(seed):
    bob = BlamingWithExtras()
    tr = run_match(blaming_cfg(seed), RandomAdversary(10**4), bob, keep=False)
    m = bob.metrics()
    assert tr.outcome == "bob-wins-script-exhausted"
    assert m["unallocated_in_contract"] == 0
    assert m["extra_blames"] == 0
    assert m["selection_violations"] == 0
    assert Fraction(m["extra_alloc_max"]) < Fraction(1, m["r"] ** 2)
    assert tr.metrics["ball_check"] == "ok"


def test_in_contract_bound():
    bob = BlamingWithExtras()
    bob.bind(blaming_cfg(0), None)
    from cantor_games.game import Request
    assert bob.in_contract(Request((0, 1), Fraction(1, 1 << 12)))
    assert not bob.in_contract(Request((0, 1), Fraction(1, 1 << 11)))


# ---- composed

def test_band_boundary():
    assert band_boundary(16) == Fraction(1, 1 << 16)
    assert band_boundary(8) == Fraction(1, 1 << 12)
    assert band_boundary(8, 8) == Fraction(1, 1 << 9)


def composed_cfg(seed=0):
    return GameConfig(mode="pair-prefix-free", n=8, d=Fraction(1, 64),
                      allowed_sizes=(Fraction(1, 1 << 10), Fraction(1, 1 << 8)), seed=seed,
                      params={"r": "2", "small_ell": "32", "large_ell": "32", "N": "4096",
                              "band_c": "8"})


def test_composed_routing():
    cfg = composed_cfg()
    bob = ComposedFull()
    moves = [((1, 2), Fraction(1, 1 << 10)), ((1, 3), Fraction(1, 1 << 8))]
    tr = run_match(cfg, ScriptedAlice(moves), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    assert bob.metrics()["routed"] == {"small": 1, "large": 1}
    a, b = [r["address"] for r in bob_records(tr, "allocate")]
    assert a.startswith("0") and b.startswith("1")


def test_composed_rejects_below_band():
    cfg = composed_cfg()
    cfg = GameConfig(mode=cfg.mode, n=8, d=cfg.d, allowed_sizes=(Fraction(1, 1 << 11),),
                     params=cfg.params)
    tr = run_match(cfg, ScriptedAlice([((1, 2), Fraction(1, 1 << 11))]), ComposedFull())
    assert tr.outcome.startswith("rule-violation-by-alice")


@pytest.mark.parametrize("seed", range(3))
def test_composed_fuzz_allocates_everything(seed):
    bob = ComposedFull()
    tr = run_match(composed_cfg(seed), RandomAdversary(10**4), bob, keep=False)
    assert tr.outcome == "bob-wins-script-exhausted"
    assert tr.metrics["ball_check"] == "ok"


# ---- sets

def set_cfg(seed=0, d=Fraction(1, 256), **params):
    p = {"r": "4", "ell": "4096", "N": "4096"}
    p.update(params)
    return GameConfig(mode="set", s=3, n=4, d=d, seed=seed, excuses=True,
                      allowed_sizes=(Fraction(1, 1 << 16), Fraction(1, 1 << 17)), params=p)


def test_leaders_declared_then_reused():
    # u spans blocks 0..7, all others block 0; block 0 is filled with u's requests
    moves = [(("u", f"a{i}", f"b{i}"), E) for i in range(4)]
    moves += [(("u", "v", "w"), E), (("u", "v", "x"), E)]
    bob = SetLeaders(DesignList(16, 2, 16, s=3, sets=[range(8)] + [[0]] * 15))
    cfg = GameConfig(mode="set", s=3, d=Fraction(1), allowed_sizes=(E,), excuses=True)
    tr = run_match(cfg, ScriptedAlice(moves), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    lead = bob_records(tr, "leader")
    assert len(lead) == 1 and lead[0]["vertices"] == ["u", "v", "w"]
    m = bob.metrics()
    assert m["excused_new_leaders"] == 1 and m["excused_existing_leader"] == 1
    assert bob.leaders == {"u": {"v", "w"}}


@pytest.mark.parametrize("seed", range(3))
def test_leaders_fuzz(seed):
    bob = SetLeaders()
    tr = run_match(set_cfg(seed), RandomAdversary(1000), bob, keep=False)
    m = bob.metrics()
    assert tr.outcome == "bob-wins-script-exhausted"
    assert m["unallocated_in_contract"] == 0
    assert m["max_leaders"] <= m["leader_bound"]
    assert m["selection_violations"] == 0


def test_friends_by_coappearance():
    cfg = GameConfig(mode="set", s=3, d=Fraction(1, 4), allowed_sizes=(E,), excuses=True,
                     params={"f": "1/64", "ell": "16", "r": "2", "N": "64"})
    moves = [(("a", "b", "c"), E), (("a", "b", "d"), E)]
    bob = SetFriends()
    tr = run_match(cfg, ScriptedAlice(moves), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    assert len(bob_records(tr, "allocate")) == 1
    fr = bob_records(tr, "friends")
    assert [r["vertices"] for r in fr] == [["a", "b"]]
    assert bob.metrics()["excused_friends"] == 1


@pytest.mark.parametrize("f", [None, "1/2^12"])
def test_friends_fuzz(f):
    params = {} if f is None else {"f": f}
    bob = SetFriends()
    tr = run_match(set_cfg(1, **params), RandomAdversary(1000), bob, keep=False)
    m = bob.metrics()
    assert tr.outcome == "bob-wins-script-exhausted"
    assert m["unallocated_in_contract"] == 0 and m["extra_blames"] == 0
    assert m["max_friends"] <= m["friend_bound"]


def groups_cascade():
    e = Fraction(1, 1 << 10)
    cfg = GameConfig(mode="set", s=3, n=4, d=Fraction(1, 16), allowed_sizes=(e, 2 * e),
                     excuses=True,
                     params={"r": "2", "ell": "64", "N": "256", "f": str(e), "ell1": "16"})
    moves = [(("a", "b", "c"), e), (("a", "b", "d"), e), (("a", "b", "d"), 2 * e)]
    bob = SetGroups()
    return run_match(cfg, ScriptedAlice(moves), bob), bob


def test_groups_double_merge_cascade():
    tr, bob = groups_cascade()
    assert tr.outcome == "bob-wins-script-exhausted"
    last = [r for r in tr.records if r["idx"] == 3 and r["actor"] == "bob"]
    merges = [r["note"] for r in last if r["kind"] == "merge"]
    assert merges == ["level 3->2", "level 2->1"]
    m = bob.metrics()
    assert m["level1_allocated"] == 1
    assert m["level2"]["allocated"] == 1 and m["level3"]["allocated"] == 1
    # level 1 lives in the last quarter of the space for s=3
    a = [r for r in last if r["kind"] == "allocate"][0]["address"]
    assert a.startswith("10")


def test_groups_s2_structure():
    e = Fraction(1, 1 << 10)
    cfg = GameConfig(mode="set", s=2, n=4, d=Fraction(1, 16), allowed_sizes=(e, 2 * e),
                     excuses=True,
                     params={"r": "2", "ell": "64", "N": "256", "f": str(e), "ell1": "16"})
    moves = [(("a", "b"), e), (("a", "b"), 2 * e)]
    bob = SetGroups()
    tr = run_match(cfg, ScriptedAlice(moves), bob)
    assert tr.outcome == "bob-wins-script-exhausted"
    assert sorted(bob.levels) == [2]
    assert bob.metrics()["level1_allocated"] == 1


@pytest.mark.parametrize("seed", range(3))
def test_groups_fuzz(seed):
    bob = SetGroups()
    tr = run_match(set_cfg(seed), RandomAdversary(1000), bob, keep=False)
    m = bob.metrics()
    assert tr.outcome == "bob-wins-script-exhausted"
    assert m["falsified"] == 0 and m["extra_blames"] == 0
    assert m["selection_violations"] == 0
