import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cantor_games.bob import GreedyPairs
from cantor_games.game import (
    AllocationState, ConfigError, ConstantBob, GameConfig, IdSet, Request,
    Retire, ScriptedAlice, ScriptedBob, Reply, ball_count_check,
    config_from_pairs, parse_config_pairs, read_transcript, replay, run_match,
    validate_request, verify_transcript,
)

H = Fraction(1, 2)
Q = Fraction(1, 4)


def test_config_requires_mode():
    with pytest.raises(ConfigError):
        config_from_pairs({"d": "1/2^1"})


def test_config_roundtrip():
    cfg = GameConfig(mode="pair-prefix-stable", d=Q, allowed_sizes=(Fraction(1, 8),), n=5,
                     params={"x": "1"})
    again = config_from_pairs(parse_config_pairs(cfg.to_text()))
    assert again.to_text() == cfg.to_text()


def test_config_rejects_non_dyadic():
    with pytest.raises(ConfigError):
        config_from_pairs({"mode": "set", "d": "1/3"})


def test_constant_bob_overlaps_at_shared_vertex():
    cfg = GameConfig(d=Fraction(1))
    tr = run_match(cfg, ScriptedAlice([(("a", "b"), H), (("a", "c"), H)]), ConstantBob("0"))
    assert tr.outcome == "alice-wins-at-move-2"


def test_budget_violation_is_alice_rule_violation():
    cfg = GameConfig(d=H)
    moves = [(("a", "b"), Q), (("a", "c"), Q), (("a", "d"), Q)]
    tr = run_match(cfg, ScriptedAlice(moves), GreedyPairs())
    assert tr.outcome == "rule-violation-by-alice-at-move-3"


def test_retired_vertex_is_rejected():
    cfg = GameConfig(d=H)
    moves = [(("a", "b"), Q), Retire(("a",)), (("a", "c"), Q)]
    tr = run_match(cfg, ScriptedAlice(moves), GreedyPairs())
    assert tr.outcome == "rule-violation-by-alice-at-move-2"


def test_validate_request_cases():
    cfg = GameConfig(d=H, allowed_sizes=(Q,))
    state = AllocationState(cfg)
    assert validate_request(cfg, state, Request(("a", "b"), Q)) is None
    assert validate_request(cfg, state, Request(("a", "a"), Q)) == "duplicate-vertex"
    assert validate_request(cfg, state, Request(("a", "b"), Fraction(1, 8))) == "size-not-allowed"
    assert validate_request(cfg, state, Request(("a", "b", "c"), Q)) == "arity"


def test_greedy_single_request():
    tr = run_match(GameConfig(), ScriptedAlice([(("u", "v"), Q)]), GreedyPairs())
    assert tr.outcome == "bob-wins-script-exhausted"
    assert tr.records[1]["address"] == "00"


def test_prefix_stable_demand_grows_with_weight():
    # two 1/8 requests on one key need an interval of 1/4 overall
    cfg = GameConfig(mode="pair-prefix-stable", d=H)
    replies = {1: Reply([(("u", "v"), "000")]), 2: Reply([(("u", "v"), "001")])}
    moves = [(("u", "v"), Fraction(1, 8)), (("u", "v"), Fraction(1, 8))]
    tr = run_match(cfg, ScriptedAlice(moves), ScriptedBob(replies))
    assert tr.outcome == "bob-wins-script-exhausted"
    replies[2] = Reply([(("u", "v"), "010")])
    tr = run_match(cfg, ScriptedAlice(moves), ScriptedBob(replies))
    assert tr.outcome == "alice-wins-at-move-2"


def test_transcript_roundtrip_and_tamper(tmp_path):
    cfg = GameConfig(d=H)
    moves = [(("a", "b"), Q), (("a", "c"), Q), (("b", "c"), Q)]
    tr = run_match(cfg, ScriptedAlice(moves), GreedyPairs())
    path = tmp_path / "t.ndjson"
    tr.write(path)
    assert verify_transcript(path) is None
    lines = path.read_text().splitlines()
    # move the second allocation onto the first one's slot
    lines[3] = lines[3].replace('"01"', '"00"')
    bad = tmp_path / "bad.ndjson"
    bad.write_text("\n".join(lines) + "\n")
    assert verify_transcript(bad) is not None


def test_replay_reproduces_outcome(tmp_path):
    cfg = GameConfig(d=Fraction(1))
    tr = run_match(cfg, ScriptedAlice([(("a", "b"), H), (("a", "c"), H)]), ConstantBob("0"))
    tr.write(tmp_path / "t.ndjson")
    records, final = read_transcript(tmp_path / "t.ndjson")
    assert replay(records, final).outcome == tr.outcome


@given(st.lists(st.integers(-5, 60), max_size=80))
def test_idset_matches_set(xs):
    ref, ids = set(), IdSet()
    for x in xs:
        ref.add(x)
        ids.add(x)
        assert len(ids) == len(ref)
    for y in range(-6, 62):
        assert (y in ids) == (y in ref)


def test_idset_mixed_keys():
    ids = IdSet([1, 2, "L", ("R", 3)])
    assert "L" in ids and ("R", 3) in ids and 2 in ids and 3 not in ids
    assert len(ids) == 4


def _hand_state(keys):
    cfg = GameConfig(depth=4)
    state = AllocationState(cfg)
    for key, addr in keys:
        k = frozenset(key)
        state.table[k] = [addr]
        for sl in k:
            state.incident.setdefault(sl, []).append(k)
    return state


def test_ball_count_detects_violation():
    # three keys at u each owning a half: more than 1 * 2^1
    state = _hand_state([(("u", "a"), "0"), (("u", "b"), "1"), (("u", "c"), "1")])
    assert ball_count_check(state, 1) == ("u", 1)
    assert ball_count_check(state, 2) is None


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_ball_count_holds_for_legal_greedy_play(seed):
    rng = random.Random(seed)
    cfg = GameConfig(d=H, allowed_sizes=(Fraction(1, 8), Fraction(1, 16)))
    moves, spent = [], {}
    for _ in range(40):
        u, v = rng.sample(range(6), 2)
        q = rng.choice(cfg.allowed_sizes)
        if spent.get(u, 0) + q <= H and spent.get(v, 0) + q <= H:
            spent[u] = spent.get(u, 0) + q
            spent[v] = spent.get(v, 0) + q
            moves.append(((u, v), q))
    tr = run_match(cfg, ScriptedAlice(moves), GreedyPairs())
    assert tr.metrics["ball_check"] == "ok"


def test_undecided_transcript_replays(tmp_path):
    from cantor_games.alice import StarAdversary, star_epsilons
    cfg = GameConfig(d=H, allowed_sizes=tuple(star_epsilons(H)), params={"promise": "none"})
    tr = run_match(cfg, StarAdversary(H, mode="explicit", pool=64), GreedyPairs())
    assert tr.outcome == "undecided"
    tr.write(tmp_path / "t.ndjson")
    assert verify_transcript(tmp_path / "t.ndjson") is None
