"""Referee for the allocation games.

Alice issues requests ``(vertices, size)``; Bob answers by allocating dyadic
intervals to vertex keys.  Intervals sharing a vertex must be disjoint (per
side in bipartite mode).  The referee validates every move, decides wins and
losses, and keeps an NDJSON transcript that can be replayed.

Internally the state works at a fixed resolution ``depth``: per-vertex
occupancy is an integer bit mask with one bit per slot of size
``2**-depth``, budgets are counted in slots, and each key keeps the list of
addresses it received.
"""

from bisect import bisect_right
from dataclasses import dataclass, field, replace
from fractions import Fraction
import json
import logging
import random

from .dyadic import (
    IntervalSet, addr_mask, check_address, format_dyadic, full_mask,
    is_power_of_two, largest_interval_size, mask_from_set, parse_dyadic,
    size_exponent,
)

log = logging.getLogger("cantor_games")

DEFAULT_DEPTH = 16   # resolution when no size list pins it down

MODES = ("pair-prefix-free", "pair-prefix-stable", "pair-bipartite", "set")


class ConfigError(ValueError):
    pass


class RuleViolation(Exception):
    """A move broke the rules; ``actor`` is 'alice' or 'bob'."""

    def __init__(self, actor, rule, vertex=None):
        self.actor, self.rule, self.vertex = actor, rule, vertex
        super().__init__(f"{actor}: {rule}")


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class GameConfig:
    mode: str = "pair-prefix-free"
    n: int | None = None
    s: int = 2
    d: Fraction = Fraction(1, 2)
    delta: Fraction = Fraction(1)
    c: Fraction = Fraction(1)
    allowed_sizes: tuple = ()
    seed: int = 0
    depth: int | None = None
    excuses: bool = False
    bob: str = ""
    alice: str = ""
    params: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        for name in ("d", "delta", "c"):
            v = getattr(self, name)
            if not is_power_of_two(v) or v > 1:
                raise ConfigError(f"{name} must be a power of two in (0,1]: {v}")
        for q in self.allowed_sizes:
            if not is_power_of_two(q) or q > 1:
                raise ConfigError(f"size must be a power of two in (0,1]: {q}")
        if self.s < 2:
            raise ConfigError("s must be at least 2")
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be positive")

    @property
    def arity(self):
        return self.s if self.mode == "set" else 2

    @property
    def m(self):
        return len(self.allowed_sizes)

    def resolved_depth(self):
        if self.depth is not None:
            return self.depth
        if not self.allowed_sizes:
            return max(DEFAULT_DEPTH, size_exponent(self.d), size_exponent(self.delta))
        return max(size_exponent(q) for q in list(self.allowed_sizes) + [self.d])

    def to_text(self):
        lines = [
            f"mode = {self.mode}",
            f"n = {'unbounded' if self.n is None else self.n}",
            f"s = {self.s}",
            f"d = {format_dyadic(self.d)}",
            f"delta = {format_dyadic(self.delta)}",
            f"c = {format_dyadic(self.c)}",
            "allowed_sizes = " + ",".join(format_dyadic(q) for q in self.allowed_sizes),
            f"seed = {self.seed}",
            f"excuses = {str(self.excuses).lower()}",
        ]
        if self.depth is not None:
            lines.append(f"depth = {self.depth}")
        if self.bob:
            lines.append(f"bob = {self.bob}")
        if self.alice:
            lines.append(f"alice = {self.alice}")
        lines += [f"{k} = {v}" for k, v in sorted(self.params.items())]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return parse_config_pairs(self.to_text())


def parse_config_pairs(text):
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value: {raw!r}")
        k, v = (p.strip() for p in line.split("=", 1))
        if not k:
            raise ConfigError(f"empty key: {raw!r}")
        out[k] = v
    return out


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def config_from_pairs(pairs):
    """Build a GameConfig from string pairs; unknown keys land in ``params``."""
    pairs = dict(pairs)
    if "mode" not in pairs:
        raise ConfigError("missing key: mode")
    kw = {"mode": pairs.pop("mode")}
    try:
        if "n" in pairs:
            v = pairs.pop("n")
            kw["n"] = None if v in ("unbounded", "") else int(v)
        if "s" in pairs:
            kw["s"] = int(pairs.pop("s"))
        for name in ("d", "delta", "c"):
            if name in pairs:
                kw[name] = parse_dyadic(pairs.pop(name))
        if "allowed_sizes" in pairs:
            v = pairs.pop("allowed_sizes")
            kw["allowed_sizes"] = tuple(parse_dyadic(x) for x in v.split(",") if x.strip())
        if "seed" in pairs:
            kw["seed"] = int(pairs.pop("seed"))
        if "depth" in pairs:
            kw["depth"] = int(pairs.pop("depth"))
        if "excuses" in pairs:
            kw["excuses"] = _BOOL[pairs.pop("excuses").lower()]
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    kw["bob"] = pairs.pop("bob", "")
    kw["alice"] = pairs.pop("alice", "")
    kw["params"] = pairs
    return GameConfig(**kw)


def load_config(path):
    with open(path) as fh:
        return config_from_pairs(parse_config_pairs(fh.read()))


# ---------------------------------------------------------------- moves

@dataclass(frozen=True)
class Request:
    vertices: tuple
    size: Fraction

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "size", Fraction(self.size))


@dataclass(frozen=True)
class Clone:
    """Alice introduces each of ``dsts`` as an exact copy of ``src`` (symmetry compression)."""
    src: object
    dsts: tuple

    def __post_init__(self):
        object.__setattr__(self, "dsts", tuple(self.dsts))


@dataclass(frozen=True)
class Retire:
    """Alice promises never to use these vertices again; their state may be dropped."""
    vertices: tuple


@dataclass
class Reply:
    allocations: list = field(default_factory=list)   # (vertices, address)
    declarations: list = field(default_factory=list)  # (kind, vertices, note)
    status: str = "ok"  # ok | excused | dead-end | promise-breach | falsified
    note: str = ""


def sort_vertices(vs):
    return tuple(sorted(vs, key=lambda v: (isinstance(v, str), v)))


# ---------------------------------------------------------------- state

class IdSet:
    """Set of vertex ids; runs of consecutive integers are stored as ranges.

    Adversaries that mint millions of sequential ids keep this small.
    """

    def __init__(self, items=()):
        self.starts, self.ends = [], []   # disjoint [start, end) runs, sorted
        self.other = set()
        self.count = 0
        for x in items:
            self.add(x)

    def __contains__(self, x):
        if type(x) is not int:
            return x in self.other
        i = bisect_right(self.starts, x) - 1
        return i >= 0 and x < self.ends[i]

    def __len__(self):
        return self.count

    def add(self, x):
        if type(x) is not int:
            if x not in self.other:
                self.other.add(x)
                self.count += 1
            return
        st, en = self.starts, self.ends
        i = bisect_right(st, x) - 1
        if i >= 0 and x < en[i]:
            return
        self.count += 1
        left = i >= 0 and en[i] == x
        right = i + 1 < len(st) and st[i + 1] == x + 1
        if left and right:
            en[i] = en[i + 1]
            del st[i + 1], en[i + 1]
        elif left:
            en[i] = x + 1
        elif right:
            st[i + 1] = x
        else:
            st.insert(i + 1, x)
            en.insert(i + 1, x + 1)

    def update(self, xs):
        for x in xs:
            self.add(x)


class AllocationState:
    """Bob's labels plus per-vertex occupancy and budgets at a fixed depth."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.mode = cfg.mode
        self.depth = cfg.resolved_depth()
        self.full = full_mask(self.depth)
        self.unit = 1 << self.depth   # slots in the whole space
        self.table = {}      # key -> list of addresses
        self.occ = {}        # slot id -> mask
        self.spent = {}      # slot id -> budget used, in slots
        self.weight = {}     # key -> total requested, in slots
        self.best = {}       # key -> largest single reply, in slots
        self.incident = {}   # slot id -> keys touching it
        self.retired = IdSet()
        self.seen = IdSet()
        self.nreq = {}       # slot id -> {size exponent: requests}
        self.last = []       # allocations of the latest reply
        self.request = None  # latest request
        self.cap = self.units(cfg.d)
        self._sizes = {}

    # keys and slots ---------------------------------------------------
    def key_of(self, vertices):
        if self.mode == "pair-bipartite":
            return tuple(vertices)
        return frozenset(vertices)

    def slots(self, key):
        if self.mode == "pair-bipartite":
            return (("L", key[0]), ("R", key[1]))
        return tuple(key)

    def units(self, size):
        return int(Fraction(size) * self.unit)

    def size_info(self, size):
        """(violation or None, size in slots, exponent), cached per size."""
        hit = self._sizes.get(size)
        if hit is None:
            hit = self._sizes[size] = _size_info(self.cfg, self, size)
        return hit

    def blocked(self, key):
        m = 0
        occ = self.occ
        for sl in self.slots(key):
            m |= occ.get(sl, 0)
        return m

    def occupancy(self, slot):
        return self.occ.get(slot, 0)

    def budget(self, slot):
        return Fraction(self.spent.get(slot, 0), self.unit)

    def labels(self, key):
        return IntervalSet(self.table.get(key, ()))

    def nu(self, key):
        return largest_interval_size(self.labels(key))

    def vertex_ids(self):
        return set(self.occ) | set(self.spent)


def _size_info(cfg, state, size):
    if not is_power_of_two(size) or size > 1:
        return "size-not-dyadic", 0, None
    if size > cfg.delta:
        return "size>delta", 0, None
    if cfg.allowed_sizes and size not in cfg.allowed_sizes:
        return "size-not-allowed", 0, None
    k = size_exponent(size)
    if k > state.depth:
        return "size<resolution", 0, k
    return None, state.units(size), k


def validate_request(cfg, state, r):
    """Return None if the request is legal, else a short violation string."""
    if len(r.vertices) != cfg.arity:
        return "arity"
    if len(set(r.vertices)) != len(r.vertices):
        return "duplicate-vertex"
    for v in r.vertices:
        if v in state.retired:
            return f"retired({v})"
    bad, need, _ = state.size_info(r.size)
    if bad:
        return bad
    cap = state.cap
    key = state.key_of(r.vertices)
    for sl, v in zip(state.slots(key), r.vertices):
        if state.spent.get(sl, 0) + need > cap:
            return f"budget({v})"
    return None


def apply_reply(cfg, state, key, a):
    """Insert ``[a]`` into ``table[key]`` and the occupancies; raise on overlap."""
    check_address(a)
    if len(a) > state.depth:
        raise RuleViolation("bob", f"address-too-fine({a})")
    m = addr_mask(a, state.depth)
    own = 0
    if cfg.mode in ("pair-prefix-stable", "pair-bipartite") and key in state.table:
        for z in state.table[key]:
            own |= addr_mask(z, state.depth)
    slots = state.slots(key)
    for sl in slots:
        if m & state.occ.get(sl, 0) & ~own:
            v = sl[1] if cfg.mode == "pair-bipartite" else sl
            raise RuleViolation("bob", f"overlap({v})", v)
    for sl in slots:
        state.occ[sl] = state.occ.get(sl, 0) | m
    lst = state.table.get(key)
    if lst is None:
        state.table[key] = [a]
        for sl in slots:
            state.incident.setdefault(sl, []).append(key)
    else:
        lst.append(a)
    w = 1 << (state.depth - len(a))
    if w > state.best.get(key, 0):
        state.best[key] = w
    return state


def demand_met(cfg, state, key, size_units):
    """Winning check for the key just requested."""
    if cfg.mode in ("pair-prefix-free", "set"):
        return state.best.get(key, 0) >= size_units
    need = cfg.c * state.weight.get(key, 0)
    if state.best.get(key, 0) >= need:
        return True
    return state.nu(key) * state.unit >= need


def _key_nu_units(state, key):
    lst = state.table[key]
    if len(lst) == 1:
        return 1 << (state.depth - len(lst[0]))
    return int(state.nu(key) * state.unit)


def ball_count_check(state, c=1, slots=None):
    """Check #{K containing u : nu(M_K) >= 2**-j} <= c * 2**j for all u, j.

    Returns None when the bound holds, else the first ``(u, j)`` violating it.
    """
    c = Fraction(c)
    if c.denominator == 1:
        c = int(c)
    targets = sorted(state.incident, key=repr) if slots is None else slots
    for sl in targets:
        counts = {}
        for key in state.incident.get(sl, ()):
            nu = _key_nu_units(state, key)
            j = state.depth - (nu.bit_length() - 1)
            counts[j] = counts.get(j, 0) + 1
        running = 0
        for j in range(state.depth + 1):
            running += counts.get(j, 0)
            if running > c * (1 << j):
                v = sl[1] if state.mode == "pair-bipartite" else sl
                return (v, j)
    return None


# ---------------------------------------------------------------- strategies

class Bob:
    """Base allocator.  Subclasses implement ``reply``."""

    name = "bob"
    clonable = False

    def bind(self, cfg, rng):
        self.cfg, self.rng = cfg, rng

    def reply(self, req, state):
        raise NotImplementedError

    def clone_vertex(self, src, dst):
        if not self.clonable:
            raise RuleViolation("alice", "clone-unsupported")

    def retire(self, vertices):
        pass

    def metrics(self):
        return {}


class Alice:
    """Base adversary.  ``next_move`` returns a Request, Clone, Retire or None."""

    name = "alice"

    def bind(self, cfg, rng):
        self.cfg, self.rng = cfg, rng

    def next_move(self, state):
        raise NotImplementedError

    def metrics(self):
        return {}


class ScriptedAlice(Alice):
    name = "scripted"

    def __init__(self, moves):
        self.moves = list(moves)
        self.i = 0

    def next_move(self, state):
        if self.i >= len(self.moves):
            return None
        mv = self.moves[self.i]
        self.i += 1
        if isinstance(mv, tuple) and not isinstance(mv, Request):
            mv = Request(mv[0], mv[1])
        return mv


class ScriptedBob(Bob):
    """Replays recorded replies keyed by move index."""

    name = "scripted"
    clonable = True

    def __init__(self, replies):
        self.replies = replies
        self.k = 0

    def reply(self, req, state):
        self.k += 1
        return self.replies.get(self.k, Reply())


class ConstantBob(Bob):
    """Always answers with one fixed address (useful to exercise the referee)."""

    name = "constant"

    def __init__(self, address="0"):
        self.address = address

    def reply(self, req, state):
        return Reply([(req.vertices, self.address)])


# ---------------------------------------------------------------- transcripts

class Transcript:
    """Ordered move records plus a trailing outcome record."""

    def __init__(self, cfg, sink=None, keep=True):
        self.cfg = cfg
        self.sink = sink
        self.keep = keep
        self.records = []
        self.outcome = None
        self.metrics = {}
        self.final = None
        self.count = 0

    def add(self, idx, actor, kind, vertices=None, size=None, address=None, note=""):
        rec = {
            "idx": idx, "actor": actor, "kind": kind,
            "vertices": None if vertices is None else list(vertices),
            "size": None if size is None else format_dyadic(size),
            "address": address, "note": note,
        }
        self.count += 1
        if self.sink is not None:
            self.sink.write(json.dumps(rec) + "\n")
        if self.keep:
            self.records.append(rec)

    def close(self, outcome, metrics):
        self.outcome = outcome
        self.metrics = metrics
        self.final = {
            "idx": None, "actor": "referee", "kind": "outcome",
            "outcome": outcome, "metrics": metrics,
            "config": self.cfg.to_dict(),
        }
        if self.sink is not None:
            self.sink.write(json.dumps(self.final) + "\n")

    def lines(self):
        out = [json.dumps(r) for r in self.records]
        if self.final is not None:
            out.append(json.dumps(self.final))
        return out

    def write(self, path):
        with open(path, "w") as fh:
            for line in self.lines():
                fh.write(line + "\n")


def _jsonable(v):
    if isinstance(v, Fraction):
        return format_dyadic(v) if v >= 0 and is_dyadic_value(v) else str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (set, frozenset)):
        return [_jsonable(x) for x in sort_vertices(v)]
    return v


def is_dyadic_value(q):
    d = Fraction(q).denominator
    return d & (d - 1) == 0


# ---------------------------------------------------------------- promises

def _parse_quotas(text):
    out = {}
    for part in str(text).split(","):
        if part.strip():
            size, count = part.split(":")
            out[size_exponent(parse_dyadic(size))] = int(count)
    return out


def adjudicate_promise(cfg, state, bob=None):
    """Check Alice's promise on the requests made so far.

    Returns a description of the broken promise, or None if the promise
    holds (or none was declared), in which case Bob's claim is rejected.
    The promise kind comes from ``cfg.params['promise']``, falling back to
    the ``promise`` attribute of the Bob strategy.
    """
    kind = cfg.params.get("promise") or getattr(bob, "promise", None)
    if kind == "quotas":
        text = cfg.params.get("quotas") or getattr(bob, "quota_text", "")
        quotas = _parse_quotas(text)
        for sl in sorted(state.nreq, key=repr):
            for kexp, cnt in sorted(state.nreq[sl].items()):
                if cnt > quotas.get(kexp, 0):
                    return f"quota({sl},2^-{kexp})"
        return None
    if kind == "variant-c":
        worst = {}
        for per in state.nreq.values():
            for kexp, cnt in per.items():
                worst[kexp] = max(worst.get(kexp, 0), cnt)
        total = sum((Fraction(cnt, 1 << kexp) for kexp, cnt in worst.items()), Fraction(0))
        return f"weighted-max {total} > {cfg.d}" if total > cfg.d else None
    if kind == "band":
        req = state.request
        if cfg.n is not None and req is not None and req.size < Fraction(1, 1 << (cfg.n + 2)):
            return f"size {req.size} below band"
        return None
    if kind == "degree":
        if cfg.n is None:
            return None
        for sl in sorted(state.nreq, key=repr):
            if sum(state.nreq[sl].values()) >= (1 << cfg.n):
                return f"degree({sl})"
        return None
    return None


# ---------------------------------------------------------------- the match

def _rngs(seed):
    return random.Random(f"alice:{seed}"), random.Random(f"bob:{seed}")


def _with_promise(cfg, bob):
    """Record the promise a Bob relies on in the config, so replays see it."""
    kind = getattr(bob, "promise", None)
    if not kind or "promise" in cfg.params:
        return cfg
    params = dict(cfg.params, promise=kind)
    if kind == "quotas" and "quotas" not in params:
        params["quotas"] = getattr(bob, "quota_text", "")
    return replace(cfg, params=params)


def run_match(cfg, alice, bob, max_moves=None, sink=None, keep=True, ball_check=True):
    """Drive Alice and Bob until someone wins, the script ends or moves run out."""
    cfg = _with_promise(cfg, bob)
    state = AllocationState(cfg)
    ra, rb = _rngs(cfg.seed)
    alice.bind(cfg, ra)
    bob.bind(cfg, rb)
    tr = Transcript(cfg, sink=sink, keep=keep)
    k = 0
    excused = 0
    outcome = None
    ball = None
    record = keep or sink is not None
    while outcome is None:
        mv = alice.next_move(state)
        if mv is None:
            if getattr(alice, "gave_up", False):
                outcome = "undecided"
            else:
                outcome = "bob-wins-script-exhausted"
            break
        if isinstance(mv, Clone):
            err = _apply_clone(state, mv)
            if err is None:
                try:
                    for dst in mv.dsts:
                        bob.clone_vertex(mv.src, dst)
                except RuleViolation as exc:
                    err = exc.rule
            if err:
                outcome = f"rule-violation-by-alice-at-move-{k}"
                tr.add(k, "alice", "clone", (mv.src,) + mv.dsts, note=err)
                break
            if record:
                tr.add(k, "alice", "clone", (mv.src,) + mv.dsts)
            continue
        if isinstance(mv, Retire):
            if ball_check and ball is None:
                ball = _retire_ball_check(state, mv.vertices)
            _apply_retire(state, mv.vertices)
            bob.retire(mv.vertices)
            if record:
                tr.add(k, "alice", "retire", mv.vertices)
            continue
        k += 1
        if max_moves is not None and k > max_moves:
            k -= 1
            outcome = "undecided"
            break
        req = mv
        bad = validate_request(cfg, state, req)
        if record:
            tr.add(k, "alice", "request", req.vertices, req.size, note=bad or "")
        if bad:
            outcome = f"rule-violation-by-alice-at-move-{k}"
            break
        key = state.key_of(req.vertices)
        _, u, kexp = state.size_info(req.size)
        for sl in state.slots(key):
            state.spent[sl] = state.spent.get(sl, 0) + u
            state.seen.add(sl)
            per = state.nreq.setdefault(sl, {})
            per[kexp] = per.get(kexp, 0) + 1
        state.weight[key] = state.weight.get(key, 0) + u
        state.request = req
        rep = bob.reply(req, state)
        state.last = []
        try:
            for verts, a in rep.allocations:
                akey = state.key_of(verts)
                if record:
                    tr.add(k, "bob", "allocate", verts, Fraction(1, 1 << len(a)), a)
                if len(set(verts)) != len(verts) or len(verts) != cfg.arity:
                    raise RuleViolation("bob", "bad-key")
                apply_reply(cfg, state, akey, a)
                state.last.append((akey, a))
        except RuleViolation as exc:
            if exc.rule.startswith("overlap"):
                outcome = f"alice-wins-at-move-{k}"
            else:
                outcome = f"rule-violation-by-bob-at-move-{k}"
            if record:
                tr.add(k, "referee", "violation", note=exc.rule)
            break
        if record:
            for kind, verts, note in rep.declarations:
                tr.add(k, "bob", kind, verts, note=note)
            if rep.status != "ok":
                tr.add(k, "bob", rep.status, req.vertices, note=rep.note)
        if rep.status == "falsified":
            outcome = f"falsification-at-move-{k}"
            break
        if rep.status == "promise-breach":
            broken = adjudicate_promise(cfg, state, bob)
            if record:
                tr.add(k, "referee", "promise-check", note=broken or "not confirmed")
            if broken:
                outcome = f"rule-violation-by-alice-at-move-{k}"
            else:
                outcome = f"alice-wins-at-move-{k}"
            break
        if not demand_met(cfg, state, key, u):
            if rep.status == "excused" and cfg.excuses:
                excused += 1
                continue
            outcome = f"alice-wins-at-move-{k}"
            break
    if ball_check and ball is None:
        ball = ball_count_check(state, 1)
    metrics = {
        "moves": k,
        "excused": excused,
        "vertices_touched": len(state.seen),
        "ball_check": "ok" if ball is None else f"fail({ball[0]},{ball[1]})",
    }
    metrics["alice"] = _jsonable(alice.metrics())
    metrics["bob"] = _jsonable(bob.metrics())
    tr.close(outcome, metrics)
    tr.state = state
    return tr


def _apply_clone(state, mv):
    if mv.src in state.retired:
        return "clone-source-retired"
    for dst in mv.dsts:
        if dst in state.seen or ("L", dst) in state.seen or ("R", dst) in state.seen:
            return "clone-target-not-fresh"
        if dst in state.retired or dst == mv.src:
            return "clone-target-not-fresh"
    if state.mode == "pair-bipartite":
        pairs = [((side, mv.src), (side, dst)) for dst in mv.dsts for side in "LR"]
    else:
        pairs = [(mv.src, dst) for dst in mv.dsts]
    for a, b in pairs:
        if a in state.occ:
            state.occ[b] = state.occ[a]
        if a in state.spent:
            state.spent[b] = state.spent[a]
            state.seen.add(b)
        if a in state.nreq:
            state.nreq[b] = dict(state.nreq[a])
    return None


def _retire_slots(state, vertices):
    if state.mode == "pair-bipartite":
        return [(side, v) for v in vertices for side in "LR"]
    return list(vertices)


def _retire_ball_check(state, vertices):
    slots = [sl for sl in _retire_slots(state, vertices) if sl in state.incident]
    return ball_count_check(state, 1, slots=slots)


def _apply_retire(state, vertices):
    gone = set(_retire_slots(state, vertices))
    state.retired.update(vertices)
    for sl in gone:
        state.occ.pop(sl, None)
        state.spent.pop(sl, None)
        state.nreq.pop(sl, None)
        for key in state.incident.pop(sl, ()):
            if all(x in gone or x in state.retired for x in state.slots(key)):
                state.table.pop(key, None)
                state.weight.pop(key, None)
                state.best.pop(key, None)


# ---------------------------------------------------------------- replay

def read_transcript(path):
    records, final = [], None
    with open(path) as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("kind") == "outcome":
                final = rec
            else:
                records.append(rec)
    if final is None:
        raise ValueError("transcript has no outcome record")
    return records, final


def _vertex(v):
    return v


def replay(records, final):
    """Re-referee a transcript; returns the fresh Transcript."""
    cfg = config_from_pairs(final["config"])
    moves, replies = [], {}
    for rec in records:
        actor, kind = rec["actor"], rec["kind"]
        verts = tuple(_vertex(v) for v in (rec["vertices"] or ()))
        if actor == "alice" and kind == "request":
            moves.append(Request(verts, parse_dyadic(rec["size"])))
        elif actor == "alice" and kind == "clone":
            moves.append(Clone(verts[0], verts[1:]))
        elif actor == "alice" and kind == "retire":
            moves.append(Retire(verts))
        elif actor == "bob":
            rep = replies.setdefault(rec["idx"], Reply())
            if kind == "allocate":
                rep.allocations.append((verts, rec["address"]))
            elif kind in ("excused", "dead-end", "promise-breach", "falsified"):
                rep.status, rep.note = kind, rec.get("note", "")
            else:
                rep.declarations.append((kind, verts, rec.get("note", "")))
    alice = ScriptedAlice(moves)
    # giving up is Alice's own call; the referee can only see the script end
    alice.gave_up = final.get("outcome") == "undecided"
    return run_match(cfg, alice, ScriptedBob(replies), keep=False)


def verify_transcript(path):
    """Replay a transcript file; return None if it reproduces its outcome."""
    try:
        records, final = read_transcript(path)
        fresh = replay(records, final)
    except (ValueError, KeyError, TypeError, ConfigError) as exc:
        return f"malformed: {exc}"
    if fresh.outcome != final["outcome"]:
        return f"outcome mismatch: recorded {final['outcome']}, replayed {fresh.outcome}"
    rec_m = final.get("metrics", {})
    for name in ("moves", "excused", "vertices_touched", "ball_check"):
        if rec_m.get(name) != fresh.metrics.get(name):
            return f"metric mismatch: {name} recorded {rec_m.get(name)}, replayed {fresh.metrics.get(name)}"
    if fresh.metrics["ball_check"] != "ok":
        return f"ball count: {fresh.metrics['ball_check']}"
    return None


# ---------------------------------------------------------------- sub-spaces

class SubspaceView:
    """Presents the part of a state inside ``[prefix]`` as a whole space."""

    def __init__(self, state, prefix):
        self.base = state
        self.prefix = prefix
        self.depth = state.depth - len(prefix)
        self.cfg = state.cfg
        self.mode = state.mode
        self.full = full_mask(self.depth)
        self.unit = 1 << self.depth
        self.shift = (int(prefix, 2) if prefix else 0) << self.depth

    def key_of(self, vertices):
        return self.base.key_of(vertices)

    def slots(self, key):
        return self.base.slots(key)

    def occupancy(self, slot):
        return (self.base.occupancy(slot) >> self.shift) & self.full

    def blocked(self, key):
        return (self.base.blocked(key) >> self.shift) & self.full

    def units(self, size):
        return int(Fraction(size) * self.unit)

    @property
    def best(self):
        # units are scale-free: a rescaled size has the same unit count here
        return self.base.best

    def size_info(self, size):
        # sizes seen here are already rescaled; no referee checks apply
        return None, self.units(size), size_exponent(size)


class SubspaceBob(Bob):
    """Run ``inner`` inside ``[prefix]``; request sizes are rescaled accordingly."""

    def __init__(self, inner, prefix):
        self.inner = inner
        self.prefix = prefix
        self.name = f"{inner.name}@{prefix}"
        self.clonable = inner.clonable

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        scale = 1 << len(self.prefix)
        sizes = tuple(min(Fraction(1), q * scale) for q in cfg.allowed_sizes)
        inner_cfg = replace(
            cfg, d=min(Fraction(1), cfg.d * scale), delta=min(Fraction(1), cfg.delta * scale),
            allowed_sizes=sizes, depth=cfg.resolved_depth() - len(self.prefix),
        )
        self.inner.bind(inner_cfg, rng)

    def reply(self, req, state):
        view = SubspaceView(state, self.prefix)
        scaled = Request(req.vertices, min(Fraction(1), req.size * (1 << len(self.prefix))))
        rep = self.inner.reply(scaled, view)
        rep.allocations = [(v, self.prefix + a) for v, a in rep.allocations]
        return rep

    def clone_vertex(self, src, dst):
        self.inner.clone_vertex(src, dst)

    def retire(self, vertices):
        self.inner.retire(vertices)

    def metrics(self):
        return self.inner.metrics()


# ---------------------------------------------------------------- small sizes

class TrivialSmallAllocator(Bob):
    """Answer every smallest-size request from a fixed edge colouring of ``[1]``.

    Pair ``{u, v}`` of n-bit strings (integers below ``2**n``) owns the
    size ``2**-(n+2)`` interval ``1 + bin(u ^ v)``.  XOR is a proper edge
    colouring, so the intervals at any single vertex are pairwise disjoint
    and the whole colouring fits in half the space.  Larger requests are
    delegated to ``inner`` running inside ``[0]``.
    """

    name = "trivial_small"

    def __init__(self, cfg, inner=None):
        if cfg.mode == "set" or cfg.n is None:
            raise ConfigError("trivial small allocator needs a pair mode with finite n")
        n = cfg.n
        colours = (1 << n) - 1
        if Fraction(colours, 1 << (n + 2)) > Fraction(1, 2):
            raise ConfigError("capacity of [1] insufficient")
        self.n = n
        self.small = Fraction(1, 1 << (n + 2))
        self.inner = SubspaceBob(inner, "0") if inner is not None else None
        self.clonable = inner is None or inner.clonable
        self.answered = 0

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if self.inner is not None:
            self.inner.bind(cfg, rng)

    def slot_for(self, u, v):
        return "1" + format(u ^ v, f"0{self.n + 1}b")

    def reservation(self):
        """The full colouring as a dict {(u, v): address} with u < v."""
        N = 1 << self.n
        return {(u, v): self.slot_for(u, v) for u in range(N) for v in range(u + 1, N)}

    def reply(self, req, state):
        if req.size == self.small:
            u, v = req.vertices
            key = state.key_of(req.vertices)
            if state.best.get(key, 0) >= state.units(self.small):
                return Reply()
            self.answered += 1
            return Reply([(req.vertices, self.slot_for(u, v))])
        if self.inner is None:
            return Reply(status="dead-end", note="no inner strategy")
        return self.inner.reply(req, state)

    def metrics(self):
        out = {"small_answered": self.answered}
        if self.inner is not None:
            out["inner"] = self.inner.metrics()
        return out


def trivial_small_allocator(cfg, inner=None):
    return TrivialSmallAllocator(cfg, inner)
