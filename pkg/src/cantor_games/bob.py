"""Allocator strategies that need no block bookkeeping.

Each strategy answers a request with one fresh interval of the requested
size (or, in the weight-matching modes, of the smallest power of two that
covers ``c`` times the accumulated weight).  The block-and-region strategies
live in :mod:`cantor_games.blocks`.
"""

from fractions import Fraction

from .dyadic import (
    IntervalSet, Overlap, addr_mask, difference, format_dyadic, intersection, leftmost_free,
    measure, size_exponent, union,
)
from .game import Bob, ConfigError, Reply


def _pow2_ceil(q):
    """Smallest power of two >= q (q in (0, 1])."""
    k = 0
    while Fraction(1, 1 << (k + 1)) >= q:
        k += 1
    return k


class SingleIntervalBob(Bob):
    """Shared bookkeeping: what each key already holds and still needs."""

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        self.granted = {}   # key -> largest granted size exponent (smaller is bigger)
        self.weight = {}
        self.dead_ends = 0

    def needed_exponent(self, req, state):
        """Exponent of the interval to allocate, or None if nothing is owed."""
        key = state.key_of(req.vertices)
        have = self.granted.get(key)
        if self.cfg.mode in ("pair-prefix-free", "set"):
            k = state.size_info(req.size)[2]
            return None if have is not None and have <= k else k
        w = self.weight.get(key, Fraction(0)) + req.size
        self.weight[key] = w
        target = self.cfg.c * w
        if target > 1:
            return 0
        k = _pow2_ceil(target)
        return None if have is not None and have <= k else k

    def note_grant(self, state, vertices, address):
        key = state.key_of(vertices)
        k = len(address)
        if key not in self.granted or k < self.granted[key]:
            self.granted[key] = k

    def clone_vertex(self, src, dst):
        if not self.clonable:
            super().clone_vertex(src, dst)

    def retire(self, vertices):
        gone = set(vertices)
        for book in (self.granted, self.weight):
            for key in [k for k in book if not gone.isdisjoint(k)]:
                del book[key]


class GreedyPairs(SingleIntervalBob):
    """Leftmost slot of the requested size that is free at every endpoint.

    Slots of a fixed size play the role of colours in a greedy edge
    colouring: a vertex with fewer than 1/(2 eps) requests blocks fewer than
    half the slots, so two endpoints always leave one in common.
    """

    name = "greedy_pairs"
    clonable = True

    def reply(self, req, state):
        k = self.needed_exponent(req, state)
        if k is None:
            return Reply()
        a = leftmost_free(state.blocked(state.key_of(req.vertices)), k, state.depth)
        if a is None:
            self.dead_ends += 1
            return Reply(status="dead-end", note="no common free slot")
        self.note_grant(state, req.vertices, a)
        return Reply([(req.vertices, a)])

    def metrics(self):
        return {"dead_ends": self.dead_ends}


def greedy_pairs(cfg=None):
    return GreedyPairs()


class SetGreedyHypergraph(GreedyPairs):
    """Greedy colouring of set requests with slots of size 1/(s 2^n) rounded down."""

    name = "set_greedy_hypergraph"
    promise = "degree"

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.mode != "set" or cfg.n is None:
            raise ConfigError("set greedy needs mode=set and finite n")
        # 1/(s 2^n) rounded down to a power of two
        self.eps = Fraction(1, 1 << ((cfg.s << cfg.n) - 1).bit_length())
        self.degree = {}

    def reply(self, req, state):
        for v in req.vertices:
            self.degree[v] = self.degree.get(v, 0) + 1
        over = [v for v in req.vertices if self.degree[v] >= (1 << self.cfg.n)]
        if over:
            return Reply(status="promise-breach", note=f"degree({over[0]})")
        if req.size != self.eps:
            return Reply(status="dead-end", note=f"size must be {self.eps}")
        return super().reply(req, state)


def set_greedy_hypergraph(cfg=None):
    return SetGreedyHypergraph()


# ---------------------------------------------------------------- regions

def _region_prefixes(sizes):
    """Place power-of-two regions left to right, largest first (stays aligned)."""
    pos = Fraction(0)
    out = {}
    for key, size in sorted(sizes.items(), key=lambda kv: (-kv[1], kv[0])):
        k = size_exponent(size)
        idx = pos * (1 << k)
        if idx.denominator != 1:
            raise ConfigError("region layout misaligned")
        out[key] = format(int(idx), f"0{k}b") if k else ""
        pos += size
    if pos > 1:
        raise ConfigError("regions do not fit in the space")
    return out


def parse_quotas(text):
    """``1/8:2,1/32:4`` -> {Fraction(1,8): 2, Fraction(1,32): 4}."""
    from .dyadic import parse_dyadic
    out = {}
    for part in str(text).split(","):
        if part.strip():
            size, count = part.split(":")
            out[parse_dyadic(size)] = int(count)
    return out


class StaticRegions(SingleIntervalBob):
    """Fixed per-size regions of measure 2 eps_i N_i, identical for every vertex."""

    name = "static_regions"
    clonable = True
    promise = "quotas"

    def __init__(self, quotas=None):
        self.quotas = dict(quotas) if quotas else None

    @property
    def quota_text(self):
        if not self.quotas:
            return ""
        return ",".join(f"{format_dyadic(e)}:{q}" for e, q in sorted(self.quotas.items()))

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        quotas = self.quotas or parse_quotas(cfg.params.get("quotas", ""))
        if not quotas:
            raise ConfigError("static regions need quotas")
        self.quotas = quotas
        self.rounded = {}
        for eps, N in quotas.items():
            p = 1
            while p < N:
                p <<= 1
            self.rounded[eps] = p
        total = sum(eps * p for eps, p in self.rounded.items())
        if total > 2 * cfg.d or cfg.d > Fraction(1, 4):
            raise ConfigError(f"quota sum {total} too large for d={cfg.d}")
        sizes = {eps: 2 * eps * p for eps, p in self.rounded.items()}
        self.prefix = _region_prefixes(sizes)
        self.region_size = sizes
        self.counts = {}
        self._masks = {}

    def region_mask(self, eps, depth):
        key = (eps, depth)
        if key not in self._masks:
            self._masks[key] = addr_mask(self.prefix[eps], depth)
        return self._masks[key]

    def reply(self, req, state):
        eps = req.size
        if eps not in self.prefix:
            return Reply(status="promise-breach", note=f"size {eps} has no quota")
        for v in req.vertices:
            c = self.counts.get((v, eps), 0) + 1
            self.counts[(v, eps)] = c
            if c > self.quotas[eps]:
                return Reply(status="promise-breach", note=f"quota({v})")
        k = self.needed_exponent(req, state)
        if k is None:
            return Reply()
        within = self.region_mask(eps, state.depth)
        a = leftmost_free(state.blocked(state.key_of(req.vertices)), k, state.depth, within)
        if a is None:
            self.dead_ends += 1
            return Reply(status="dead-end", note="region exhausted")
        self.note_grant(state, req.vertices, a)
        return Reply([(req.vertices, a)])

    def clone_vertex(self, src, dst):
        for (v, eps), c in list(self.counts.items()):
            if v == src:
                self.counts[(dst, eps)] = c

    def metrics(self):
        return {
            "regions": {str(k): str(v) for k, v in self.region_size.items()},
            "dead_ends": self.dead_ends,
        }


def static_regions(cfg=None, quotas=None):
    return StaticRegions(quotas)


class DynamicRegions(SingleIntervalBob):
    """2m equal regions handed to request sizes on first need.

    The region count is rounded up to a power of two so that every region is
    a dyadic interval.  Assignments are global (shared by all vertices) and
    only ever grow, so identical vertices are treated identically.
    """

    name = "dynamic_regions"
    clonable = True
    promise = "variant-c"

    def __init__(self, m=None):
        self.m = m

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        m = self.m or int(cfg.params.get("m", 0)) or max(1, len(cfg.allowed_sizes))
        self.m = m
        R = 1
        while R < 2 * m:
            R <<= 1
        self.R = R
        self.rk = R.bit_length() - 1
        self.assigned = {}   # size exponent -> list of region indices
        self.next_region = 0
        self.assignments = 0
        self.max_assigned = 0
        self._masks = {}

    def _mask(self, idx, depth):
        key = (idx, depth)
        if key not in self._masks:
            a = format(idx, f"0{self.rk}b") if self.rk else ""
            self._masks[key] = addr_mask(a, depth)
        return self._masks[key]

    def reply(self, req, state):
        k = self.needed_exponent(req, state)
        if k is None:
            return Reply()
        if k < self.rk:
            self.dead_ends += 1
            return Reply(status="dead-end", note="size exceeds region")
        blocked = state.blocked(state.key_of(req.vertices))
        label = size_exponent(req.size)
        for idx in self.assigned.get(label, ()):
            a = leftmost_free(blocked, k, state.depth, self._mask(idx, state.depth))
            if a is not None:
                self.note_grant(state, req.vertices, a)
                return Reply([(req.vertices, a)])
        if self.next_region >= self.R:
            self.dead_ends += 1
            return Reply(status="promise-breach", note="all regions assigned")
        idx = self.next_region
        self.next_region += 1
        self.assignments += 1
        self.assigned.setdefault(label, []).append(idx)
        self.max_assigned = max(self.max_assigned, self.next_region)
        a = leftmost_free(blocked, k, state.depth, self._mask(idx, state.depth))
        decl = [("assign-region", (), f"region {idx} -> size 2^-{label}")]
        if a is None:
            self.dead_ends += 1
            return Reply(declarations=decl, status="dead-end", note="fresh region blocked")
        self.note_grant(state, req.vertices, a)
        return Reply([(req.vertices, a)], declarations=decl)

    def metrics(self):
        return {
            "regions_total": self.R,
            "regions_assigned": self.next_region,
            "dead_ends": self.dead_ends,
        }


def dynamic_regions(cfg=None, m=None):
    return DynamicRegions(m)


# ---------------------------------------------------------------- a priori

class RowSumError(ValueError):
    pass


def take_measure(free, amount):
    """Leftmost addresses inside ``free`` with total measure exactly ``amount``."""
    out = []
    left = Fraction(amount)
    for z in free.addresses:
        if left == 0:
            break
        size = Fraction(1, 1 << len(z))
        if size <= left:
            out.append(z)
            left -= size
            continue
        # split [z]: walk down, taking left halves while they fit
        cur = z
        while left > 0:
            half = Fraction(1, 1 << (len(cur) + 1))
            if half <= left:
                out.append(cur + "0")
                left -= half
                cur = cur + "1"
            else:
                cur = cur + "0"
        break
    if left != 0:
        raise RowSumError("not enough free measure")
    return out


class AprioriAllocator:
    """Online sets U_xy with measure exactly u(x, y)/2, disjoint per vertex.

    An increment ``(x, y, r)`` raises the symmetric weight u(x, y) by r and
    adds measure r/2 to U_xy taken from the space unused by every U_xz and
    every U_zy.  Row sums of u stay at most 1, so the occupied part at x and
    at y is at most (1 - r)/2 each and r/2 always remains free.
    """

    def __init__(self):
        self.u = {}
        self.U = {}
        self.row = {}
        self.occ = {}
        self.increments = 0

    @staticmethod
    def key(x, y):
        return frozenset((x, y))

    def weight(self, x, y):
        return self.u.get(self.key(x, y), Fraction(0))

    def sets(self, x, y):
        return self.U.get(self.key(x, y), IntervalSet())

    def increment(self, x, y, r):
        if x == y:
            raise ValueError("x and y must differ")
        r = Fraction(r)
        if r <= 0 or r.denominator & (r.denominator - 1):
            raise ValueError(f"increment must be a positive dyadic: {r}")
        for v in (x, y):
            if self.row.get(v, 0) + r > 1:
                raise RowSumError(f"row sum at {v} would exceed 1")
        k = self.key(x, y)
        busy = union(self.occ.get(x, IntervalSet()), self.occ.get(y, IntervalSet()))
        free = difference(IntervalSet.whole(), busy)
        pieces = take_measure(free, r / 2)
        new = IntervalSet(pieces)
        if intersection(new, busy):
            raise Overlap("allocation met an occupied set")
        self.U[k] = union(self.U.get(k, IntervalSet()), new)
        for v in (x, y):
            self.occ[v] = union(self.occ.get(v, IntervalSet()), new)
            self.row[v] = self.row.get(v, 0) + r
        self.u[k] = self.u.get(k, Fraction(0)) + r
        self.increments += 1
        return new

    def check(self):
        """Exactness and per-vertex disjointness; returns None or a message."""
        for k, w in self.u.items():
            if measure(self.U[k]) != w / 2:
                return f"measure mismatch at {sorted(k, key=repr)}"
        by_vertex = {}
        for k, s in self.U.items():
            for v in k:
                by_vertex.setdefault(v, []).append(s)
        for v, sets in by_vertex.items():
            acc = IntervalSet()
            for s in sets:
                if intersection(acc, s):
                    return f"overlap at {v}"
                acc = union(acc, s)
        return None


def apriori_allocator():
    return AprioriAllocator()
