"""Adversaries: the star strategy, random fuzzers and schedule replay.

The star strategy keeps a set of *active* vertices and grows the space that
is dirty for all of them.  At stage ``i`` it requests size ``eps[i-1]`` on
every edge of stars with a fresh centre, so the centre forces Bob to spread
measure ``d`` over the leaves.  Some leaf then picks up a new size-``eps[i]``
dirty interval outside the current zone; the leaves sharing the most common
such interval stay active and the rest are dropped.

Two execution modes exist.  ``explicit`` plays every vertex.  ``compressed``
keeps one representative active vertex and makes its leaves with ``Clone``
moves; this is exact for allocators whose replies only depend on the states
of the two endpoints (``Bob.clonable``), since then every star of a substage
would receive identical answers and one star stands for all of them.  The
number of vertices the explicit game would need is tracked as ``N_k``.
"""

import csv
from fractions import Fraction
from itertools import count

from .dyadic import (
    addr_mask, format_dyadic, mask_measure, neighborhood_mask, parse_dyadic,
    size_exponent,
)
from .game import Alice, Clone, ConfigError, Request, Retire, validate_request


def star_epsilons(d):
    """eps_0 < ... < eps_N with eps_N = d/2 and eps_{i-1} = eps_i * d/2, N = 1/d."""
    d = Fraction(d)
    N = int(1 / d)
    if Fraction(1, N) != d or N & (N - 1):
        raise ConfigError(f"d must be a negative power of two: {d}")
    eps = [d / 2]
    for _ in range(N):
        eps.append(eps[-1] * d / 2)
    return eps[::-1]


class StarAdversary(Alice):
    """Stage-by-stage star strategy (see module docstring)."""

    name = "star"

    def __init__(self, d=None, epsilons=None, mode="compressed", pool=None,
                 universe=None, bipartite=False):
        self.d = None if d is None else Fraction(d)
        self.epsilons = None if epsilons is None else [Fraction(e) for e in epsilons]
        self.mode = mode
        self.pool = pool
        self.universe = universe
        self.bipartite = bipartite
        self.gave_up = False

    # setup -------------------------------------------------------------
    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.mode == "set":
            raise ConfigError("star adversary plays pair modes")
        if self.bipartite != (cfg.mode == "pair-bipartite"):
            raise ConfigError("bipartite star needs mode=pair-bipartite and vice versa")
        if self.d is None:
            self.d = cfg.d
        if self.d > cfg.d:
            raise ConfigError("star d exceeds the game budget")
        self.eps = self.epsilons or star_epsilons(self.d)
        if any(a >= b for a, b in zip(self.eps, self.eps[1:])):
            raise ConfigError("epsilons must increase")
        self.stages_total = len(self.eps) - 1
        need = size_exponent(self.eps[0])
        depth = cfg.resolved_depth()
        if depth < need:
            raise ConfigError(f"depth {depth} too coarse for eps_0 = 2^-{need}")
        if self.mode not in ("compressed", "explicit"):
            raise ConfigError(f"unknown star mode {self.mode!r}")
        if self.universe is not None:
            self.mode = "explicit"
            self._ids = iter(list(self.universe))
        else:
            self._ids = count()
        self.stage_log = []
        self.substage_sizes = []
        self.requests = 0
        self.touched = 0
        self.note = ""
        self._gen = None
        self.gave_up = False

    def next_move(self, state):
        self.state = state
        if self._gen is None:
            play = self._compressed if self.mode == "compressed" else self._explicit
            self._gen = play()
        return next(self._gen, None)

    # helpers -----------------------------------------------------------
    def fresh(self):
        v = next(self._ids, None)
        if v is not None:
            self.touched += 1
        return v

    def occ(self, v):
        sl = ("R", v) if self.bipartite else v
        return self.state.occupancy(sl)

    def key(self, centre, leaf):
        return self.state.key_of((centre, leaf))

    def zone(self, vertices, k):
        """Size-2^-k intervals dirty for every vertex in ``vertices``."""
        depth = self.state.depth
        z = self.state.full
        for v in vertices:
            z &= neighborhood_mask(self.occ(v), depth, k)
            if not z:
                break
        return z

    def new_interval(self, centre, leaf, k, zone_b):
        """Leftmost size-2^-k interval met by the edge's allocation and outside zone B."""
        depth = self.state.depth
        best = None
        for a in self.state.table.get(self.key(centre, leaf), ()):
            if len(a) >= k:
                cands = [a[:k]]
            else:
                cands = [a + format(j, f"0{k - len(a)}b") for j in range(1 << (k - len(a)))]
            for J in cands:
                if not (zone_b >> (int(J, 2) << (depth - k))) & 1:
                    if best is None or J < best:
                        best = J
                    break
        return best

    def _stage_record(self, i, mA, mB, substages, L, active=""):
        self.stage_log.append({
            "stage": i, "eps": format_dyadic(self.eps[i]),
            "zoneA": format_dyadic(mA), "zoneB": format_dyadic(mB),
            "growth": format_dyadic(mB - mA) if mB >= mA else str(mB - mA),
            "substages": substages, "star_size": L, "active": active,
        })

    # compressed --------------------------------------------------------
    def _compressed(self):
        d, eps = self.d, self.eps
        depth = self.state.depth
        R = self.fresh()
        for i in range(1, self.stages_total + 1):
            kp, kc = size_exponent(eps[i - 1]), size_exponent(eps[i])
            L = int(d / eps[i - 1])
            mA = mask_measure(neighborhood_mask(self.occ(R), depth, kp), depth)
            zb = neighborhood_mask(self.occ(R), depth, kc)
            subs = 0
            while mask_measure(zb, depth) - mA < d:
                centre = self.fresh()
                leaves = tuple(self.fresh() for _ in range(L))
                self.touched -= L   # clones of R are the same vertex class
                yield Clone(R, leaves)
                for v in leaves:
                    self.requests += 1
                    yield Request((centre, v), eps[i - 1])
                groups = {}
                for j, v in enumerate(leaves):
                    J = self.new_interval(centre, v, kc, zb)
                    if J is not None:
                        groups.setdefault(J, []).append(j)
                if not groups:
                    self.note = f"no new interval at stage {i}"
                    self.gave_up = True
                    return
                J = min(groups, key=lambda x: (-len(groups[x]), x))
                keep = leaves[groups[J][0]]
                yield Retire((R, centre) + tuple(v for v in leaves if v != keep))
                R = keep
                subs += 1
                self.substage_sizes.append(L)
                zb = neighborhood_mask(self.occ(R), depth, kc)
            self._stage_record(i, mA, mask_measure(zb, depth), subs, L)
        last = self.fresh()
        self.requests += 1
        yield Request((last, R) if self.bipartite else (R, last), eps[-1])

    def n_k(self):
        """Vertices the explicit game needs (compressed) or used (explicit)."""
        if self.mode == "explicit":
            return self.touched
        need, centres = 1, 0
        for L in reversed(self.substage_sizes):
            centres += need
            need *= L
        return need + centres + 1

    # explicit ----------------------------------------------------------
    def _explicit(self):
        d, eps = self.d, self.eps
        depth = self.state.depth
        budget = self.cfg.d
        size = self.pool or (1 << 12)
        if self.universe is not None:
            size = self.pool or max(1, len(self.universe) // 2)
        active = []
        for _ in range(size):
            v = self.fresh()
            if v is None:
                break
            active.append(v)
        for i in range(1, self.stages_total + 1):
            kp, kc = size_exponent(eps[i - 1]), size_exponent(eps[i])
            L = int(d / eps[i - 1])
            mA = mask_measure(self.zone(active, kp), depth)
            zb = self.zone(active, kc)
            subs = 0
            while mask_measure(zb, depth) - mA < d:
                stars = []
                pos = 0
                while pos < len(active):
                    centre = self.fresh()
                    if centre is None:
                        break
                    cap = min(L, int(budget / eps[i - 1]))
                    leaves = active[pos:pos + cap]
                    pos += len(leaves)
                    stars.append((centre, leaves))
                    if len(active) - pos < L and stars:
                        break
                if not stars or not stars[0][1]:
                    self.note = f"pool exhausted at stage {i}"
                    self.gave_up = True
                    return
                for centre, leaves in stars:
                    for v in leaves:
                        r = Request((centre, v), eps[i - 1])
                        if validate_request(self.cfg, self.state, r) is not None:
                            continue
                        self.requests += 1
                        yield r
                groups = {}
                for centre, leaves in stars:
                    for v in leaves:
                        J = self.new_interval(centre, v, kc, zb)
                        if J is not None:
                            groups.setdefault(J, []).append(v)
                if not groups:
                    self.note = f"no new interval at stage {i}"
                    self.gave_up = True
                    return
                J = min(groups, key=lambda x: (-len(groups[x]), x))
                keep = set(groups[J])
                drop = [c for c, _ in stars] + [v for v in active if v not in keep]
                yield Retire(tuple(drop))
                active = [v for v in active if v in keep]
                subs += 1
                self.substage_sizes.append(L)
                zb = self.zone(active, kc)
            self._stage_record(i, mA, mask_measure(zb, depth), subs, L, len(active))
        last = self.fresh()
        if last is None:
            self.note = "no fresh vertex for the final request"
            self.gave_up = True
            return
        self.requests += 1
        v = active[0]
        yield Request((last, v) if self.bipartite else (v, last), eps[-1])

    def metrics(self):
        grow = [parse_dyadic(s["growth"]) if "-" not in s["growth"] else Fraction(s["growth"])
                for s in self.stage_log]
        nk = self.n_k()
        return {
            "mode": self.mode,
            "stages": self.stage_log,
            "stages_completed": len(self.stage_log),
            "zone_growth_ok": all(g >= self.d for g in grow),
            "requests": self.requests,
            # the compressed count can have thousands of digits
            "N_k": str(nk) if nk.bit_length() <= 256 else f"~2^{nk.bit_length() - 1}",
            "log2_N_k": nk.bit_length() - 1 if nk else 0,
            "note": self.note,
        }


def star_adversary(d=None, **kw):
    return StarAdversary(d, **kw)


def bipartite_star_adversary(d=None, **kw):
    return StarAdversary(d, bipartite=True, **kw)


def star_for(bob, d=None, **kw):
    """Compressed star for clonable allocators, explicit otherwise."""
    mode = "compressed" if bob.clonable and "universe" not in kw else "explicit"
    kw.setdefault("mode", mode)
    return StarAdversary(d, **kw)


# ---------------------------------------------------------------- random

class RandomAdversary(Alice):
    """Budget-legal random requests, reproducible from the match seed.

    Profiles: ``uniform`` draws sizes uniformly from the allowed list;
    ``variant-C`` additionally caps, per size, how many requests any single
    vertex takes part in, so that sum_i eps_i * max_u N_{i,u} <= d.
    """

    name = "random"

    def __init__(self, count=1000, profile="uniform", sizes=None, universe=None, tries=64):
        self.count = count
        self.profile = profile
        self.sizes = sizes
        self.universe = universe
        self.tries = tries

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        self.left = self.count
        sizes = list(self.sizes or cfg.allowed_sizes)
        if not sizes:
            raise ConfigError("random adversary needs sizes")
        self.size_list = sorted(Fraction(q) for q in sizes)
        if self.universe is not None:
            self.verts = list(self.universe)
        elif cfg.n is not None:
            self.verts = list(range(1 << cfg.n))
        else:
            self.verts = list(range(64))
        if len(self.verts) < cfg.arity:
            raise ConfigError("universe smaller than the request arity")
        self.quota = None
        if self.profile == "variant-C":
            # equal share of the budget for every size
            share = cfg.d / len(self.size_list)
            self.quota = {q: int(share / q) for q in self.size_list}
            self.used = {}
        elif self.profile != "uniform":
            raise ConfigError(f"unknown profile {self.profile!r}")
        self.issued = 0

    def next_move(self, state):
        if self.left <= 0:
            return None
        for _ in range(self.tries):
            vs = tuple(self.rng.sample(self.verts, self.cfg.arity))
            q = self.rng.choice(self.size_list)
            if self.quota is not None:
                if any(self.used.get((v, q), 0) >= self.quota[q] for v in vs):
                    continue
            r = Request(vs, q)
            if validate_request(self.cfg, state, r) is None:
                if self.quota is not None:
                    for v in vs:
                        self.used[(v, q)] = self.used.get((v, q), 0) + 1
                self.left -= 1
                self.issued += 1
                return r
        return None

    def metrics(self):
        return {"issued": self.issued, "profile": self.profile}


def random_adversary(count=1000, profile="uniform", **kw):
    return RandomAdversary(count, profile, **kw)


# ---------------------------------------------------------------- schedule

class ScheduleError(ValueError):
    pass


def _vertex_token(t):
    t = t.strip()
    return int(t) if t.lstrip("-").isdigit() else t


def load_schedule(path, d, arity=2):
    """CSV with header ``vertices,E`` (weight d*2^-E) or ``vertices,weight``.

    Vertices are separated by spaces.  An optional ``reveal`` column orders
    the rows (ties keep file order); otherwise file order is used.  Per-vertex
    sums above ``d`` are rejected.
    """
    d = Fraction(d)
    rows = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        fields = rd.fieldnames or []
        if "vertices" not in fields or not ({"E", "weight"} & set(fields)):
            raise ScheduleError("schedule needs columns vertices and E or weight")
        reveal = next((c for c in ("reveal", "reveal_index", "reveal-index") if c in fields), None)
        for row in rd:
            vs = tuple(_vertex_token(t) for t in row["vertices"].split())
            if len(vs) != arity or len(set(vs)) != arity:
                raise ScheduleError(f"bad vertex list {row['vertices']!r}")
            if row.get("E", "") not in ("", None):
                w = d / (1 << int(row["E"]))
            else:
                w = parse_dyadic(row["weight"])
            rows.append((int(row[reveal]) if reveal else 0, vs, w))
    rows = [(vs, w) for _, vs, w in sorted(rows, key=lambda r: r[0])]
    check_schedule(rows, d)
    return rows


def check_schedule(rows, d):
    tot = {}
    for vs, w in rows:
        for v in vs:
            tot[v] = tot.get(v, 0) + w
            if tot[v] > d:
                raise ScheduleError(f"schedule exceeds budget at {v}")


class ScheduleAdversary(Alice):
    """Replays a weight schedule, skipping entries above the size cap."""

    name = "schedule"

    def __init__(self, rows):
        self.rows = list(rows)

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        check_schedule(self.rows, cfg.d)
        self.i = 0
        self.skipped = 0

    def next_move(self, state):
        while self.i < len(self.rows):
            vs, w = self.rows[self.i]
            self.i += 1
            if w > self.cfg.delta or (self.cfg.allowed_sizes and w not in self.cfg.allowed_sizes):
                self.skipped += 1
                continue
            return Request(vs, w)
        return None

    def metrics(self):
        return {"entries": len(self.rows), "skipped": self.skipped}


def schedule_adversary(rows):
    return ScheduleAdversary(rows)
