"""Block-and-region strategies: blaming, extras, leaders, friends, groups.

The space (or the sub-space a strategy runs in) is cut into ``ell`` equal
blocks.  A *region* belongs to an owner (a vertex, or a group of vertices)
and a label (a request size, or a size together with a group); it is the set
of blocks listed by a fresh item of a :class:`DesignList`, minus the blocks
the owner already used in earlier regions.

A block is *full* for an owner at size ``eps`` when the eps-neighbourhood of
the owner's occupancy covers at least a threshold fraction of it.  With that
accounting, a block that is not full for any of the owners involved always
contains a size-eps slot that is free for all of them, which is what makes
the blame rules total.
"""

from fractions import Fraction
import math

import numpy as np

from .designs import DesignList, design_length
from .dyadic import leftmost_free, neighborhood_mask, parse_dyadic, size_exponent
from .game import Bob, ConfigError, Reply, SubspaceBob, SubspaceView


class Region:
    __slots__ = ("rid", "owner", "label", "kind", "index", "blocks", "mask",
                 "extra", "blames", "allocated", "k")

    def __init__(self, rid, owner, label, kind, index, blocks, mask, k):
        self.rid, self.owner, self.label, self.kind = rid, owner, label, kind
        self.index, self.blocks, self.mask, self.k = index, blocks, mask, k
        self.extra = None
        self.blames = 0
        self.allocated = 0   # slots allocated through this region


class RegionEngine:
    """Regions, block fullness and the free-slot search for one strategy.

    ``slots_of(owner)`` lists the state slots whose occupancy counts for an
    owner; ``threshold(owner)`` is the fraction of a block that makes it
    full.  All masks are in the coordinates of the view the strategy sees.
    """

    def __init__(self, design, ell, depth, slots_of, threshold):
        if ell & (ell - 1) or ell < 1:
            raise ConfigError(f"ell must be a power of two: {ell}")
        lb = ell.bit_length() - 1
        if lb > depth:
            raise ConfigError(f"{ell} blocks need depth >= {lb}, have {depth}")
        self.design = design
        self.ell, self.lb, self.depth = ell, lb, depth
        self.W = 1 << (depth - lb)     # slots per block
        self.slots_of = slots_of
        self.threshold = threshold
        self.cursor = 0
        self.regions = []
        self.by_owner = {}             # owner -> list of regions (assignment order)
        self.used = {}                 # owner -> set of used block indices
        self.full = {}                 # (owner, k) -> set of full blocks
        self.seen_occ = {}             # owner -> occupancy at last refresh

    # regions ---------------------------------------------------------
    def _mask(self, blocks):
        if not blocks:
            return 0
        arr = np.zeros(self.ell, dtype=np.uint8)
        arr[list(blocks)] = 1
        bits = np.repeat(arr, self.W) if self.W > 1 else arr
        return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")

    def assign(self, owner, label, k, kind="normal"):
        if self.cursor >= len(self.design):
            raise IndexError("design list exhausted")
        index = self.cursor
        self.cursor += 1
        used = self.used.setdefault(owner, set())
        blocks = frozenset(self.design[index]) - used
        used.update(blocks)
        reg = Region(len(self.regions), owner, label, kind, index, blocks,
                     self._mask(blocks), k)
        self.regions.append(reg)
        self.by_owner.setdefault(owner, []).append(reg)
        return reg

    def assign_pair(self, owner, label, k):
        reg = self.assign(owner, label, k)
        reg.extra = self.assign(owner, label, k, kind="extra")
        return reg

    def normal_regions(self, owner, label):
        return [g for g in self.by_owner.get(owner, ()) if g.kind == "normal" and g.label == label]

    # fullness --------------------------------------------------------
    def occupancy(self, owner, view):
        m = 0
        for sl in self.slots_of(owner):
            m |= view.occupancy(sl)
        return m

    def refresh(self, owner, view):
        """Update full-block sets of ``owner`` for every size it has regions for."""
        occ = self.occupancy(owner, view)
        old = self.seen_occ.get(owner, 0)
        if occ == old and all((owner, g.k) in self.full for g in self.by_owner.get(owner, ())):
            return
        self.seen_occ[owner] = occ
        diff = occ ^ old
        touched = set()
        W = self.W
        bm = (1 << W) - 1
        d = diff
        while d:
            b = ((d & -d).bit_length() - 1) // W
            touched.add(b)
            d &= ~(bm << (b * W))
        thr = self.threshold(owner)
        local_depth = self.depth - self.lb
        for k in {g.k for g in self.by_owner.get(owner, ())}:
            key = (owner, k)
            fresh = key not in self.full
            full = self.full.setdefault(key, set())
            blocks = touched if not fresh else self._occupied_blocks(occ)
            for b in blocks:
                local = (occ >> (b * W)) & bm
                nb = neighborhood_mask(local, local_depth, k - self.lb) if local else 0
                if thr.denominator * nb.bit_count() >= thr.numerator * W:
                    full.add(b)
                else:
                    full.discard(b)

    def _occupied_blocks(self, occ):
        out = set()
        W, bm = self.W, (1 << self.W) - 1
        d = occ
        while d:
            b = ((d & -d).bit_length() - 1) // W
            out.add(b)
            d &= ~(bm << (b * W))
        return out

    def full_fraction(self, reg, view):
        self.refresh(reg.owner, view)
        if not reg.blocks:
            return Fraction(1)
        f = self.full[(reg.owner, reg.k)]
        return Fraction(len(reg.blocks & f), len(reg.blocks))

    def select(self, owner, label, k, below, view, with_extra=False):
        """First normal region with full fraction < ``below``; assign one if none."""
        for g in self.normal_regions(owner, label):
            if self.full_fraction(g, view) < below:
                return g, False
        g = self.assign_pair(owner, label, k) if with_extra else self.assign(owner, label, k)
        self.refresh(owner, view)
        return g, True

    # allocation and blame --------------------------------------------
    def common_mask(self, regions):
        m = -1
        for g in regions:
            m &= g.mask
        return m

    def try_alloc(self, regions, blocked, k):
        if k < self.lb:
            return None
        within = self.common_mask(regions)
        if not within:
            return None
        return leftmost_free(blocked, k, self.depth, within)

    def common_blocks(self, regions):
        out = None
        for g in regions:
            out = set(g.blocks) if out is None else out & g.blocks
        return out or set()

    def blame(self, regions, frac, view):
        """Region whose owner has >= ``frac`` of the common blocks full (largest share)."""
        common = self.common_blocks(regions)
        if not common:
            return None, common
        best, best_share = None, Fraction(-1)
        for g in regions:
            self.refresh(g.owner, view)
            share = Fraction(len(common & self.full[(g.owner, g.k)]), len(common))
            if share >= frac and share > best_share:
                best, best_share = g, share
        return best, common


# ---------------------------------------------------------------- helpers

def _param(cfg, name, default, cast=int):
    v = cfg.params.get(name)
    if v in (None, ""):
        return default
    if cast is Fraction and "^" in str(v):
        return parse_dyadic(v)
    return cast(v)


def _design_for(cfg, r, prefix="", s=2, ell=None, N=None):
    xi = _param(cfg, "xi", Fraction(1, 8), Fraction)
    if N is None:
        N = r << cfg.n if cfg.n is not None else 1 << 20
    N = _param(cfg, prefix + "N", N)
    if ell is None:
        ell = _param(cfg, prefix + "ell", 0)
    if not ell:
        ell = design_length(r, N, e=_param(cfg, "e", 16), s=None if s == 2 else s)
    seed = _param(cfg, prefix + "design_seed", _param(cfg, "design_seed", 0))
    return DesignList(ell, r, N, seed=seed, s=s, xi=xi)


class _BlockBob(Bob):
    """Common plumbing: design, engine, already-satisfied keys, metrics."""

    extras = False

    def __init__(self, design=None):
        self.design_given = design

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.mode not in ("pair-prefix-free", "set"):
            raise ConfigError(f"{self.name} needs prefix-free pair or set mode")
        self.depth = cfg.resolved_depth()
        self.design = self.design_given or self.make_design(cfg)
        self.engine = RegionEngine(self.design, self.design.ell, self.depth,
                                   self.slots_of, self.threshold)
        self.events = {"allocated": 0, "blames": 0, "extra_blames": 0,
                       "unallocated_in_contract": 0, "selection_violations": 0}
        self.blames = {}

    def make_design(self, cfg):
        m = max(1, cfg.m)
        xi = _param(cfg, "xi", Fraction(1, 8), Fraction)
        base = math.ceil(4 / xi * m)
        r = _param(cfg, "r", 2 * base if self.extras else base)
        return _design_for(cfg, r, s=cfg.arity)

    def slots_of(self, owner):
        return (owner,)

    def threshold(self, owner):
        raise NotImplementedError

    def satisfied(self, req, state):
        key = state.key_of(req.vertices)
        return state.best.get(key, 0) >= state.units(req.size)

    def in_contract(self, req):
        return req.size <= Fraction(1, self.engine.ell * self.cfg.arity)

    def fail(self, req, note, decl=()):
        """A failure is a falsification only for requests inside the size precondition."""
        decl = list(decl)
        if self.in_contract(req):
            self.events["unallocated_in_contract"] += 1
            return Reply(declarations=decl, status="falsified", note=note)
        return Reply(declarations=decl, status="dead-end", note=note)

    def note_blame(self, reg):
        reg.blames += 1
        self.blames[reg.owner] = self.blames.get(reg.owner, 0) + 1
        self.events["blames"] += 1

    def select_all(self, owners, label_of, k, below, view):
        regs = []
        for o in owners:
            g, _ = self.engine.select(o, label_of(o), k, below, view, with_extra=self.extras)
            if self.engine.full_fraction(g, view) >= below:
                self.events["selection_violations"] += 1
            regs.append(g)
        return regs

    def base_metrics(self):
        eng = self.engine
        per_owner = {}
        for g in eng.regions:
            per_owner[g.owner] = per_owner.get(g.owner, 0) + 1
        extra_alloc = max((g.allocated for g in eng.regions if g.kind == "extra"), default=0)
        out = dict(self.events)
        out.update({
            "ell": eng.ell,
            "r": self.design.r,
            "regions_assigned": len(eng.regions),
            "max_regions_per_owner": max(per_owner.values(), default=0),
            "max_blames": max(self.blames.values(), default=0),
            "max_region_blames": max((g.blames for g in eng.regions), default=0),
            "extra_alloc_max": str(Fraction(extra_alloc, 1 << self.depth)),
        })
        return out


# ---------------------------------------------------------------- pairs

class RegionBlockBlaming(_BlockBob):
    """Variant E: allocate inside two regions or blame one endpoint.

    Regions are selected while fewer than a quarter of their blocks are
    full; a block is full for a vertex when half of it is covered.  When no
    common slot is free, every common block is full for one endpoint, so one
    of them owns at least half of the common blocks and is blamed.
    """

    name = "region_block_blaming"
    select_below = Fraction(1, 4)
    blame_at = Fraction(1, 2)

    def threshold(self, owner):
        return Fraction(1, 2)

    def in_contract(self, req):
        cfg = self.cfg
        c = _param(cfg, "blame_c", 64)
        m, n = max(1, cfg.m), cfg.n or 1
        bound = min(Fraction(1, 2 * self.engine.ell), Fraction(1, c * m ** 3 * n))
        return req.size <= bound and cfg.d <= _param(cfg, "small_d", Fraction(1, 64), Fraction)

    def reply(self, req, state):
        if self.satisfied(req, state):
            return Reply()
        k = size_exponent(req.size)
        if k < self.engine.lb:
            return Reply(status="dead-end", note="request larger than a block")
        u, v = req.vertices
        key = state.key_of(req.vertices)
        blocked = state.blocked(key)
        try:
            regs = self.select_all((u, v), lambda o: k, k, self.select_below, state)
        except IndexError:
            return self.fail(req, "design list exhausted")
        a = self.engine.try_alloc(regs, blocked, k)
        if a is not None:
            return self._grant(req, regs, a)
        g, common = self.engine.blame(regs, self.blame_at, state)
        if g is None:
            return self.fail(req, "no common blocks" if not common else "no endpoint blamable")
        self.note_blame(g)
        blamed = u if g.owner == u else v
        return self.after_blame(req, state, regs, g, blocked, k, blamed)

    def after_blame(self, req, state, regs, g, blocked, k, blamed):
        decl = [("blame", (blamed,), f"region {g.rid}")]
        return Reply(declarations=decl, status="excused", note=f"blame {blamed}")

    def _grant(self, req, regs, a, decl=()):
        units = 1 << (self.depth - len(a))
        for g in regs:
            g.allocated += units
        self.events["allocated"] += 1
        return Reply([(req.vertices, a)], declarations=list(decl))

    def metrics(self):
        return self.base_metrics()


class BlamingWithExtras(RegionBlockBlaming):
    """Variant E plus one extra region per normal region, so nothing is left unallocated.

    Step 1 tries the normal regions.  On failure the blamed endpoint switches
    to its extra region (step 2), then both do (step 3).  A step-3 failure on
    a request inside the size precondition is reported as a falsification.
    """

    name = "blaming_with_extras"
    extras = True

    def after_blame(self, req, state, regs, g, blocked, k, blamed):
        decl = [("blame", (blamed,), f"region {g.rid}")]
        other = regs[1] if regs[0] is g else regs[0]
        step2 = [g.extra, other] if regs[0] is g else [other, g.extra]
        a = self.engine.try_alloc(step2, blocked, k)
        if a is not None:
            self.events["step2"] = self.events.get("step2", 0) + 1
            return self._grant(req, step2, a, decl)
        h, _ = self.engine.blame(step2, self.blame_at, state)
        if h is not None and h.kind == "extra":
            self.events["extra_blames"] += 1
            decl.append(("extra-blamed", (h.owner,), f"region {h.rid}"))
        step3 = [g.extra, other.extra]
        a = self.engine.try_alloc(step3, blocked, k)
        if a is not None:
            self.events["step3"] = self.events.get("step3", 0) + 1
            return self._grant(req, step3, a, decl)
        return self.fail(req, "extra regions exhausted", decl)


def region_block_blaming(cfg=None, design=None):
    return RegionBlockBlaming(design)


def blaming_with_extras(cfg=None, design=None):
    return BlamingWithExtras(design)


# ---------------------------------------------------------------- composed

def band_boundary(n, c=Fraction(1)):
    """Largest power of two <= c * n**-4."""
    q = Fraction(c) / n ** 4
    k = 0
    while Fraction(1, 1 << k) > q:
        k += 1
    return Fraction(1, 1 << k)


class ComposedFull(Bob):
    """Two blaming-with-extras copies: small sizes in [0], larger ones in [1]."""

    name = "composed_full"
    promise = "band"

    def __init__(self, design_small=None, design_large=None):
        self.small = SubspaceBob(_Prefixed(BlamingWithExtras(design_small), "small_"), "0")
        self.large = SubspaceBob(_Prefixed(BlamingWithExtras(design_large), "large_"), "1")

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.n is None:
            raise ConfigError("composed strategy needs finite n")
        self.boundary = _param(cfg, "band", band_boundary(cfg.n, _param(cfg, "band_c", 1, Fraction)), Fraction)
        self.lowest = Fraction(1, 1 << (cfg.n + 2))
        self.small.bind(cfg, rng)
        self.large.bind(cfg, rng)
        self.routed = {"small": 0, "large": 0}

    def reply(self, req, state):
        if req.size < self.lowest:
            return Reply(status="promise-breach", note="size below band")
        if req.size <= self.boundary:
            self.routed["small"] += 1
            return self.small.reply(req, state)
        self.routed["large"] += 1
        return self.large.reply(req, state)

    def metrics(self):
        return {"routed": self.routed, "boundary": str(self.boundary),
                "small": self.small.metrics(), "large": self.large.metrics()}


class _Prefixed(Bob):
    """Reads ``<prefix>r``, ``<prefix>ell`` ... before the plain parameter names."""

    def __init__(self, inner, prefix):
        self.inner, self.prefix = inner, prefix
        self.name, self.clonable = inner.name, inner.clonable

    def bind(self, cfg, rng):
        from dataclasses import replace
        params = dict(cfg.params)
        for k, v in cfg.params.items():
            if k.startswith(self.prefix):
                params[k[len(self.prefix):]] = v
        self.inner.bind(replace(cfg, params=params), rng)

    def reply(self, req, state):
        return self.inner.reply(req, state)

    def metrics(self):
        return self.inner.metrics()


def composed_full(cfg=None):
    return ComposedFull()


# ---------------------------------------------------------------- sets

class SetLeaders(_BlockBob):
    """Set requests: allocate in the common part of s regions, else blame and name leaders."""

    name = "set_leaders"

    def threshold(self, owner):
        return Fraction(1, self.cfg.s)

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.mode != "set":
            raise ConfigError("set strategies need mode=set")
        self.leaders = {}
        c = _param(cfg, "leader_c", 1)
        self.leader_bound = _param(cfg, "leader_bound", cfg.s ** 2 * (c * max(1, cfg.m)) ** cfg.s)
        self.events.update({"excused_new_leaders": 0, "excused_existing_leader": 0})

    def reply(self, req, state):
        if self.satisfied(req, state):
            return Reply()
        s = self.cfg.s
        k = size_exponent(req.size)
        if k < self.engine.lb:
            return Reply(status="dead-end", note="request larger than a block")
        members = tuple(req.vertices)
        blocked = state.blocked(state.key_of(members))
        try:
            regs = self.select_all(members, lambda o: k, k, Fraction(1, 2 * s), state)
        except IndexError:
            return self.fail(req, "design list exhausted")
        a = self.engine.try_alloc(regs, blocked, k)
        if a is not None:
            self.events["allocated"] += 1
            return Reply([(members, a)])
        g, common = self.engine.blame(regs, Fraction(1, s), state)
        if g is None:
            return self.fail(req, "no common blocks" if not common else "nobody blamable")
        self.note_blame(g)
        u = g.owner
        rest = tuple(x for x in members if x != u)
        mine = self.leaders.setdefault(u, set())
        decl = [("blame", (u,), f"region {g.rid}")]
        if mine & set(rest):
            self.events["excused_existing_leader"] += 1
            return Reply(declarations=decl, status="excused", note="leader present")
        mine.update(rest)
        self.events["excused_new_leaders"] += 1
        decl.append(("leader", (u,) + rest, f"leaders of {u}"))
        if len(mine) > self.leader_bound:
            return Reply(declarations=decl, status="falsified", note="leader bound exceeded")
        return Reply(declarations=decl, status="excused", note="leaders declared")

    def metrics(self):
        out = self.base_metrics()
        out["max_leaders"] = max((len(x) for x in self.leaders.values()), default=0)
        out["leader_bound"] = self.leader_bound
        return out


def set_leaders(cfg=None, design=None):
    return SetLeaders(design)


class SetFriends(_BlockBob):
    """Set requests with friendship by coappearance and normal/extra regions.

    Coappearance of two strings is the total size of earlier requests that
    contained both.  A request containing a pair of friends needs no
    allocation.  Otherwise the blamed region is swapped for its extra copy
    until an allocation is found; blaming an extra region is a falsification.
    """

    name = "set_friends"
    extras = True

    def threshold(self, owner):
        return Fraction(1, self.cfg.s)

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.mode != "set":
            raise ConfigError("set strategies need mode=set")
        s, r = cfg.s, self.design.r
        self.f = _param(cfg, "f", Fraction(1, 2 * s ** 3 * r ** (2 * s)), Fraction)
        self.friend_bound = _param(cfg, "friend_bound", math.floor(s * cfg.d / self.f))
        self.coappear = {}
        self.friends = {}
        self.events.update({"excused_friends": 0})

    def _pairs(self, members):
        ms = sorted(members, key=repr)
        return [(ms[i], ms[j]) for i in range(len(ms)) for j in range(i + 1, len(ms))]

    def reply(self, req, state):
        members = tuple(req.vertices)
        pairs = self._pairs(members)
        decl = []
        for p in pairs:
            if self.coappear.get(p, 0) >= self.f and p[1] not in self.friends.get(p[0], ()):
                self.friends.setdefault(p[0], set()).add(p[1])
                self.friends.setdefault(p[1], set()).add(p[0])
                decl.append(("friends", p, ""))
        for p in pairs:
            self.coappear[p] = self.coappear.get(p, 0) + req.size
        if any(p[1] in self.friends.get(p[0], ()) for p in pairs):
            self.events["excused_friends"] += 1
            worst = max((len(x) for x in self.friends.values()), default=0)
            status = "falsified" if worst > self.friend_bound else "excused"
            return Reply(declarations=decl, status=status, note="friend pair")
        if self.satisfied(req, state):
            return Reply(declarations=decl)
        k = size_exponent(req.size)
        if k < self.engine.lb:
            return Reply(declarations=decl, status="dead-end", note="request larger than a block")
        blocked = state.blocked(state.key_of(members))
        s = self.cfg.s
        try:
            regs = self.select_all(members, lambda o: k, k, Fraction(1, 2 * s), state)
        except IndexError:
            return self.fail(req, "design list exhausted", decl)
        for _ in range(s + 1):
            a = self.engine.try_alloc(regs, blocked, k)
            if a is not None:
                self.events["allocated"] += 1
                units = 1 << (self.depth - len(a))
                for g in regs:
                    g.allocated += units
                return Reply([(members, a)], declarations=decl)
            g, common = self.engine.blame(regs, Fraction(1, s), state)
            if g is None:
                break
            if g.kind == "extra":
                self.events["extra_blames"] += 1
                decl.append(("extra-blamed", (g.owner,), f"region {g.rid}"))
                return self.fail(req, "extra region blamed", decl)
            self.note_blame(g)
            decl.append(("blame", (g.owner,), f"region {g.rid}"))
            regs = [g.extra if x is g else x for x in regs]
        return self.fail(req, "no allocation", decl)

    def metrics(self):
        out = self.base_metrics()
        out["max_friends"] = max((len(x) for x in self.friends.values()), default=0)
        out["friend_bound"] = self.friend_bound
        out["f"] = str(self.f)
        return out


def set_friends(cfg=None, design=None):
    return SetFriends(design)


# ---------------------------------------------------------------- groups

class _Level:
    """One substrategy: requests whose partition has ``t`` groups."""

    def __init__(self, t, engine, f, prefix):
        self.t, self.engine, self.f, self.prefix = t, engine, f, prefix
        self.coappear = {}
        self.friends = set()
        self.labels = {}      # vertex -> set of labels seen at this level
        self.merges = 0
        self.allocated = 0


class SetGroups(Bob):
    """s substrategies in parallel, one per number of groups.

    Level ``t`` works in its own sub-space of measure ``2**-ceil(log s)``
    and treats each group as a region owner; a block is full for a group
    ``G`` when its neighbourhood covers ``#G/s`` of it.  Friendship between
    groups merges them and sends the request one level down.  Level 1 puts
    every label into a private block of its own.
    """

    name = "set_groups"

    def __init__(self, designs=None):
        self.designs_given = designs

    def bind(self, cfg, rng):
        super().bind(cfg, rng)
        if cfg.mode != "set":
            raise ConfigError("set strategies need mode=set")
        s = cfg.s
        self.s = s
        self.pw = (s - 1).bit_length()
        self.depth = cfg.resolved_depth()
        self.sub_depth = self.depth - self.pw
        if self.sub_depth < 1:
            raise ConfigError("depth too small for the level sub-spaces")
        self.levels = {}
        for t in range(2, s + 1):
            prefix = format(s - t, f"0{self.pw}b")
            r = _param(cfg, f"r{t}", _param(cfg, "r", 8))
            ell = _param(cfg, f"ell{t}", _param(cfg, "ell", 0))
            if self.designs_given and t in self.designs_given:
                dl = self.designs_given[t]
            else:
                dl = _design_for(cfg, r, prefix=f"l{t}_", s=t, ell=ell or None, N=1 << 24)
            eng = RegionEngine(dl, dl.ell, self.sub_depth, self._members, self._thr)
            default_f = Fraction(1, 2 * t ** 3 * r ** (2 * t))
            f = _param(cfg, f"f{t}", _param(cfg, "f", default_f, Fraction), Fraction)
            self.levels[t] = _Level(t, eng, f, prefix)
        self.l1_prefix = format(s - 1, f"0{self.pw}b")
        self.l1_blocks = _param(cfg, "ell1", 1 << min(self.sub_depth, 8))
        if self.l1_blocks & (self.l1_blocks - 1) or self.l1_blocks > (1 << self.sub_depth):
            raise ConfigError("ell1 must be a power of two within the sub-space")
        self.l1_lb = self.l1_blocks.bit_length() - 1
        self.l1_next = 0
        self.l1_block = {}    # label -> list of block indices
        self.l1_allocated = 0
        self.events = {"falsified": 0, "dead_ends": 0, "extra_blames": 0, "cascades": 0,
                       "selection_violations": 0}

    def _members(self, owner):
        return tuple(owner)

    def in_contract(self, req):
        eps = req.size * (1 << self.pw)
        bound = Fraction(1, self.s << self.l1_lb)
        for lvl in self.levels.values():
            bound = min(bound, Fraction(1, lvl.engine.ell * self.s))
        return eps <= bound

    def fail(self, req, note, decl):
        if self.in_contract(req):
            self.events["falsified"] += 1
            return Reply(declarations=list(decl), status="falsified", note=note)
        self.events["dead_ends"] += 1
        return Reply(declarations=list(decl), status="dead-end", note=note)

    def _thr(self, owner):
        return Fraction(len(owner), self.s)

    # ------------------------------------------------------------
    def reply(self, req, state):
        key = state.key_of(req.vertices)
        if state.best.get(key, 0) >= state.units(req.size):
            return Reply()
        groups = tuple(frozenset([v]) for v in sorted(req.vertices, key=repr))
        decl = []
        t = self.s
        while t >= 2:
            lvl = self.levels[t]
            res = self._level_step(lvl, groups, req, state, decl)
            if isinstance(res, Reply):
                return res
            groups = res
            t = len(groups)
            self.events["cascades"] += 1
        return self._level_one(groups[0], req, state, decl)

    def _level_step(self, lvl, groups, req, state, decl):
        """Returns a Reply, or the merged partition to hand down."""
        view = SubspaceView(state, lvl.prefix)
        gs = sorted(groups, key=lambda g: sorted(map(repr, g)))
        pairs = [(gs[i], gs[j]) for i in range(len(gs)) for j in range(i + 1, len(gs))]
        for p in pairs:
            if lvl.coappear.get(p, 0) >= lvl.f and p not in lvl.friends:
                lvl.friends.add(p)
                decl.append(("friends", tuple(sorted(p[0] | p[1], key=repr)), f"level {lvl.t}"))
        for p in pairs:
            lvl.coappear[p] = lvl.coappear.get(p, 0) + req.size
        eps = req.size * (1 << self.pw)
        k = size_exponent(eps)
        for g in gs:
            for v in g:
                lvl.labels.setdefault(v, set()).add((k, g))
        for p in pairs:
            if p in lvl.friends:
                lvl.merges += 1
                merged = p[0] | p[1]
                decl.append(("merge", tuple(sorted(merged, key=repr)), f"level {lvl.t}->{lvl.t - 1}"))
                return tuple(g for g in gs if g not in p) + (merged,)
        eng = lvl.engine
        if k < eng.lb:
            return Reply(declarations=decl, status="dead-end", note="request larger than a block")
        blocked = view.blocked(state.key_of(req.vertices))
        below = Fraction(1, 2 * lvl.t)
        regs = []
        try:
            for g in gs:
                reg, _ = eng.select(g, (k, g), k, below, view, with_extra=True)
                if eng.full_fraction(reg, view) >= below:
                    self.events["selection_violations"] += 1
                regs.append(reg)
        except IndexError:
            return self.fail(req, "design list exhausted", decl)
        for _ in range(lvl.t + 1):
            a = eng.try_alloc(regs, blocked, k)
            if a is not None:
                lvl.allocated += 1
                return Reply([(req.vertices, lvl.prefix + a)], declarations=decl)
            g, _ = eng.blame(regs, Fraction(1, lvl.t), view)
            if g is None:
                break
            if g.kind == "extra":
                self.events["extra_blames"] += 1
                return self.fail(req, "extra region blamed", decl)
            g.blames += 1
            decl.append(("blame", tuple(sorted(g.owner, key=repr)), f"level {lvl.t}"))
            regs = [g.extra if x is g else x for x in regs]
        return self.fail(req, "no allocation", decl)

    def _level_one(self, group, req, state, decl):
        view = SubspaceView(state, self.l1_prefix)
        eps = req.size * (1 << self.pw)
        k = size_exponent(eps)
        if k < self.l1_lb:
            return Reply(declarations=decl, status="dead-end", note="request larger than a level-1 block")
        label = (k, group)
        blocked = view.blocked(state.key_of(req.vertices))
        W = 1 << (self.sub_depth - self.l1_lb)
        for b in self.l1_block.get(label, ()):
            a = leftmost_free(blocked, k, self.sub_depth, ((1 << W) - 1) << (b * W))
            if a is not None:
                self.l1_allocated += 1
                return Reply([(req.vertices, self.l1_prefix + a)], declarations=decl)
        if self.l1_next >= self.l1_blocks:
            return self.fail(req, "level-1 blocks exhausted", decl)
        b = self.l1_next
        self.l1_next += 1
        self.l1_block.setdefault(label, []).append(b)
        a = leftmost_free(blocked, k, self.sub_depth, ((1 << W) - 1) << (b * W))
        if a is None:
            return self.fail(req, "private block not free", decl)
        self.l1_allocated += 1
        return Reply([(req.vertices, self.l1_prefix + a)], declarations=decl)

    def metrics(self):
        out = dict(self.events)
        out["level1_allocated"] = self.l1_allocated
        out["level1_blocks_used"] = self.l1_next
        # m_s = m, m_{t-1} = m_t * r_t^(2t)
        bound = self.cfg.m
        for t in sorted(self.levels, reverse=True):
            lvl = self.levels[t]
            out[f"level{t}"] = {
                "allocated": lvl.allocated,
                "merges": lvl.merges,
                "friend_pairs": len(lvl.friends),
                "max_labels": max((len(x) for x in lvl.labels.values()), default=0),
                "label_bound": bound,
                "regions": len(lvl.engine.regions),
            }
            bound *= lvl.engine.design.r ** (2 * t)
        return out


def set_groups(cfg=None, designs=None):
    return SetGroups(designs)
