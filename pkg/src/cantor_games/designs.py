"""Combinatorial objects behind the block strategies and the lower bounds.

* index-set lists over ``[ell]`` with near-uniform t-wise intersections
  (generation plus exhaustive or runtime verification);
* projective planes over prime fields and the label-length pigeonhole bound;
* the string count that breaks the triangle inequality for the weaker
  plain-distance characterisation.
"""

from fractions import Fraction
from itertools import combinations
import csv
import math

import numpy as np


class DesignError(ValueError):
    pass


# ---------------------------------------------------------------- index sets

class DesignList:
    """``N`` subsets of ``range(ell)``; element i joins set j with probability 1/r.

    Sets are generated lazily and independently from ``(seed, j)`` so that a
    strategy touching only the first few items never pays for the rest.
    """

    def __init__(self, ell, r, N, seed=0, s=2, xi=Fraction(1, 8), sets=None):
        if r < 1:
            raise DesignError("r must be positive")
        self.ell, self.r, self.N, self.s = int(ell), int(r), int(N), int(s)
        self.xi = Fraction(xi)
        self.seed = int(seed)
        self._cache = {}
        self._bits = {}
        self.status = {}
        if sets is not None:
            if len(sets) != self.N:
                raise DesignError("set count does not match N")
            for j, st in enumerate(sets):
                self._cache[j] = tuple(sorted(int(i) for i in st))

    def __len__(self):
        return self.N

    def __getitem__(self, j):
        if not 0 <= j < self.N:
            raise IndexError(j)
        got = self._cache.get(j)
        if got is None:
            if self.r == 1:
                got = tuple(range(self.ell))
            else:
                rng = np.random.Generator(np.random.PCG64([self.seed, j]))
                draws = rng.integers(0, self.r, size=self.ell)
                got = tuple(int(i) for i in np.flatnonzero(draws == 0))
            self._cache[j] = got
        return got

    def bits(self, j):
        b = self._bits.get(j)
        if b is None:
            b = 0
            for i in self[j]:
                b |= 1 << i
            self._bits[j] = b
        return b

    @property
    def sets(self):
        return [self[j] for j in range(self.N)]

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.ell} {self.r} {self.N} {self.s} {self.xi} {self.seed}\n")
            for st in self.sets:
                fh.write(" ".join(map(str, st)) + "\n")

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            head = fh.readline().split()
            if len(head) != 6:
                raise DesignError("header must be: ell r N s xi seed")
            ell, r, N, s = (int(x) for x in head[:4])
            xi, seed = Fraction(head[4]), int(head[5])
            sets = [tuple(int(x) for x in line.split()) for line in fh]
        while sets and not sets[-1] and len(sets) > N:
            sets.pop()
        if len(sets) != N:
            raise DesignError(f"expected {N} sets, found {len(sets)}")
        for st in sets:
            if list(st) != sorted(set(st)) or any(not 0 <= i < ell for i in st):
                raise DesignError("indices must be sorted, distinct and below ell")
        return cls(ell, r, N, seed=seed, s=s, xi=xi, sets=sets)


def gen_index_list(ell, r, N, seed=0, s=2, xi=Fraction(1, 8)):
    if r < 2 and r != 1:
        raise DesignError("r must be at least 1")
    if ell & (ell - 1):
        raise DesignError("ell must be a power of two")
    return DesignList(ell, r, N, seed=seed, s=s, xi=xi)


def design_length(r, N, e=16, s=None):
    """Smallest power of two >= e*r^3*log2(N), or e*s*r^(s+1)*log2(N) for sets."""
    base = e * r ** 3 if s is None else e * s * r ** (s + 1)
    need = base * math.log2(max(N, 2))
    ell = 1
    while ell < need:
        ell <<= 1
    return ell


def verify_item1(dl, depth=3, xi=None):
    """Check every t-tuple (t <= depth) of distinct items against ell/r^t (1 +- xi).

    Returns None when all pass, else ``(tuple_of_indices, count, expected)``.
    """
    xi = dl.xi if xi is None else Fraction(xi)
    lo, hi = 1 - xi, 1 + xi
    for t in range(1, depth + 1):
        expected = Fraction(dl.ell, dl.r ** t)
        for T in combinations(range(dl.N), t):
            b = dl.bits(T[0])
            for j in T[1:]:
                b &= dl.bits(j)
            cnt = b.bit_count()
            if not lo * expected <= cnt <= hi * expected:
                dl.status[f"item1@{depth}"] = False
                return (T, cnt, expected)
    dl.status[f"item1@{depth}"] = True
    return None


def _subsets_of_size(bits, size):
    idx = [i for i in range(bits.bit_length()) if bits >> i & 1]
    for combo in combinations(idx, size):
        m = 0
        for i in combo:
            m |= 1 << i
        yield m


def _max_disjoint_packing(cands):
    """Largest number of pairwise disjoint frozensets in ``cands`` (exhaustive)."""
    cands = sorted(cands, key=sorted)
    best = 0

    def go(i, used, count):
        nonlocal best
        if count + (len(cands) - i) <= best:
            return
        if i == len(cands):
            best = max(best, count)
            return
        c = cands[i]
        if not (c & used):
            go(i + 1, used | c, count + 1)
        go(i + 1, used, count)

    go(0, frozenset(), 0)
    return best


def verify_item2_small(dl, b=8, xi=None):
    """Exhaustive second-item check in the tiny regime (ell <= 20, N <= 12).

    Pair lists (s == 2): for each item I and each I' of size floor(#I/4), count
    items J != I with #(I' & J) >= (1/2 - 3 xi) #(I & J); the count must stay
    within b*r.  Set lists (s > 2): I' has size floor(#I/(2s)), candidates are
    (s-1)-selections avoiding I with #(I' & I[T]) >= ((1 - xi)/s) #(I & I[T]),
    and the largest pairwise disjoint family must stay within b*s*r^(s-1).

    Returns None or ``(item, I_prime_indices, count, bound)``.
    """
    if dl.ell > 20 or dl.N > 12:
        raise DesignError("exhaustive item-2 check needs ell <= 20 and N <= 12")
    xi = dl.xi if xi is None else Fraction(xi)
    s = dl.s
    worst = 0
    for i in range(dl.N):
        I = dl.bits(i)
        others = [j for j in range(dl.N) if j != i]
        if s == 2:
            size = I.bit_count() // 4
            bound = b * dl.r
            thr = Fraction(1, 2) - 3 * xi
            for Ip in _subsets_of_size(I, size):
                cnt = sum(
                    1 for j in others
                    if (Ip & dl.bits(j)).bit_count() >= thr * (I & dl.bits(j)).bit_count()
                )
                worst = max(worst, cnt)
                if cnt > bound:
                    dl.status["item2"] = False
                    return (i, _indices(Ip), cnt, bound)
        else:
            size = I.bit_count() // (2 * s)
            bound = b * s * dl.r ** (s - 1)
            thr = (1 - xi) / s
            sels = []
            for T in combinations(others, s - 1):
                inter = I
                for j in T:
                    inter &= dl.bits(j)
                sels.append((frozenset(T), inter))
            for Ip in _subsets_of_size(I, size):
                good = [T for T, inter in sels if (Ip & inter).bit_count() >= thr * inter.bit_count()]
                cnt = _max_disjoint_packing(good)
                worst = max(worst, cnt)
                if cnt > bound:
                    dl.status["item2"] = False
                    return (i, _indices(Ip), cnt, bound)
    dl.status["item2"] = True
    dl.status["item2_worst"] = worst
    return None


def _indices(bits):
    return tuple(i for i in range(bits.bit_length()) if bits >> i & 1)


def runtime_item2_monitor(events, r, s=2, b=8, xi=Fraction(1, 8)):
    """Check the realised blame witnesses recorded by a block strategy.

    ``events`` maps a region id to a dict with ``I`` (its index set as a
    bitmask of blocks), ``full`` (blocks full at the end, bitmask) and
    ``partners`` (one bitmask per blame: the partner region's index set, or
    the joint intersection of the partners for sets).  A partner qualifies
    when the realised full blocks cover the required share of its overlap.
    Returns ``("ok", worst)`` or ``("falsification", region, count, bound)``.
    """
    xi = Fraction(xi)
    if s == 2:
        bound, thr = b * r, Fraction(1, 2) - 3 * xi
    else:
        bound, thr = b * s * r ** (s - 1), (1 - xi) / s
    worst = 0
    for rid, ev in sorted(events.items(), key=lambda kv: repr(kv[0])):
        I, full = ev["I"], ev["full"]
        cnt = sum(
            1 for J in ev["partners"]
            if (full & J).bit_count() >= thr * (I & J).bit_count()
        )
        worst = max(worst, cnt)
        if cnt > bound:
            return ("falsification", rid, cnt, bound)
    return ("ok", worst)


# ---------------------------------------------------------------- planes

def is_prime(q):
    if q < 2:
        return False
    return all(q % p for p in range(2, math.isqrt(q) + 1))


def _normalized_triples(q):
    out = []
    for x in range(q):
        for y in range(q):
            for z in range(q):
                v = (x, y, z)
                first = next((c for c in v if c), 0)
                if first == 1:
                    out.append(v)
    return out


class ProjectivePlane:
    """Points and lines of PG(2, q) for prime q, as normalised triples."""

    def __init__(self, q):
        if not is_prime(q):
            raise DesignError(f"q must be prime, got {q}")
        self.q = q
        self.points = _normalized_triples(q)
        self.lines = _normalized_triples(q)
        self.incidence = [
            frozenset(
                pi for pi, p in enumerate(self.points)
                if (L[0] * p[0] + L[1] * p[1] + L[2] * p[2]) % q == 0
            )
            for L in self.lines
        ]
        bad = check_plane(self)
        if bad:
            raise DesignError(f"plane property failed: {bad}")

    def incidences(self):
        return [(li, pi) for li, pts in enumerate(self.incidence) for pi in sorted(pts)]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["line", "point"])
            w.writerows(self.incidences())


def check_plane(p):
    """Return the first failing property name, or None."""
    q = p.q
    n = q * q + q + 1
    return check_incidence(q, len(p.points), p.incidence, n)


def check_incidence(q, npoints, lines, n=None):
    n = q * q + q + 1 if n is None else n
    if npoints != n:
        return "point-count"
    if len(lines) != n:
        return "line-count"
    if any(len(L) != q + 1 for L in lines):
        return "points-per-line"
    per_point = [0] * npoints
    for L in lines:
        for pt in L:
            per_point[pt] += 1
    if any(c != q + 1 for c in per_point):
        return "lines-per-point"
    for a, b in combinations(lines, 2):
        if len(a & b) != 1:
            return "pairwise-intersection"
    return None


def projective_plane(q):
    return ProjectivePlane(q)


def read_plane_csv(path):
    """Load an incidence CSV and return (q, npoints, lines) for re-checking."""
    lines = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        head = next(rd)
        if [h.strip() for h in head] != ["line", "point"]:
            raise DesignError("expected header line,point")
        for row in rd:
            if not row:
                continue
            li, pi = int(row[0]), int(row[1])
            lines.setdefault(li, set()).add(pi)
    n = len(lines)
    pts = {pi for L in lines.values() for pi in L}
    q = 1
    while q * q + q + 1 < n:
        q += 1
    if q * q + q + 1 != n or sorted(lines) != list(range(n)) or sorted(pts) != list(range(len(pts))):
        raise DesignError("incidence list is not indexed 0..n-1 for a plane size")
    return q, len(pts), [frozenset(lines[i]) for i in range(n)]


def line_label_bound(p):
    """Distinct labels for all lines force one label of length >= floor(log2 q^2).

    Returns ``(bound, witness)`` where the witness records that fewer strings
    are shorter than ``bound`` than there are lines.
    """
    nlines = len(p.lines)
    bound = (p.q * p.q).bit_length() - 1
    shorter = (1 << bound) - 1
    if not shorter < nlines:
        raise DesignError("counting witness failed")
    forced = 0
    while (1 << (forced + 1)) - 1 < nlines:
        forced += 1
    witness = {"lines": nlines, "strings_shorter_than_bound": shorter, "forced_length": forced}
    return bound, witness


# ---------------------------------------------------------------- triangle

def triangle_set(n):
    """Strings y (as ints, bit i = position i) reachable from 0^n by changing the
    first k and the last n/2 - k positions, over all k."""
    if n % 2:
        raise DesignError("n must be even")
    h = n // 2
    out = set()
    for k in range(h + 1):
        tail = h - k
        for a in range(1 << k):
            for b in range(1 << tail):
                out.add(a | (b << (n - tail)))
    return out


def triangle_counterexample(n):
    if n > 24:
        raise DesignError("n too large for exact counting")
    cnt = len(triangle_set(n))
    return cnt, Fraction(cnt, 1 << (n // 2))
