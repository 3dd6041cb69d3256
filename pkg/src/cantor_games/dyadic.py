"""Exact dyadic numbers and finite unions of intervals in Cantor space.

An address is a bit string ``z`` standing for the interval ``[z]`` of all
infinite extensions of ``z``; its measure is ``2**-len(z)``.  The empty
string is the whole space.  An :class:`IntervalSet` is a canonical finite
disjoint union of such intervals.

Two representations live here.  ``IntervalSet`` is the exact, resolution-free
value type.  The ``mask_*`` helpers encode sets as Python integers at a fixed
depth ``D`` (bit ``i`` is the slot of address ``format(i, '0Db')``), which is
what the game engine uses on its hot paths.
"""

from bisect import bisect_left
from fractions import Fraction
import re


class Overlap(ValueError):
    """Raised when an interval meets a set it was supposed to avoid."""


# ---------------------------------------------------------------- dyadics

def dyadic(x):
    """Coerce ``x`` to a Fraction and check its denominator is a power of two."""
    q = x if isinstance(x, Fraction) else Fraction(x)
    den = q.denominator
    if den & (den - 1):
        raise ValueError(f"not dyadic: {x}")
    if q < 0:
        raise ValueError(f"negative dyadic: {x}")
    return q


def is_power_of_two(q):
    q = Fraction(q)
    if q <= 0:
        return False
    n, d = q.numerator, q.denominator
    return (n & (n - 1)) == 0 and (d & (d - 1)) == 0


def size_exponent(q):
    """Return k with q == 2**-k for a power of two q <= 1."""
    q = Fraction(q)
    if not is_power_of_two(q) or q > 1:
        raise ValueError(f"not a power of two in (0, 1]: {q}")
    return q.denominator.bit_length() - 1


def format_dyadic(q):
    """Serialize as ``k/2^m`` in lowest terms."""
    q = dyadic(q)
    return f"{q.numerator}/2^{q.denominator.bit_length() - 1}"


_DYADIC_RE = re.compile(r"^\s*(\d+)\s*/\s*2\s*\^\s*(\d+)\s*$")


def parse_dyadic(text):
    """Parse ``k/2^m``; plain integers and ``a/b`` fractions are accepted too."""
    text = str(text).strip()
    m = _DYADIC_RE.match(text)
    if m:
        return dyadic(Fraction(int(m.group(1)), 1 << int(m.group(2))))
    return dyadic(Fraction(text))


# ---------------------------------------------------------------- addresses

def check_address(a):
    if not isinstance(a, str) or a.strip("01"):
        raise ValueError(f"bad address: {a!r}")
    return a


def address_size(a):
    return Fraction(1, 1 << len(a))


def is_prefix(p, a):
    return a.startswith(p)


def _covered(a, members):
    """True if some prefix of ``a`` (``a`` included) is in ``members``."""
    for i in range(len(a) + 1):
        if a[:i] in members:
            return True
    return False


def _canonical(addrs):
    """Merge siblings until none remain.  Input must be pairwise disjoint."""
    pool = set(addrs)
    stack = list(pool)
    while stack:
        a = stack.pop()
        if not a or a not in pool:
            continue
        sib = a[:-1] + ("1" if a[-1] == "0" else "0")
        if sib in pool:
            pool.discard(a)
            pool.discard(sib)
            pool.add(a[:-1])
            stack.append(a[:-1])
    return tuple(sorted(pool))


class IntervalSet:
    """Immutable canonical disjoint union of dyadic intervals."""

    __slots__ = ("addresses", "_members")

    def __init__(self, addresses=()):
        addrs = [check_address(a) for a in addresses]
        members = set(addrs)
        ordered = sorted(members)
        for i, a in enumerate(ordered):
            if i + 1 < len(ordered) and ordered[i + 1].startswith(a):
                raise Overlap(f"{a!r} overlaps {ordered[i + 1]!r}")
        canon = _canonical(ordered)
        self.addresses = canon
        self._members = frozenset(canon)

    @classmethod
    def whole(cls):
        return cls([""])

    @classmethod
    def _trusted(cls, canon):
        obj = cls.__new__(cls)
        obj.addresses = canon
        obj._members = frozenset(canon)
        return obj

    def __iter__(self):
        return iter(self.addresses)

    def __len__(self):
        return len(self.addresses)

    def __bool__(self):
        return bool(self.addresses)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.addresses == other.addresses

    def __hash__(self):
        return hash(self.addresses)

    def __repr__(self):
        inner = ",".join(f"[{a}]" for a in self.addresses)
        return "{" + inner + "}"

    def covers(self, a):
        """True if ``[a]`` lies inside this set."""
        return _covered(a, self._members)

    def meets(self, a):
        """True if ``[a]`` intersects this set."""
        if _covered(a, self._members):
            return True
        i = bisect_left(self.addresses, a)
        return i < len(self.addresses) and self.addresses[i].startswith(a)

    def inside(self, a):
        """Members lying strictly inside ``[a]`` (proper extensions of ``a``)."""
        out = []
        i = bisect_left(self.addresses, a)
        while i < len(self.addresses) and self.addresses[i].startswith(a):
            if self.addresses[i] != a:
                out.append(self.addresses[i])
            i += 1
        return out

    def max_depth(self):
        return max((len(a) for a in self.addresses), default=0)


def measure(s):
    return sum((Fraction(1, 1 << len(a)) for a in s.addresses), Fraction(0))


def insert_disjoint(s, a):
    check_address(a)
    if s.meets(a):
        raise Overlap(f"[{a}] meets {s!r}")
    return IntervalSet._trusted(_canonical(s.addresses + (a,)))


def _subtract_one(a, other):
    """Pieces of ``[a]`` outside ``other`` (``other`` does not cover ``a``)."""
    inner = other.inside(a)
    if not inner:
        return [a]
    out = []
    stack = [a]
    while stack:
        z = stack.pop()
        if z in other._members:
            continue
        if not other.inside(z):
            out.append(z)
        else:
            stack.append(z + "1")
            stack.append(z + "0")
    return out


def union(a, b):
    pieces = list(a.addresses)
    for z in b.addresses:
        if not a.covers(z):
            pieces.extend(_subtract_one(z, a))
    return IntervalSet._trusted(_canonical(pieces))


def intersection(a, b):
    out = {z for z in a.addresses if b.covers(z)}
    out.update(z for z in b.addresses if a.covers(z))
    return IntervalSet._trusted(_canonical(out))


def difference(a, b):
    out = []
    for z in a.addresses:
        if not b.covers(z):
            out.extend(_subtract_one(z, b))
    return IntervalSet._trusted(_canonical(out))


def complement(s):
    return difference(IntervalSet.whole(), s)


def largest_interval_size(s):
    """nu(s): size of the largest dyadic interval contained in ``s``.

    For a canonical set this is the largest member: a dyadic interval fully
    covered by several members would force a sibling pair among them.
    """
    if not s.addresses:
        return Fraction(0)
    return Fraction(1, 1 << min(len(a) for a in s.addresses))


def max_free_interval_size(occupied):
    return largest_interval_size(complement(occupied))


def find_free_interval(obstacles, size, within=None):
    """Leftmost address of the given size inside ``within`` avoiding all obstacles."""
    k = size_exponent(size)
    free = within if within is not None else IntervalSet.whole()
    for ob in obstacles:
        free = difference(free, ob)
    for z in free.addresses:  # sorted order is left-to-right order
        if len(z) <= k:
            return z + "0" * (k - len(z))
    return None


def eps_neighborhood(s, eps):
    k = size_exponent(eps)
    return IntervalSet._trusted(_canonical({z[:k] for z in s.addresses}))


# ---------------------------------------------------------------- bit masks

_PATTERNS = {}


def full_mask(depth):
    return (1 << (1 << depth)) - 1


def aligned_pattern(depth, j):
    """Bits at every multiple of ``2**j`` inside ``2**depth`` slots."""
    key = (depth, j)
    p = _PATTERNS.get(key)
    if p is None:
        total, step = 1 << depth, 1 << j
        p, span = 1, step
        while span < total:
            p |= p << span
            span <<= 1
        _PATTERNS[key] = p
    return p


def addr_mask(a, depth):
    k = len(a)
    if k > depth:
        raise ValueError(f"address {a!r} finer than depth {depth}")
    width = 1 << (depth - k)
    lo = (int(a, 2) if a else 0) * width
    return ((1 << width) - 1) << lo


def mask_from_set(s, depth):
    m = 0
    for a in s.addresses:
        m |= addr_mask(a, depth)
    return m


def set_from_mask(mask, depth):
    """Decompose a mask into maximal aligned blocks (already canonical)."""
    out = []
    pos, total = 0, 1 << depth
    while mask >> pos:
        low = (mask >> pos) & -(mask >> pos)
        pos += low.bit_length() - 1
        j = (pos & -pos).bit_length() - 1 if pos else depth
        while j >= 0:
            w = 1 << j
            if pos + w <= total and ((mask >> pos) & ((1 << w) - 1)) == (1 << w) - 1:
                break
            j -= 1
        k = depth - j
        out.append(format(pos >> j, f"0{k}b") if k else "")
        pos += 1 << j
    return IntervalSet._trusted(tuple(out))


def _fold(free, depth, j):
    """Keep bit ``p`` (a multiple of ``2**j``) iff slots ``p..p+2**j-1`` are all set."""
    f = free
    for t in range(j):
        f &= f >> (1 << t)
    return f & aligned_pattern(depth, j) if j else f


def mask_nu_exponent(mask, depth):
    """Exponent k of the largest aligned all-ones block (size 2**-k), or None."""
    if not mask:
        return None
    f = mask
    best = 0
    for j in range(1, depth + 1):
        f &= f >> (1 << (j - 1))
        f &= aligned_pattern(depth, j)
        if not f:
            break
        best = j
    return depth - best


def leftmost_free(blocked, k, depth, within=None):
    """Leftmost size-2**-k address whose slots avoid ``blocked`` and lie in ``within``."""
    j = depth - k
    free = ~blocked & (full_mask(depth) if within is None else within)
    f = _fold(free, depth, j)
    if not f:
        return None
    pos = (f & -f).bit_length() - 1
    return format(pos >> j, f"0{k}b") if k else ""


def mask_measure(mask, depth):
    return Fraction(mask.bit_count(), 1 << depth)


def neighborhood_mask(mask, depth, k):
    """Slots of every size-2**-k interval that meets ``mask``."""
    j = depth - k
    if j == 0:
        return mask
    f = mask
    for t in range(j):
        f |= f >> (1 << t)
    f &= aligned_pattern(depth, j)
    g = f
    for t in range(j):
        g |= g << (1 << t)
    return g
