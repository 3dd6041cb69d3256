from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cantor_games.dyadic import (
    IntervalSet, Overlap, addr_mask, complement, difference, eps_neighborhood,
    find_free_interval, format_dyadic, insert_disjoint, intersection,
    is_power_of_two, largest_interval_size, leftmost_free, mask_from_set,
    mask_measure, mask_nu_exponent, measure, neighborhood_mask, parse_dyadic,
    set_from_mask, size_exponent, union,
)

D = 5


# slot-set oracle: an interval set at depth D is just the set of slots it covers
def slots(a):
    w = 1 << (D - len(a))
    lo = (int(a, 2) if a else 0) * w
    return set(range(lo, lo + w))


def slots_of(s):
    out = set()
    for a in s.addresses:
        out |= slots(a)
    return out


addresses = st.integers(0, D).flatmap(
    lambda k: st.integers(0, (1 << k) - 1).map(lambda i: format(i, f"0{k}b") if k else ""))


@st.composite
def interval_sets(draw):
    s = IntervalSet()
    for a in draw(st.lists(addresses, max_size=6)):
        if not s.meets(a):
            s = insert_disjoint(s, a)
    return s


def test_format_parse_roundtrip():
    assert format_dyadic(Fraction(3, 8)) == "3/2^3"
    assert parse_dyadic("3/2^3") == Fraction(3, 8)
    assert parse_dyadic("1/4") == Fraction(1, 4)
    with pytest.raises(ValueError):
        parse_dyadic("1/3")


def test_powers_of_two():
    assert is_power_of_two(Fraction(1, 16))
    assert not is_power_of_two(Fraction(3, 16))
    assert size_exponent(Fraction(1, 16)) == 4
    with pytest.raises(ValueError):
        size_exponent(Fraction(3, 4))


def test_canonical_merges_siblings():
    s = IntervalSet(["00", "01", "1"])
    assert s.addresses == ("",)
    assert measure(IntervalSet(["0", "10"])) == Fraction(3, 4)


def test_insert_overlap_raises():
    s = IntervalSet(["01"])
    with pytest.raises(Overlap):
        insert_disjoint(s, "0")


def test_nu_example():
    s = IntervalSet(["01", "100", "1010"])
    assert largest_interval_size(s) == Fraction(1, 4)


@given(interval_sets(), interval_sets())
@settings(max_examples=200)
def test_set_algebra_matches_slots(a, b):
    assert slots_of(union(a, b)) == slots_of(a) | slots_of(b)
    assert slots_of(intersection(a, b)) == slots_of(a) & slots_of(b)
    assert slots_of(difference(a, b)) == slots_of(a) - slots_of(b)
    assert slots_of(complement(a)) == set(range(1 << D)) - slots_of(a)
    assert measure(a) == Fraction(len(slots_of(a)), 1 << D)


@given(interval_sets())
def test_canonical_form_is_unique(a):
    again = IntervalSet(sorted(set_from_mask(mask_from_set(a, D), D).addresses))
    assert again == a


@given(interval_sets())
def test_nu_matches_brute_force(a):
    best = Fraction(0)
    for k in range(D + 1):
        for i in range(1 << k):
            z = format(i, f"0{k}b") if k else ""
            if slots(z) <= slots_of(a):
                best = max(best, Fraction(1, 1 << k))
    assert largest_interval_size(a) == best
    e = mask_nu_exponent(mask_from_set(a, D), D)
    assert (Fraction(0) if e is None else Fraction(1, 1 << e)) == best


@given(interval_sets(), st.integers(0, D))
def test_leftmost_free_matches_scan(a, k):
    m = mask_from_set(a, D)
    want = None
    for i in range(1 << k):
        z = format(i, f"0{k}b") if k else ""
        if not slots(z) & slots_of(a):
            want = z
            break
    assert leftmost_free(m, k, D) == want
    assert find_free_interval([a], Fraction(1, 1 << k)) == want


@given(interval_sets(), st.integers(0, D))
def test_neighborhood_matches_scan(a, k):
    want = set()
    for i in range(1 << k):
        z = format(i, f"0{k}b") if k else ""
        if slots(z) & slots_of(a):
            want |= slots(z)
    m = neighborhood_mask(mask_from_set(a, D), D, k)
    assert {i for i in range(1 << D) if m >> i & 1} == want
    assert slots_of(eps_neighborhood(a, Fraction(1, 1 << k))) == want
    assert mask_measure(m, D) == Fraction(len(want), 1 << D)


def test_addr_mask_layout():
    assert addr_mask("1", 2) == 0b1100
    assert addr_mask("", 2) == 0b1111
