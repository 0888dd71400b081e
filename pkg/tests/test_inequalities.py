import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from cbdbell.errors import (
    InvalidCorrelationError,
    InvalidMarginalError,
    InvalidRankError,
    ShapeError,
    TableInvalidError,
)
from cbdbell.inequalities import (
    cbd_statistics,
    coupled_cycle_check,
    coupling_range,
    fixed_sign_vector,
    is_odd_sign_vector,
    marginal_delta,
    marginal_differences,
    max_coupling,
    maximizing_sign_vector,
    nci_check,
    odd_sign_vectors,
    s_odd,
    s_odd_bruteforce,
    sign_matrix,
    signed_sum,
)
from cbdbell.model import ContextCounts, ExpectationTable, cyclic_spec, eprb_spec, table_from_expectations

from oracles import brute_s_odd, coupling_extremes_lp, odd_signs

R = math.sqrt(2) / 2
SINGLET = (-R, -R, -R, R)

corr = st.floats(-1, 1, allow_nan=False)
corr_vec = st.integers(3, 9).flatmap(lambda n: st.lists(corr, min_size=n, max_size=n))
exact_corr_vec = st.integers(3, 8).flatmap(
    lambda n: st.lists(st.fractions(-1, 1, max_denominator=50), min_size=n, max_size=n)
)


def test_odd_sign_vectors_n3():
    assert odd_sign_vectors(3) == [(-1, -1, -1), (-1, 1, 1), (1, -1, 1), (1, 1, -1)]


@pytest.mark.parametrize("n", range(3, 11))
def test_odd_sign_vectors_count_parity_order(n):
    vs = odd_sign_vectors(n)
    assert len(vs) == len(set(vs)) == 2 ** (n - 1)
    assert vs == sorted(vs)
    assert all(v.count(-1) % 2 == 1 for v in vs)
    assert set(vs) == set(odd_signs(n))


def test_n5_negatives():
    assert {v.count(-1) for v in odd_sign_vectors(5)} == {1, 3, 5}


def test_rank_too_small():
    with pytest.raises(InvalidRankError):
        odd_sign_vectors(2)
    with pytest.raises(InvalidRankError):
        s_odd([0.1, 0.2])


def test_s_odd_examples():
    assert s_odd([0, 0, 0, 0]) == 0
    assert s_odd([1, 1, 1, -1]) == brute_s_odd([1, 1, 1, -1]) == 4
    assert s_odd(SINGLET) == pytest.approx(brute_s_odd(SINGLET), abs=1e-15)
    assert s_odd(SINGLET) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_s_odd_rejects_out_of_range():
    with pytest.raises(InvalidCorrelationError):
        s_odd([0, 0, 1.5])


@given(corr_vec)
def test_closed_form_matches_brute_force(c):
    assert abs(s_odd(c) - brute_s_odd(c)) <= 1e-12
    assert abs(s_odd_bruteforce(c) - brute_s_odd(c)) <= 1e-12


@given(exact_corr_vec)
def test_closed_form_exact_on_fractions(c):
    assert s_odd(c) == brute_s_odd(c)
    g = maximizing_sign_vector(c)
    assert is_odd_sign_vector(g)
    assert signed_sum(g, c) == s_odd(c)


def test_nci_examples():
    r = nci_check([1, 1, 1, 1], 4)
    assert (r.s_odd, r.bound, r.violated) == (2, 2, False)
    r = nci_check(SINGLET, 4)
    assert r.violated and r.margin == pytest.approx(2 * math.sqrt(2) - 2, abs=1e-12)
    assert abs(r.margin - 0.8284) < 1e-4
    r = nci_check([1] * 5, 5)
    assert (r.s_odd, r.bound, r.violated) == (3, 3, False)


def test_nci_shape_mismatch():
    with pytest.raises(ShapeError):
        nci_check([0, 0, 0], 4)


def test_coupling_examples():
    assert coupling_range(0, 0) == coupling_range(0.0, 0.0)
    assert (coupling_range(0, 0).lo, coupling_range(0, 0).hi) == (-1, 1)
    assert (coupling_range(1, 1).lo, coupling_range(1, 1).hi) == (1, 1)
    lp_lo, lp_hi = coupling_extremes_lp(0.5, -0.5)
    r = coupling_range(0.5, -0.5)
    assert (r.lo, r.hi) == pytest.approx((lp_lo, lp_hi), abs=1e-9)
    assert (r.lo, r.hi) == (-1, 0)


def test_max_coupling_examples():
    assert max_coupling(0.3, 0.3) == 1
    assert max_coupling(0.5, -0.5) == pytest.approx(coupling_extremes_lp(0.5, -0.5)[1], abs=1e-9) == 0
    assert max_coupling(1, -1) == pytest.approx(coupling_extremes_lp(1, -1)[1], abs=1e-9) == -1


def test_coupling_invalid_marginal():
    with pytest.raises(InvalidMarginalError):
        coupling_range(1.01, 0)
    with pytest.raises(InvalidMarginalError):
        max_coupling(0, -2)


@settings(max_examples=60, deadline=None)
@given(corr, corr)
def test_coupling_range_matches_lp(m_a, m_b):
    r = coupling_range(m_a, m_b)
    lo, hi = coupling_extremes_lp(m_a, m_b)
    assert r.lo == pytest.approx(lo, abs=1e-9)
    assert r.hi == pytest.approx(hi, abs=1e-9)
    assert max_coupling(m_a, m_b) == r.hi


def test_coupling_range_never_empty_on_grid():
    grid = [Fraction(k, 100) for k in range(-100, 101)]
    for a in grid:
        for b in grid:
            r = coupling_range(a, b)
            assert r.lo <= r.hi


def _eprb_with_means(means, products=(0.0, 0.0, 0.0, 0.0)):
    return table_from_expectations(eprb_spec(), products, means, N=10_000)


def test_marginal_delta_zero_when_all_means_zero():
    assert marginal_delta(_eprb_with_means({})) == 0


def test_marginal_delta_single_term():
    # A1 lives in contexts 11 and 12 (first position in both)
    t = _eprb_with_means({"11": (0.10, 0.0), "12": (-0.02, 0.0)})
    assert marginal_delta(t) == pytest.approx(0.12, abs=1e-12)
    diffs = dict(marginal_differences(t))
    assert diffs["A1"] == Fraction(12, 100)
    assert sum(v for k, v in diffs.items() if k != "A1") == 0


def test_marginal_delta_pairs_by_content():
    # B1 is second in contexts 21 and 11; A2 is first in 21 and 22
    t = _eprb_with_means({"21": (0.3, 0.2), "11": (0.0, -0.2), "22": (-0.1, 0.0)})
    diffs = dict(marginal_differences(t))
    assert diffs == {"A2": Fraction(4, 10), "B1": Fraction(4, 10), "A1": 0, "B2": 0}
    assert marginal_delta(t) == pytest.approx(0.8)


def test_marginal_delta_invalid_table():
    with pytest.raises(TableInvalidError):
        marginal_delta(ExpectationTable(eprb_spec(), ()))


def test_cbd_statistics_singlet():
    t = table_from_expectations(eprb_spec(), SINGLET, N=10**8)
    s = cbd_statistics(t)
    assert s.delta == 0
    assert s.s_cbd == s.s_printed == s.s_odd
    assert s.s_odd == pytest.approx(2 * math.sqrt(2), abs=1e-7)
    assert s.contextual and s.cycle_violated
    assert (s.bound, s.trivial_bound) == (2, 4)


def test_cbd_statistics_scaled_pattern():
    t = table_from_expectations(eprb_spec(), [0.6, 0.6, 0.6, -0.6], N=1000)
    s = cbd_statistics(t)
    assert s.s_odd == pytest.approx(brute_s_odd([0.6, 0.6, 0.6, -0.6]))
    assert s.s_odd == pytest.approx(2.4) and s.delta == 0
    assert s.contextual
    assert s.margin == pytest.approx(0.4)
    assert s.chsh_s == pytest.approx(2.4)
    assert s.gamma == (1, 1, 1, -1)


def test_cbd_statistics_variants_differ_with_delta():
    t = _eprb_with_means({"11": (0.3, 0.0)}, products=(0.55, 0.55, 0.55, -0.55))
    s = cbd_statistics(t)
    assert s.delta == pytest.approx(0.3)
    assert s.s_cbd == pytest.approx(1.9) and not s.contextual
    assert s.s_printed == pytest.approx(2.5)
    assert cbd_statistics(t, "s_printed").contextual


def test_cbd_statistics_tie_is_not_violation():
    t = table_from_expectations(eprb_spec(), [0.5, 0.5, 0.5, -0.5], N=1000)
    s = cbd_statistics(t)
    assert s.s_odd == 2 and not s.cycle_violated and not s.contextual


def test_chsh_sign_pattern_is_e11_e12_e21_minus_e22():
    spec = eprb_spec()
    g = dict(zip(spec.context_ids, fixed_sign_vector(4)))
    assert g == {"11": 1, "12": 1, "21": 1, "22": -1}


def test_coupled_cycle_examples():
    r = coupled_cycle_check([1, 1, 1, -1], [1, 1, 1, 1])
    assert (r.max_lhs, r.bound, r.satisfied) == (8, 6, False)
    assert r.max_lhs == brute_s_odd([1, 1, 1, -1]) + 4
    r = coupled_cycle_check([0, 0, 0, 0], [1, 1, 1, 1])
    assert (r.max_lhs, r.satisfied) == (4, True)
    r = coupled_cycle_check([1, 1, 1, 1], [0, 0, 0, 0])
    assert (r.max_lhs, r.satisfied) == (2, True)


def test_coupled_cycle_shape_error():
    with pytest.raises(ShapeError):
        coupled_cycle_check([0, 0, 0], [1, 1])


def _random_table(data_draw, n):
    spec = cyclic_spec(n)
    counts = []
    for cid in spec.context_ids:
        counts.append(ContextCounts(cid, *data_draw(st.tuples(*[st.integers(0, 40)] * 4).filter(lambda c: sum(c) > 0))))
    return ExpectationTable(spec, tuple(counts))


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 6), st.data())
def test_coupled_cycle_consistency_with_cbd(n, data):
    t = _random_table(data.draw, n)
    s = cbd_statistics(t)
    couplings = [max_coupling(m1, m2) for _, m1, m2 in t.content_means()]
    # the coupled cycle pairs the cross terms with the content couplings; both are exact here
    r = coupled_cycle_check(t.products(), couplings)
    assert r.satisfied == (not s.contextual)


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 6), st.data())
def test_statistics_invariants(n, data):
    t = _random_table(data.draw, n)
    s = cbd_statistics(t)
    assert abs(s.s_odd) <= n
    assert 0 <= s.delta <= 2 * n
    assert s.s_cbd <= s.s_odd <= s.s_printed


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 7), st.data())
def test_reduction_when_consistently_connected(n, data):
    spec = cyclic_spec(n)
    products = data.draw(st.lists(st.fractions(-1, 1, max_denominator=20), min_size=n, max_size=n))
    t = table_from_expectations(spec, [float(p) for p in products], N=2000)
    s = cbd_statistics(t)
    assert s.delta == 0
    assert s.s_cbd == s.s_printed == s.s_odd
    assert s.contextual == nci_check(t.products()).violated


@given(corr_vec)
def test_trivial_bound(c):
    n = len(c)
    m = np.array(list(__import__("itertools").product((-1, 1), repeat=n)))
    assert np.all(np.abs(m @ np.array(c)) <= n + 1e-12)


def test_sign_matrix_shape():
    m = sign_matrix(5)
    assert m.shape == (16, 5)
    assert np.all((m < 0).sum(axis=1) % 2 == 1)


@given(st.one_of(corr, st.sampled_from([1.0, -1.0])), corr)
def test_coupling_range_nonempty_for_floats(m_a, m_b):
    r = coupling_range(m_a, m_b)
    assert r.lo <= r.hi
    assert coupling_range(m_b, m_a) == r


def test_coupling_range_at_unit_marginal():
    r = coupling_range(1, 0.37)
    assert r.lo == r.hi == pytest.approx(0.37)
