from collections import Counter
from itertools import product

import pytest

from combinat import Sign
from errors import ParameterError
from finite_field import build_field
from weight_dist import (CodeFamily, CodeSpec, SpVariant, cell_profile, code_weight_counts, dual_distribution,
                         dual_weight, dual_weights_from_profile, predicted_zero_cells, profile_from_histogram,
                         weight_counts)


def brute_force_counts(t, histogram):
    """Weight distribution of {u in F_3^N : sum u_k beta_k = 0} by listing every word"""
    coordinates = [beta for beta, size in sorted(histogram.items()) for _ in range(size)]
    counts = Counter()
    for word in product(range(3), repeat=len(coordinates)):
        total = 0
        for u, beta in zip(word, coordinates):
            total = t.add(total, t.mul(u, beta))
        if total == 0:
            counts[sum(1 for u in word if u)] += 1
    return [counts.get(j, 0) for j in range(len(coordinates) + 1)]


def test_minus_profiles_over_f3(f3):
    assert cell_profile(CodeSpec('O', 'minus', 1, 3, 1), f3).sizes == (3, 0, 3)
    assert cell_profile(CodeSpec('O', 'minus', 1, 3, 2), f3).sizes == (3, 3, 0)
    assert cell_profile(CodeSpec('Sp', 'minus', 1, 3), f3).sizes == (0, 3, 3)


@pytest.mark.parametrize('i', [1, 2])
def test_plus_profile_mass(f3, i):
    profile = cell_profile(CodeSpec(CodeFamily.O, Sign.PLUS, 2, 3, i), f3)
    assert profile.mass == 1296
    assert profile.mass_ok


@pytest.mark.parametrize('sign, n, r', [(Sign.MINUS, 1, 2), (Sign.MINUS, 3, 1), (Sign.PLUS, 2, 2),
                                        (Sign.PLUS, 4, 1), (Sign.MINUS, 1, 3)])
def test_profiles_sum_to_code_length(sign, n, r):
    t = build_field(r)
    for family in (CodeFamily.O, CodeFamily.SP):
        for i in (1, 2):
            spec = CodeSpec(family, sign, n, t.q, i)
            assert cell_profile(spec, t).mass == spec.length


def test_printed_comparison_profile_reports_mass_mismatch(f3, caplog):
    spec = CodeSpec(CodeFamily.SP, Sign.PLUS, 2, 3, variant=SpVariant.PRINTED)
    profile = cell_profile(spec, f3)
    assert not profile.mass_ok
    assert profile.mass == 3 ** 4 * 8 * 80
    assert 'cell sizes sum to' in caplog.text
    with pytest.raises(ParameterError):
        dual_weight(spec, f3, 1)


def test_minus_variants_coincide(f9):
    consistent = cell_profile(CodeSpec('Sp', 'minus', 1, 9), f9)
    printed = cell_profile(CodeSpec('Sp', 'minus', 1, 9, variant='printed'), f9)
    assert consistent.sizes == printed.sizes


def test_weight_counts_small_cases(f3):
    assert code_weight_counts(CodeSpec('O', 'minus', 1, 3, 1), f3, 1).prefix == (1, 6)
    assert code_weight_counts(CodeSpec('Sp', 'minus', 1, 3), f3, 1)[1] == 0
    assert code_weight_counts(CodeSpec('O', 'plus', 2, 3, 1), f3, 0).prefix == (1,)


@pytest.mark.parametrize('i', [1, 2])
def test_weight_counts_against_listing(f3, i):
    profile = cell_profile(CodeSpec('O', 'minus', 1, 3, i), f3)
    expected = brute_force_counts(f3, profile.as_dict())
    assert list(weight_counts(profile, f3, 6).prefix) == expected
    assert sum(expected) == 243


def test_weight_counts_over_f9_against_listing(f9):
    histogram = {0: 1, 1: 2, 4: 1, 7: 2}
    profile = profile_from_histogram(f9, histogram)
    assert profile.length == 6
    assert list(weight_counts(profile, f9, 6).prefix) == brute_force_counts(f9, histogram)


def test_weight_counts_range(f3):
    profile = cell_profile(CodeSpec('O', 'minus', 1, 3, 1), f3)
    with pytest.raises(ParameterError):
        weight_counts(profile, f3, 13)


def test_dual_weights(f3):
    assert dual_weight(CodeSpec('O', 'minus', 1, 3, 1), f3, 1) == 3
    assert dual_weight(CodeSpec('O', 'plus', 2, 3, 1), f3, 1) == 1053
    assert dual_weight(CodeSpec('Sp', 'plus', 2, 3), f3, 1) == 486
    assert dual_distribution(CodeSpec('O', 'minus', 1, 3, 1), f3) == {0: 1, 3: 2}
    with pytest.raises(ParameterError):
        dual_weight(CodeSpec('O', 'minus', 1, 3, 1), f3, 0)


def test_dual_distribution_over_f9(f9):
    spec = CodeSpec('O', 'minus', 1, 9, 1)
    distribution = dual_distribution(spec, f9)
    assert sum(distribution.values()) == 9
    assert all(0 <= w <= 72 for w in distribution)


@pytest.mark.parametrize('family, sign, n, r', [('O', 'minus', 1, 2), ('O', 'plus', 2, 1), ('O', 'minus', 3, 1),
                                                ('Sp', 'minus', 1, 2), ('Sp', 'plus', 2, 2), ('O', 'plus', 2, 2)])
def test_dual_weights_agree_with_cell_sizes(family, sign, n, r):
    t = build_field(r)
    for i in (1, 2):
        spec = CodeSpec(family, sign, n, t.q, i)
        profile = cell_profile(spec, t)
        for a in t.nonzero():
            assert dual_weight(spec, t, a) == dual_weights_from_profile(profile, t, a)


def test_predicted_zero_cells(f3):
    assert predicted_zero_cells(CodeSpec('O', 'minus', 1, 3, 1), f3) == {1}
    assert predicted_zero_cells(CodeSpec('O', 'minus', 1, 3, 2), f3) == {2}
    assert predicted_zero_cells(CodeSpec('O', 'plus', 2, 3, 1), f3) == set()


@pytest.mark.parametrize('r', [1, 2, 3])
def test_predicted_zero_cells_match_profile(r):
    t = build_field(r)
    for i in (1, 2):
        spec = CodeSpec('O', 'minus', 1, t.q, i)
        sizes = cell_profile(spec, t).sizes
        assert predicted_zero_cells(spec, t) == {beta for beta, size in enumerate(sizes) if size == 0}


def test_code_spec_labels():
    assert CodeSpec('O', 'minus', 1, 3, 2).label() == 'C(DC_2^-(1,3))'
    assert CodeSpec('Sp', 'plus', 2, 9).label() == 'C(DC^+(2,9))[consistent]'
    with pytest.raises(ParameterError):
        CodeSpec('O', 'plus', 1, 3)


@pytest.mark.parametrize('sign, n', [(Sign.MINUS, 3), (Sign.MINUS, 5), (Sign.PLUS, 2), (Sign.PLUS, 4)])
@pytest.mark.parametrize('r', [1, 2, 3])
def test_every_cell_is_occupied_beyond_the_smallest_cases(sign, n, r):
    t = build_field(r)
    for i in (1, 2):
        spec = CodeSpec(CodeFamily.O, sign, n, t.q, i)
        assert all(size > 0 for size in cell_profile(spec, t).sizes)
        assert predicted_zero_cells(spec, t) == set()
