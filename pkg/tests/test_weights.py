from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from wdim.weights import (WeightError, auxiliary_weights, check_aux, delta0_bound, delta_admissible,
                          final_lower_bound, rynne_dimension, validate_weights)


@st.composite
def weight_vectors(draw, dims=(1, 2, 3)):
    d = draw(st.sampled_from(dims))
    parts = sorted(draw(st.lists(st.integers(1, 20), min_size=d, max_size=d)))
    total = sum(parts)
    return tuple(F(p, total) for p in parts)


taus = st.fractions(min_value=F(11, 10), max_value=6, max_denominator=12).filter(lambda t: t > 1)


def test_validate_weights():
    assert validate_weights(["1/3", "2/3"]).d == 2
    for bad in ([F(2, 3), F(1, 3)], [F(1, 2), F(1, 3)], [], [0, 1]):
        with pytest.raises(WeightError):
            validate_weights(bad)


def test_rynne_frozen_values():
    # hand-evaluated per-k values
    r = rynne_dimension([1], 3)
    assert r.value == F(1, 2) and r.per_k_values == (F(1, 2),)
    r = rynne_dimension([F(1, 2), F(1, 2)], 2)
    assert r.value == F(3, 2) and r.argmin_k == 1
    r = rynne_dimension([F(1, 3), F(2, 3)], 3)
    assert r.per_k_values == (F(3, 2), F(4, 3)) and r.argmin_k == 2


@given(weight_vectors(), taus)
def test_rynne_between_zero_and_d(w, tau):
    v = rynne_dimension(w, tau).value
    assert 0 < v <= len(w)
    # with equal weights every k gives (d+1)/(1+tau/d)
    if len(set(w)) == 1:
        assert v == F(len(w) + 1) / (1 + tau / len(w))


def test_auxiliary_hand_example():
    aux = auxiliary_weights([F(1, 3), F(2, 3)], F(3, 2), F(1, 20))
    assert aux.K == 1 and aux.wtilde == (F(17, 40), F(23, 40))
    aux = auxiliary_weights([F(1, 2), F(1, 2)], 2, F(1, 10))
    assert aux.K == 0 and aux.wtilde == (F(1, 2), F(1, 2))


def test_inadmissible_delta_rejected():
    w, tau = [F(1, 2), F(1, 2)], F(2)
    d0 = delta0_bound(w, tau)
    with pytest.raises(WeightError):
        auxiliary_weights(w, tau, d0 + F(1, 10**6))
    with pytest.raises(WeightError):
        auxiliary_weights(w, tau, 0)
    with pytest.raises(WeightError):
        rynne_dimension(w, 1)


@settings(max_examples=150)
@given(weight_vectors(), taus, st.fractions(min_value=F(1, 1000), max_value=1, max_denominator=1000))
def test_aux_properties(w, tau, t):
    d0 = delta0_bound(w, tau)
    assert delta_admissible(w, tau, d0)
    delta = d0 * t
    aux = auxiliary_weights(w, tau, delta)
    assert check_aux(w, tau, aux) == []
    assert sum(aux.wtilde) == 1


@settings(max_examples=100)
@given(weight_vectors(), taus, st.fractions(min_value=F(1, 1000), max_value=1, max_denominator=1000))
def test_final_bound_close_to_rynne(w, tau, t):
    delta = delta0_bound(w, tau) * t
    v, (h, k), _ = final_lower_bound(w, tau, delta)
    r = rynne_dimension(w, tau).value
    assert abs(v - r) <= delta * (len(w) + tau)
    assert 1 <= h <= len(w) and 1 <= k <= len(w)
