"""Weight vectors, Rynne's dimension formula and the auxiliary weights."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import Vec, frac, vec


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class WeightVector:
    w: Vec

    @property
    def d(self) -> int:
        return len(self.w)

    def __iter__(self):
        return iter(self.w)

    def __getitem__(self, i):
        return self.w[i]

    def __len__(self):
        return len(self.w)


def validate_weights(raw: Sequence) -> WeightVector:
    w = vec(raw)
    if not w:
        raise WeightError("empty weight vector")
    for wi in w:
        if not 0 < wi <= 1 or (wi == 1 and len(w) > 1):
            raise WeightError(f"component {wi} outside (0,1)")
    if any(a > b for a, b in zip(w, w[1:])):
        raise WeightError("weights not ascending")
    if sum(w) != 1:
        raise WeightError(f"sum {sum(w)} != 1")
    return WeightVector(w)


def _as_weights(w) -> WeightVector:
    return w if isinstance(w, WeightVector) else validate_weights(w)


def _check_tau(tau) -> Fraction:
    tau = frac(tau)
    if tau <= 1:
        raise WeightError("tau must exceed 1")
    return tau


@dataclass(frozen=True)
class DimensionReport:
    value: Fraction
    argmin_k: int
    per_k_values: Vec


def rynne_dimension(w, tau) -> DimensionReport:
    """min over k of (d+1+sum_{i<=k}(tau w_k - tau w_i))/(1+tau w_k)."""
    w, tau = _as_weights(w), _check_tau(tau)
    d = w.d
    per = []
    for k in range(1, d + 1):
        twk = tau * w[k - 1]
        s = sum((twk - tau * w[i]) for i in range(k))
        per.append((d + 1 + s) / (1 + twk))
    value = min(per)
    return DimensionReport(value, per.index(value) + 1, tuple(per))


def shifted(tau: Fraction, wi: Fraction, delta: Fraction) -> Fraction:
    """tau w_i - delta (1 + tau w_i)."""
    return tau * wi - delta * (1 + tau * wi)


def delta_sup(w, tau) -> Fraction:
    """Supremum of admissible delta: every constraint is linear in delta."""
    w, tau = _as_weights(w), _check_tau(tau)
    d = w.d
    tw1 = tau * w[0]
    bounds = [(tau - 1) / (tau + d), tw1 / (1 + tw1)]
    if tw1 > Fraction(1, d):
        bounds.append((tw1 - Fraction(1, d)) / (1 + tw1))
    return min(bounds)


def delta_admissible(w, tau, delta) -> bool:
    """Whether delta satisfies every constraint of the auxiliary-weight construction."""
    w, tau, delta = _as_weights(w), _check_tau(tau), frac(delta)
    d = w.d
    if not 0 < delta < (tau - 1) / (tau + d):
        return False
    sh = [shifted(tau, wi, delta) for wi in w]
    if sh[0] <= 0 or any(a > b for a, b in zip(sh, sh[1:])):
        return False
    if tau * w[0] > Fraction(1, d) and sh[0] < Fraction(1, d):
        return False
    return True


def delta0_bound(w, tau, steps: int = 200) -> Fraction:
    """Half the largest admissible delta.

    The admissible set is an interval (0, B); B is located by exact bisection
    over dyadic rationals and then pinned to the closed-form value, which the
    bisection must bracket.
    """
    w, tau = _as_weights(w), _check_tau(tau)
    lo, hi = Fraction(0), Fraction(1)
    for _ in range(steps):
        mid = (lo + hi) / 2
        if delta_admissible(w, tau, mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < Fraction(1, 2**60):
            break
    B = delta_sup(w, tau)
    assert lo <= B <= hi, "bisection disagrees with closed form"
    return B / 2


@dataclass(frozen=True)
class AuxiliaryWeights:
    wtilde: Vec
    K: int
    delta: Fraction
    delta0: Fraction


def auxiliary_weights(w, tau, delta) -> AuxiliaryWeights:
    w, tau, delta = _as_weights(w), _check_tau(tau), frac(delta)
    d = w.d
    d0 = delta0_bound(w, tau)
    if not 0 < delta <= d0:
        raise WeightError(f"delta {delta} outside (0, {d0}]")
    if not delta < tau * w[0] / (1 + tau * w[0]):
        raise WeightError("delta must be below tau w_1/(1+tau w_1)")
    if tau * w[0] > Fraction(1, d):
        return AuxiliaryWeights((Fraction(1, d),) * d, 0, delta, d0)
    sh = [shifted(tau, wi, delta) for wi in w]
    for h in range(1, d):
        if sum(sh[:h]) + (d - h) * sh[h] > 1:
            K = h
            break
    else:  # unreachable for admissible delta
        raise WeightError("no admissible K")
    x = (1 - sum(sh[:K])) / (d - K)
    return AuxiliaryWeights(tuple(sh[:K]) + (x,) * (d - K), K, delta, d0)


def check_aux(w, tau, aux: AuxiliaryWeights) -> list[str]:
    """Violated conditions among (tau1)-(tau3) and ordering; empty when all hold."""
    w, tau = _as_weights(w), _check_tau(tau)
    wt, K, delta = aux.wtilde, aux.K, aux.delta
    d = w.d
    bad = []
    if not 0 <= K < d:
        bad.append("K range")
    if any(wt[i] != shifted(tau, w[i], delta) for i in range(K)):
        bad.append("tau1")
    if K >= 1 and not wt[K - 1] <= wt[K]:
        bad.append("tau2: w~_K <= w~_(K+1)")
    if any(wt[i] != wt[K] for i in range(K, d)):
        bad.append("tau2: tail not constant")
    if not wt[K] < shifted(tau, w[K], delta):
        bad.append("tau2: strict upper bound")
    if sum(wt) != 1:
        bad.append("tau3")
    if any(a > b for a, b in zip(wt, wt[1:])) or wt[0] <= 0:
        bad.append("ascending")
    return bad


def final_lower_bound(w, tau, delta) -> tuple[Fraction, tuple[int, int], bool]:
    """min over (h,k) of sum_{i<=h}(1+w~_i)/(1+tau w_k) + d - h + k - sum_{i<=k}(1+tau w_i)/(1+tau w_k).

    Returns (value, (h, k), k > K) for the first minimizer in (h, k) order.
    """
    w, tau = _as_weights(w), _check_tau(tau)
    aux = auxiliary_weights(w, tau, delta)
    wt = aux.wtilde
    d = w.d
    best = None
    for h in range(1, d + 1):
        a = sum(1 + wt[i] for i in range(h))
        for k in range(1, d + 1):
            den = 1 + tau * w[k - 1]
            b = sum(1 + tau * w[i] for i in range(k))
            v = a / den + d - h + k - b / den
            if best is None or v < best[0]:
                best = (v, (h, k))
    return best[0], best[1], best[1][1] > aux.K
