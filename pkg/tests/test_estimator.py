import math

import numpy as np
import pytest

from ballmax.classifier import classify
from ballmax.dc_solver import minimize_dc
from ballmax.errors import InconsistentBracket, NoInitialHit, ZeroDenominator
from ballmax.estimator import (PROCEDURE_B, VOLUME_BISECTION, fk_profile, initial_radius,
                               shrink_growth_factor, shrink_growth_ratio, procedure_b, procedure_b_from,
                               volume_bisect)
from ballmax.oracle2d import arc_fraction_2d, farthest_2d
from ballmax.sampler import wilson_interval

from conftest import single


# Procedure B

def test_procedure_b_offset_disk():
    rep = procedure_b(single([0, 0], 1, [0.5, 0]), i=-20, r_init=1.0, n_samples=4096, seed=0)
    assert rep.method == PROCEDURE_B
    assert rep.r_hat == pytest.approx(1.5, abs=0.02)


def test_procedure_b_centered_disk():
    rep = procedure_b(single([0, 0], 1, [0, 0]), i=-20, r_init=0.5, n_samples=4096, seed=0)
    assert rep.r_hat == pytest.approx(1.0, abs=0.02)


def test_procedure_b_no_initial_hit():
    with pytest.raises(NoInitialHit) as exc:
        procedure_b(single([0, 0], 1, [0.5, 0]), i=-20, r_init=10.0, n_samples=4096, seed=0)
    assert exc.value.r == 10.0


def test_procedure_b_bracket_invariants(four_disk):
    rep = procedure_b(four_disk, i=-20, r_init=0.4, n_samples=2048, seed=3)
    lo, hi = rep.bracket
    assert lo < hi
    assert lo <= rep.r_hat <= hi
    radii = [r for r, _ in rep.stats_trace]
    assert all(b > a for a, b in zip(radii, radii[1:]))
    # growth stops at the first radius without hits
    assert rep.stats_trace[-1][1].hits == 0
    assert all(s.hits > 0 for _, s in rep.stats_trace[:-1])
    step = max(0.01, 0.01 * 0.4)
    assert hi - lo <= step / 2**20 * 1.0001


def test_procedure_b_accuracy_four_disk(four_disk):
    r0 = farthest_2d(four_disk).r0
    c = classify(four_disk, minimize_dc(four_disk))
    rep = procedure_b_from(four_disk, c, i=-20, n_samples=4096, seed=1)
    assert abs(rep.r_hat - r0) <= 0.02 * r0


def test_procedure_b_rejects_positive_index(four_disk):
    with pytest.raises(ValueError):
        procedure_b(four_disk, i=2, r_init=0.4)


def test_procedure_b_hits_decrease_on_average(four_disk):
    # average over seeds: hit counts fall as r grows
    counts = []
    for seed in range(5):
        rep = procedure_b(four_disk, i=-20, r_init=0.5, n_samples=1024, seed=seed)
        counts.append([s.hits for _, s in rep.stats_trace[:8]])
    n = min(map(len, counts))
    mean = np.mean([c[:n] for c in counts], axis=0)
    assert np.all(np.diff(mean) <= 0)


def test_initial_radius_backoff(four_disk):
    c = classify(four_disk, minimize_dc(four_disk))
    assert initial_radius(c, 0.5) == pytest.approx(0.5 * c.r_lower)
    with pytest.raises(ValueError):
        initial_radius(c, 0.0)


# volume bisection

def test_volume_bisect_single_ball_jump():
    inst = single([0, 0], 1, [0, 0])
    rep = volume_bisect(inst, 0, 2, (0.5, 1.5), n_samples=20_000, seed=0)
    assert rep.method == VOLUME_BISECTION
    lo, hi = rep.bracket
    assert 1.0 - 0.02 <= lo <= hi <= 1.0 + 0.02


def test_volume_bisect_low_threshold_moves_low_end(lens):
    # grid areas give V ~ 0.40 at 0.05 R0 and ~ 0.43 at 0.275 R0 for the lens
    r0 = farthest_2d(lens).r0
    rep = volume_bisect(lens, 0, 2, (0.05 * r0, 0.95 * r0), n_samples=5000, threshold=0.5,
                        seed=1, rounds=3)
    first_r, first = rep.stats_trace[0]
    assert first_r == pytest.approx(0.05 * r0)
    assert first.wilson_high < 0.5
    lo, hi = rep.bracket
    assert lo > 0.05 * r0
    # the misuse lands far below R0
    assert hi < 0.6 * r0


def test_volume_bisect_lens_contains_r0(lens):
    r0 = farthest_2d(lens).r0
    rep = volume_bisect(lens, 0, 2, (0.5 * r0, 1.5 * r0), n_samples=20_000, seed=0, rounds=12)
    lo, hi = rep.bracket
    assert hi - lo <= 0.05
    assert lo <= r0 <= hi


def test_volume_bisect_inconsistent_bracket():
    inst = single([0, 0], 1, [0, 0])
    with pytest.raises(InconsistentBracket):
        volume_bisect(inst, 0, 2, (0.1, 0.2), n_samples=2000, seed=0, expand=0)


def test_volume_bisect_deterministic(four_disk):
    a = volume_bisect(four_disk, 0, 2, (0.3, 0.9), n_samples=2000, seed=5, rounds=4)
    b = volume_bisect(four_disk, 0, 2, (0.3, 0.9), n_samples=2000, seed=5, rounds=4)
    assert a.to_dict() == b.to_dict()


# surface-ratio growth under radius shrinkage

def test_shrink_growth_alpha_zero(four_disk):
    emp, bound = shrink_growth_ratio(four_disk, 0, 0.6, 0.0, 4000, seed=0)
    assert emp == 1.0 and bound == 1.0


@pytest.mark.parametrize("n", [10**3, 10**6])
@pytest.mark.parametrize("x", [0.1, 0.5, 1.0])
def test_shrink_growth_factor_limit(n, x):
    assert shrink_growth_factor(n, x, 1.0) == pytest.approx(math.exp(x), rel=1e-3)


def test_shrink_growth_factor_reference():
    # (1 / (1 - 0.5/4))^3 by hand
    assert shrink_growth_factor(4, 1.0, 2.0) == pytest.approx((8 / 7) ** 3, rel=1e-14)


def test_shrink_growth_lens_empirical_vs_bound(lens):
    r0 = farthest_2d(lens).r0
    r, alpha, n = 0.95 * r0, 0.05, 200_000
    emp, bound = shrink_growth_ratio(lens, 0, r, alpha, n, seed=2)
    exact = arc_fraction_2d(lens, 0, r - alpha / 2) / arc_fraction_2d(lens, 0, r)
    assert exact >= bound
    # slack from the Wilson interval of the denominator estimate
    p = arc_fraction_2d(lens, 0, r)
    lo, hi = wilson_interval(round(p * n), n)
    assert emp >= bound * (1 - (hi - lo) / p)


def test_shrink_growth_zero_denominator():
    inst = single([0, 0], 1, [0, 0])
    with pytest.raises(ZeroDenominator):
        shrink_growth_ratio(inst, 0, 1.5, 0.1, 500, seed=0)


# fk profile

def test_fk_single_ball_example():
    prof, skipped = fk_profile(single([2, 0], 1, [0, 0], 0.5), 1.0, [-1])
    assert skipped == []
    assert prof[0].value == pytest.approx(-1.0, abs=1e-14)
    assert prof[0].b_k == pytest.approx(-2.0)
    assert prof[0].regime == "b<0"


def test_fk_closed_form(four_disk):
    r = 0.5
    prof, _ = fk_profile(four_disk, r, range(-1, -31, -1))
    d = np.linalg.norm(four_disk.q.centers - four_disk.c0, axis=1)
    for p in prof:
        expected = p.b_k + (1 - four_disk.lam) ** abs(p.i) * d[p.k]
        assert p.value == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_fk_matches_sequence_module(four_disk):
    from ballmax.sequence import backward_centers, backward_radii_sq
    r = 0.5
    prof, _ = fk_profile(four_disk, r, range(-1, -11, -1))
    for p in prof:
        C = backward_centers(four_disk, -p.i)[p.k]
        r2 = backward_radii_sq(four_disk, -p.i, r * r)[p.k]
        direct = (r2 - r * r) / np.linalg.norm(C - four_disk.c0)
        assert p.value == pytest.approx(direct, rel=1e-9, abs=1e-9)


def test_fk_zero_b_is_geometric_not_constant():
    # r^2 - R^2 - d^2 = 0: the value is (1-lam)^|i| d, shrinking to 0
    inst = single([1, 0], math.sqrt(2), [0, 0], 0.5)
    prof, _ = fk_profile(inst, 1.0, [-1, -2, -3])
    assert all(p.regime == "b=0" for p in prof)
    np.testing.assert_allclose([p.value for p in prof], [0.5, 0.25, 0.125], atol=1e-15)


def test_fk_negative_b_magnitude_grows():
    inst = single([2, 0], 1, [0, 0], 0.5)
    prof, _ = fk_profile(inst, 1.0, range(-1, -21, -1))
    vals = np.array([p.value for p in prof])
    neg = vals < 0
    assert neg.all()
    assert np.all(np.diff(np.abs(vals)) > 0)


def test_fk_skips_center_at_c0():
    from ballmax.geometry import BallSet, Instance
    inst = Instance(BallSet([[0, 0], [1, 0]], [1, 1]), [0, 0], 0.5)
    prof, skipped = fk_profile(inst, 0.5, [-1, -2])
    assert skipped == [0]
    assert {p.k for p in prof} == {1}


def test_fk_rejects_nonnegative_index(four_disk):
    with pytest.raises(ValueError):
        fk_profile(four_disk, 0.5, [0])
