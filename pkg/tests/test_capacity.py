import math
from fractions import Fraction

import numpy as np
import pytest

from mwrelay.capacity import (
    RateTuple,
    RegionEvaluator,
    check_achievable,
    check_outer,
    fdfp_feasible,
    max_min_downlink,
    region_report,
    region_slice,
)
from mwrelay.channel import DownlinkSpec, UplinkSpec, identity_downlink, uplink_bound
from mwrelay.gf import Field
from mwrelay.rng import stream


def counterexample_channel():
    f4 = Field(4)
    up = UplinkSpec(f4, np.array([0.5, 0.5, 0.0, 0.0]))
    return up, identity_downlink(3, 2)


def counterexample_rates() -> RateTuple:
    return RateTuple.from_lists(
        [Fraction(39, 100)] * 3,
        {(1, 2): Fraction(19, 100), (1, 3): Fraction(14, 100), (2, 3): Fraction(14, 100)},
    )


def h2(q):
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def test_sum_rate_examples():
    r = counterexample_rates()
    assert r.sum_rate(3) == Fraction(97, 100)
    assert r.sum_rate(1) == Fraction(92, 100)
    assert r.sum_rate(2) == Fraction(92, 100)
    zero = RateTuple.from_lists([0, 0, 0])
    assert zero.sum_rates() == [0, 0, 0]
    with pytest.raises(ValueError):
        r.sum_rate(4)


def test_rate_tuple_validation():
    with pytest.raises(ValueError):
        RateTuple.from_lists([Fraction(-1, 2), 0])
    with pytest.raises(ValueError):
        RateTuple(2, {(1, 2, 3): 1})
    # unordered pair keys collapse to one entry
    r = RateTuple(2, {(2, 1): Fraction(1, 4), (1,): 0, (2,): 0})
    assert r.rate((1, 2)) == Fraction(1, 4)


def test_max_min_noiseless_binary():
    _, down = counterexample_channel()
    margin, dist = max_min_downlink(down, [0, 0, 0])
    assert margin == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(dist, [0.5, 0.5], atol=1e-6)


def test_max_min_bsc_capacity():
    for q in (0.1, 0.25):
        bsc = DownlinkSpec(2, (np.array([[1 - q, q], [q, 1 - q]]),))
        margin, dist = max_min_downlink(bsc, [0.0])
        assert margin == pytest.approx(1 - h2(q), abs=1e-6)
        assert 0.5 * np.abs(dist - 0.5).sum() <= 1e-3


def test_max_min_negative_when_rates_exceed_output():
    _, down = counterexample_channel()
    margin, _ = max_min_downlink(down, [2.0, 2.0, 2.0])
    assert margin < 0


def test_check_achievable_counterexample():
    up, down = counterexample_channel()
    r = counterexample_rates()
    rep = region_report(r, up, down)
    assert rep.achievable and rep.inside_outer
    assert rep.uplink_bound == 1.0
    assert rep.margin == pytest.approx(0.03, abs=1e-9)


def test_check_achievable_trivial_cases():
    up, down = counterexample_channel()
    assert check_achievable(RateTuple.from_lists([0, 0, 0]), up, down)
    big = RateTuple.from_lists([3, 0, 0])
    assert not check_achievable(big, up, down)
    assert not check_outer(big, up, down)


def test_boundary_tuple_outer_but_not_inner():
    f2 = Field(2)
    up = UplinkSpec(f2, np.array([1.0, 0.0]))
    down = identity_downlink(2, 2)
    # sum rate for user 2 is exactly the uplink bound of 1
    r = RateTuple.from_lists([Fraction(1), Fraction(0)])
    assert not check_achievable(r, up, down)
    assert check_outer(r, up, down)
    above = RateTuple.from_lists([Fraction(11, 10), Fraction(0)])
    assert not check_outer(above, up, down)


def test_inner_implies_outer_random():
    up, down = counterexample_channel()
    ev = RegionEvaluator(up, down)
    rng = stream(13, "inout")
    for _ in range(40):
        vals = rng.random(6) * 0.5
        r = RateTuple.from_lists(
            [Fraction(str(round(v, 3))) for v in vals[:3]],
            {
                (1, 2): Fraction(str(round(vals[3], 3))),
                (1, 3): Fraction(str(round(vals[4], 3))),
                (2, 3): Fraction(str(round(vals[5], 3))),
            },
        )
        rep = ev.report(r)
        if rep.achievable:
            assert rep.inside_outer


def test_downward_closure():
    up, down = counterexample_channel()
    ev = RegionEvaluator(up, down)
    rng = stream(13, "down")
    base = counterexample_rates()
    assert ev.report(base).achievable
    for _ in range(20):
        shrunk = {k: v * Fraction(int(rng.integers(0, 100)), 100) for k, v in base.rates.items()}
        assert ev.report(RateTuple(3, shrunk)).achievable


def test_fdfp_counterexample_infeasible_with_certificate():
    r = counterexample_rates()
    res = fdfp_feasible(r, [1, 1, 1])
    assert not res.feasible
    chains = {c.user: c for c in res.certificate.chains}
    # the pair (r_1 + r_3) bound: exceeds user 2's cap by exactly 3/100
    assert 2 in chains
    assert chains[2].bound == Fraction(103, 100)
    assert chains[2].cap == Fraction(1)


def test_fdfp_feasible_cases():
    private_only = RateTuple.from_lists([Fraction(1, 4)] * 3)
    res = fdfp_feasible(private_only, [1, 1, 1])
    assert res.feasible
    assert all(v == 0 for v in res.splits.values())

    zero = RateTuple.from_lists([0, 0, 0])
    assert fdfp_feasible(zero, [1, 1, 1]).feasible

    # splits genuinely constrained: user 1's tight cap limits how much of
    # the pair rate may be routed to user 2
    r = RateTuple.from_lists([0, 0, 0], {(1, 2): Fraction(1, 2)})
    res = fdfp_feasible(r, [Fraction(1, 4), Fraction(3, 4), Fraction(1)])
    assert res.feasible
    assert res.splits[((1, 2), 2)] <= Fraction(1, 4)
    # but no split can satisfy a sub-quarter cap on user 3, who gets both parts
    res = fdfp_feasible(r, [Fraction(1, 2), Fraction(1, 2), Fraction(1, 4)])
    assert not res.feasible
    chain = {c.user: c for c in res.certificate.chains}[3]
    assert chain.bound == Fraction(1, 2) and chain.cap == Fraction(1, 4)


def test_fdfp_witness_splits_satisfy_constraints():
    rng = stream(13, "split")
    for _ in range(40):
        vals = [Fraction(int(v), 40) for v in rng.integers(0, 12, size=6)]
        r = RateTuple.from_lists(vals[:3], {(1, 2): vals[3], (1, 3): vals[4], (2, 3): vals[5]})
        caps = [Fraction(int(c), 4) for c in rng.integers(2, 9, size=3)]
        res = fdfp_feasible(r, caps)
        if not res.feasible:
            continue
        eff = res.effective_private
        for a in range(1, 4):
            total = sum(eff[j - 1] for j in range(1, 4) if j != a)
            assert total <= caps[a - 1]
        for pair in [(1, 2), (1, 3), (2, 3)]:
            assert res.splits[(pair, pair[0])] + res.splits[(pair, pair[1])] == r.rate(pair)
            assert res.splits[(pair, pair[0])] >= 0 and res.splits[(pair, pair[1])] >= 0


def test_fdfp_user_relabeling_invariance():
    rng = stream(13, "perm")
    import itertools

    for _ in range(10):
        vals = [Fraction(int(v), 40) for v in rng.integers(0, 14, size=6)]
        r = RateTuple.from_lists(vals[:3], {(1, 2): vals[3], (1, 3): vals[4], (2, 3): vals[5]})
        caps = [Fraction(int(c), 4) for c in rng.integers(1, 7, size=3)]
        answer = fdfp_feasible(r, caps).feasible
        for perm in itertools.permutations([1, 2, 3]):
            remap = {old: new for new, old in enumerate(perm, start=1)}
            rp = RateTuple(
                3,
                {tuple(sorted(remap[i] for i in k)): v for k, v in r.rates.items()},
            )
            caps_p = [None] * 3
            for old in (1, 2, 3):
                caps_p[remap[old] - 1] = caps[old - 1]
            assert fdfp_feasible(rp, caps_p).feasible == answer


def test_fdfp_region_inside_outer_and_strict_inclusion():
    up, down = counterexample_channel()
    ev = RegionEvaluator(up, down)
    bound = uplink_bound(up)
    caps = [Fraction(1)] * 3  # min(uplink bound, downlink peak) for this channel
    rng = stream(13, "incl")
    for _ in range(25):
        vals = [Fraction(int(v), 50) for v in rng.integers(0, 20, size=6)]
        r = RateTuple.from_lists(vals[:3], {(1, 2): vals[3], (1, 3): vals[4], (2, 3): vals[5]})
        if fdfp_feasible(r, caps).feasible:
            assert ev.report(r).inside_outer
    # witnessed strict inclusion at the bundled counterexample
    star = counterexample_rates()
    assert ev.report(star).achievable
    assert not fdfp_feasible(star, caps).feasible


def test_lp_answer_invariant_under_constraint_order():
    from mwrelay.lp import solve_lp

    rng = stream(13, "lporder")
    for _ in range(20):
        n = 4
        a_ub = [[int(v) for v in rng.integers(-3, 4, size=n)] for _ in range(5)]
        b_ub = [int(v) for v in rng.integers(-2, 6, size=5)]
        a_eq = [[int(v) for v in rng.integers(-2, 3, size=n)]]
        b_eq = [int(rng.integers(0, 4))]
        c = [int(v) for v in rng.integers(-2, 3, size=n)]
        base = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
        perm = list(rng.permutation(5))
        shuffled = solve_lp(c, a_eq, b_eq, [a_ub[i] for i in perm], [b_ub[i] for i in perm])
        assert base.status == shuffled.status
        if base.status == "optimal":
            assert base.value == shuffled.value


def test_margin_concavity_along_segments():
    up, down = counterexample_channel()
    rng = stream(13, "concave")
    srs = [0.2, 0.3, 0.1]

    def g(p):
        from mwrelay.channel import mutual_info

        return min(mutual_info(p, down.channel(a)) - srs[a - 1] for a in (1, 2, 3))

    for _ in range(20):
        p1 = rng.random(2)
        p1 /= p1.sum()
        p2 = rng.random(2)
        p2 /= p2.sum()
        assert g((p1 + p2) / 2) >= (g(p1) + g(p2)) / 2 - 1e-9


def test_region_slice_examples():
    up, down = counterexample_channel()
    base = RateTuple.from_lists([0, 0, 0])
    rows = region_slice(base, (1,), (1, 2), up, down, Fraction(1, 2), Fraction(0))
    assert len(rows) == 1 and rows[0].achievable

    rows = region_slice(base, (1,), (1, 2), up, down, Fraction(3), Fraction(3))
    flags = {(float(r.x), float(r.y)): r.achievable for r in rows}
    assert flags[(0.0, 0.0)] is True
    assert all(not v for k, v in flags.items() if k != (0.0, 0.0))


def test_region_slice_monotone_staircase():
    up, down = counterexample_channel()
    base = counterexample_rates().with_rate((1, 2), 0)
    rows = region_slice(base, (1, 2), (2, 3), up, down, Fraction(1, 8), Fraction(1))
    by_y = {}
    for r in rows:
        by_y.setdefault(r.y, []).append((r.x, r.achievable))
    for y, seq in by_y.items():
        seq.sort()
        flags = [a for _, a in seq]
        # once unachievable, never achievable again along the axis
        assert flags == sorted(flags, reverse=True)
        assert sum(1 for i in range(1, len(flags)) if flags[i] != flags[i - 1]) <= 1


def test_region_slice_rejects_bad_step():
    up, down = counterexample_channel()
    with pytest.raises(ValueError):
        region_slice(RateTuple.from_lists([0, 0, 0]), (1,), (2,), up, down, 0)


def test_region_slice_default_max_reaches_alphabet_ceiling():
    up, down = counterexample_channel()
    rows = region_slice(RateTuple.from_lists([0, 0, 0]), (1,), (1, 2), up, down, Fraction(1, 2))
    # log2(4) = 2, so the grid must include the 2.0 boundary
    assert max(r.x for r in rows) == Fraction(2)


def test_fdfp_two_users_pair_rate_still_burdens_the_baseline():
    # the split baseline transmits both halves of a pair message as fresh
    # private messages, so even a pair both users already share consumes
    # cap, while the true region's per-user sums exclude it entirely
    r = RateTuple.from_lists([0, 0], {(1, 2): Fraction(1, 2)})
    assert r.sum_rate(1) == 0 and r.sum_rate(2) == 0
    assert fdfp_feasible(r, [Fraction(1, 2), Fraction(1, 2)]).feasible
    tight = fdfp_feasible(r, [Fraction(1, 5), Fraction(1, 5)])
    assert not tight.feasible
    assert tight.certificate.minimal_caps == [1, 2]
