import numpy as np
import pytest

from mwrelay.capacity import RateTuple
from mwrelay.channel import UplinkSpec, identity_downlink
from mwrelay.gf import Field
from mwrelay.rng import stream
from mwrelay.schedule import SymbolLengths
from mwrelay.sim import (
    ErrorStats,
    TrialConfig,
    quantize_lengths,
    run_trials,
    sum_decode_trials,
    sweep,
    wilson_interval,
)


def zero_noise_cfg(trials=40, seed=5) -> TrialConfig:
    field = Field(2)
    up = UplinkSpec(field, np.array([1.0, 0.0]))
    lengths = SymbolLengths(3, {(1,): 2, (2,): 2, (3,): 2, (1, 2): 1, (1, 3): 1, (2, 3): 1})
    return TrialConfig(
        up, identity_downlink(3, 2), n=10, n_dl=48, trials=trials, master_seed=seed, lengths=lengths
    )


def test_quantize_lengths():
    from fractions import Fraction

    r = RateTuple.from_lists([Fraction(39, 100)] * 3, {(1, 2): Fraction(19, 100)})
    k = quantize_lengths(r, 100, 4)
    # floor(100 * 0.39 / 2) = 19, floor(100 * 0.19 / 2) = 9
    assert k.k[(1,)] == 19 and k.k[(1, 2)] == 9 and k.k[(2, 3)] == 0
    k2 = quantize_lengths(r, 100, 2)
    assert k2.k[(1,)] == 39


def test_trial_config_validation():
    field = Field(2)
    up = UplinkSpec(field, np.array([1.0, 0.0]))
    down = identity_downlink(2, 2)
    with pytest.raises(ValueError):
        TrialConfig(up, down, n=4, n_dl=4, trials=1, master_seed=0)
    lengths = SymbolLengths(2, {(1,): 1, (2,): 1})
    with pytest.raises(ValueError):
        TrialConfig(up, down, n=4, n_dl=4, trials=0, master_seed=0, lengths=lengths)
    rate = RateTuple.from_lists([0, 0])
    with pytest.raises(ValueError):
        TrialConfig(up, down, n=4, n_dl=4, trials=1, master_seed=0, lengths=lengths, rates=rate)


def test_zero_noise_no_failures():
    stats = run_trials(zero_noise_cfg())
    assert stats.failures == 0
    assert stats.trials == 40


def test_reproducible_across_thread_counts():
    cfg = zero_noise_cfg(trials=30)
    s1 = run_trials(cfg, threads=1)
    s2 = run_trials(cfg, threads=4)
    s3 = run_trials(cfg, threads=2)
    assert s1 == s2 == s3


def test_wilson_interval_basics():
    lo, hi = wilson_interval(0, 100)
    assert lo <= 1e-12 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    with pytest.raises(ValueError):
        wilson_interval(0, 0)
    st = ErrorStats.from_counts(3, 10)
    assert st.lo95 <= st.p_hat <= st.hi95


def test_wilson_coverage_on_synthetic_bernoulli():
    p = 0.1
    n = 200
    rng = stream(4, "coverage")
    hits = 0
    reps = 1000
    draws = rng.binomial(n, p, size=reps)
    for f in draws:
        lo, hi = wilson_interval(int(f), n)
        hits += lo <= p <= hi
    assert hits / reps >= 0.93


def test_sweep_single_value_matches_run_trials():
    cfg = zero_noise_cfg(trials=20)
    rows = sweep(cfg, "n", [10])
    assert len(rows) == 1
    assert rows[0][1] == run_trials(cfg)
    with pytest.raises(ValueError):
        sweep(cfg, "n", [])
    with pytest.raises(ValueError):
        sweep(cfg, "frequency", [1])


def test_sweep_rate_scale_requires_rates():
    cfg = zero_noise_cfg(trials=5)
    with pytest.raises(ValueError):
        sweep(cfg, "rate_scale", [0.5])


def test_sum_decode_zero_noise_never_fails():
    field = Field(2)
    up = UplinkSpec(field, np.array([1.0, 0.0]))
    st = sum_decode_trials(up, 4, 8, 50, 1)
    assert st.failures == 0


def test_sum_decode_threads_reproducible():
    field = Field(2)
    up = UplinkSpec(field, np.array([0.89, 0.11]))
    a = sum_decode_trials(up, 4, 8, 100, 7, threads=1)
    b = sum_decode_trials(up, 4, 8, 100, 7, threads=3)
    assert a == b
    assert a.failures > 0  # short noisy code does fail sometimes


def test_noisy_uplink_errors_decrease_with_n():
    field = Field(2)
    up = UplinkSpec(field, np.array([0.89, 0.11]))
    lo = sum_decode_trials(up, 8, 16, 300, 2)
    hi = sum_decode_trials(up, 8, 64, 300, 2)
    assert lo.failures > hi.failures


def test_rates_below_bound_beat_rates_above_bound():
    # at equal n, half the uplink bound vs 1.5x the bound
    field = Field(2)
    up = UplinkSpec(field, np.array([0.89, 0.11]))
    below = sum_decode_trials(up, 4, 16, 300, 6)
    above = sum_decode_trials(up, 12, 16, 300, 6)
    assert below.p_hat < above.p_hat
    assert below.hi95 < above.lo95


def test_downlink_errors_shrink_with_codeword_length():
    # fixed candidate set, noisy downlink: longer codewords decode better
    import numpy as onp

    from mwrelay import codec
    from mwrelay.channel import DownlinkSpec, sample_downlink
    from mwrelay.schedule import build_table
    from mwrelay.shuffle import run_shuffle, simplify
    from mwrelay import gf as gflib

    field = Field(2)
    lengths = SymbolLengths(2, {(1,): 3, (2,): 3})
    table = build_table(lengths)
    cols, _ = run_shuffle(simplify(table))
    q = 0.1
    down = DownlinkSpec(2, (onp.array([[1 - q, q], [q, 1 - q]]),) * 2)
    errors = {}
    for n_dl in (6, 40):
        wrong = 0
        for t in range(150):
            rng = stream(12, "dltrend", n_dl, t)
            msgs = {m: gflib.random_vec(field, lengths.k[m], rng) for m in lengths.k}
            truth = codec.relay_word(field, msgs, table, cols)
            cb = codec.DownlinkCodebook(onp.array([0.5, 0.5]), n_dl, int(rng.integers(0, 2**62)))
            x0 = cb.codeword(truth)
            known = {m: v for m, v in msgs.items() if 2 in m}
            cands = codec.candidate_set(field, 2, known, table, cols)
            y = sample_downlink(down, 2, x0, stream(12, "dlnoise", n_dl, t))
            got = codec.user_decode_word(y, cb, cands, down, 2)
            wrong += not onp.array_equal(got, truth)
        errors[n_dl] = wrong
    # rate 3/40 is far below I(X0;Y) ~ 0.53, 3/6 is not
    assert errors[40] < errors[6]


def test_rate_scale_sweep_crosses_threshold():
    field = Field(2)
    up = UplinkSpec(field, np.array([0.89, 0.11]))
    rates = RateTuple.from_lists(["1/4", "1/4"])
    cfg = TrialConfig(
        up, identity_downlink(2, 2), n=12, n_dl=48, trials=100, master_seed=21, rates=rates
    )
    rows = dict(sweep(cfg, "rate_scale", [1, 3]))
    # scale 1: 0.25 bits/use per user, below the ~0.5 bound; scale 3: above
    assert rows[1.0].p_hat < rows[3.0].p_hat
    assert rows[1.0].hi95 < rows[3.0].lo95


def test_end_to_end_error_decreases_with_n():
    # three users at a rate far below the ~0.5 bits/use bound, where the
    # error exponent is strong enough to show through at desk scale
    field = Field(2)
    up = UplinkSpec(field, np.array([0.89, 0.11]))
    rates = RateTuple.from_lists(["1/16", "1/16", "1/16"])
    cfg = TrialConfig(
        up, identity_downlink(3, 2), n=16, n_dl=64, trials=300, master_seed=31, rates=rates
    )
    rows = dict(sweep(cfg, "n", [16, 48]))
    assert rows[16.0].p_hat > rows[48.0].p_hat
    assert rows[48.0].hi95 < rows[16.0].lo95
    assert rows[16.0].failures >= 10  # short blocks genuinely fail


def test_end_to_end_noisy_uplink_runs():
    field = Field(2)
    up = UplinkSpec(field, np.array([0.95, 0.05]))
    lengths = SymbolLengths(3, {(1,): 1, (2,): 1, (3,): 1})
    cfg = TrialConfig(
        up, identity_downlink(3, 2), n=24, n_dl=32, trials=30, master_seed=9, lengths=lengths
    )
    st = run_trials(cfg)
    assert st.trials == 30
    assert 0 <= st.failures <= 30
