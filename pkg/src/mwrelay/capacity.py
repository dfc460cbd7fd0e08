"""Rate-region arithmetic for the multi-way relay channel.

Covers rate tuples with private and pairwise common messages, the
per-user sum rates, membership tests against the inner (achievable) and
outer (cut-set) regions, the concave max-min input-distribution
optimizer for the downlink, and the exact-rational feasibility check
for the baseline scheme that splits each common message into two
private parts (with Farkas-style infeasibility certificates).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from . import lp
from .channel import DownlinkSpec, UplinkSpec, mutual_info, uplink_bound

MsgId = tuple[int, ...]

#: Real-valued downlink margins within this tolerance of zero are treated
#: as boundary cases (neither strictly inside nor strictly outside).
MARGIN_TOL = 1e-9


def message_ids(num_users: int) -> list[MsgId]:
    """All message identities: singletons then pairs, both ascending."""
    singles = [(i,) for i in range(1, num_users + 1)]
    pairs = [tuple(p) for p in itertools.combinations(range(1, num_users + 1), 2)]
    return singles + pairs


def as_msg_id(key) -> MsgId:
    key = tuple(int(i) for i in key)
    if len(key) == 1:
        return key
    if len(key) == 2 and key[0] != key[1]:
        return (min(key), max(key))
    raise ValueError(f"bad message id {key!r}")


class RateTuple:
    """Nonnegative rates (bits/use) for every private and pair message.

    Rates are stored as exact ``Fraction`` values; float views are
    available where real arithmetic is needed.
    """

    def __init__(self, num_users: int, rates: dict):
        if num_users < 2:
            raise ValueError("need at least two users")
        self.num_users = num_users
        table = {}
        for key, val in rates.items():
            table[as_msg_id(key)] = Fraction(val)
        expected = set(message_ids(num_users))
        missing = expected - set(table)
        extra = set(table) - expected
        if extra:
            raise ValueError(f"rates given for unknown messages {sorted(extra)}")
        for key in missing:
            table[key] = Fraction(0)
        if any(v < 0 for v in table.values()):
            raise ValueError("rates must be nonnegative")
        self.rates = table

    @classmethod
    def from_lists(cls, private, common=None) -> "RateTuple":
        num_users = len(private)
        rates = {(i + 1,): r for i, r in enumerate(private)}
        for key, val in (common or {}).items():
            rates[as_msg_id(key)] = val
        return cls(num_users, rates)

    def rate(self, key) -> Fraction:
        return self.rates[as_msg_id(key)]

    def sum_rate(self, a: int) -> Fraction:
        """Total rate of everything user ``a`` must decode."""
        if not 1 <= a <= self.num_users:
            raise ValueError(f"no such user {a}")
        return sum(
            (r for key, r in self.rates.items() if a not in key),
            Fraction(0),
        )

    def sum_rates(self) -> list[Fraction]:
        return [self.sum_rate(a) for a in range(1, self.num_users + 1)]

    def scaled(self, factor) -> "RateTuple":
        f = Fraction(factor)
        return RateTuple(self.num_users, {k: v * f for k, v in self.rates.items()})

    def with_rate(self, key, value) -> "RateTuple":
        rates = dict(self.rates)
        rates[as_msg_id(key)] = Fraction(value)
        return RateTuple(self.num_users, rates)

    def __eq__(self, other):
        return (
            isinstance(other, RateTuple)
            and other.num_users == self.num_users
            and other.rates == self.rates
        )

    def __repr__(self):
        body = ", ".join(f"{k}: {v}" for k, v in sorted(self.rates.items()))
        return f"RateTuple({self.num_users}, {{{body}}})"


def sum_rate(rates: RateTuple, a: int) -> Fraction:
    return rates.sum_rate(a)


# -- downlink max-min optimizer --------------------------------------------------


def _simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All distributions with probabilities that are multiples of 1/steps."""
    grid = []
    for comp in itertools.combinations(range(steps + dim - 1), dim - 1):
        parts = []
        prev = -1
        for c in comp:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + dim - 2 - prev)
        grid.append(parts)
    return np.asarray(grid, dtype=np.float64) / steps


def max_min_downlink(
    down: DownlinkSpec,
    sum_rates,
    *,
    grid_steps: int = 32,
    gap_tol: float = 1e-7,
    max_iters: int = 10_000,
) -> tuple[float, np.ndarray]:
    """Maximize min_a (I(X0;Y_a) - sum_rate_a) over input distributions.

    The objective is concave (a minimum of concave functions), so a
    coarse simplex grid followed by Frank-Wolfe refinement with exact
    line search finds the global optimum; the Frank-Wolfe gap bounds the
    remaining suboptimality, so stopping at ``gap_tol`` certifies the
    returned margin to that accuracy.
    """
    srs = [float(s) for s in sum_rates]
    if len(srs) != down.num_users:
        raise ValueError("one sum rate per user required")
    dim = down.input_size

    def value(p: np.ndarray) -> float:
        return min(
            mutual_info(p, down.channel(a + 1)) - srs[a] for a in range(down.num_users)
        )

    steps = grid_steps
    # Keep the coarse stage bounded for larger input alphabets.
    while steps > 1 and _grid_size(dim, steps) > 200_000:
        steps //= 2
    candidates = _simplex_grid(dim, steps)
    uniform = np.full(dim, 1.0 / dim)
    best_p = uniform
    best_v = value(uniform)
    for p in candidates:
        v = value(p)
        if v > best_v:
            best_v = v
            best_p = p

    p = best_p.copy()
    stall = 0
    for _ in range(max_iters):
        grad = _active_gradient(down, srs, p)
        j = int(np.argmax(grad))
        gap = float(grad[j] - grad @ p)
        if gap < gap_tol:
            break
        direction = -p.copy()
        direction[j] += 1.0
        gamma = _line_search(value, p, direction)
        p = p + gamma * direction
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        v = value(p)
        if v > best_v + 1e-15:
            best_v = v
            best_p = p.copy()
            stall = 0
        else:
            stall += 1
            if stall > 200:
                break
    return best_v, best_p


def _grid_size(dim: int, steps: int) -> int:
    return comb(steps + dim - 1, dim - 1)


def _active_gradient(down: DownlinkSpec, srs, p: np.ndarray) -> np.ndarray:
    """Supergradient of the min: gradient of the user attaining it."""
    vals = [mutual_info(p, down.channel(a + 1)) - srs[a] for a in range(down.num_users)]
    a = int(np.argmin(vals))
    w = down.channel(a + 1)
    q = p @ w
    grad = np.zeros(p.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for x in range(p.size):
            row = w[x]
            nz = row > 0
            grad[x] = float((row[nz] * np.log2(row[nz] / q[nz])).sum()) - np.log2(np.e)
    return grad


def _line_search(value, p: np.ndarray, direction: np.ndarray) -> float:
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-12:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if value(p + m1 * direction) < value(p + m2 * direction):
            lo = m1
        else:
            hi = m2
    return 0.5 * (lo + hi)


# -- region membership -----------------------------------------------------------


@dataclass
class RegionReport:
    """Everything the inner and outer tests look at, in one place."""

    sum_rates: list[Fraction]
    uplink_bound: float
    margin: float
    argmax_dist: np.ndarray
    achievable: bool
    inside_outer: bool


class RegionEvaluator:
    """Caches the channel side of membership tests across many tuples."""

    def __init__(self, up: UplinkSpec, down: DownlinkSpec):
        if down.num_users < 2:
            raise ValueError("need at least two downlink users")
        self.up = up
        self.down = down
        self.bound = uplink_bound(up)

    def report(self, rates: RateTuple) -> RegionReport:
        if rates.num_users != self.down.num_users:
            raise ValueError("rate tuple and downlink disagree on the user count")
        srs = rates.sum_rates()
        margin, dist = max_min_downlink(self.down, srs)
        ach = bool(all(s < self.bound for s in srs) and margin > MARGIN_TOL)
        outer = bool(all(s <= self.bound for s in srs) and margin >= -MARGIN_TOL)
        return RegionReport(srs, self.bound, margin, dist, ach, outer)


def region_report(rates: RateTuple, up: UplinkSpec, down: DownlinkSpec) -> RegionReport:
    return RegionEvaluator(up, down).report(rates)


def check_achievable(rates: RateTuple, up: UplinkSpec, down: DownlinkSpec) -> bool:
    """True when the tuple is strictly inside the achievable region."""
    return region_report(rates, up, down).achievable


def check_outer(rates: RateTuple, up: UplinkSpec, down: DownlinkSpec) -> bool:
    """True when the tuple satisfies the cut-set outer bound (non-strict)."""
    return region_report(rates, up, down).inside_outer


# -- baseline feasibility (common messages split into private parts) -------------


@dataclass
class FdfpChain:
    """One derived contradiction: user ``user``'s required sum exceeds its cap.

    ``bound`` is the exact minimum of sum_{j != user} r_j over splits
    that satisfy the caps in ``using_caps``; since bound > cap, no split
    can satisfy user ``user``'s constraint.  ``cap_multipliers`` and
    ``eq_multipliers`` are the verified Farkas multipliers (the cap of
    ``user`` itself carries multiplier 1).
    """

    user: int
    using_caps: list[int]
    bound: Fraction
    cap: Fraction
    cap_multipliers: dict[int, Fraction]
    eq_multipliers: dict[MsgId, Fraction]


@dataclass
class FdfpCertificate:
    chains: list[FdfpChain]
    minimal_caps: list[int]


@dataclass
class FdfpResult:
    feasible: bool
    #: On success: split rate toward each member, keyed (pair, receiver).
    splits: dict[tuple[MsgId, int], Fraction] | None = None
    certificate: FdfpCertificate | None = None
    effective_private: list[Fraction] | None = None


class _SplitSystem:
    """Index bookkeeping for the split-variable LP."""

    def __init__(self, rates: RateTuple, caps):
        self.rates = rates
        self.num_users = rates.num_users
        self.caps = [Fraction(c) for c in caps]
        if len(self.caps) != self.num_users:
            raise ValueError("one cap per user required")
        self.pairs = [k for k in message_ids(self.num_users) if len(k) == 2]
        self.vars = []  # (pair, receiving member)
        for pair in self.pairs:
            self.vars.append((pair, pair[0]))
            self.vars.append((pair, pair[1]))
        self.n = len(self.vars)
        self.a_eq = []
        self.b_eq = []
        for pair in self.pairs:
            row = [Fraction(0)] * self.n
            row[self.vars.index((pair, pair[0]))] = Fraction(1)
            row[self.vars.index((pair, pair[1]))] = Fraction(1)
            self.a_eq.append(row)
            self.b_eq.append(rates.rate(pair))

    def cap_row(self, a: int) -> list[Fraction]:
        """Coefficients of sum_{j != a} r_j minus its constant part.

        The variable part is sum over pairs {a, j} of the split pointed
        at j; pairs not containing a contribute their full rate, which
        is constant and folded into the rhs.
        """
        row = [Fraction(0)] * self.n
        for pair in self.pairs:
            if a in pair:
                other = pair[0] if pair[1] == a else pair[1]
                row[self.vars.index((pair, other))] = Fraction(1)
        return row

    def cap_rhs(self, a: int) -> Fraction:
        return self.caps[a - 1] - self.rates.sum_rate(a)

    def feasible_subset(self, users) -> lp.LpResult:
        a_ub = [self.cap_row(a) for a in users]
        b_ub = [self.cap_rhs(a) for a in users]
        return lp.solve_lp([Fraction(0)] * self.n, self.a_eq, self.b_eq, a_ub, b_ub)


def fdfp_feasible(rates: RateTuple, caps) -> FdfpResult:
    """Can splitting common messages into private parts meet every cap?

    Each pair rate R_{i,j} is split into nonnegative parts routed to i
    and to j; user a's effective private load r_a = R_a + its incoming
    parts must satisfy sum_{j != a} r_j <= caps[a-1] for every a.
    Solved exactly in rationals; infeasibility comes with verified
    certificate chains deriving an explicit violated inequality.
    """
    sys = _SplitSystem(rates, caps)
    users = list(range(1, sys.num_users + 1))
    full = sys.feasible_subset(users)
    if full.status == "optimal":
        splits = {sys.vars[i]: full.x[i] for i in range(sys.n)}
        eff = []
        for a in users:
            extra = sum(
                (v for (pair, to), v in splits.items() if to == a),
                Fraction(0),
            )
            eff.append(rates.rate((a,)) + extra)
        return FdfpResult(True, splits=splits, effective_private=eff)

    # Minimal infeasible cap subset via the deletion filter.
    minimal = list(users)
    for a in list(minimal):
        trial = [u for u in minimal if u != a]
        if sys.feasible_subset(trial).status == "infeasible":
            minimal = trial
    chains = []
    for star in minimal:
        support = [u for u in minimal if u != star]
        objective = sys.cap_row(star)
        res = lp.solve_lp(
            objective,
            sys.a_eq,
            sys.b_eq,
            [sys.cap_row(a) for a in support],
            [sys.cap_rhs(a) for a in support],
        )
        assert res.status == "optimal", "deletion filter guarantees a feasible subsystem"
        bound = rates.sum_rate(star) + res.value
        cap = sys.caps[star - 1]
        assert bound > cap, "minimal infeasible subsystem must violate the removed cap"
        cap_mults = {star: Fraction(1)}
        for idx, a in enumerate(support):
            cap_mults[a] = -res.dual_ub[idx]
        eq_mults = {sys.pairs[i]: -res.dual_eq[i] for i in range(len(sys.pairs))}
        _verify_farkas(sys, cap_mults, eq_mults)
        chains.append(
            FdfpChain(star, support, bound, cap, cap_mults, eq_mults)
        )
    certificate = FdfpCertificate(chains, minimal)
    return FdfpResult(False, certificate=certificate)


def _verify_farkas(sys: _SplitSystem, cap_mults, eq_mults) -> None:
    """Exact check: multipliers combine the constraints into 0 <= negative."""
    combo = [Fraction(0)] * sys.n
    rhs = Fraction(0)
    for a, v in cap_mults.items():
        assert v >= 0, "cap multipliers must be nonnegative"
        row = sys.cap_row(a)
        combo = [ci + v * ri for ci, ri in zip(combo, row)]
        rhs += v * sys.cap_rhs(a)
    for pair, u in eq_mults.items():
        i = sys.pairs.index(pair)
        combo = [ci + u * ri for ci, ri in zip(combo, sys.a_eq[i])]
        rhs += u * sys.b_eq[i]
    assert all(ci >= 0 for ci in combo), "combined coefficients must be nonnegative"
    assert rhs < 0, "combined rhs must be negative"


# -- region slices ----------------------------------------------------------------


@dataclass
class SliceRow:
    x: Fraction
    y: Fraction
    achievable: bool
    inside_outer: bool


def region_slice(
    rates: RateTuple,
    key_x,
    key_y,
    up: UplinkSpec,
    down: DownlinkSpec,
    step,
    max_value=None,
) -> list[SliceRow]:
    """Grid evaluation of the inner/outer tests over two rate coordinates."""
    step = Fraction(step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    if max_value is None:
        # Largest step multiple not above the uplink alphabet ceiling.
        ceiling = Fraction(float(np.log2(up.field.order)))
        max_value = (ceiling // step) * step
    else:
        max_value = Fraction(max_value)
    key_x = as_msg_id(key_x)
    key_y = as_msg_id(key_y)
    evaluator = RegionEvaluator(up, down)
    rows = []
    x = Fraction(0)
    while x <= max_value:
        y = Fraction(0)
        while y <= max_value:
            r = rates.with_rate(key_x, x).with_rate(key_y, y)
            rep = evaluator.report(r)
            rows.append(SliceRow(x, y, rep.achievable, rep.inside_outer))
            y += step
        x += step
    return rows
