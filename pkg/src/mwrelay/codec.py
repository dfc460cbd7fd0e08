"""Physical layer: uplink linear codes, relay sum decoding, downlink
random codebook with side-information decoding, and message recovery.

Uplink: per block, the block's owner transmits the block message and
user 1 transmits the block's function vector (built from the starred
cells); both use the same random generator matrix with independent
uniform dithers.  The relay decodes the field sum of the two message
vectors by exact maximum likelihood over all candidates, which is why
desk-scale bounds on F^k apply throughout.

Downlink: the relay indexes a lazily materialized random codebook by
the concatenated decoded sums and broadcasts the selected word; each
user restricts attention to the sum vectors consistent with its own
messages and again decodes by exact maximum likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gf
from .channel import DownlinkSpec, UplinkSpec, sample_uplink_noise, uplink_bound, validate_pmf
from .gf import Field
from .rng import stream
from .schedule import MessageTable, MsgId, message_ids
from .shuffle import SimplifiedColumn, decode_matrix

#: Largest candidate enumeration any exact-ML step will attempt.
ENUMERATION_LIMIT = 2**20

Messages = dict[MsgId, np.ndarray]


class CapabilityError(RuntimeError):
    """A requested instance exceeds the desk-scale enumeration bounds."""


class ShuffleSolveError(RuntimeError):
    """The post-shuffle system was not uniquely solvable (a bug)."""


@dataclass
class BlockCode:
    """Shared generator matrix plus per-transmitter dithers for one block."""

    k: int
    n: int
    generator: np.ndarray
    dithers: dict[int, np.ndarray]


def block_owner(block: MsgId) -> int:
    """The non-user-1 transmitter of a block: its smallest member."""
    return min(block)


def allocate_block_lengths(table: MessageTable, n: int) -> dict[MsgId, int]:
    """Channel uses per block, proportional to width, remainder to the last."""
    total = table.total_cols
    if total == 0:
        return {b.msg: 0 for b in table.blocks}
    if n < total:
        raise ValueError(f"n={n} is below the {total} aligned symbols to transmit")
    out = {}
    used = 0
    for b in table.blocks:
        out[b.msg] = n * b.width // total
        used += out[b.msg]
    last_positive = [b.msg for b in table.blocks if b.width > 0]
    if last_positive:
        out[last_positive[-1]] += n - used
    return out


def make_block_codes(
    table: MessageTable,
    n: int,
    field: Field,
    rng: np.random.Generator,
    *,
    full_rank: bool = False,
) -> tuple[dict[MsgId, BlockCode], int]:
    """Draw per-block codes (and dithers for user 1 and the owner).

    With ``full_rank`` set, rank-deficient generator matrices are
    redrawn; the redraw count is returned for reporting.
    """
    lengths = allocate_block_lengths(table, n)
    codes = {}
    redraws = 0
    for b in table.blocks:
        k, nb = b.width, lengths[b.msg]
        while True:
            g = gf.random_matrix(field, k, nb, rng)
            if not full_rank or k == 0 or gf.rank(field, g) == k:
                break
            redraws += 1
        dithers = {
            block_owner(b.msg): gf.random_vec(field, nb, rng),
            1: gf.random_vec(field, nb, rng),
        }
        codes[b.msg] = BlockCode(k, nb, g, dithers)
    return codes, redraws


def check_block_rates(codes: dict[MsgId, BlockCode], up: UplinkSpec) -> None:
    """Verify every block's rate sits below the uplink ceiling.

    Callers wanting the reliable-decoding regime invoke this before an
    uplink round; stress experiments deliberately skip it.
    """
    log2f = np.log2(up.field.order)
    ceiling = uplink_bound(up)
    for msg, code in codes.items():
        if code.k == 0:
            continue
        rate = code.k * log2f / code.n
        if rate >= ceiling:
            raise ValueError(
                f"block {msg}: rate {rate:.4f} bits/use is not below the"
                f" uplink bound {ceiling:.4f}"
            )


def encode_uplink(u: np.ndarray, code: BlockCode, transmitter: int, field: Field) -> np.ndarray:
    """Codeword (u G) plus the transmitter's dither."""
    u = np.asarray(u, dtype=np.int64)
    if u.shape[0] != code.k:
        raise ValueError(f"message length {u.shape[0]} != k={code.k}")
    return field.add(gf.mat_mul(field, u, code.generator), code.dithers[transmitter])


def build_v(
    field: Field, cols: list[SimplifiedColumn], block: MsgId, messages: Messages
) -> np.ndarray:
    """User 1's function vector for a block, one symbol per column.

    A column with one starred symbol contributes that symbol; two equal
    symbols contribute a single copy; two distinct symbols contribute
    their field sum; an empty column contributes zero.
    """
    block_cols = [c for c in cols if c.block == block]
    out = np.zeros(len(block_cols), dtype=np.int64)
    for i, col in enumerate(block_cols):
        acc = 0
        for ref in col.entries():
            acc = field.add(acc, int(messages[ref.msg][ref.pos]))
        out[i] = acc
    return out


@lru_cache(maxsize=16)
def _all_vectors(order: int, k: int) -> np.ndarray:
    """All length-k vectors over [0, order), ascending big-endian, (order^k, k)."""
    if order**k > ENUMERATION_LIMIT:
        raise CapabilityError(
            f"enumerating {order}^{k} candidates exceeds the 2^20 desk-scale bound;"
            f" shrink the message lengths"
        )
    count = order**k
    out = np.zeros((count, k), dtype=np.int64)
    idx = np.arange(count)
    for t in range(k):
        out[:, t] = (idx // order ** (k - 1 - t)) % order
    return out


def _encode_all(field: Field, g: np.ndarray) -> np.ndarray:
    """Codewords of every message, via the GF(p) expansion and BLAS.

    Matrix products run in floating point, which is exact as long as the
    digit dot products stay below the mantissa; float32 is used when the
    bound allows (fewer than 2^24), float64 otherwise.
    """
    k, n = g.shape
    cands = _all_vectors(field.order, k)
    if k == 0:
        return np.zeros((1, n), dtype=np.int64)
    if field.m == 1:
        digits, expanded = cands, np.asarray(g, dtype=np.int64)
    else:
        digits, expanded = field.digit_rows(cands), field.expand_matrix(g)
    dtype = np.float32 if digits.shape[1] * (field.p - 1) ** 2 < 2**24 else np.float64
    prod = (digits.astype(dtype) @ expanded.astype(dtype)) % field.p
    if field.m == 1:
        return prod.astype(np.int64)
    return field.rows_from_digits(prod.astype(np.int64))


def relay_decode_sum(
    y0: np.ndarray, code: BlockCode, dither_sum: np.ndarray, up: UplinkSpec
) -> np.ndarray:
    """Exact ML estimate of the field sum of the two transmitted messages.

    Maximizes the noise likelihood of y0 minus the combined dither minus
    each candidate codeword; ties go to the smallest candidate in the
    big-endian integer encoding.
    """
    field = up.field
    y0 = np.asarray(y0, dtype=np.int64)
    if y0.shape[0] != code.n:
        raise ValueError(f"received length {y0.shape[0]} != n={code.n}")
    z = field.sub(y0, np.asarray(dither_sum, dtype=np.int64))
    codewords = _encode_all(field, code.generator)
    noise = field.sub(z[None, :], codewords)
    with np.errstate(divide="ignore"):
        logp = np.log(validate_pmf(up.noise_pmf))
    scores = logp[noise].sum(axis=1)
    best = int(np.argmax(scores))
    return _all_vectors(field.order, code.k)[best].copy()


def _concat_blocks(parts: list[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)


def relay_word(
    field: Field, messages: Messages, table: MessageTable, cols: list[SimplifiedColumn]
) -> np.ndarray:
    """Noise-free relay word: per block, message plus function vector."""
    parts = []
    for b in table.blocks:
        v = build_v(field, cols, b.msg, messages)
        parts.append(field.add(np.asarray(messages[b.msg][: b.width]), v))
    return _concat_blocks(parts)


def uplink_round(
    field: Field,
    messages: Messages,
    table: MessageTable,
    cols: list[SimplifiedColumn],
    codes: dict[MsgId, BlockCode],
    up: UplinkSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Transmit every block over the noisy uplink; relay-decode each sum.

    Returns the relay's estimate of the concatenated sums.
    """
    parts = []
    for b in table.blocks:
        code = codes[b.msg]
        owner = block_owner(b.msg)
        w = np.asarray(messages[b.msg][: b.width], dtype=np.int64)
        v = build_v(field, cols, b.msg, messages)
        x_owner = encode_uplink(w, code, owner, field)
        x_one = encode_uplink(v, code, 1, field)
        noise = sample_uplink_noise(up, code.n, rng)
        y0 = field.add(field.add(x_owner, x_one), noise)
        dither_sum = field.add(code.dithers[owner], code.dithers[1])
        parts.append(relay_decode_sum(y0, code, dither_sum, up))
    return _concat_blocks(parts)


# -- downlink ---------------------------------------------------------------------


@dataclass
class CandidateSet:
    """Distinct relay words consistent with one user's prior messages.

    ``words`` rows are sorted lexicographically (equal to ascending
    big-endian integer index); ``witnesses[i]`` is one assignment of the
    unknown messages producing ``words[i]``.
    """

    user: int
    words: np.ndarray
    witnesses: list[Messages]


def candidate_set(
    field: Field,
    a: int,
    known: Messages,
    table: MessageTable,
    cols: list[SimplifiedColumn],
) -> CandidateSet:
    """Enumerate the relay words user ``a`` cannot rule out a priori.

    The relay word is a linear image of the messages, so the enumeration
    evaluates the affine map once per unknown symbol and then sweeps all
    symbol assignments in bulk.
    """
    unknown_ids = [m for m in message_ids(table.num_users) if a not in m]
    lengths = table.lengths
    total_syms = sum(lengths.k[m] for m in unknown_ids)
    if field.order**total_syms > ENUMERATION_LIMIT:
        raise CapabilityError(
            f"user {a}: candidate set of size {field.order}^{total_syms} exceeds 2^20"
        )

    def assemble(vec: np.ndarray) -> Messages:
        msgs = dict(known)
        at = 0
        for m in unknown_ids:
            msgs[m] = vec[at : at + lengths.k[m]]
            at += lengths.k[m]
        return msgs

    base_vec = np.zeros(total_syms, dtype=np.int64)
    u0 = relay_word(field, assemble(base_vec), table, cols)
    coeff = np.zeros((total_syms, u0.shape[0]), dtype=np.int64)
    for s in range(total_syms):
        e = np.zeros(total_syms, dtype=np.int64)
        e[s] = 1
        coeff[s] = field.sub(relay_word(field, assemble(e), table, cols), u0)

    assignments = _all_vectors(field.order, total_syms)
    if total_syms == 0:
        words = u0[None, :]
        return CandidateSet(a, words, [assemble(base_vec)])
    if field.m == 1:
        digits, expanded = assignments, coeff
    else:
        digits, expanded = field.digit_rows(assignments), field.expand_matrix(coeff)
    dtype = np.float32 if digits.shape[1] * (field.p - 1) ** 2 < 2**24 else np.float64
    prod = (digits.astype(dtype) @ expanded.astype(dtype)) % field.p
    if field.m == 1:
        words = prod.astype(np.int64)
    else:
        words = field.rows_from_digits(prod.astype(np.int64))
    words = field.add(words, u0[None, :])
    # Unique rows come out lexicographically sorted, i.e. by ascending
    # big-endian integer index; witnesses from the first producer.
    uniq, first = np.unique(words, axis=0, return_index=True)
    witnesses = [assemble(assignments[first[i]].copy()) for i in range(uniq.shape[0])]
    return CandidateSet(a, uniq, witnesses)


class DownlinkCodebook:
    """Random codebook over the relay input alphabet, materialized lazily.

    Entry ``u`` (a relay word, keyed by its digits) is an i.i.d. draw
    from the input distribution, deterministic in (seed, u).
    """

    def __init__(self, input_dist: np.ndarray, n_dl: int, seed: int):
        self.input_dist = validate_pmf(np.asarray(input_dist, dtype=np.float64))
        self.n_dl = int(n_dl)
        self.seed = int(seed)
        self._cache: dict[bytes, np.ndarray] = {}
        self._cdf = np.cumsum(self.input_dist)
        self._last = int(np.nonzero(self.input_dist)[0][-1])

    def codeword(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        key = u.tobytes()
        # Concurrent cache misses at worst recompute the same deterministic
        # row, so no locking is needed.
        got = self._cache.get(key)
        if got is None:
            rng = stream(self.seed, "downlink-codebook", *[int(s) for s in u])
            draws = rng.random(self.n_dl)
            got = np.minimum(
                np.sum(self._cdf[None, :] < draws[:, None], axis=1), self._last
            ).astype(np.int64)
            self._cache[key] = got
        return got


def user_decode_word(
    y_a: np.ndarray,
    codebook: DownlinkCodebook,
    candidates: CandidateSet,
    down: DownlinkSpec,
    a: int,
) -> np.ndarray:
    """Exact ML over the candidate relay words; ties to the smallest index."""
    w = down.channel(a)
    y_a = np.asarray(y_a, dtype=np.int64)
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    best_score = -np.inf
    best = candidates.words[0]
    for i in range(candidates.words.shape[0]):
        x0 = codebook.codeword(candidates.words[i])
        score = float(logw[x0, y_a].sum())
        if score > best_score:
            best_score = score
            best = candidates.words[i]
    return best.copy()


def recover_messages(
    field: Field,
    a: int,
    word: np.ndarray,
    known: Messages,
    table: MessageTable,
    cols: list[SimplifiedColumn],
) -> Messages:
    """All messages user ``a`` must decode, given the relay word.

    User 1 knows every starred symbol, subtracts each block's function
    vector, and reads the block messages directly.  Any other user first
    subtracts its own block messages to expose the function vectors of
    its blocks, solves the shuffled linear system for the starred
    symbols it lacks, and then proceeds as user 1 does.
    """
    word = np.asarray(word, dtype=np.int64)
    offsets = table.block_offsets()

    if a == 1:
        out = {}
        for b in table.blocks:
            v = build_v(field, cols, b.msg, known)
            seg = word[offsets[b.msg] : offsets[b.msg] + b.width]
            out[b.msg] = field.sub(seg, v)
        return out

    system = decode_matrix(cols, a, table)
    col_value = {}
    for b in table.blocks:
        if a in b.star_rows:
            seg = word[offsets[b.msg] : offsets[b.msg] + b.width]
            v_theta = field.sub(seg, np.asarray(known[b.msg][: b.width], dtype=np.int64))
            base = offsets[b.msg]
            for i in range(b.width):
                col_value[base + i] = int(v_theta[i])

    rhs = np.zeros(len(system.col_indices), dtype=np.int64)
    for r, ci in enumerate(system.col_indices):
        val = col_value[ci]
        for ref in system.known_refs[r]:
            val = field.sub(val, int(known[ref.msg][ref.pos]))
        rhs[r] = val
    sol = gf.solve_linear(field, system.matrix, rhs)
    if sol.status != "unique":
        raise ShuffleSolveError(
            f"user {a}: decode system is {sol.status}; shuffle guarantees violated"
        )

    full = dict(known)
    full[(1,)] = np.zeros(table.lengths.k[(1,)], dtype=np.int64)
    for j in range(2, table.num_users + 1):
        if j != a:
            full[(1, j)] = np.zeros(table.lengths.k[(1, j)], dtype=np.int64)
    for ref, val in zip(system.unknown_order, sol.x):
        full[ref.msg][ref.pos] = val

    out = {}
    for b in table.blocks:
        if a not in b.msg:
            v = build_v(field, cols, b.msg, full)
            seg = word[offsets[b.msg] : offsets[b.msg] + b.width]
            out[b.msg] = field.sub(seg, v)
    for m in message_ids(table.num_users):
        if a not in m and m not in out:
            out[m] = full[m]
    return out
