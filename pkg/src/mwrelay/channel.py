"""Channel models and information measures.

The uplink adds field-valued noise to the field sum of the user inputs;
the downlink is one discrete memoryless channel per user, described by
its row-stochastic transition matrix.  Only the per-user marginals enter
any rate expression or decoding rule, so the downlink is stored (and
sampled) as conditionally independent marginals given the relay input.

All logarithms are base 2; rates and entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .gf import Field

PMF_TOL = 1e-12


def validate_pmf(pmf: np.ndarray, what: str = "pmf") -> np.ndarray:
    pmf = np.asarray(pmf, dtype=np.float64)
    if pmf.ndim != 1 or pmf.size == 0:
        raise ValueError(f"{what} must be a nonempty 1-D array")
    if np.any(pmf < 0):
        raise ValueError(f"{what} has negative entries")
    if abs(float(pmf.sum()) - 1.0) > PMF_TOL:
        raise ValueError(f"{what} sums to {pmf.sum()!r}, not 1")
    return pmf


@dataclass
class UplinkSpec:
    """Additive-noise uplink over a finite field."""

    field: Field
    noise_pmf: np.ndarray

    def __post_init__(self):
        self.noise_pmf = validate_pmf(self.noise_pmf, "noise_pmf")
        if self.noise_pmf.size != self.field.order:
            raise ValueError(
                f"noise pmf has {self.noise_pmf.size} entries for field of order {self.field.order}"
            )


@dataclass
class DownlinkSpec:
    """Per-user DMCs from the relay input to each user's output."""

    input_size: int
    user_channels: tuple[np.ndarray, ...] = dc_field(default=())

    def __post_init__(self):
        if self.input_size < 1:
            raise ValueError("downlink input alphabet must be nonempty")
        chans = []
        for a, w in enumerate(self.user_channels, start=1):
            w = np.asarray(w, dtype=np.float64)
            if w.ndim != 2 or w.shape[0] != self.input_size:
                raise ValueError(f"user {a} channel matrix must have {self.input_size} rows")
            if np.any(w < 0):
                raise ValueError(f"user {a} channel matrix has negative entries")
            if np.any(np.abs(w.sum(axis=1) - 1.0) > PMF_TOL):
                raise ValueError(f"user {a} channel matrix rows must sum to 1")
            chans.append(w)
        self.user_channels = tuple(chans)

    @property
    def num_users(self) -> int:
        return len(self.user_channels)

    def channel(self, a: int) -> np.ndarray:
        """Transition matrix of user ``a`` (1-based)."""
        if not 1 <= a <= self.num_users:
            raise ValueError(f"no such user {a}")
        return self.user_channels[a - 1]


def identity_downlink(num_users: int, alphabet: int = 2) -> DownlinkSpec:
    """Noiseless downlink where every user observes the relay input."""
    eye = np.eye(alphabet)
    return DownlinkSpec(alphabet, tuple(eye for _ in range(num_users)))


def entropy(pmf: np.ndarray) -> float:
    """Shannon entropy in bits, with 0*log(0) = 0."""
    pmf = validate_pmf(pmf, "pmf")
    nz = pmf[pmf > 0]
    return float(-(nz * np.log2(nz)).sum())


def uplink_bound(up: UplinkSpec) -> float:
    """log2(F) minus the noise entropy: the uplink rate ceiling."""
    return float(np.log2(up.field.order)) - entropy(up.noise_pmf)


def mutual_info(dist: np.ndarray, w: np.ndarray) -> float:
    """I(X;Y) for input distribution ``dist`` and channel matrix ``w``."""
    dist = validate_pmf(dist, "input distribution")
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != dist.size:
        raise ValueError(f"channel matrix shape {w.shape} does not match input size {dist.size}")
    out = dist @ w
    h_y = entropy(out / out.sum())
    h_y_given_x = 0.0
    for x in range(dist.size):
        if dist[x] > 0:
            row = w[x]
            nz = row[row > 0]
            h_y_given_x -= dist[x] * float((nz * np.log2(nz)).sum())
    return h_y - h_y_given_x


def sample_uplink_noise(up: UplinkSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. noise symbols drawn from the uplink noise law."""
    return _sample_categorical(up.noise_pmf, n, rng)


def sample_downlink(
    down: DownlinkSpec, a: int, x0: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """User ``a``'s outputs for the relay input sequence ``x0``."""
    w = down.channel(a)
    x0 = np.asarray(x0, dtype=np.int64)
    if x0.size == 0:
        return np.zeros(0, dtype=np.int64)
    cdf = np.cumsum(w, axis=1)
    # Last positive-probability symbol per row, the cap for float roundoff.
    last = (w.shape[1] - 1) - np.argmax(w[:, ::-1] > 0, axis=1)
    u = rng.random(x0.size)
    out = np.sum(cdf[x0] < u[:, None], axis=1).astype(np.int64)
    return np.minimum(out, last[x0])


def _sample_categorical(pmf: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    cdf = np.cumsum(pmf)
    last = int(np.nonzero(pmf)[0][-1])
    u = rng.random(n)
    out = np.sum(cdf[None, :] < u[:, None], axis=1).astype(np.int64)
    return np.minimum(out, last)
