"""Exact arithmetic and linear algebra over finite fields GF(p^m).

Field elements are plain integers in [0, F) whose base-p digits are the
coefficients of a polynomial over GF(p); multiplication is carried out
modulo a monic irreducible reduction polynomial of degree m.  A
:class:`Field` holds the reduction polynomial together with log/exp
tables, and every operation takes the field explicitly, so element
values themselves stay context-free ints (or numpy integer arrays).

Vectors are 1-D numpy arrays, matrices 2-D numpy arrays, both with
entries in [0, F).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FieldSpecError(ValueError):
    """Raised for an invalid field specification."""


def _smallest_prime_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _prime_factors(n: int) -> list[int]:
    out = []
    while n > 1:
        f = _smallest_prime_factor(n)
        out.append(f)
        while n % f == 0:
            n //= f
    return out


def _poly_trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_trim(out)


def _poly_mod(a: list[int], mod: list[int], p: int) -> list[int]:
    a = _poly_trim(list(a))
    dm = len(mod) - 1
    lead_inv = pow(mod[-1], -1, p)
    while len(a) - 1 >= dm and a:
        shift = len(a) - 1 - dm
        factor = (a[-1] * lead_inv) % p
        for i, mi in enumerate(mod):
            a[shift + i] = (a[shift + i] - factor * mi) % p
        a = _poly_trim(a)
    return a


def _int_to_poly(v: int, p: int) -> list[int]:
    out = []
    while v:
        out.append(v % p)
        v //= p
    return out


def _poly_to_int(c: list[int], p: int) -> int:
    v = 0
    for d in reversed(c):
        v = v * p + d
    return v


def _is_irreducible(poly: list[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    deg = len(poly) - 1
    for d in range(1, deg // 2 + 1):
        # Monic degree-d polynomials enumerated by their low-coefficient part.
        for low in range(p**d):
            divisor = _int_to_poly(low, p) + [0] * d
            divisor = divisor[:d] + [1]
            if not _poly_mod(poly, divisor, p):
                return False
    return True


def default_reduction_poly(p: int, m: int) -> tuple[int, ...]:
    """Smallest monic irreducible degree-m polynomial over GF(p).

    "Smallest" orders polynomials by their packed integer value
    sum(c_i * p^i); coefficients are ascending, constant term first.
    """
    for low in range(p**m):
        cand = _int_to_poly(low, p) + [0] * m
        cand = cand[:m] + [1]
        if _is_irreducible(cand, p):
            return tuple(cand)
    raise FieldSpecError(f"no irreducible polynomial of degree {m} over GF({p})")


@dataclass
class LinearSolution:
    """Outcome of solving A x = b over a field."""

    status: str  # "unique" | "inconsistent" | "underdetermined"
    x: np.ndarray | None = None


class Field:
    """The finite field GF(p^m) of order F = p^m.

    Parameters
    ----------
    order : int
        Field size F; must be a prime power.
    reduction_poly : sequence of int, optional
        m+1 base-p digits of a monic irreducible polynomial, constant
        term first.  Defaults to the smallest irreducible for m > 1 and
        is ignored for prime fields.
    """

    def __init__(self, order: int, reduction_poly=None):
        if order < 2:
            raise FieldSpecError("field order must be at least 2")
        p = _smallest_prime_factor(order)
        m = 0
        n = order
        while n > 1:
            if n % p:
                raise FieldSpecError(f"{order} is not a prime power")
            n //= p
            m += 1
        self.order = order
        self.p = p
        self.m = m
        if m == 1:
            self.reduction_poly = None
        else:
            if reduction_poly is None:
                self.reduction_poly = default_reduction_poly(p, m)
            else:
                poly = tuple(int(c) % p for c in reduction_poly)
                if len(poly) != m + 1 or poly[-1] != 1:
                    raise FieldSpecError(
                        f"reduction polynomial must be monic of degree {m} (got {poly})"
                    )
                if not _is_irreducible(list(poly), p):
                    raise FieldSpecError(f"reduction polynomial {poly} is reducible over GF({p})")
                self.reduction_poly = poly
        self._powers = p ** np.arange(m, dtype=np.int64)
        self._build_log_tables()

    # -- construction helpers -------------------------------------------------

    def _mul_scalar_raw(self, a: int, b: int) -> int:
        """Table-free product, used only while building the tables."""
        if self.m == 1:
            return (a * b) % self.p
        prod = _poly_mul(_int_to_poly(a, self.p), _int_to_poly(b, self.p), self.p)
        return _poly_to_int(_poly_mod(prod, list(self.reduction_poly), self.p), self.p)

    def _pow_scalar_raw(self, a: int, e: int) -> int:
        out = 1
        base = a
        while e:
            if e & 1:
                out = self._mul_scalar_raw(out, base)
            base = self._mul_scalar_raw(base, base)
            e >>= 1
        return out

    def _build_log_tables(self) -> None:
        n = self.order - 1
        gen = 1
        if n > 1:
            primes = _prime_factors(n)
            for cand in range(2, self.order):
                if all(self._pow_scalar_raw(cand, n // q) != 1 for q in primes):
                    gen = cand
                    break
        exp = np.zeros(max(n, 1), dtype=np.int64)
        log = np.full(self.order, -1, dtype=np.int64)
        v = 1
        for i in range(n):
            exp[i] = v
            log[v] = i
            v = self._mul_scalar_raw(v, gen)
        if n == 1:
            exp[0] = 1
            log[1] = 0
        self._exp = exp
        self._log = log

    # -- element arithmetic ----------------------------------------------------

    def add(self, a, b):
        """Digit-wise addition mod p (works on ints and integer arrays)."""
        if self.p == 2:
            return a ^ b
        out = 0
        pk = 1
        for _ in range(self.m):
            out = out + ((a // pk + b // pk) % self.p) * pk
            pk *= self.p
        return out

    def neg(self, a):
        if self.p == 2:
            return a if not isinstance(a, np.ndarray) else a.copy()
        out = 0
        pk = 1
        for _ in range(self.m):
            out = out + ((self.p - a // pk % self.p) % self.p) * pk
            pk *= self.p
        return out

    def sub(self, a, b):
        if self.p == 2:
            return a ^ b
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            a, b = np.broadcast_arrays(a, b)
            out = np.zeros(a.shape, dtype=np.int64)
            nz = (a != 0) & (b != 0)
            if np.any(nz):
                out[nz] = self._exp[(self._log[a[nz]] + self._log[b[nz]]) % (self.order - 1)]
            return out
        if a == 0 or b == 0:
            return 0
        return int(self._exp[(int(self._log[a]) + int(self._log[b])) % (self.order - 1)])

    def inv(self, a):
        if isinstance(a, np.ndarray):
            if np.any(a == 0):
                raise ZeroDivisionError("0 has no multiplicative inverse")
            n = self.order - 1
            return self._exp[(n - self._log[a]) % n]
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        n = self.order - 1
        return int(self._exp[(n - int(self._log[a])) % n])

    def elements(self) -> range:
        return range(self.order)

    # -- digit representation ---------------------------------------------------

    def digits(self, a) -> np.ndarray:
        """Base-p digits of element(s), ascending power, shape (..., m)."""
        a = np.asarray(a, dtype=np.int64)
        return (a[..., None] // self._powers) % self.p

    def from_digits(self, d: np.ndarray):
        d = np.asarray(d, dtype=np.int64)
        return (d % self.p) @ self._powers

    def scalar_rep(self, e: int) -> np.ndarray:
        """m-by-m GF(p) matrix M with digits(x*e) = digits(x) @ M (mod p)."""
        rows = [self.digits(self.mul(int(self.p**r), int(e))) for r in range(self.m)]
        return np.stack(rows).astype(np.int64)

    def expand_matrix(self, a: np.ndarray) -> np.ndarray:
        """GF(p)-linear expansion of right multiplication by matrix ``a``.

        Returns a (rows*m, cols*m) integer matrix E with
        digit_rows(u @ a) = digit_rows(u) @ E (mod p).
        """
        a = np.asarray(a, dtype=np.int64)
        rows, cols = a.shape
        out = np.zeros((rows * self.m, cols * self.m), dtype=np.int64)
        reps = {}
        for i in range(rows):
            for j in range(cols):
                e = int(a[i, j])
                if e == 0:
                    continue
                if e not in reps:
                    reps[e] = self.scalar_rep(e)
                out[i * self.m : (i + 1) * self.m, j * self.m : (j + 1) * self.m] = reps[e]
        return out

    def digit_rows(self, v: np.ndarray) -> np.ndarray:
        """(B, k) elements -> (B, k*m) GF(p) digit rows."""
        v = np.asarray(v, dtype=np.int64)
        return self.digits(v).reshape(v.shape[0], -1)

    def rows_from_digits(self, d: np.ndarray) -> np.ndarray:
        b = d.shape[0]
        return self.from_digits(d.reshape(b, -1, self.m))

    # -- serialization / identity -----------------------------------------------

    def to_json(self) -> dict:
        out = {"order": self.order}
        if self.reduction_poly is not None:
            out["reduction_poly"] = list(self.reduction_poly)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Field":
        return cls(int(obj["order"]), obj.get("reduction_poly"))

    def __eq__(self, other):
        return (
            isinstance(other, Field)
            and other.order == self.order
            and other.reduction_poly == self.reduction_poly
        )

    def __hash__(self):
        return hash((self.order, self.reduction_poly))

    def __repr__(self):
        if self.reduction_poly is None:
            return f"Field({self.order})"
        return f"Field({self.order}, reduction_poly={list(self.reduction_poly)})"


# -- linear algebra ------------------------------------------------------------


def mat_mul(field: Field, u: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Row vector times matrix over the field."""
    u = np.asarray(u, dtype=np.int64)
    g = np.asarray(g, dtype=np.int64)
    if u.ndim != 1 or g.ndim != 2 or u.shape[0] != g.shape[0]:
        raise ValueError(f"dimension mismatch: u has {u.shape}, G has {g.shape}")
    out = np.zeros(g.shape[1], dtype=np.int64)
    for i in range(u.shape[0]):
        if u[i]:
            out = field.add(out, field.mul(int(u[i]), g[i]))
    return out


def _eliminate(field: Field, m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """In-place reduced row echelon form; returns (matrix, pivot columns)."""
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.nonzero(m[r:, c])[0]
        if hit.size == 0:
            continue
        pr = r + int(hit[0])
        if pr != r:
            m[[r, pr]] = m[[pr, r]]
        m[r] = field.mul(field.inv(int(m[r, c])), m[r])
        others = np.nonzero(m[:, c])[0]
        for i in others:
            if i != r:
                m[i] = field.sub(m[i], field.mul(int(m[i, c]), m[r]))
        pivots.append(c)
        r += 1
    return m, pivots


def rank(field: Field, a: np.ndarray) -> int:
    a = np.array(a, dtype=np.int64, copy=True)
    if a.size == 0:
        return 0
    _, pivots = _eliminate(field, a)
    return len(pivots)


def solve_linear(field: Field, a: np.ndarray, b: np.ndarray) -> LinearSolution:
    """Solve a x = b by Gaussian elimination over the field.

    Returns the unique solution when it exists, otherwise classifies the
    system as inconsistent or underdetermined.
    """
    a = np.array(a, dtype=np.int64, copy=True)
    b = np.asarray(b, dtype=np.int64)
    if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: A has {a.shape}, b has {b.shape}")
    rows, cols = a.shape
    aug = np.concatenate([a, b[:, None]], axis=1)
    aug, pivots = _eliminate(field, aug)
    if cols in pivots:
        return LinearSolution("inconsistent")
    # Pivot in the rhs column means some row reduced to 0 = nonzero.
    coeff_pivots = [c for c in pivots if c < cols]
    for i in range(len(coeff_pivots), rows):
        if aug[i, cols]:
            return LinearSolution("inconsistent")
    if len(coeff_pivots) < cols:
        return LinearSolution("underdetermined")
    x = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(coeff_pivots):
        x[c] = aug[i, cols]
    return LinearSolution("unique", x)


def random_matrix(field: Field, rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix with i.i.d. uniform field entries drawn from ``rng``."""
    return rng.integers(0, field.order, size=(rows, cols), dtype=np.int64)


def random_vec(field: Field, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, field.order, size=n, dtype=np.int64)
