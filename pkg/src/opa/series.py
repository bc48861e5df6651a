"""Exact complex polynomials and truncated power series with certified tails.

A ``TruncSeries`` stores the first N+1 Maclaurin coefficients of an analytic
function h together with an envelope (M, r, gamma) certifying

    |h_k| <= M * r**k * (k+1)**gamma      for every k > N.

Every arithmetic operation recomputes the envelope so the inequality provably
holds for the result; downstream inner products and evaluations turn the
envelope into rigorous truncation-error bounds.  Geometric envelopes
(gamma = 0) cover rational data such as Blaschke factors; the polynomial
factor (k+1)**gamma admits kernels at boundary points, whose coefficients
decay like a power of k rather than geometrically.

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CannotCertifyError, EnvelopeOverflowError

# Trailing-coefficient threshold used by explicit normalize() calls only;
# construction drops exact zeros, never small values.
TRIM_TOL = 1e-14


def _as_coeff_array(coeffs) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if arr.ndim != 1:
        raise ValueError("coefficient data must be one-dimensional")
    if arr.size == 0:
        arr = np.zeros(1, dtype=complex)
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


class CPoly:
    """Complex polynomial sum_k c_k z^k stored densely from k = 0.

    Exact trailing zeros are dropped at construction so that
    ``degree == len(coeffs) - 1`` for nonzero polynomials; the zero
    polynomial stores the single coefficient 0 and reports degree -1.
    Small-but-nonzero trailing coefficients are only removed by an
    explicit :meth:`normalize` call.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(0,)):
        arr = _as_coeff_array(coeffs)
        n = arr.size
        while n > 1 and arr[n - 1] == 0:
            n -= 1
        self.coeffs = _freeze(arr[:n].copy())

    @property
    def degree(self) -> int:
        if self.is_zero:
            return -1
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    def coefficient(self, k: int) -> complex:
        if 0 <= k < self.coeffs.size:
            return complex(self.coeffs[k])
        return 0j

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(length, dtype=complex)
        take = min(length, self.coeffs.size)
        out[:take] = self.coeffs[:take]
        return out

    def normalize(self, tol: float = TRIM_TOL) -> "CPoly":
        """Trim trailing coefficients with modulus <= tol (explicit only)."""
        arr = self.coeffs
        n = arr.size
        while n > 1 and abs(arr[n - 1]) <= tol:
            n -= 1
        if n == 1 and abs(arr[0]) <= tol:
            return CPoly([0])
        return CPoly(arr[:n])

    def monic(self) -> "CPoly":
        if self.is_zero:
            raise ValueError("zero polynomial has no monic form")
        return self * (1.0 / self.coeffs[-1])

    def derivative(self) -> "CPoly":
        if self.coeffs.size == 1:
            return CPoly([0])
        k = np.arange(1, self.coeffs.size)
        return CPoly(self.coeffs[1:] * k)

    def shift(self, i: int) -> "CPoly":
        """Multiply by z**i."""
        if i < 0:
            raise ValueError("shift must be non-negative")
        if self.is_zero or i == 0:
            return self if i == 0 else CPoly(self.coeffs)
        return CPoly(np.concatenate([np.zeros(i, dtype=complex), self.coeffs]))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex) if not np.isscalar(z) else z
        result = 0j
        for c in self.coeffs[::-1]:
            result = result * z + c
        if np.isscalar(z):
            return complex(result)
        return result

    def __add__(self, other):
        if isinstance(other, CPoly):
            n = max(self.coeffs.size, other.coeffs.size)
            return CPoly(self.padded(n) + other.padded(n))
        arr = self.coeffs.copy()
        arr[0] += other
        return CPoly(arr)

    __radd__ = __add__

    def __neg__(self):
        return CPoly(-self.coeffs)

    def __sub__(self, other):
        if isinstance(other, CPoly):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CPoly):
            return poly_mul(self, other)
        return CPoly(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"CPoly({list(self.coeffs)})"


def poly_mul(a: CPoly, b: CPoly) -> CPoly:
    """Exact coefficient convolution; deg(ab) = deg a + deg b."""
    if a.is_zero or b.is_zero:
        return CPoly([0])
    return CPoly(np.convolve(a.coeffs, b.coeffs))


def reciprocal_taylor(f: CPoly, n: int) -> CPoly:
    """First n+1 Maclaurin coefficients of 1/f, requiring f(0) != 0."""
    if f.coefficient(0) == 0:
        raise ValueError("reciprocal requires a nonzero constant term")
    c = np.zeros(n + 1, dtype=complex)
    f0 = f.coefficient(0)
    c[0] = 1.0 / f0
    for k in range(1, n + 1):
        jmax = min(k, f.coeffs.size - 1)
        acc = 0j
        for j in range(1, jmax + 1):
            acc += f.coeffs[j] * c[k - j]
        c[k] = -acc / f0
    return CPoly(c)


def power_tail_bound(M: float, q: float, gamma: float, N: int) -> float:
    """Rigorous upper bound for sum_{k > N} M * q**k * (k+1)**gamma.

    Requires q < 1, or q == 1 with gamma < -1 (integral comparison).
    """
    if M == 0.0 or q == 0.0:
        return 0.0
    if q < 0 or M < 0:
        raise ValueError("M and q must be non-negative")
    if q > 1.0:
        raise CannotCertifyError("tail ratio exceeds 1; no geometric bound")
    if q == 1.0:
        if gamma >= -1.0:
            raise CannotCertifyError(
                "boundary tail with gamma >= -1 has no finite bound"
            )
        # terms decreasing: sum_{k>N} (k+1)^gamma <= integral_N^inf (x+1)^gamma dx
        return M * (N + 1.0) ** (gamma + 1.0) / (-gamma - 1.0)
    if gamma <= 0:
        return M * q ** (N + 1) * (N + 2.0) ** gamma / (1.0 - q)
    # absorb the polynomial factor into a slightly larger ratio
    qhat = 0.5 * (1.0 + q)
    t = q / qhat
    kstar = gamma / math.log(1.0 / t) - 1.0
    cands = {0, max(0, math.floor(kstar)), max(0, math.ceil(kstar))}
    C = max((k + 1.0) ** gamma * t**k for k in cands)
    return M * C * qhat ** (N + 1) / (1.0 - qhat)


def needed_length(M: float, r: float, gamma: float, eps: float) -> int:
    """Smallest stored length L so the envelope tail beyond L-1 is <= eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if M == 0.0 or r == 0.0:
        return 1
    lo, hi = 1, 1
    while power_tail_bound(M, r, gamma, hi - 1) > eps:
        hi *= 2
        if hi > 10**7:
            raise CannotCertifyError("required series length exceeds 1e7")
    while lo < hi:
        mid = (lo + hi) // 2
        if power_tail_bound(M, r, gamma, mid - 1) <= eps:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _covering_M(M, r, gamma, ks, values):
    """Smallest M' >= M with values[i] <= M' r**ks[i] (ks[i]+1)**gamma."""
    if len(ks) == 0:
        return M
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(values, dtype=float)
    denom = r**ks * (ks + 1.0) ** gamma
    if np.any(denom <= 0):
        raise EnvelopeOverflowError("cannot cover nonzero values with r == 0")
    return float(max(M, np.max(vals / denom)))


class TruncSeries:
    """Stored Maclaurin prefix plus certified envelope for unstored terms.

    The envelope (tail_M, tail_r, tail_gamma) asserts
    |h_k| <= tail_M * tail_r**k * (k+1)**tail_gamma for all k > order.
    tail_r < 1 keeps the function in every weighted space with
    subexponential weights; tail_r == 1 is admitted only with
    tail_gamma < -1 (power-decay data such as boundary kernels).
    """

    __slots__ = ("coeffs", "tail_M", "tail_r", "tail_gamma")

    def __init__(self, coeffs, tail_M: float, tail_r: float, tail_gamma: float = 0.0):
        arr = _as_coeff_array(coeffs)
        tail_M = float(tail_M)
        tail_r = float(tail_r)
        tail_gamma = float(tail_gamma)
        if tail_M < 0:
            raise ValueError("tail_M must be non-negative")
        if tail_r < 0:
            raise ValueError("tail_r must be non-negative")
        if tail_M > 0:
            if tail_r > 1.0 or (tail_r == 1.0 and tail_gamma >= -1.0):
                raise EnvelopeOverflowError(
                    f"invalid envelope: r={tail_r}, gamma={tail_gamma}"
                )
        self.coeffs = _freeze(arr.copy())
        self.tail_M = tail_M
        self.tail_r = tail_r
        self.tail_gamma = tail_gamma

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def from_poly(p: CPoly) -> "TruncSeries":
        return TruncSeries(p.coeffs, 0.0, 0.0, 0.0)

    @property
    def order(self) -> int:
        """Largest stored index N."""
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def coefficient(self, k: int) -> complex:
        if 0 <= k < self.coeffs.size:
            return complex(self.coeffs[k])
        raise IndexError("coefficient index beyond stored prefix")

    def envelope_at(self, k: int) -> float:
        return self.tail_M * self.tail_r**k * (k + 1.0) ** self.tail_gamma

    def truncate(self, n: int) -> CPoly:
        """Exact degree-n Taylor polynomial of the stored prefix."""
        if n < 0 or n > self.order:
            raise IndexError(f"truncation degree {n} outside stored range")
        return CPoly(self.coeffs[: n + 1])

    # -- certified evaluation --------------------------------------------------

    def eval_certified(self, z: complex) -> tuple[complex, float]:
        """Value at z plus a rigorous bound on the discarded tail."""
        result = 0j
        for c in self.coeffs[::-1]:
            result = result * z + c
        err = power_tail_bound(
            self.tail_M, self.tail_r * abs(z), self.tail_gamma, self.order
        )
        return complex(result), err

    def __call__(self, z):
        return self.eval_certified(z)[0]

    # -- a majorant valid at every index, stored or not ------------------------

    def _global_majorant(self, r: float):
        """M' with |h_k| <= M' r**k (k+1)**tail_gamma for ALL k >= 0.

        Requires r >= tail_r and r > 0.
        """
        if r < self.tail_r:
            raise ValueError("majorant ratio below envelope ratio")
        ks = np.arange(self.coeffs.size)
        return _covering_M(self.tail_M, r, self.tail_gamma, ks, np.abs(self.coeffs))

    # -- arithmetic ------------------------------------------------------------

    def scale(self, c: complex) -> "TruncSeries":
        return TruncSeries(
            self.coeffs * complex(c), abs(c) * self.tail_M, self.tail_r, self.tail_gamma
        )

    def __neg__(self):
        return self.scale(-1.0)

    def shift(self, i: int) -> "TruncSeries":
        """Multiply by z**i; the envelope is re-based to the new indices."""
        if i < 0:
            raise ValueError("shift must be non-negative")
        if i == 0:
            return self
        coeffs = np.concatenate([np.zeros(i, dtype=complex), self.coeffs])
        if self.tail_M == 0.0:
            return TruncSeries(coeffs, 0.0, 0.0, 0.0)
        # |h_k| = |s_{k-i}| <= M r^(k-i) (k-i+1)^gamma for k > order + i
        M = self.tail_M * self.tail_r ** (-i)
        if self.tail_gamma < 0:
            kmin = self.order + i + 1
            M *= ((kmin - i + 1.0) / (kmin + 1.0)) ** self.tail_gamma
        return TruncSeries(coeffs, M, self.tail_r, self.tail_gamma)

    def add(self, other: "TruncSeries") -> "TruncSeries":
        a, b = self, other
        if a.tail_M == 0.0 and b.tail_M == 0.0:
            n = max(len(a), len(b))
            pa = np.zeros(n, dtype=complex)
            pa[: len(a)] = a.coeffs
            pb = np.zeros(n, dtype=complex)
            pb[: len(b)] = b.coeffs
            return TruncSeries(pa + pb, 0.0, 0.0, 0.0)
        out_len = min(len(a), len(b))
        coeffs = a.coeffs[:out_len] + b.coeffs[:out_len]
        r = max(a.tail_r, b.tail_r)
        gammas = [s.tail_gamma for s in (a, b) if s.tail_M > 0]
        gamma = max(gammas)
        M = a.tail_M + b.tail_M
        # indices in [out_len, max stored] still have stored data on one side;
        # raise M so the envelope covers them too
        hi = max(a.order, b.order)
        if hi >= out_len:
            ks = np.arange(out_len, hi + 1)
            vals = np.array(
                [
                    (abs(a.coeffs[k]) if k <= a.order else a.envelope_at(k))
                    + (abs(b.coeffs[k]) if k <= b.order else b.envelope_at(k))
                    for k in ks
                ]
            )
            M = _covering_M(M, r, gamma, ks, vals)
        return TruncSeries(coeffs, M, r, gamma)

    def sub(self, other: "TruncSeries") -> "TruncSeries":
        return self.add(other.scale(-1.0))

    def add_poly(self, p: CPoly) -> "TruncSeries":
        if p.degree >= len(self):
            raise ValueError("polynomial degree exceeds stored series length")
        return self.add(TruncSeries.from_poly(p))

    def mul_poly(self, p: CPoly, out_len: int | None = None) -> "TruncSeries":
        """Multiply by an exact polynomial factor."""
        if p.is_zero:
            return TruncSeries([0], 0.0, 0.0, 0.0)
        if self.tail_M == 0.0:
            prod = np.convolve(p.coeffs, self.coeffs)
            return TruncSeries(prod, 0.0, 0.0, 0.0)
        d = p.degree
        if out_len is None:
            out_len = len(self)
        if out_len > len(self):
            raise ValueError("out_len beyond exact convolution range")
        if out_len <= d:
            raise ValueError("out_len must exceed the polynomial degree")
        coeffs = np.convolve(p.coeffs, self.coeffs)[:out_len]
        r = self.tail_r
        gamma = self.tail_gamma
        Mhat = self._global_majorant(r)
        weight = float(np.sum(np.abs(p.coeffs) * r ** (-np.arange(d + 1.0))))
        M = Mhat * weight
        if gamma < 0:
            # (k-j+1)^gamma <= (k-d+1)^gamma; worst ratio at k = out_len
            M *= ((out_len - d + 1.0) / (out_len + 1.0)) ** gamma
        return TruncSeries(coeffs, M, r, gamma)

    def mul(self, other: "TruncSeries", out_len: int | None = None) -> "TruncSeries":
        return series_mul(self, other, out_len)

    def __repr__(self):
        return (
            f"TruncSeries(len={len(self)}, M={self.tail_M:.3g}, "
            f"r={self.tail_r:.3g}, gamma={self.tail_gamma:.3g})"
        )


def series_mul(a: TruncSeries, b: TruncSeries, out_len: int | None = None) -> TruncSeries:
    """Convolution of stored prefixes with a recomputed, provable envelope.

    Coefficients are exact through out_len - 1, which must not exceed the
    shorter stored length.  The output envelope comes from global geometric
    majorants of both factors: the (k+1) cross-term count is absorbed into
    the polynomial part of the envelope.
    """
    if a.tail_M == 0.0 and b.tail_M == 0.0:
        prod = np.convolve(a.coeffs, b.coeffs)
        if out_len is not None:
            if out_len > prod.size:
                raise ValueError("out_len beyond product length")
            prod = prod[:out_len]
        return TruncSeries(prod, 0.0, 0.0, 0.0)
    # a factor with zero tail is exactly zero beyond its stored prefix, so it
    # does not limit the exact convolution range
    usable = min(
        len(a) if a.tail_M > 0 else 10**9,
        len(b) if b.tail_M > 0 else 10**9,
    )
    if out_len is None:
        out_len = min(usable, len(a) + len(b) - 1)
    if out_len > usable:
        raise ValueError("out_len exceeds exact convolution range")
    rhat = max(a.tail_r, b.tail_r)
    if rhat >= 1.0:
        # the product envelope would need ratio 1 with positive polynomial
        # growth from the cross-term count, which is never summable
        raise EnvelopeOverflowError(
            "product envelope ratio reaches 1 with non-summable growth"
        )
    Ma = a._global_majorant(rhat)
    Mb = b._global_majorant(rhat)
    gamma = 1.0 + max(a.tail_gamma, 0.0) + max(b.tail_gamma, 0.0)
    coeffs = np.convolve(a.coeffs, b.coeffs)[:out_len]
    return TruncSeries(coeffs, Ma * Mb, rhat, gamma)


def taylor_truncate(h, n: int) -> CPoly:
    """Degree-n truncation of a stored series or polynomial."""
    if isinstance(h, CPoly):
        if n < 0:
            raise IndexError("truncation degree must be non-negative")
        return CPoly(h.coeffs[: n + 1])
    return h.truncate(n)


def geometric_series(c: complex, *, eps: float | None = None, length: int | None = None) -> TruncSeries:
    """The series sum_k c**k z**k = 1/(1 - c z), with exact envelope (1, |c|).

    Requires |c| < 1.  The stored length is chosen from the envelope so the
    coefficient tail beyond it sums below eps (default 1e-12).
    """
    c = complex(c)
    rho = abs(c)
    if rho >= 1.0:
        raise EnvelopeOverflowError("geometric ratio must satisfy |c| < 1")
    if c == 0:
        return TruncSeries([1.0], 0.0, 0.0, 0.0)
    if length is None:
        length = needed_length(1.0, rho, 0.0, eps if eps is not None else 1e-12)
    k = np.arange(length)
    return TruncSeries(c**k, 1.0, rho, 0.0)


def blaschke_factor(beta: complex, *, eps: float | None = None, length: int | None = None) -> TruncSeries:
    """Single Blaschke factor (|b|/b)(b - z)/(1 - conj(b) z), |b| < 1.

    Its value at 0 is |b| and its coefficients decay like |b|**k exactly:
    coeff_0 = |b|, coeff_k = (|b|/b) conj(b)**(k-1) (|b|**2 - 1) for k >= 1.
    For beta == 0 the factor degenerates to z.
    """
    beta = complex(beta)
    rho = abs(beta)
    if rho >= 1.0:
        raise ValueError("Blaschke factor requires |beta| < 1")
    if beta == 0:
        return TruncSeries([0.0, 1.0], 0.0, 0.0, 0.0)
    M = (1.0 - rho**2) / rho
    if length is None:
        length = needed_length(M, rho, 0.0, eps if eps is not None else 1e-12)
        length = max(length, 2)
    k = np.arange(1, length)
    coeffs = np.empty(length, dtype=complex)
    coeffs[0] = rho
    coeffs[1:] = (rho / beta) * np.conj(beta) ** (k - 1) * (rho**2 - 1.0)
    return TruncSeries(coeffs, M, rho, 0.0)


def blaschke_product(betas, *, eps: float = 1e-12, length: int | None = None) -> TruncSeries:
    """Finite Blaschke product over the given points (repeats allowed)."""
    betas = [complex(b) for b in betas]
    if not betas:
        return TruncSeries([1.0], 0.0, 0.0, 0.0)
    if length is None:
        rho = max(abs(b) for b in betas)
        worst = max(
            (1.0 - abs(b) ** 2) / abs(b) if b != 0 else 1.0 for b in betas
        )
        length = needed_length(worst ** len(betas), rho, float(len(betas)), eps)
        length = max(length, 8)
    out = blaschke_factor(betas[0], length=length)
    for b in betas[1:]:
        out = series_mul(out, blaschke_factor(b, length=length))
    return out
