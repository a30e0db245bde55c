"""Special functions: log-gamma, Mittag-Leffler, Pochhammer, and the
generalized Stirling triangles of the operator x**r (d/dx)**m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ConvergenceError",
    "gamma_ln",
    "mittag_leffler",
    "pochhammer",
    "StirlingTable",
    "stirling_table",
    "stirling_oracle",
]

_ML_MAX_TERMS = 512
_ML_LOG_TERM_CAP = 700.0   # exp() overflow guard; bounds the usable |z| range
_GAMMA_MAX_ARG = 171.0     # math.gamma overflows just past 171.62

_ORACLE_MAX_RM = 6
_ORACLE_MAX_N = 12


class ConvergenceError(ArithmeticError):
    """A series failed to converge within its documented domain."""


def gamma_ln(x: float) -> float:
    """log Gamma(x) for x > 0.

    Delegates to the platform lgamma, which is accurate to a few ulp over
    the supported range (relative error well under 1e-13 on [1e-3, 170]).
    """
    if not (math.isfinite(x) and x > 0.0):
        raise ValueError(f"gamma_ln requires finite x > 0, got {x}")
    return math.lgamma(x)


def mittag_leffler(alpha: float, z: float) -> float:
    """One-parameter Mittag-Leffler function E_alpha(z) = sum z**j / Gamma(alpha j + 1).

    Direct series summation with compensated accumulation.  Terms use the
    gamma function directly while its argument stays in double range and
    switch to log space beyond that.  For z >= 0 the series stops once the
    next term drops below 1e-16 of the accumulated sum; for z < 0 it stops
    once terms are decreasing and below 1e-16 absolute, where the
    alternating tail is bounded by the first omitted term.  Arguments whose
    terms overflow double precision, or fail to start decreasing within the
    term cap, are rejected.
    """
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha}")
    if not math.isfinite(z):
        raise ValueError(f"z must be finite, got {z}")
    if z == 0.0:
        return 1.0
    log_abs_z = math.log(abs(z))
    negative = z < 0.0
    acc = 1.0
    comp = 0.0
    zpow = 1.0
    prev_mag = 1.0
    for j in range(1, _ML_MAX_TERMS + 1):
        zpow *= z
        g_arg = alpha * j + 1.0
        if g_arg <= _GAMMA_MAX_ARG and math.isfinite(zpow):
            term = zpow / math.gamma(g_arg)
            mag = abs(term)
        else:
            log_term = j * log_abs_z - math.lgamma(g_arg)
            if log_term > _ML_LOG_TERM_CAP:
                raise ConvergenceError(
                    f"series term overflows at j={j} for alpha={alpha}, z={z}; "
                    "argument outside the supported series domain"
                )
            mag = math.exp(log_term)
            term = -mag if (negative and j % 2) else mag
        decreasing = mag < prev_mag
        if decreasing and mag <= (1e-16 if negative else 1e-16 * (acc + comp)):
            return acc + comp
        total = acc + term
        if abs(acc) >= abs(term):
            comp += (acc - total) + term
        else:
            comp += (term - total) + acc
        acc = total
        prev_mag = mag
    raise ConvergenceError(
        f"series did not converge within {_ML_MAX_TERMS} terms "
        f"for alpha={alpha}, z={z}"
    )


def pochhammer(lam, r: int):
    """Rising factorial (lam)_r = lam (lam+1) ... (lam+r-1), with (lam)_0 = 1.

    Integer input stays exact arbitrary-precision integer; float input is
    evaluated as a float product and rejected on overflow.  Matches
    Gamma(lam+r)/Gamma(lam) wherever the ratio is defined.
    """
    if not isinstance(r, int) or isinstance(r, bool):
        raise ValueError(f"r must be an int, got {r!r}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    exact = isinstance(lam, int) and not isinstance(lam, bool)
    out = 1 if exact else 1.0
    for j in range(r):
        out = out * (lam + j)
    if not exact and not math.isfinite(out):
        raise OverflowError(f"pochhammer({lam}, {r}) overflows double precision")
    return out


# ---------------------------------------------------------------------------
# generalized Stirling triangles
# ---------------------------------------------------------------------------
#
# (x**r D**m)**n expands over terms x**e D**f with e - f = n(r - m); collecting
# coefficients by f gives a triangular integer array S(n, k), indexed from the
# smallest D-power upward: f = k - 1 + n m - min(r, m)(n - 1), k = 1 .. width,
# width = 1 + min(r, m)(n - 1).  For r = m = 1 this is the classical Stirling
# triangle of the second kind.


def _row_width(r: int, m: int, n: int) -> int:
    return 1 + min(r, m) * (n - 1)


def _f_floor(r: int, m: int, n: int) -> int:
    # smallest derivative power appearing at level n
    return n * m - min(r, m) * (n - 1)


@dataclass(frozen=True)
class StirlingTable:
    """Exact-integer triangle S(n, k) for n = 0..max_n.

    Row 0 is the single entry S(0, 0) = 1; row n >= 1 holds k = 1..width(n).
    Entries outside that support are zero.
    """

    r: int
    m: int
    max_n: int
    rows: tuple

    def width(self, n: int) -> int:
        return 1 if n == 0 else _row_width(self.r, self.m, n)

    def value(self, n: int, k: int) -> int:
        if n < 0 or n > self.max_n:
            raise ValueError(f"n must be in [0, {self.max_n}], got {n}")
        if n == 0:
            return 1 if k == 0 else 0
        if k < 1 or k > _row_width(self.r, self.m, n):
            return 0
        return self.rows[n][k - 1]


def _validate_rm(r: int, m: int) -> None:
    for name, v in (("r", r), ("m", m)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValueError(f"{name} must be an int >= 1, got {v!r}")


def stirling_table(r: int, m: int, max_n: int) -> StirlingTable:
    """Triangle of operator-expansion coefficients, built by the one-step
    transition: applying x**r D**m to a term x**e D**f scatters it to
    (e + r - i, f + m - i) with coefficient C(m, i) * e!/(e-i)!, i = 0..m.
    All arithmetic is exact.
    """
    _validate_rm(r, m)
    if not isinstance(max_n, int) or isinstance(max_n, bool) or max_n < 0:
        raise ValueError(f"max_n must be an int >= 0, got {max_n!r}")

    rows = [(1,)]
    level = {0: 1}          # derivative power f -> integer coefficient
    for n in range(1, max_n + 1):
        new: dict[int, int] = {}
        shift = (n - 1) * (r - m)
        for f_pow, cval in level.items():
            e_pow = f_pow + shift
            top = min(m, e_pow)
            for i in range(top + 1):
                factor = math.comb(m, i) * math.perm(e_pow, i)
                if factor:
                    key = f_pow + m - i
                    new[key] = new.get(key, 0) + factor * cval
        level = new
        floor = _f_floor(r, m, n)
        width = _row_width(r, m, n)
        row = tuple(level.get(floor + k - 1, 0) for k in range(1, width + 1))
        if sum(row) != sum(level.values()):
            raise AssertionError("triangle support bound violated")
        rows.append(row)
    return StirlingTable(r=r, m=m, max_n=max_n, rows=tuple(rows))


def _falling(s: int, m: int) -> int:
    out = 1
    for t in range(m):
        out *= s - t
    return out


def stirling_oracle(r: int, m: int, n: int) -> list:
    """Independent expansion coefficients of (x**r D**m)**n, as one row.

    Acts on monomials: (x**r D**m)**n x**s has the scalar polynomial factor
    c(s) = prod_j falling(s + j(r - m), m), and the row is recovered from
    Newton forward differences of c at s = 0..deg.  Shares no code path with
    :func:`stirling_table`; used to validate it.  Limited to small instances
    (r, m <= %d, n <= %d).
    """ % (_ORACLE_MAX_RM, _ORACLE_MAX_N)
    _validate_rm(r, m)
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError(f"n must be an int >= 0, got {n!r}")
    if r > _ORACLE_MAX_RM or m > _ORACLE_MAX_RM or n > _ORACLE_MAX_N:
        raise ValueError(
            f"oracle limited to r, m <= {_ORACLE_MAX_RM} and n <= {_ORACLE_MAX_N}"
        )
    if n == 0:
        return [1]
    deg = n * m
    vals = [math.prod(_falling(s + j * (r - m), m) for j in range(n))
            for s in range(deg + 1)]
    for lvl in range(1, deg + 1):
        for idx in range(deg, lvl - 1, -1):
            vals[idx] -= vals[idx - 1]
    coeffs = []
    fact = 1
    for d in range(deg + 1):
        if d:
            fact *= d
        if vals[d] % fact:
            raise AssertionError("Newton difference not divisible by d!")
        coeffs.append(vals[d] // fact)
    floor = _f_floor(r, m, n)
    if any(coeffs[d] for d in range(floor)):
        raise AssertionError("coefficient below the support floor")
    return coeffs[floor:]
