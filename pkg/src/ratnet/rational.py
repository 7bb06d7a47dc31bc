"""Rational functions R(x) = P(x)/Q(x) with trainable coefficients.

Two denominator conventions are supported.  The raw variant stores the full
coefficient vector b_0..b_n and evaluates Q(x) = sum_k b_k x^k; it can have
real poles but admits exact polynomial algebra.  The safe variant stores only
the free coefficients b_1..b_n and evaluates Q(x) = 1 + |sum_{k>=1} b_k x^k|,
so Q >= 1 everywhere and training can never step onto a pole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RAW = "raw"
SAFE = "safe"


class PoleError(ArithmeticError):
    """A raw-variant denominator evaluated to exactly zero."""

    def __init__(self, x: float, index: int | None = None):
        self.x = x
        self.index = index
        where = f"x={x}" if index is None else f"x={x} (batch index {index})"
        super().__init__(f"rational function has a pole at {where}")


def polyval(coeffs: np.ndarray, x):
    """Horner evaluation of an ascending-order coefficient vector."""
    x = np.asarray(x, dtype=float)
    result = np.full(x.shape, coeffs[-1], dtype=float)
    for c in coeffs[-2::-1]:
        result = result * x + c
    return result


def polyder(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the derivative polynomial."""
    if len(coeffs) <= 1:
        return np.zeros(1)
    return coeffs[1:] * np.arange(1, len(coeffs), dtype=float)


@dataclass
class RationalFunction:
    """Learnable rational activation function.

    ``numerator`` holds a_0..a_m in ascending degree order.  ``denominator``
    holds b_0..b_n for the raw variant and b_1..b_n for the safe variant
    (the safe b_0 is pinned to 1 inside the absolute value).
    """

    numerator: np.ndarray
    denominator: np.ndarray
    variant: str = SAFE

    def __post_init__(self):
        self.numerator = np.atleast_1d(np.asarray(self.numerator, dtype=float))
        self.denominator = np.atleast_1d(np.asarray(self.denominator, dtype=float))
        if self.variant not in (RAW, SAFE):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.numerator.ndim != 1 or self.numerator.size < 1:
            raise ValueError("numerator needs at least one coefficient")
        if self.denominator.ndim != 1:
            raise ValueError("denominator must be a flat coefficient vector")
        if self.variant == RAW and self.denominator.size < 1:
            raise ValueError("raw variant needs at least b_0")
        if not (np.all(np.isfinite(self.numerator)) and np.all(np.isfinite(self.denominator))):
            raise ValueError("coefficients must be finite")

    @property
    def m(self) -> int:
        """Numerator degree."""
        return self.numerator.size - 1

    @property
    def n(self) -> int:
        """Denominator degree."""
        if self.variant == SAFE:
            return self.denominator.size
        return self.denominator.size - 1

    def __call__(self, x):
        """Vectorized evaluation; preserves the input shape."""
        return _eval_array(self, np.asarray(x, dtype=float))

    def copy(self) -> "RationalFunction":
        return RationalFunction(self.numerator.copy(), self.denominator.copy(), self.variant)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "numerator": self.numerator.tolist(),
            "denominator": self.denominator.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RationalFunction":
        return cls(
            numerator=np.asarray(d["numerator"], dtype=float),
            denominator=np.asarray(d["denominator"], dtype=float),
            variant=d["variant"],
        )


def init_identity(m: int, n: int, variant: str = SAFE) -> RationalFunction:
    """Rational of degrees (m, n) that evaluates to x everywhere.

    Sets a_1 = 1 and every other coefficient to zero; the raw variant gets
    b_0 = 1.  Requires m >= 1 since a degree-0 numerator cannot represent x.
    """
    if m < 1:
        raise ValueError("identity initialization needs numerator degree m >= 1")
    if n < 0:
        raise ValueError("denominator degree n must be >= 0")
    num = np.zeros(m + 1)
    num[1] = 1.0
    if variant == SAFE:
        den = np.zeros(n)
    elif variant == RAW:
        den = np.zeros(n + 1)
        den[0] = 1.0
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return RationalFunction(num, den, variant)


def _denominator_parts(rf: RationalFunction, x):
    """Return (Q(x), S(x)) where S is the safe variant's signed inner sum.

    For the raw variant S is None.  Keeping S around lets gradient code reuse
    the sign factor of d|S|/dS without re-evaluating the polynomial.
    """
    if rf.variant == RAW:
        return polyval(rf.denominator, x), None
    x = np.asarray(x, dtype=float)
    if rf.denominator.size == 0:
        s = np.zeros(x.shape)
    else:
        s = polyval(rf.denominator, x) * x
    return 1.0 + np.abs(s), s


def _check_poles(q: np.ndarray, x: np.ndarray) -> None:
    zero = q == 0.0
    if np.any(zero):
        flat = np.flatnonzero(zero)
        i = int(flat[0])
        xi = float(np.ravel(x)[i])
        raise PoleError(xi, index=i if np.size(x) > 1 else None)


def _eval_array(rf: RationalFunction, x: np.ndarray) -> np.ndarray:
    p = polyval(rf.numerator, x)
    q, _ = _denominator_parts(rf, x)
    if rf.variant == RAW:
        _check_poles(q, x)
    return p / q


def evaluate(rf: RationalFunction, x: float) -> float:
    """R(x) at a single point.  Raises PoleError when a raw Q(x) is zero."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("input must be finite")
    return float(_eval_array(rf, np.asarray(x)))


def eval_batch(rf: RationalFunction, xs, tracker=None) -> np.ndarray:
    """Elementwise evaluation over an array of inputs.

    When ``tracker`` (a Histogram) is given, every input is recorded before
    evaluation, so tracking happens even if a later element hits a pole.
    """
    x = np.asarray(xs, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("inputs must be finite")
    if tracker is not None:
        tracker.observe(x)
    return _eval_array(rf, x)


def _grad_input_array(rf: RationalFunction, x: np.ndarray) -> np.ndarray:
    p = polyval(rf.numerator, x)
    dp = polyval(polyder(rf.numerator), x)
    if rf.variant == RAW:
        q = polyval(rf.denominator, x)
        _check_poles(q, x)
        dq = polyval(polyder(rf.denominator), x)
    else:
        q, s = _denominator_parts(rf, x)
        if rf.denominator.size == 0:
            dq = np.zeros(np.shape(x))
        else:
            # d/dx sum b_k x^k for k = 1..n, times the sign of the sum
            inner = np.concatenate(([0.0], rf.denominator))
            dq = np.sign(s) * polyval(polyder(inner), x)
    return (dp * q - p * dq) / (q * q)


def grad_input(rf: RationalFunction, x: float) -> float:
    """dR/dx by the quotient rule.

    At the safe variant's kink (inner sum exactly zero) the subgradient 0 is
    used for d|S|/dS, so the denominator contributes nothing there.
    """
    return float(_grad_input_array(rf, np.asarray(float(x))))


def grad_coeffs(rf: RationalFunction, x: float):
    """Partial derivatives of R(x) with respect to every coefficient.

    Returns (d/da_j for j=0..m, d/db_k) where the denominator vector matches
    the variant's stored layout (k=0..n raw, k=1..n safe).
    """
    x = float(x)
    p = float(polyval(rf.numerator, x))
    q, s = _denominator_parts(rf, np.asarray(x))
    q = float(q)
    if rf.variant == RAW:
        _check_poles(np.asarray(q), np.asarray(x))
        powers = x ** np.arange(rf.denominator.size, dtype=float)
        d_den = -p * powers / q**2
    else:
        powers = x ** np.arange(1, rf.denominator.size + 1, dtype=float)
        d_den = -p * float(np.sign(s)) * powers / q**2
    d_num = x ** np.arange(rf.numerator.size, dtype=float) / q
    return d_num, d_den


def grad_coeffs_batch(rf: RationalFunction, xs: np.ndarray, upstream: np.ndarray):
    """Accumulated coefficient gradients sum_i upstream_i * dR/dtheta(x_i).

    This is the workhorse for training: with upstream = dLoss/dR(x_i) it
    yields the loss gradient for every stored coefficient in one pass.
    """
    x = np.ravel(np.asarray(xs, dtype=float))
    u = np.ravel(np.asarray(upstream, dtype=float))
    if x.shape != u.shape:
        raise ValueError("xs and upstream must have matching sizes")
    p = polyval(rf.numerator, x)
    q, s = _denominator_parts(rf, x)
    if rf.variant == RAW:
        _check_poles(q, x)
    num_powers = np.vander(x, rf.numerator.size, increasing=True)
    d_num = (u / q) @ num_powers
    if rf.denominator.size == 0:
        return d_num, np.zeros(0)
    if rf.variant == RAW:
        den_powers = np.vander(x, rf.denominator.size, increasing=True)
        d_den = (-u * p / q**2) @ den_powers
    else:
        den_powers = np.vander(x, rf.denominator.size + 1, increasing=True)[:, 1:]
        d_den = (-u * p * np.sign(s) / q**2) @ den_powers
    return d_num, d_den
