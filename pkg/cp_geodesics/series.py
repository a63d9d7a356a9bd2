"""Truncated power-series arithmetic.

A ``Series`` holds the leading Taylor coefficients of an analytic function
around some center (constant term first). Right-hand sides written with the
ordinary operators, and with ``sqrt``, ``exp`` and ``cosh`` from this module,
work unchanged on plain complex numbers and on series, which is what lets the
Taylor recurrence in ``cont_engine`` expand any such field.
"""
from numbers import Number

import numpy as np


class Series:
    __slots__ = ("coefficients",)
    # keeps numpy scalars from swallowing binary operations
    __array_priority__ = 1000

    def __init__(self, coefficients):
        self.coefficients = np.array(coefficients, dtype=complex, ndmin=1)

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, k):
        return self.coefficients[k]

    def __repr__(self):
        return f"Series({self.coefficients!r})"

    def _pair(self, other):
        if isinstance(other, Series):
            n = min(len(self), len(other))
            return self.coefficients[:n], other.coefficients[:n]
        if isinstance(other, (Number, np.number)):
            b = np.zeros(len(self), dtype=complex)
            b[0] = other
            return self.coefficients, b
        return None

    def __add__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        return Series(pair[0] + pair[1])

    __radd__ = __add__

    def __sub__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        return Series(pair[0] - pair[1])

    def __rsub__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        return Series(pair[1] - pair[0])

    def __neg__(self):
        return Series(-self.coefficients)

    def __mul__(self, other):
        if isinstance(other, (Number, np.number)):
            return Series(self.coefficients * other)
        if not isinstance(other, Series):
            return NotImplemented
        a, b = self._pair(other)
        return Series(np.convolve(a, b)[: len(a)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Number, np.number)):
            if other == 0:
                raise ZeroDivisionError("series division by zero")
            return Series(self.coefficients / other)
        if not isinstance(other, Series):
            return NotImplemented
        a, b = self._pair(other)
        return Series(_divide(a, b))

    def __rtruediv__(self, other):
        pair = self._pair(other)
        if pair is None:
            return NotImplemented
        return Series(_divide(pair[1], pair[0]))

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            return NotImplemented
        result = Series(np.eye(1, len(self), dtype=complex)[0])
        for _ in range(exponent):
            result = result * self
        return result


def _divide(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if b[0] == 0:
        raise ZeroDivisionError("series division by a series with vanishing constant term")
    q = np.zeros(len(a), dtype=complex)
    q[0] = a[0] / b[0]
    for k in range(1, len(a)):
        q[k] = (a[k] - np.dot(b[1 : k + 1], q[k - 1 :: -1])) / b[0]
    return q


def constant_term(x):
    """Value at the expansion center, for series and plain numbers alike"""
    if isinstance(x, Series):
        return x.coefficients[0]
    return x


def sqrt(x):
    """Principal square root"""
    if not isinstance(x, Series):
        return np.sqrt(complex(x))
    a = x.coefficients
    s = np.zeros(len(a), dtype=complex)
    s[0] = np.sqrt(a[0])
    if len(a) > 1 and s[0] == 0:
        raise ZeroDivisionError("square root is not analytic at a zero of its argument")
    for k in range(1, len(a)):
        s[k] = (a[k] - np.dot(s[1:k], s[k - 1 : 0 : -1])) / (2 * s[0])
    return Series(s)


def exp(x):
    if not isinstance(x, Series):
        return np.exp(complex(x))
    a = x.coefficients
    e = np.zeros(len(a), dtype=complex)
    e[0] = np.exp(a[0])
    j = np.arange(len(a))
    for k in range(1, len(a)):
        e[k] = np.dot(j[1 : k + 1] * a[1 : k + 1], e[k - 1 :: -1]) / k
    return Series(e)


def cosh(x):
    if not isinstance(x, Series):
        return np.cosh(complex(x))
    return (exp(x) + exp(-x)) * 0.5
