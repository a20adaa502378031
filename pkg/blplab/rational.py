"""
Extended rationals for blplab.
Exact rational numbers with a single positive infinity, the codomain of every cost function.
"""

from fractions import Fraction
from functools import total_ordering
from typing import Union

from .exceptions import InfinityArithmeticError, MalformedInputError

Number = Union[int, Fraction]


def render_fraction(value: Fraction) -> str:
    """Canonical rendering of a finite rational: `p` when q = 1, else `p/q`."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: str) -> Fraction:
    """Parse an integer or `p/q` token into a Fraction."""
    token = text.strip()
    try:
        if "/" in token:
            num, den = token.split("/", 1)
            if not den.strip().lstrip("+").isdigit() or int(den) == 0:
                raise ValueError(token)
            return Fraction(int(num), int(den))
        return Fraction(int(token))
    except ValueError:
        raise MalformedInputError(f"not a rational number: {text!r}") from None


@total_ordering
class ExtRational:
    """A rational number or +inf.

    Finite values are stored as a Fraction, so they are always in lowest terms with a
    positive denominator. 0 * inf = 0 and x * inf = inf for x > 0; a negative finite
    value times inf, and any subtraction of inf, are rejected.
    """

    __slots__ = ("_value",)

    def __init__(self, value: Union[Number, str, "ExtRational"] = 0):
        if isinstance(value, ExtRational):
            object.__setattr__(self, "_value", value._value)
        elif isinstance(value, str):
            parsed = ExtRational.parse(value)
            object.__setattr__(self, "_value", parsed._value)
        elif isinstance(value, bool):
            raise MalformedInputError("booleans are not rationals")
        elif isinstance(value, (int, Fraction)):
            object.__setattr__(self, "_value", Fraction(value))
        else:
            raise MalformedInputError(f"cannot build an extended rational from {value!r}")

    def __setattr__(self, name, value):
        raise AttributeError("ExtRational is immutable")

    @classmethod
    def infinity(cls) -> "ExtRational":
        return INF

    @classmethod
    def parse(cls, text: str) -> "ExtRational":
        token = text.strip()
        if token == "inf":
            return INF
        return cls(parse_fraction(token))

    @property
    def is_infinite(self) -> bool:
        return self._value is None

    @property
    def is_finite(self) -> bool:
        return self._value is not None

    @property
    def fraction(self) -> Fraction:
        if self._value is None:
            raise InfinityArithmeticError("infinity has no finite rational value")
        return self._value

    @property
    def numerator(self) -> int:
        return self.fraction.numerator

    @property
    def denominator(self) -> int:
        return self.fraction.denominator

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self._value is None or other._value is None:
            return INF
        return ExtRational(self._value + other._value)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if other._value is None:
            raise InfinityArithmeticError("cannot subtract infinity")
        if self._value is None:
            return INF
        return ExtRational(self._value - other._value)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other.__sub__(self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self._value is not None and other._value is not None:
            return ExtRational(self._value * other._value)
        if self._value is None and other._value is None:
            return INF
        finite = self._value if self._value is not None else other._value
        if finite == 0:
            return ZERO
        if finite < 0:
            raise InfinityArithmeticError("negative value multiplied by infinity")
        return INF

    __rmul__ = __mul__

    def __truediv__(self, other):
        divisor = other.fraction if isinstance(other, ExtRational) else Fraction(other)
        if divisor <= 0:
            raise InfinityArithmeticError("extended rationals are only divided by positive values")
        if self._value is None:
            return INF
        return ExtRational(self._value / divisor)

    def __neg__(self):
        if self._value is None:
            raise InfinityArithmeticError("cannot negate infinity")
        return ExtRational(-self._value)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self._value == other._value

    def __lt__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self._value is None:
            return False
        if other._value is None:
            return True
        return self._value < other._value

    def __hash__(self):
        return hash(("ExtRational", self._value))

    def __str__(self):
        if self._value is None:
            return "inf"
        return render_fraction(self._value)

    def __repr__(self):
        return f"ExtRational({str(self)!r})"

    def __reduce__(self):
        return (ExtRational.parse, (str(self),))


def _coerce(value):
    if isinstance(value, ExtRational):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return ExtRational(value)
    return NotImplemented


def ext(value: Union[Number, str, ExtRational]) -> ExtRational:
    """Convert an int, Fraction, token or ExtRational to an ExtRational."""
    return value if isinstance(value, ExtRational) else ExtRational(value)


def ext_sum(values) -> ExtRational:
    """Exact sum of extended rationals; inf as soon as any addend is inf."""
    total = Fraction(0)
    for value in values:
        value = ext(value)
        if value.is_infinite:
            return INF
        total += value.fraction
    return ExtRational(total)


# The constructor bypasses validation for the infinite singleton.
INF = object.__new__(ExtRational)
object.__setattr__(INF, "_value", None)
ZERO = ExtRational(0)
