"""Exact univariate polynomial and rational-function arithmetic over Q.

Polynomials are stored as tuples of ``fractions.Fraction`` coefficients in
ascending degree order with no trailing zeros; the zero polynomial is the
empty tuple.  Rational functions are kept in canonical form: numerator and
denominator coprime, denominator monic.  Two rational functions are equal
iff their canonical representations coincide, so ``==`` is exact equality
of functions.

Coefficients must be exact (int, Fraction, or a string Fraction() accepts);
floats are rejected to preserve exactness end to end.
"""

from __future__ import annotations

import ast
from fractions import Fraction


class RationalParseError(ValueError):
    """Raised when a rational-function expression cannot be parsed."""


class PoleError(ZeroDivisionError):
    """Raised when a rational function is evaluated at a denominator root."""


def _coeff(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a valid coefficient")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(
        f"exact coefficient required (int, Fraction, or string), got {type(x).__name__}"
    )


class Polynomial:
    """Univariate polynomial over Q, coefficients ascending."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [_coeff(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @classmethod
    def variable(cls):
        return cls((0, 1))

    @classmethod
    def constant(cls, value):
        return cls((value,))

    @property
    def degree(self):
        """Degree, with the convention deg 0 = -1."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def leading(self):
        if self.is_zero:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self == Polynomial((other,))
        return NotImplemented

    def __hash__(self):
        return hash(("Polynomial", self.coeffs))

    def __bool__(self):
        return not self.is_zero

    def __neg__(self):
        return Polynomial(tuple(-c for c in self.coeffs))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial((other,))
        if not isinstance(other, Polynomial):
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Polynomial(out)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial((other,))
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Polynomial(tuple(c * other for c in self.coeffs))
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Polynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, ci in enumerate(self.coeffs):
            for j, cj in enumerate(other.coeffs):
                out[i + j] += ci * cj
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial power wants a nonnegative integer")
        out = Polynomial((1,))
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __divmod__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial((other,))
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        q = Polynomial()
        r = self
        d, lc = other.degree, other.leading
        while not r.is_zero and r.degree >= d:
            shift = r.degree - d
            coef = r.leading / lc
            term = Polynomial([0] * shift + [coef])
            q = q + term
            r = r - term * other
        return q, r

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self):
        if self.is_zero:
            return self
        return self * (1 / self.leading)

    def gcd(self, other):
        """Monic greatest common divisor (Euclid)."""
        a, b = self, other
        while not b.is_zero:
            a, b = b, a % b
        return a.monic()

    def derivative(self):
        return Polynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def __call__(self, x):
        # Horner; exact for Fraction input, float otherwise.
        acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def render(self, var="t"):
        if self.is_zero:
            return "0"
        parts = []
        for d in range(self.degree, -1, -1):
            c = self.coeffs[d]
            if c == 0:
                continue
            if d == 0:
                body = str(abs(c))
            else:
                tp = var if d == 1 else f"{var}^{d}"
                body = tp if abs(c) == 1 else f"{abs(c)}*{tp}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f" + {body}" if c > 0 else f" - {body}")
        return "".join(parts)

    def __repr__(self):
        return f"Polynomial({self.render()!r})"


class RationalFunction:
    """Quotient of polynomials in canonical (coprime, monic-denominator) form."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if not isinstance(num, Polynomial):
            num = Polynomial((num,)) if not isinstance(num, (list, tuple)) else Polynomial(num)
        if den is None:
            den = Polynomial((1,))
        elif not isinstance(den, Polynomial):
            den = Polynomial((den,)) if not isinstance(den, (list, tuple)) else Polynomial(den)
        if den.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero:
            num, den = Polynomial(), Polynomial((1,))
        else:
            g = num.gcd(den)
            if g.degree > 0:
                num, den = num // g, den // g
            lc = den.leading
            if lc != 1:
                num, den = num * (1 / lc), den * (1 / lc)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def variable(cls):
        return cls(Polynomial.variable())

    @classmethod
    def constant(cls, value):
        return cls(Polynomial((value,)))

    @property
    def is_zero(self):
        return self.num.is_zero

    @property
    def is_polynomial(self):
        return self.den.degree == 0

    def as_polynomial(self):
        if not self.is_polynomial:
            raise ValueError(f"not a polynomial: {self.render()}")
        return self.num

    def __eq__(self, other):
        other = _as_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash(("RationalFunction", self.num.coeffs, self.den.coeffs))

    def __bool__(self):
        return not self.is_zero

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __add__(self, other):
        other = _as_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rational(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = _as_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ValueError("rational-function power wants an integer")
        if n < 0:
            if self.is_zero:
                raise ZeroDivisionError("negative power of zero")
            return RationalFunction(self.den, self.num) ** (-n)
        return RationalFunction(self.num**n, self.den**n)

    def derivative(self):
        n, d = self.num, self.den
        return RationalFunction(
            n.derivative() * d - n * d.derivative(), d * d
        )

    def __call__(self, x):
        dv = self.den(x)
        if dv == 0:
            raise PoleError(f"evaluation at pole x={x}")
        return self.num(x) / dv

    def render(self, var="t"):
        if self.is_polynomial:
            return self.num.render(var)
        return f"({self.num.render(var)})/({self.den.render(var)})"

    def __repr__(self):
        return f"RationalFunction({self.render()!r})"


def _as_rational(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x)
    if isinstance(x, (int, Fraction)):
        return RationalFunction(Polynomial((x,)))
    return NotImplemented


def parse_rational(text, var="t"):
    """Parse expressions like ``(3*t^2 - 1)/(t - 2)`` into a RationalFunction.

    Grammar: integer literals, the variable, parentheses, ``+ - * /`` and
    ``^`` (or ``**``) with integer exponents.
    """
    try:
        tree = ast.parse(text.replace("^", "**").strip(), mode="eval")
    except SyntaxError as exc:
        raise RationalParseError(f"unparseable expression: {text!r}") from exc
    return _from_node(tree.body, var, text)


def _from_node(node, var, text):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, int) and not isinstance(node.value, bool):
            return RationalFunction.constant(node.value)
        raise RationalParseError(
            f"only integer literals allowed, got {node.value!r} in {text!r}"
        )
    if isinstance(node, ast.Name):
        if node.id == var:
            return RationalFunction.variable()
        raise RationalParseError(f"unknown symbol {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp):
        inner = _from_node(node.operand, var, text)
        if isinstance(node.op, ast.USub):
            return -inner
        if isinstance(node.op, ast.UAdd):
            return inner
        raise RationalParseError(f"unsupported unary operator in {text!r}")
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            base = _from_node(node.left, var, text)
            exp = _int_exponent(node.right, text)
            return base**exp
        left = _from_node(node.left, var, text)
        right = _from_node(node.right, var, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        raise RationalParseError(f"unsupported operator in {text!r}")
    raise RationalParseError(f"unsupported syntax in {text!r}")


def _int_exponent(node, text):
    sign = 1
    while isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        if isinstance(node.op, ast.USub):
            sign = -sign
        node = node.operand
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return sign * node.value
    raise RationalParseError(f"exponents must be integer literals in {text!r}")
