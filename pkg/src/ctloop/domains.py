"""Coefficient domains for exact linear algebra.

A Domain is a lightweight descriptor: scalars are plain Python objects
(Fraction for QQ, int for ZZ and for GF(p) residues) and every operation goes
through the domain so matrices stay coefficient-generic without per-scalar
wrapper objects.
"""
from __future__ import annotations

from fractions import Fraction


class Domain:
    """Base class; concrete domains are QQ, ZZ and GF(p)."""

    name: str
    is_field: bool
    characteristic: int

    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def convert(self, a):
        """Coerce an int/Fraction into a canonical scalar of this domain."""
        raise NotImplementedError

    def is_zero(self, a):
        return a == self.zero()

    def to_str(self, a) -> str:
        return str(a)

    def __repr__(self):
        return self.name

    def __eq__(self, other):
        return isinstance(other, Domain) and self.name == other.name

    def __hash__(self):
        return hash(self.name)


class RationalField(Domain):
    name = "QQ"
    is_field = True
    characteristic = 0

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        return 1 / a

    def convert(self, a):
        return Fraction(a)

    def is_zero(self, a):
        return a == 0


class IntegerRing(Domain):
    name = "ZZ"
    is_field = False
    characteristic = 0

    def zero(self):
        return 0

    def one(self):
        return 1

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        if a in (1, -1):
            return a
        raise ZeroDivisionError("non-unit in ZZ")

    def convert(self, a):
        if isinstance(a, Fraction):
            if a.denominator != 1:
                raise ValueError(f"{a} is not an integer")
            return a.numerator
        return int(a)

    def is_zero(self, a):
        return a == 0


class PrimeField(Domain):
    is_field = True

    def __init__(self, p: int):
        if p < 2 or any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.name = f"GF({p})"
        self.characteristic = p

    def zero(self):
        return 0

    def one(self):
        return 1 % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        return pow(a, -1, self.p)

    def convert(self, a):
        if isinstance(a, Fraction):
            return (a.numerator * pow(a.denominator, -1, self.p)) % self.p
        return int(a) % self.p

    def is_zero(self, a):
        return a % self.p == 0


QQ = RationalField()
ZZ = IntegerRing()

_gf_cache: dict[int, PrimeField] = {}


def GF(p: int) -> PrimeField:
    if p not in _gf_cache:
        _gf_cache[p] = PrimeField(p)
    return _gf_cache[p]
