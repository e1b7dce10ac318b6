# app/services/arith.py
"""
Aritmética base: F_p, F_{p^2} = F_p[s]/(s^2 - n), extensiones F_{p^{2k}},
polinomios univariados, raíces, CRT y factorización a escala de escritorio.

n es el menor no-residuo cuadrático positivo módulo p, así las coordenadas
de un j-invariante son reproducibles entre corridas.
"""
from __future__ import annotations
import math
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from sympy import isprime
from sympy.ntheory import pollard_rho, primerange
from sympy.ntheory.modular import crt as _sympy_crt

from app.config import get_settings
from app.utils.errors import ConfigError, ExtensionTooLarge, FactorTimeout, NotCoprime


# ======================================================================
# F_p
# ======================================================================
@dataclass(frozen=True)
class FpElem:
    value: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p)

    def __int__(self) -> int:
        return self.value


# ======================================================================
# F_{p^2}
# ======================================================================
class Fq2Field:
    """F_{p^2} con base {1, s}, s^2 = n."""

    __slots__ = ("p", "n", "_zero", "_one")

    def __init__(self, p: int):
        if p <= 3 or not isprime(p):
            raise ConfigError(f"p debe ser primo > 3, se recibió {p}")
        self.p = p
        self.n = smallest_nonresidue(p)
        self._zero = Fq2Elem(self, 0, 0)
        self._one = Fq2Elem(self, 1, 0)

    def __call__(self, a, b: int = 0) -> "Fq2Elem":
        if isinstance(a, Fq2Elem):
            return a
        return Fq2Elem(self, a, b)

    def zero(self) -> "Fq2Elem":
        return self._zero

    def one(self) -> "Fq2Elem":
        return self._one

    @property
    def order(self) -> int:
        return self.p * self.p

    def gen(self) -> "Fq2Elem":
        return Fq2Elem(self, 0, 1)

    def random(self, rng: random.Random) -> "Fq2Elem":
        return Fq2Elem(self, rng.randrange(self.p), rng.randrange(self.p))

    def elements(self) -> Iterable["Fq2Elem"]:
        for a in range(self.p):
            for b in range(self.p):
                yield Fq2Elem(self, a, b)

    def parse(self, text: str) -> "Fq2Elem":
        """Acepta "a" o "a,b" (a + b*s)."""
        parts = [t.strip() for t in str(text).split(",")]
        try:
            if len(parts) == 1:
                return Fq2Elem(self, int(parts[0]), 0)
            if len(parts) == 2:
                return Fq2Elem(self, int(parts[0]), int(parts[1]))
        except ValueError:
            pass
        raise ConfigError(f"j-invariante mal formado: {text!r} (use 'a' o 'a,b')")

    def __eq__(self, other) -> bool:
        return isinstance(other, Fq2Field) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("Fq2", self.p))

    def __repr__(self) -> str:
        return f"F_{self.p}^2"


@lru_cache(maxsize=None)
def fq2_field(p: int) -> Fq2Field:
    return Fq2Field(p)


def smallest_nonresidue(p: int) -> int:
    for n in range(2, p):
        if pow(n, (p - 1) // 2, p) == p - 1:
            return n
    raise ConfigError(f"no hay no-residuo módulo {p}")


class Fq2Elem:
    __slots__ = ("F", "a", "b")

    def __init__(self, F: Fq2Field, a: int, b: int = 0):
        self.F = F
        self.a = a % F.p
        self.b = b % F.p

    # --- coordenadas ---
    @property
    def c0(self) -> FpElem:
        return FpElem(self.a, self.F.p)

    @property
    def c1(self) -> FpElem:
        return FpElem(self.b, self.F.p)

    def key(self) -> tuple[int, int]:
        return (self.a, self.b)

    def _coerce(self, o) -> "Fq2Elem":
        if isinstance(o, Fq2Elem):
            return o
        if isinstance(o, int):
            return Fq2Elem(self.F, o, 0)
        return NotImplemented

    # --- aritmética ---
    def __add__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return Fq2Elem(self.F, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return Fq2Elem(self.F, self.a - o.a, self.b - o.b)

    def __rsub__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Fq2Elem(self.F, -self.a, -self.b)

    def __mul__(self, o):
        if isinstance(o, int):
            return Fq2Elem(self.F, self.a * o, self.b * o)
        if not isinstance(o, Fq2Elem):
            return NotImplemented
        a, b, c, d = self.a, self.b, o.a, o.b
        return Fq2Elem(self.F, a * c + b * d * self.F.n, a * d + b * c)

    __rmul__ = __mul__

    def norm(self) -> int:
        p = self.F.p
        return (self.a * self.a - self.F.n * self.b * self.b) % p

    def inverse(self) -> "Fq2Elem":
        nm = self.norm()
        if nm == 0:
            raise ZeroDivisionError("inverso de 0 en F_{p^2}")
        inv = pow(nm, -1, self.F.p)
        return Fq2Elem(self.F, self.a * inv, -self.b * inv)

    def __truediv__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.F.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def frobenius(self) -> "Fq2Elem":
        # s^p = -s porque n no es residuo
        return Fq2Elem(self.F, self.a, -self.b)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def in_Fp(self) -> bool:
        return self.b == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, o) -> bool:
        if isinstance(o, int):
            return self.b == 0 and self.a == o % self.F.p
        if isinstance(o, Fq2Elem):
            return self.a == o.a and self.b == o.b and self.F.p == o.F.p
        if isinstance(o, ExtElem):
            return o == self
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.F.p, self.a, self.b))

    def __repr__(self) -> str:
        if self.b == 0:
            return f"{self.a}"
        return f"{self.a}+{self.b}*s"

    def to_json(self) -> list[int]:
        return [self.a, self.b]


# ======================================================================
# Polinomios (coeficientes de menor a mayor grado)
# ======================================================================
def poly_trim(f: list) -> list:
    while len(f) > 1 and f[-1].is_zero():
        f.pop()
    return f


def poly_deg(f: Sequence) -> int:
    if len(f) == 1 and f[0].is_zero():
        return -1
    return len(f) - 1


def poly_add(f: Sequence, g: Sequence, zero) -> list:
    n = max(len(f), len(g))
    out = [(f[i] if i < len(f) else zero) + (g[i] if i < len(g) else zero) for i in range(n)]
    return poly_trim(out)


def poly_sub(f: Sequence, g: Sequence, zero) -> list:
    n = max(len(f), len(g))
    out = [(f[i] if i < len(f) else zero) - (g[i] if i < len(g) else zero) for i in range(n)]
    return poly_trim(out)


def poly_scale(f: Sequence, c) -> list:
    return poly_trim([a * c for a in f])


def poly_mul(f: Sequence, g: Sequence, zero) -> list:
    if poly_deg(f) < 0 or poly_deg(g) < 0:
        return [zero]
    out = [zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a.is_zero():
            continue
        for j, b in enumerate(g):
            out[i + j] = out[i + j] + a * b
    return poly_trim(out)


def poly_divmod(f: Sequence, g: Sequence, zero) -> tuple[list, list]:
    dg = poly_deg(g)
    if dg < 0:
        raise ZeroDivisionError("división por polinomio nulo")
    r = list(f)
    poly_trim(r)
    if poly_deg(r) < dg:
        return [zero], r
    inv_lead = g[dg].inverse()
    q = [zero] * (len(r) - dg)
    for k in range(len(r) - 1, dg - 1, -1):
        c = r[k] * inv_lead
        q[k - dg] = c
        if c.is_zero():
            continue
        for i in range(dg + 1):
            r[k - dg + i] = r[k - dg + i] - c * g[i]
    r = r[:dg] if dg > 0 else [zero]
    return poly_trim(q), poly_trim(r)


def poly_mod(f: Sequence, g: Sequence, zero) -> list:
    return poly_divmod(f, g, zero)[1]


def poly_monic(f: Sequence) -> list:
    inv = f[poly_deg(f)].inverse()
    return [a * inv for a in f]


def poly_gcd(f: Sequence, g: Sequence, zero) -> list:
    a, b = list(f), list(g)
    poly_trim(a)
    poly_trim(b)
    while poly_deg(b) >= 0:
        a, b = b, poly_mod(a, b, zero)
    if poly_deg(a) < 0:
        return a
    return poly_monic(a)


def poly_powmod(f: Sequence, e: int, m: Sequence, zero, one) -> list:
    result = [one]
    base = poly_mod(f, m, zero)
    while e:
        if e & 1:
            result = poly_mod(poly_mul(result, base, zero), m, zero)
        base = poly_mod(poly_mul(base, base, zero), m, zero)
        e >>= 1
    return result


def poly_eval(f: Sequence, x):
    acc = f[-1] * 1 if not isinstance(x, ExtElem) else x.F.embed(f[-1])
    for c in reversed(f[:-1]):
        acc = acc * x + c
    return acc


def poly_deriv(f: Sequence, zero) -> list:
    if len(f) <= 1:
        return [zero]
    return poly_trim([f[i] * i for i in range(1, len(f))])


def poly_from_roots(roots: Sequence, zero, one) -> list:
    f = [one]
    for r in roots:
        f = poly_mul(f, [-r, one], zero)
    return f


# ======================================================================
# Raíces en F_{p^2}
# ======================================================================
def fq2_roots(poly: Sequence[Fq2Elem], rng: random.Random | None = None, seed: int | None = None) -> list[Fq2Elem]:
    """Todas las raíces en F_{p^2} con multiplicidad, ordenadas por coordenadas.

    Sin rng explícito se usa la semilla configurada (ENDRING_SEED).
    """
    f = list(poly)
    poly_trim(f)
    if poly_deg(f) < 1:
        raise ValueError("fq2_roots requiere grado >= 1")
    F = f[0].F
    zero, one = F.zero(), F.one()
    if rng is None:
        rng = random.Random(get_settings().seed if seed is None else seed)
    f = poly_monic(f)
    distinct = _distinct_roots(f, F, rng)
    roots: list[Fq2Elem] = []
    for r in distinct:
        g = list(f)
        while True:
            q, rem = poly_divmod(g, [-r, one], zero)
            if poly_deg(rem) >= 0:
                break
            roots.append(r)
            g = q
            if poly_deg(g) < 1:
                break
    roots.sort(key=lambda z: z.key())
    return roots


def _distinct_roots(f: list, F: Fq2Field, rng: random.Random) -> list[Fq2Elem]:
    zero, one = F.zero(), F.one()
    x = [zero, one]
    xq = poly_powmod(x, F.order, f, zero, one)
    g = poly_gcd(f, poly_sub(xq, x, zero), zero)
    out: list[Fq2Elem] = []
    _split(g, F, rng, out)
    return out


def _split(g: list, F: Fq2Field, rng: random.Random, out: list) -> None:
    zero, one = F.zero(), F.one()
    d = poly_deg(g)
    if d < 1:
        return
    if d == 1:
        out.append(-g[0] / g[1])
        return
    half = (F.order - 1) // 2
    while True:
        delta = F.random(rng)
        h = poly_powmod([delta, one], half, g, zero, one)
        h = poly_sub(h, [one], zero)
        c = poly_gcd(g, h, zero)
        dc = poly_deg(c)
        if 0 < dc < d:
            _split(c, F, rng, out)
            _split(poly_divmod(g, c, zero)[0], F, rng, out)
            return


def nth_roots(c: Fq2Elem, n: int) -> list[Fq2Elem]:
    F = c.F
    poly = [-c] + [F.zero()] * (n - 1) + [F.one()]
    return sorted(set(fq2_roots(poly)), key=lambda z: z.key())


def fq2_sqrt(c: Fq2Elem) -> Fq2Elem | None:
    if c.is_zero():
        return c
    rs = nth_roots(c, 2)
    return rs[0] if rs else None


# ======================================================================
# Extensiones F_{p^{2k}} = F_{p^2}[t]/(m(t))
# ======================================================================
class ExtField:
    __slots__ = ("base", "k", "modulus", "_zero", "_one")

    def __init__(self, base: Fq2Field, modulus: list[Fq2Elem]):
        self.base = base
        self.modulus = poly_monic(modulus)
        self.k = len(self.modulus) - 1
        z = base.zero()
        self._zero = ExtElem(self, [z] * self.k)
        self._one = ExtElem(self, [base.one()] + [z] * (self.k - 1))

    @property
    def order(self) -> int:
        return self.base.order ** self.k

    def zero(self) -> "ExtElem":
        return self._zero

    def one(self) -> "ExtElem":
        return self._one

    def embed(self, c) -> "ExtElem":
        if isinstance(c, ExtElem):
            return c
        if isinstance(c, int):
            c = self.base(c)
        return ExtElem(self, [c] + [self.base.zero()] * (self.k - 1))

    def random(self, rng: random.Random) -> "ExtElem":
        return ExtElem(self, [self.base.random(rng) for _ in range(self.k)])

    def __repr__(self) -> str:
        return f"F_{self.base.p}^{2 * self.k}"


class ExtElem:
    __slots__ = ("F", "c")

    def __init__(self, F: ExtField, coeffs: list):
        self.F = F
        zero = F.base.zero()
        c = list(coeffs)
        if len(c) > F.k:
            c = poly_mod(c, F.modulus, zero)
        c = c + [zero] * (F.k - len(c))
        self.c = c

    def _coerce(self, o):
        if isinstance(o, ExtElem):
            return o
        if isinstance(o, (int, Fq2Elem)):
            return self.F.embed(o)
        return NotImplemented

    def __add__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return ExtElem(self.F, [a + b for a, b in zip(self.c, o.c)])

    __radd__ = __add__

    def __sub__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return ExtElem(self.F, [a - b for a, b in zip(self.c, o.c)])

    def __rsub__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __neg__(self):
        return ExtElem(self.F, [-a for a in self.c])

    def __mul__(self, o):
        if isinstance(o, (int, Fq2Elem)):
            return ExtElem(self.F, [a * o for a in self.c])
        if not isinstance(o, ExtElem):
            return NotImplemented
        zero = self.F.base.zero()
        prod = poly_mul(self.c, o.c, zero)
        return ExtElem(self.F, poly_mod(prod, self.F.modulus, zero))

    __rmul__ = __mul__

    def inverse(self) -> "ExtElem":
        # Euclides extendido en F_{p^2}[t]
        zero, one = self.F.base.zero(), self.F.base.one()
        r0, r1 = list(self.F.modulus), poly_trim(list(self.c))
        s0, s1 = [zero], [one]
        if poly_deg(r1) < 0:
            raise ZeroDivisionError("inverso de 0 en extensión")
        while poly_deg(r1) > 0:
            q, r = poly_divmod(r0, r1, zero)
            r0, r1 = r1, r
            s0, s1 = s1, poly_sub(s0, poly_mul(q, s1, zero), zero)
        if poly_deg(r1) < 0:
            raise ZeroDivisionError("elemento no invertible")
        inv = r1[0].inverse()
        return ExtElem(self.F, [a * inv for a in s1])

    def __truediv__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.F.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.c)

    def __bool__(self) -> bool:
        return not self.is_zero()

    def in_base(self) -> bool:
        return all(a.is_zero() for a in self.c[1:])

    def to_base(self) -> Fq2Elem:
        if not self.in_base():
            raise ValueError("el elemento no está en F_{p^2}")
        return self.c[0]

    def key(self) -> tuple:
        return tuple(x for a in self.c for x in a.key())

    def __eq__(self, o) -> bool:
        o = self._coerce(o)
        if o is NotImplemented:
            return False
        return all(a == b for a, b in zip(self.c, o.c))

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Ext({self.c})"


def is_irreducible(f: list, F: Fq2Field) -> bool:
    """Prueba de Ben-Or sobre F_{p^2}."""
    zero, one = F.zero(), F.one()
    d = poly_deg(f)
    x = [zero, one]
    h = x
    for _ in range(d // 2):
        h = poly_powmod(h, F.order, f, zero, one)
        g = poly_gcd(f, poly_sub(h, x, zero), zero)
        if poly_deg(g) > 0:
            return False
    return True


_EXT_CACHE: dict[tuple[int, int], ExtField] = {}


def extension(F: Fq2Field, k: int, max_degree: int = 12):
    """F_{p^{2k}}; k=1 devuelve el propio F_{p^2}. Determinista por (p, k)."""
    if k > max_degree:
        raise ExtensionTooLarge(f"se requiere grado de extensión {k} > {max_degree}")
    if k == 1:
        return F
    key = (F.p, k)
    if key not in _EXT_CACHE:
        rng = random.Random(F.p * 1000 + k)
        while True:
            f = [F.random(rng) for _ in range(k)] + [F.one()]
            if not f[0].is_zero() and is_irreducible(f, F):
                break
        _EXT_CACHE[key] = ExtField(F, f)
    return _EXT_CACHE[key]


# ======================================================================
# CRT
# ======================================================================
@dataclass(frozen=True)
class CRTResult:
    value: int
    modulus: int

    @property
    def balanced(self) -> int:
        """Representante en (-M/2, M/2]."""
        x = self.value % self.modulus
        return x - self.modulus if 2 * x > self.modulus else x


def crt(residues: Sequence[tuple[int, int]]) -> CRTResult:
    if not residues:
        return CRTResult(0, 1)
    mods = [m for _, m in residues]
    for i in range(len(mods)):
        for j in range(i + 1, len(mods)):
            if math.gcd(mods[i], mods[j]) != 1:
                raise NotCoprime(f"módulos no coprimos: {mods[i]} y {mods[j]}")
    x, M = _sympy_crt(mods, [r for r, _ in residues])
    return CRTResult(int(x) % int(M), int(M))


# ======================================================================
# Factorización
# ======================================================================
@dataclass(frozen=True)
class Factorization:
    pairs: tuple[tuple[int, int], ...]

    def value(self) -> int:
        out = 1
        for q, e in self.pairs:
            out *= q ** e
        return out

    def primes(self) -> list[int]:
        return [q for q, _ in self.pairs]

    def exponent(self, q: int) -> int:
        for r, e in self.pairs:
            if r == q:
                return e
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)

    def to_json(self) -> list[list[int]]:
        return [[q, e] for q, e in self.pairs]


_SMALL_PRIMES = list(primerange(2, 10_000))


def factor(n: int, budget: int = 200_000, seed: int = 1) -> Factorization:
    if n < 1:
        raise ValueError("factor requiere n >= 1")
    counts: dict[int, int] = {}
    for q in _SMALL_PRIMES:
        if q * q > n:
            break
        while n % q == 0:
            counts[q] = counts.get(q, 0) + 1
            n //= q
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if isprime(m):
            counts[m] = counts.get(m, 0) + 1
            continue
        d = pollard_rho(m, s=2, a=seed, retries=5, max_steps=budget)
        if not d or d in (1, m):
            raise FactorTimeout(f"Pollard rho agotó el presupuesto ({budget} pasos) factorizando {m}")
        stack.extend([d, m // d])
    return Factorization(tuple(sorted(counts.items())))


def valuation(n: int, q: int) -> int:
    if n == 0:
        return 10 ** 9
    v = 0
    while n % q == 0:
        n //= q
        v += 1
    return v
