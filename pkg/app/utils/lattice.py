# app/utils/lattice.py
"""
Retículos enteros y racionales: forma normal de Hermite (inserción
incremental de vectores), duales, intersecciones, LLL exacto sobre la
matriz de Gram y enumeración de vectores cortos (Fincke-Pohst).
"""
from __future__ import annotations
import math
from bisect import bisect_left
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import sympy


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    # x*a + y*b == g
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


# ======================================================================
# HNF entero
# ======================================================================
def hnf(rows: Iterable[Sequence[int]], n: int) -> list[list[int]]:
    """Base canónica (filas escalonadas, pivotes positivos, reducidas arriba)."""
    basis: list[list[int]] = []
    row_piv: list[int] = []
    for vec0 in rows:
        vec = [int(v) for v in vec0]
        j = 0
        while j < n:
            if vec[j] == 0:
                j += 1
                continue
            if j not in row_piv:
                where = bisect_left(row_piv, j)
                basis.insert(where, vec)
                row_piv.insert(where, j)
                break
            row = basis[row_piv.index(j)]
            a, b = row[j], vec[j]
            if b % a == 0:
                q = b // a
                for jj in range(j, n):
                    vec[jj] -= q * row[jj]
            else:
                x, y, g = xgcd(a, b)
                ag, mbg = a // g, -b // g
                for jj in range(j, n):
                    aa, bb = row[jj], vec[jj]
                    row[jj] = x * aa + y * bb
                    vec[jj] = mbg * aa + ag * bb
            j += 1
    # normalización
    for r, j in enumerate(row_piv):
        if basis[r][j] < 0:
            basis[r] = [-v for v in basis[r]]
        piv = basis[r][j]
        for i in range(r):
            q = basis[i][j] // piv
            if q:
                basis[i] = [u - q * v for u, v in zip(basis[i], basis[r])]
    return basis


def int_kernel_row(v: Sequence[int]) -> list[list[int]]:
    """Base de {x en Z^n : v . x = 0} por reducción de columnas con xgcd."""
    n = len(v)
    w = list(v)
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]  # columnas
    while True:
        nz = [i for i in range(n) if w[i] != 0]
        if len(nz) <= 1:
            break
        a, b = nz[0], nz[1]
        x, y, g = xgcd(w[a], w[b])
        ca, cb = U[a], U[b]
        wa, wb = w[a] // g, w[b] // g
        U[a] = [x * s + y * t for s, t in zip(ca, cb)]
        U[b] = [-wb * s + wa * t for s, t in zip(ca, cb)]
        w[a], w[b] = g, 0
    return [U[i] for i in range(n) if w[i] == 0]


# ======================================================================
# Retículos racionales
# ======================================================================
def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(int(x.p), int(x.q))


def mat_inverse(rows: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    M = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in rows])
    inv = M.inv()
    return [[to_fraction(inv[i, j]) for j in range(inv.cols)] for i in range(inv.rows)]


def mat_det(rows: Sequence[Sequence]) -> Fraction:
    M = sympy.Matrix([[sympy.Rational(Fraction(x).numerator, Fraction(x).denominator) for x in r] for r in rows])
    return to_fraction(M.det())


class RatLattice:
    """Retículo en Q^n guardado como (filas HNF enteras, denominador)."""

    __slots__ = ("n", "rows", "den", "_inv")

    def __init__(self, gens: Iterable[Sequence], n: int):
        gens = [[Fraction(x) for x in g] for g in gens]
        den = 1
        for g in gens:
            for x in g:
                den = _lcm(den, x.denominator)
        ints = [[int(x * den) for x in g] for g in gens]
        rows = hnf(ints, n)
        g = reduce(math.gcd, (v for r in rows for v in r), den)
        g = abs(g) or 1
        self.n = n
        self.rows = [[v // g for v in r] for r in rows]
        self.den = den // g
        self._inv = None

    @classmethod
    def from_basis(cls, basis: Sequence[Sequence], n: int | None = None) -> "RatLattice":
        return cls(basis, n or len(basis[0]))

    def basis(self) -> list[list[Fraction]]:
        return [[Fraction(v, self.den) for v in r] for r in self.rows]

    @property
    def rank(self) -> int:
        return len(self.rows)

    def key(self) -> tuple:
        return (self.den, tuple(tuple(r) for r in self.rows))

    def __eq__(self, other) -> bool:
        return isinstance(other, RatLattice) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __add__(self, other: "RatLattice") -> "RatLattice":
        return RatLattice(self.basis() + other.basis(), self.n)

    def scale(self, c) -> "RatLattice":
        c = Fraction(c)
        return RatLattice([[x * c for x in r] for r in self.basis()], self.n)

    def det(self) -> Fraction:
        """Covolumen |det| (requiere rango completo)."""
        if self.rank != self.n:
            return Fraction(0)
        return abs(mat_det(self.basis()))

    def dual(self) -> "RatLattice":
        if self.rank != self.n:
            raise ValueError("dual requiere rango completo")
        inv = mat_inverse(self.basis())
        # filas de (M^{-1})^T
        return RatLattice([[inv[i][j] for i in range(self.n)] for j in range(self.n)], self.n)

    def intersect(self, other: "RatLattice") -> "RatLattice":
        return (self.dual() + other.dual()).dual()

    def coordinates(self, vec: Sequence) -> list[Fraction]:
        """Coordenadas de vec en la base (rango completo)."""
        if self._inv is None:
            self._inv = mat_inverse(self.basis())
        inv = self._inv
        v = [Fraction(x) for x in vec]
        return [sum(v[i] * inv[i][j] for i in range(self.n)) for j in range(self.n)]

    def __contains__(self, vec) -> bool:
        if self.rank == self.n:
            return all(c.denominator == 1 for c in self.coordinates(vec))
        return RatLattice(self.basis() + [list(vec)], self.n) == self

    def contains_lattice(self, other: "RatLattice") -> bool:
        return all(b in self for b in other.basis())

    def index_in(self, other: "RatLattice") -> Fraction:
        """[other : self] para self contenido en other."""
        return self.det() / other.det()

    def __repr__(self) -> str:
        return f"RatLattice(den={self.den}, rows={self.rows})"


# ======================================================================
# LLL exacto sobre la Gram y vectores cortos
# ======================================================================
def lll_gram(G: Sequence[Sequence], delta: Fraction = Fraction(3, 4)) -> list[list[int]]:
    """Transformación unimodular T (filas) tal que T.B es LLL-reducida para la Gram G."""
    n = len(G)
    G = [[Fraction(x) for x in r] for r in G]
    T = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def gram(i, j):
        return sum(T[i][a] * G[a][b] * T[j][b] for a in range(n) for b in range(n))

    def gso():
        mu = [[Fraction(0)] * n for _ in range(n)]
        Bn = [Fraction(0)] * n
        for i in range(n):
            for j in range(i):
                s = gram(i, j) - sum(mu[j][k] * mu[i][k] * Bn[k] for k in range(j))
                mu[i][j] = s / Bn[j]
            Bn[i] = gram(i, i) - sum(mu[i][k] ** 2 * Bn[k] for k in range(i))
        return mu, Bn

    mu, Bn = gso()
    k = 1
    while k < n:
        for j in reversed(range(k)):
            r = round(mu[k][j])
            if r:
                T[k] = [a - r * b for a, b in zip(T[k], T[j])]
                mu, Bn = gso()
        if Bn[k] >= (delta - mu[k][k - 1] ** 2) * Bn[k - 1]:
            k += 1
        else:
            T[k], T[k - 1] = T[k - 1], T[k]
            mu, Bn = gso()
            k = max(k - 1, 1)
    return T


def short_vectors(A: Sequence[Sequence], bound) -> list[tuple[int, ...]]:
    """Todos los x enteros (x != 0) con x^T A x <= bound, A definida positiva."""
    n = len(A)
    Q = [[Fraction(x) for x in r] for r in A]
    for i in range(n):
        for j in range(i + 1, n):
            Q[j][i] = Q[i][j]
            Q[i][j] = Q[i][j] / Q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                Q[k][l] -= Q[k][i] * Q[i][l]
    bound = Fraction(bound)
    out: list[tuple[int, ...]] = []
    x = [0] * n

    def rec(i: int, rem: Fraction):
        U = sum((Q[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        width = math.sqrt(float(rem / Q[i][i])) + 1e-9
        lo = math.ceil(float(-U) - width) - 1
        hi = math.floor(float(-U) + width) + 1
        for v in range(lo, hi + 1):
            t = Q[i][i] * (v + U) ** 2
            if t > rem:
                continue
            x[i] = v
            if i == 0:
                if any(x):
                    out.append(tuple(x))
            else:
                rec(i - 1, rem - t)
        x[i] = 0

    rec(n - 1, bound)
    return out


def nullspace_mod(rows: Sequence[Sequence[int]], q: int) -> list[list[int]]:
    """Base de {x : M x = 0 mod q} (q primo), por eliminación gaussiana."""
    M = [[v % q for v in r] for r in rows]
    n = len(M[0]) if M else 0
    pivots: list[int] = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], -1, q)
        M[r] = [v * inv % q for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % q for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    out = []
    for fcol in free:
        v = [0] * n
        v[fcol] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -M[i][fcol] % q
        out.append(v)
    return out
