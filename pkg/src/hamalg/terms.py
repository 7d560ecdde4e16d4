"""Term model for polynomial functionals of a scalar field.

A Symbol is a finite sum of terms.  Each term is a product of integrals

    coeff * int d^n x_0 ... int d^n x_{d-1}  prod_k F_k

where every factor F_k is a field value phi^(alpha)(v), a momentum value
pi^(alpha)(v), or a delta factor delta^(alpha)(u - v); v is either an
integration dummy or a named free variable.  Derivative orders alpha are
multi-indices of length n (the session dimension).  The coefficient carries
an exact rational scalar, powers of the formal constants h, i, m, declared
coefficient functions evaluated at variables (f^(alpha)(v)), and formal
divergent constants produced by the operator calculus.

The same Term class backs operator expressions; there the factor tuple is an
ordered word of field operators and its order is significant.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import MaxDerivativeError
from .session import SESSION

DUMMY = 0
FREE = 1

PHI = "phi"
PI = "pi"

MultiIndex = tuple[int, ...]


@dataclass(frozen=True, slots=True)
class VarId:
    kind: int
    index: int

    @property
    def is_dummy(self) -> bool:
        return self.kind == DUMMY

    def key(self) -> tuple[int, int]:
        return (self.kind, self.index)

    def __repr__(self):
        return f"d{self.index}" if self.kind == DUMMY else f"v{self.index}"


def dummy(index: int) -> VarId:
    return VarId(DUMMY, index)


def free_var(name: str) -> VarId:
    """Intern `name` in the session and return the corresponding variable."""
    return VarId(FREE, SESSION.intern_free(name))


# -- multi-indices ----------------------------------------------------------

def mi_coerce(order: Union[int, Sequence[int], None]) -> MultiIndex:
    """Coerce an int (dimension-1 shorthand) or sequence to a multi-index."""
    n = SESSION.dimension
    if order is None:
        return (0,) * n
    if isinstance(order, int):
        if n != 1:
            raise ValueError("integer derivative order requires dimension 1")
        order = (order,)
    mi = tuple(int(a) for a in order)
    if len(mi) != n or any(a < 0 for a in mi):
        raise ValueError(f"bad multi-index {order!r} for dimension {n}")
    if sum(mi) > SESSION.max_derivative_order:
        raise MaxDerivativeError(
            f"derivative order {sum(mi)} exceeds bound {SESSION.max_derivative_order}"
        )
    return mi


def mi_zero() -> MultiIndex:
    return (0,) * SESSION.dimension


def mi_unit(axis: int) -> MultiIndex:
    n = SESSION.dimension
    return tuple(1 if a == axis else 0 for a in range(n))


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    s = tuple(x + y for x, y in zip(a, b))
    if sum(s) > SESSION.max_derivative_order:
        raise MaxDerivativeError(
            f"derivative order {sum(s)} exceeds bound {SESSION.max_derivative_order}"
        )
    return s


def mi_abs(a: MultiIndex) -> int:
    return sum(a)


# -- factors ------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class NamedFunction:
    """A declared coefficient function f^(alpha) evaluated at a variable."""
    name: str
    deriv: MultiIndex
    var: VarId

    def key(self):
        return (0, self.name, self.deriv, self.var.key())


@dataclass(frozen=True, slots=True)
class FieldFactor:
    field: str  # PHI or PI
    deriv: MultiIndex
    var: VarId

    def key(self):
        return (1 if self.field == PHI else 2, self.field, self.deriv, self.var.key())


@dataclass(frozen=True, slots=True)
class DeltaFactor:
    """delta^(alpha)(left - right); right is None for the anchored delta^(alpha)(left)."""
    deriv: MultiIndex
    left: VarId
    right: VarId | None

    def key(self):
        rk = self.right.key() if self.right is not None else (-1, -1)
        return (self.deriv, self.left.key(), rk)


DELTA_AT_ZERO = "delta0"     # delta^(alpha)(0)
INT_DELTA_SQ = "intdelta2"   # int delta(x)^2 dx
VOLUME = "vol"               # int dx over an argument nothing depends on


@dataclass(frozen=True, slots=True)
class DivergentConstant:
    kind: str
    order: MultiIndex = ()

    def key(self):
        return (self.kind, self.order)


def named(name: str, var: VarId, deriv=None) -> NamedFunction:
    SESSION.require_function(name)
    return NamedFunction(name, mi_coerce(deriv), var)


def phi(var: VarId, deriv=None) -> FieldFactor:
    return FieldFactor(PHI, mi_coerce(deriv), var)


def pi_(var: VarId, deriv=None) -> FieldFactor:
    return FieldFactor(PI, mi_coerce(deriv), var)


def delta(left: VarId, right: VarId | None, deriv=None) -> DeltaFactor:
    return DeltaFactor(mi_coerce(deriv), left, right)


# -- coefficient ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Coefficient:
    scalar: Fraction
    h: int = 0
    i: int = 0
    m: int = 0
    divergent: tuple[DivergentConstant, ...] = ()
    functions: tuple[NamedFunction, ...] = ()

    @staticmethod
    def make(scalar, h=0, i=0, m=0, divergent=(), functions=()) -> "Coefficient":
        scalar = Fraction(scalar)
        # i^2 = -1 folds into the scalar sign; i stays in {0, 1}
        i = int(i)
        sign = -1 if (i % 4) in (2, 3) else 1
        i = i % 2
        if scalar == 0:
            return Coefficient(Fraction(0))
        return Coefficient(
            scalar * sign, int(h), i, int(m),
            tuple(sorted(divergent, key=lambda d: d.key())),
            tuple(sorted(functions, key=lambda f: f.key())),
        )

    def mul(self, other: "Coefficient") -> "Coefficient":
        return Coefficient.make(
            self.scalar * other.scalar,
            self.h + other.h,
            self.i + other.i,
            self.m + other.m,
            self.divergent + other.divergent,
            self.functions + other.functions,
        )

    def scale(self, q) -> "Coefficient":
        return Coefficient.make(self.scalar * Fraction(q), self.h, self.i,
                                self.m, self.divergent, self.functions)

    def times_formal(self, h=0, i=0, divergent=()) -> "Coefficient":
        return Coefficient.make(self.scalar, self.h + h, self.i + i, self.m,
                                self.divergent + tuple(divergent), self.functions)

    @property
    def is_zero(self) -> bool:
        return self.scalar == 0

    def merge_key(self):
        return (self.h, self.i, self.m,
                tuple(d.key() for d in self.divergent),
                tuple(f.key() for f in self.functions))


ONE = Coefficient.make(1)


# -- terms and symbols ---------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Term:
    """One product of integrals.  `factors` order is significant only when the
    term is used inside an operator expression (the factors form the operator
    word); classical canonical form keeps `factors` sorted."""
    dummies: tuple[VarId, ...]
    coeff: Coefficient
    factors: tuple[FieldFactor, ...]
    deltas: tuple[DeltaFactor, ...]

    def key(self):
        return (
            len(self.dummies),
            tuple(f.key() for f in self.factors),
            tuple(d.key() for d in self.deltas),
            self.coeff.merge_key(),
        )

    @property
    def pi_degree(self) -> int:
        return sum(1 for f in self.factors if f.field == PI)

    @property
    def field_degree(self) -> int:
        return len(self.factors)

    def variables(self) -> set[VarId]:
        out = set()
        for f in self.factors:
            out.add(f.var)
        for fn in self.coeff.functions:
            out.add(fn.var)
        for d in self.deltas:
            out.add(d.left)
            if d.right is not None:
                out.add(d.right)
        return out


ClassicalTerm = Term


def make_term(scalar, dummies=(), factors=(), deltas=(), h=0, i=0, m=0,
              divergent=(), functions=()) -> Term:
    return Term(
        tuple(dummies),
        Coefficient.make(scalar, h, i, m, divergent, functions),
        tuple(factors),
        tuple(deltas),
    )


@dataclass(frozen=True, slots=True)
class Symbol:
    """A finite sum of classical terms (not necessarily canonical)."""
    terms: tuple[Term, ...]

    ORDERED = False  # factor tuples are commutative products

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Symbol") -> "Symbol":
        if type(other) is not type(self):
            raise TypeError("cannot mix classical symbols and operator expressions")
        return type(self)(self.terms + other.terms)

    def __sub__(self, other: "Symbol") -> "Symbol":
        return self + (-other)

    def __neg__(self) -> "Symbol":
        return self.scale(-1)

    def scale(self, q) -> "Symbol":
        q = Fraction(q)
        if q == 0:
            return type(self)(())
        return type(self)(tuple(
            Term(t.dummies, t.coeff.scale(q), t.factors, t.deltas) for t in self.terms
        ))

    def map_terms(self, fn) -> "Symbol":
        return type(self)(tuple(fn(t) for t in self.terms))


ZERO = Symbol(())


def symbol(*terms: Term) -> Symbol:
    return Symbol(tuple(terms))


# -- variable plumbing shared by the rewrite engine ----------------------------

def subst_var(t: Term, old: VarId, new: VarId) -> Term:
    """Replace `old` by `new` in every factor; dummies list is untouched."""
    def sub(v): return new if v == old else v
    return Term(
        t.dummies,
        Coefficient(
            t.coeff.scalar, t.coeff.h, t.coeff.i, t.coeff.m, t.coeff.divergent,
            tuple(NamedFunction(f.name, f.deriv, sub(f.var)) for f in t.coeff.functions),
        ),
        tuple(FieldFactor(f.field, f.deriv, sub(f.var)) for f in t.factors),
        tuple(DeltaFactor(d.deriv, sub(d.left),
                          None if d.right is None else sub(d.right))
              for d in t.deltas),
    )


def shift_dummies(t: Term, offset: int) -> Term:
    """Relabel every dummy index by +offset (used to keep products disjoint)."""
    if offset == 0 or not t.dummies:
        return t
    out = t
    # walk from the highest index down so renames never collide
    for v in sorted(t.dummies, key=lambda v: -v.index):
        out = subst_var(out, v, dummy(v.index + offset))
    return Term(tuple(dummy(v.index + offset) for v in t.dummies),
                out.coeff, out.factors, out.deltas)


def bind_free(s: Symbol, var: VarId) -> Symbol:
    """Integrate a symbol over one of its free variables."""
    if var.kind != FREE:
        raise ValueError("bind_free expects a free variable")
    out = []
    for t in s.terms:
        d = dummy(max((v.index for v in t.dummies), default=-1) + 1)
        t2 = subst_var(t, var, d)
        out.append(Term(t.dummies + (d,), t2.coeff, t2.factors, t2.deltas))
    return Symbol(tuple(out))


# -- public algebra entry points (engine lives in _rewrite) --------------------

def canonicalize(s: Symbol) -> Symbol:
    from . import _rewrite
    return Symbol(_rewrite.canonicalize_terms(s.terms, quantum=False))


def multiply(a: Symbol, b: Symbol) -> Symbol:
    """Product of functionals; integration dummies are kept disjoint."""
    from . import _rewrite
    out = []
    for ta in a.terms:
        offset = max((v.index for v in ta.dummies), default=-1) + 1
        for tb in b.terms:
            tb2 = shift_dummies(tb, offset)
            out.append(Term(
                ta.dummies + tb2.dummies,
                ta.coeff.mul(tb2.coeff),
                ta.factors + tb2.factors,
                ta.deltas + tb2.deltas,
            ))
    return Symbol(_rewrite.canonicalize_terms(tuple(out), quantum=False))


def equals(a: Symbol, b: Symbol) -> bool:
    """Structural equality of canonical forms."""
    return canonicalize(a).terms == canonicalize(b).terms
