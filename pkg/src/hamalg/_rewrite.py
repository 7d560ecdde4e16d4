"""Rewriting engine behind canonical forms.

Pipeline per term (first applicable rule fires, results re-enter the queue):

1. drop exact zeros; orient delta arguments (smaller variable first);
2. coincident deltas: delta^(k)(v - v) becomes the formal constant
   delta^(k)(0) in operator mode and is an error in classical mode;
3. paired deltas on one variable pair: the exclusive order-0 square under its
   own two integrals becomes the formal constant int delta^2; derivative
   decorations on such pairs have no sound substitution rule and raise;
4. a lone anchored delta under its own integral evaluates the integral
   (1 for order 0, 0 otherwise);
5. contraction: a delta with at least one integration-dummy argument is
   eliminated against the rest of the term, transferring its derivative by
   integration by parts;
6. orphaned integration variables: formal volume factor in operator mode,
   error in classical mode;
7. argument transfer across free-variable deltas (binomial identity), so
   expressions differing only by which delta argument carries the fields
   coincide structurally;
8. integration by parts per dummy: the greatest factor's derivative order is
   reduced (with chain-rule grouping) while a multiset measure on factor keys
   strictly decreases; ties or non-decreasing rewrites leave the term alone.

Afterwards dummies are relabeled canonically (refinement signature plus a
bounded brute-force over symmetric ties), factor lists are sorted in classical
mode (operator words keep their order), and like terms merge.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations, product
from math import comb, factorial

from .errors import CoincidentDeltaError, UnsupportedDivergenceError
from .terms import (
    Coefficient,
    DeltaFactor,
    DivergentConstant,
    FieldFactor,
    INT_DELTA_SQ,
    DELTA_AT_ZERO,
    VOLUME,
    NamedFunction,
    PHI,
    Term,
    VarId,
    dummy,
    mi_abs,
    mi_add,
    mi_unit,
    subst_var,
)

_PERM_CAP = 720  # bail out of brute-force tie breaking beyond 6! orderings


def canonicalize_terms(terms, quantum: bool = False,
                       transfer: bool | None = None) -> tuple[Term, ...]:
    # operator words keep delta arguments where the reduction put them unless
    # a normal form across argument placement is explicitly requested
    if transfer is None:
        transfer = not quantum
    # every rule is linear in the leading scalar, reads only the rest of the
    # term, and is label-invariant, so pushed terms are alpha-normalized
    # (sorted, dummies renamed by first occurrence) and in-flight duplicates
    # merge; cancelling shapes disappear before they fan out
    pending: dict = {}

    def push(t):
        if t.coeff.is_zero:
            return
        if t.dummies:
            t = _rename(t, _occurrence_order(t))
        t = _normalize_rep(t, quantum)
        k = t.key()
        old = pending.get(k)
        if old is None:
            pending[k] = t
            return
        s = old.coeff.scalar + t.coeff.scalar
        if s == 0:
            del pending[k]
            return
        c = old.coeff
        pending[k] = Term(old.dummies,
                          Coefficient(s, c.h, c.i, c.m, c.divergent, c.functions),
                          old.factors, old.deltas)

    for t in terms:
        push(t)
    done = []
    while pending:
        _, t = pending.popitem()
        step = _rewrite_step(t, quantum, transfer)
        if step is None:
            done.append(t)
        else:
            for nt in step:
                push(nt)
    # fixpoint terms are alpha-normalized already: merge them on the cheap
    # key first so the canonical relabeling runs once per distinct shape
    return _merge(_finalize(t, quantum) for t in _merge(done))


# -- single rewrite step -------------------------------------------------------


def _rewrite_step(t: Term, quantum: bool, transfer: bool):
    if t.coeff.is_zero:
        return []
    r = _orient(t)
    if r is not None:
        return r
    r = _coincident(t, quantum)
    if r is not None:
        return r
    r = _pair_rule(t, quantum)
    if r is not None:
        return r
    r = _anchored_lone(t)
    if r is not None:
        return r
    r = _contract(t, quantum)
    if r is not None:
        return r
    r = _orphan(t, quantum)
    if r is not None:
        return r
    if transfer:
        r = _transfer(t)
        if r is not None:
            return r
    r = _ibp(t, quantum)
    if r is not None:
        return r
    return None


def _orient(t: Term):
    """delta^(k)(u - v) with u > v flips to (-1)^|k| delta^(k)(v - u)."""
    sign = 1
    changed = False
    deltas = []
    for d in t.deltas:
        if d.right is not None and d.left.key() > d.right.key():
            deltas.append(DeltaFactor(d.deriv, d.right, d.left))
            sign *= (-1) ** mi_abs(d.deriv)
            changed = True
        else:
            deltas.append(d)
    if not changed:
        return None
    return [Term(t.dummies, t.coeff.scale(sign), t.factors, tuple(deltas))]


def _coincident(t: Term, quantum: bool):
    for idx, d in enumerate(t.deltas):
        if d.right is not None and d.left == d.right:
            if not quantum:
                raise CoincidentDeltaError(
                    f"coincident delta of order {d.deriv} on {d.left!r}; "
                    "classical functionals never produce these"
                )
            rest = t.deltas[:idx] + t.deltas[idx + 1:]
            coeff = t.coeff.times_formal(
                divergent=(DivergentConstant(DELTA_AT_ZERO, d.deriv),))
            return [Term(t.dummies, coeff, t.factors, rest)]
    return None


def _var_occurrences(t: Term, v: VarId, skip_delta_idx=()) -> int:
    n = 0
    for f in t.factors:
        if f.var == v:
            n += 1
    for fn in t.coeff.functions:
        if fn.var == v:
            n += 1
    for idx, d in enumerate(t.deltas):
        if idx in skip_delta_idx:
            continue
        if d.left == v:
            n += 1
        if d.right == v:
            n += 1
    return n


def _pair_rule(t: Term, quantum: bool):
    if not quantum:
        return None
    by_pair: dict[tuple, list[int]] = {}
    for idx, d in enumerate(t.deltas):
        if d.right is not None and d.left != d.right:
            by_pair.setdefault((d.left, d.right), []).append(idx)
    for (l, r), idxs in sorted(by_pair.items(), key=lambda kv: (kv[0][0].key(), kv[0][1].key())):
        if len(idxs) < 2:
            continue
        if any(mi_abs(t.deltas[i].deriv) > 0 for i in idxs):
            raise UnsupportedDivergenceError(
                "product of coincident deltas with derivative decoration has "
                "no formal substitution rule"
            )
        if len(idxs) > 2:
            raise UnsupportedDivergenceError(
                "delta cubed (or higher) at one variable pair is not supported"
            )
        exclusive = (
            l.is_dummy and r.is_dummy
            and _var_occurrences(t, l, skip_delta_idx=idxs) == 0
            and _var_occurrences(t, r, skip_delta_idx=idxs) == 0
        )
        if exclusive:
            deltas = tuple(d for i, d in enumerate(t.deltas) if i not in idxs)
            dummies = tuple(v for v in t.dummies if v not in (l, r))
            coeff = t.coeff.times_formal(divergent=(DivergentConstant(INT_DELTA_SQ),))
            return [Term(dummies, coeff, t.factors, deltas)]
    return None


def _anchored_lone(t: Term):
    for idx, d in enumerate(t.deltas):
        if d.right is not None or not d.left.is_dummy:
            continue
        if _var_occurrences(t, d.left, skip_delta_idx=(idx,)) == 0:
            if mi_abs(d.deriv) > 0:
                return []  # integral of a pure derivative of delta
            deltas = t.deltas[:idx] + t.deltas[idx + 1:]
            dummies = tuple(v for v in t.dummies if v != d.left)
            return [Term(dummies, t.coeff, t.factors, deltas)]
    return None


# -- differentiation ------------------------------------------------------------


def _slots(t: Term, v: VarId):
    """Positions in `t` that depend on `v`, for the product rule."""
    out = []
    for idx, f in enumerate(t.factors):
        if f.var == v:
            out.append(("factor", idx))
    for idx, fn in enumerate(t.coeff.functions):
        if fn.var == v:
            out.append(("func", idx))
    for idx, d in enumerate(t.deltas):
        if d.right is not None and d.left == d.right:
            continue  # a coincident delta is a constant in v
        if d.left == v:
            out.append(("delta", idx, "left"))
        if d.right == v:
            out.append(("delta", idx, "right"))
    return out


def _apply_d_slot(t: Term, slot, axis: int) -> Term:
    """Differentiate one slot of `t` along `axis` (product-rule summand)."""
    e = mi_unit(axis)
    kind = slot[0]
    if kind == "factor":
        idx = slot[1]
        f = t.factors[idx]
        nf = FieldFactor(f.field, mi_add(f.deriv, e), f.var)
        return Term(t.dummies, t.coeff,
                    t.factors[:idx] + (nf,) + t.factors[idx + 1:], t.deltas)
    if kind == "func":
        idx = slot[1]
        fn = t.coeff.functions[idx]
        nfn = NamedFunction(fn.name, mi_add(fn.deriv, e), fn.var)
        funcs = t.coeff.functions[:idx] + (nfn,) + t.coeff.functions[idx + 1:]
        c = t.coeff
        return Term(t.dummies,
                    Coefficient(c.scalar, c.h, c.i, c.m, c.divergent, funcs),
                    t.factors, t.deltas)
    idx, side = slot[1], slot[2]
    d = t.deltas[idx]
    nd = DeltaFactor(mi_add(d.deriv, e), d.left, d.right)
    sign = 1 if side == "left" else -1
    return Term(t.dummies, t.coeff.scale(sign),
                t.factors, t.deltas[:idx] + (nd,) + t.deltas[idx + 1:])


def _diff_once(t: Term, v: VarId, axis: int) -> list[Term]:
    return [_apply_d_slot(t, s, axis) for s in _slots(t, v)]


def _diff_multi(t: Term, v: VarId, k) -> list[Term]:
    terms = [t]
    for axis, reps in enumerate(k):
        for _ in range(reps):
            terms = [nt for tt in terms for nt in _diff_once(tt, v, axis)]
    return terms


# -- contraction ----------------------------------------------------------------


def _contract(t: Term, quantum: bool):
    for d in sorted(t.deltas, key=lambda d: d.key()):
        if d.right is None or d.left == d.right:
            continue
        cands = [v for v in (d.left, d.right) if v.is_dummy]
        if not cands:
            continue
        v = max(cands, key=lambda v: v.key())
        keep = d.right if v == d.left else d.left
        sign = 1 if v == d.right else (-1) ** mi_abs(d.deriv)
        idx = t.deltas.index(d)
        stripped = Term(t.dummies, t.coeff, t.factors,
                        t.deltas[:idx] + t.deltas[idx + 1:])
        out = []
        for tt in _diff_multi(stripped, v, d.deriv):
            tt = subst_var(tt, v, keep)
            out.append(Term(tuple(x for x in tt.dummies if x != v),
                            tt.coeff.scale(sign), tt.factors, tt.deltas))
        return out
    return None


def _orphan(t: Term, quantum: bool):
    # an integration variable nothing depends on contributes the formal
    # volume constant; {int phi, int pi} is the canonical classical example
    orphans = [v for v in t.dummies if _var_occurrences(t, v) == 0]
    if not orphans:
        return None
    coeff = t.coeff.times_formal(
        divergent=tuple(DivergentConstant(VOLUME) for _ in orphans))
    return [Term(tuple(v for v in t.dummies if v not in orphans),
                 coeff, t.factors, t.deltas)]


# -- argument transfer across free-variable deltas -------------------------------


def _transfer(t: Term):
    for didx, d in enumerate(t.deltas):
        if d.right is None or d.left.is_dummy or d.right.is_dummy:
            continue
        # orientation guarantees left < right; move arguments onto the left
        target, source = d.left, d.right
        slot = None
        for idx, f in enumerate(t.factors):
            if f.var == source:
                slot = ("factor", idx)
                break
        if slot is None:
            for idx, fn in enumerate(t.coeff.functions):
                if fn.var == source:
                    slot = ("func", idx)
                    break
        if slot is None:
            continue
        k = d.deriv
        out = []
        for j in product(*(range(a + 1) for a in k)):
            w = 1
            for a, b in zip(k, j):
                w *= comb(a, b)
            kd = tuple(a - b for a, b in zip(k, j))
            nd = DeltaFactor(kd, d.left, d.right)
            if slot[0] == "factor":
                f = t.factors[slot[1]]
                nf = FieldFactor(f.field, mi_add(f.deriv, j), target)
                factors = t.factors[:slot[1]] + (nf,) + t.factors[slot[1] + 1:]
                coeff = t.coeff.scale(w)
                out.append(Term(t.dummies, coeff, factors,
                                t.deltas[:didx] + (nd,) + t.deltas[didx + 1:]))
            else:
                fn = t.coeff.functions[slot[1]]
                nfn = NamedFunction(fn.name, mi_add(fn.deriv, j), target)
                funcs = (t.coeff.functions[:slot[1]] + (nfn,)
                         + t.coeff.functions[slot[1] + 1:])
                c = t.coeff
                coeff = Coefficient(c.scalar * w, c.h, c.i, c.m, c.divergent, funcs)
                out.append(Term(t.dummies, coeff, t.factors,
                                t.deltas[:didx] + (nd,) + t.deltas[didx + 1:]))
        return out
    return None


# -- integration by parts ---------------------------------------------------------


def _base_rank(piece) -> tuple:
    if isinstance(piece, NamedFunction):
        return (0, piece.name)
    return (1, PHI) if piece.field == PHI else (2, "pi")


def _ibp_keys(t: Term, v: VarId):
    """(base, deriv) keys of the factors/functions of `t` evaluated at `v`."""
    keys = []
    for idx, f in enumerate(t.factors):
        if f.var == v:
            keys.append((_base_rank(f), f.deriv, ("factor", idx)))
    for idx, fn in enumerate(t.coeff.functions):
        if fn.var == v:
            keys.append((_base_rank(fn), fn.deriv, ("func", idx)))
    return keys


def _ibp(t: Term, quantum: bool):
    delta_vars = set()
    for d in t.deltas:
        delta_vars.add(d.left)
        if d.right is not None:
            delta_vars.add(d.right)
    for v in sorted(t.dummies, key=lambda v: v.key()):
        if v in delta_vars:
            continue
        keys = _ibp_keys(t, v)
        if not keys:
            continue
        top = max(keys, key=lambda k: (k[0], k[1]))
        base, K, top_slot = top
        if mi_abs(K) == 0:
            continue
        if sum(1 for k in keys if (k[0], k[1]) == (base, K)) > 1:
            continue  # tied maximum: no sound single-factor reduction
        axis = next(a for a, c in enumerate(K) if c > 0)
        Km = tuple(c - (1 if a == axis else 0) for a, c in enumerate(K))
        grouped = [k[2] for k in keys if (k[0], k[1]) == (base, Km)]
        p = len(grouped)
        rslots = [k[2] for k in keys
                  if k[2] != top_slot and k[2] not in grouped]
        lowered = _set_slot_deriv(t, top_slot, Km)
        scale = Fraction(-1, p + 1)
        new_terms = [_scale_term(_apply_d_slot(lowered, s, axis), scale)
                     for s in rslots]
        old_measure = _measure(t, v)
        if all(_measure(nt, v) < old_measure for nt in new_terms):
            return new_terms
    return None


def _scale_term(t: Term, q) -> Term:
    return Term(t.dummies, t.coeff.scale(q), t.factors, t.deltas)


def _set_slot_deriv(t: Term, slot, deriv) -> Term:
    kind, idx = slot
    if kind == "factor":
        f = t.factors[idx]
        nf = FieldFactor(f.field, deriv, f.var)
        return Term(t.dummies, t.coeff,
                    t.factors[:idx] + (nf,) + t.factors[idx + 1:], t.deltas)
    fn = t.coeff.functions[idx]
    nfn = NamedFunction(fn.name, deriv, fn.var)
    c = t.coeff
    funcs = c.functions[:idx] + (nfn,) + c.functions[idx + 1:]
    return Term(t.dummies, Coefficient(c.scalar, c.h, c.i, c.m, c.divergent, funcs),
                t.factors, t.deltas)


def _measure(t: Term, v: VarId) -> tuple:
    """Sorted-descending (base, deriv) keys at `v`; tuple order = multiset order."""
    return tuple(sorted(((k[0], k[1]) for k in _ibp_keys(t, v)), reverse=True))


# -- relabeling, sorting, merging ---------------------------------------------


def _class_of(v, classes):
    if v is None:
        return ("origin",)
    if v.kind == 1:  # free
        return ("free", v.index)
    return ("cls", classes.get(v, -1))


def _refine_classes(t: Term, quantum: bool) -> dict[VarId, int]:
    dummies = list(t.dummies)
    classes = {v: 0 for v in dummies}
    for _ in range(3):
        sigs = {}
        for v in dummies:
            desc = []
            for pos, f in enumerate(t.factors):
                if f.var == v:
                    desc.append(("F", f.field, f.deriv, pos if quantum else -1))
            for fn in t.coeff.functions:
                if fn.var == v:
                    desc.append(("N", fn.name, fn.deriv))
            for d in t.deltas:
                if d.left == v:
                    desc.append(("DL", d.deriv, _class_of(d.right, classes)))
                if d.right == v:
                    desc.append(("DR", d.deriv, _class_of(d.left, classes)))
            sigs[v] = tuple(sorted(desc))
        order = sorted(dummies, key=lambda v: (sigs[v], 0))
        new = {}
        rank = -1
        prev = object()
        for v in order:
            if sigs[v] != prev:
                rank += 1
                prev = sigs[v]
            new[v] = rank
        if new == classes:
            break
        classes = new
    return classes


_TMP_BASE = 10 ** 6


def _occurrence_order(t: Term) -> list[VarId]:
    """Dummies by first appearance across factors, functions, deltas."""
    seen = []
    def visit(v):
        if v is not None and v.is_dummy and v not in seen:
            seen.append(v)
    for f in t.factors:
        visit(f.var)
    for fn in t.coeff.functions:
        visit(fn.var)
    for d in t.deltas:
        visit(d.left)
        visit(d.right)
    for v in sorted(t.dummies, key=lambda v: v.key()):
        visit(v)
    return seen


def _rename(t: Term, order: list[VarId]) -> Term:
    m = {old: dummy(i) for i, old in enumerate(order)}
    if all(k == v for k, v in m.items()):
        return Term(tuple(dummy(i) for i in range(len(order))),
                    t.coeff, t.factors, t.deltas)

    def sub(v):
        if v is None:
            return None
        return m.get(v, v)

    factors = tuple(FieldFactor(f.field, f.deriv, sub(f.var)) for f in t.factors)
    deltas = tuple(DeltaFactor(d.deriv, sub(d.left), sub(d.right))
                   for d in t.deltas)
    c = t.coeff
    if c.functions:
        funcs = tuple(NamedFunction(fn.name, fn.deriv, sub(fn.var))
                      for fn in c.functions)
        c = Coefficient(c.scalar, c.h, c.i, c.m, c.divergent, funcs)
    return Term(tuple(dummy(i) for i in range(len(order))), c, factors, deltas)


def _normalize_rep(t: Term, quantum: bool) -> Term:
    """Orient deltas, sort what is sortable; assumes rewriting is exhausted."""
    sign = 1
    deltas = []
    for d in t.deltas:
        if d.right is not None and d.left.key() > d.right.key():
            deltas.append(DeltaFactor(d.deriv, d.right, d.left))
            sign *= (-1) ** mi_abs(d.deriv)
        else:
            deltas.append(d)
    deltas = tuple(sorted(deltas, key=lambda d: d.key()))
    factors = t.factors if quantum else tuple(sorted(t.factors, key=lambda f: f.key()))
    c = t.coeff
    coeff = Coefficient.make(c.scalar * sign, c.h, c.i, c.m, c.divergent, c.functions)
    return Term(t.dummies, coeff, factors, deltas)


def _finalize(t: Term, quantum: bool) -> Term:
    if not t.dummies:
        return _normalize_rep(t, quantum)
    classes = _refine_classes(t, quantum)
    groups: dict[int, list[VarId]] = {}
    for v in t.dummies:
        groups.setdefault(classes[v], []).append(v)
    for g in groups.values():
        g.sort(key=lambda v: v.key())
    ranks = sorted(groups)
    n_perms = 1
    for g in groups.values():
        n_perms *= factorial(len(g))
    candidates = []
    if n_perms > _PERM_CAP:
        order = [v for r in ranks for v in groups[r]]
        candidates.append(order)
    else:
        for choice in product(*(permutations(groups[r]) for r in ranks)):
            candidates.append([v for grp in choice for v in grp])
    best = None
    best_key = None
    for order in candidates:
        cand = _normalize_rep(_rename(t, order), quantum)
        key = (cand.key(), cand.coeff.scalar)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    return best


def _merge(terms) -> tuple[Term, ...]:
    acc: dict[tuple, Term] = {}
    sums: dict[tuple, Fraction] = {}
    for t in terms:
        if t.coeff.is_zero:
            continue
        k = t.key()
        if k in sums:
            sums[k] += t.coeff.scalar
        else:
            sums[k] = t.coeff.scalar
            acc[k] = t
    out = []
    for k, t in acc.items():
        s = sums[k]
        if s == 0:
            continue
        c = t.coeff
        out.append(Term(t.dummies, Coefficient(s, c.h, c.i, c.m, c.divergent, c.functions),
                        t.factors, t.deltas))
    out.sort(key=lambda t: t.key())
    return tuple(out)
