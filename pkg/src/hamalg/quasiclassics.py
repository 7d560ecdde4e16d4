"""Finite-dimensional quasiclassical machinery.

Characteristics of polynomial Hamiltonians with the variational
(monodromy) equations alongside, half-density amplitude transport, and
numerical residual checks: the Hamilton-Jacobi/transport pair, and the
order-h^2 defect of the WKB ansatz against the normal-ordered operator.

Hamiltonians are sympy expressions, polynomial in (p, q) with optional
explicit time dependence; all partial derivatives are exact (symbolic)
and evaluation is vectorized over numpy arrays.  Derivatives of the
supplied S and a callables are taken by 5-point central differences so
that the evaluator noise sits well below the tolerances being asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

from .errors import CausticError, PreconditionError

CAUSTIC_DET = 1e-8

T, Q, P = sp.symbols("t q p")


class FiniteDimHamiltonian:
    """Polynomial H(t, p, q) on n degrees of freedom with exact partials."""

    def __init__(self, expr, q, p, t=None):
        q = (q,) if isinstance(q, sp.Expr) else tuple(q)
        p = (p,) if isinstance(p, sp.Expr) else tuple(p)
        if len(q) != len(p) or not q:
            raise PreconditionError("need matching nonempty q and p symbol lists")
        self.t = T if t is None else t
        expr = sp.sympify(expr)
        if not expr.is_polynomial(*q, *p):
            raise PreconditionError("hamiltonian must be polynomial in (p, q)")
        self.q = q
        self.p = p
        self.n = len(q)
        self.expr = expr
        self.autonomous = self.t not in expr.free_symbols

        mixed = sum(sp.diff(expr, pi, qi) for pi, qi in zip(p, q))
        self.has_zero_mixed_trace = sp.simplify(mixed) == 0

        args = (self.t, *q, *p)

        def lam(e):
            return sp.lambdify(args, e, modules="numpy")

        self._h = lam(expr)
        self._hp = [lam(sp.diff(expr, pi)) for pi in p]
        self._hq = [lam(sp.diff(expr, qi)) for qi in q]
        self._hpp = [[lam(sp.diff(expr, pi, pj)) for pj in p] for pi in p]
        self._hpq = [[lam(sp.diff(expr, pi, qj)) for qj in q] for pi in p]
        self._hqq = [[lam(sp.diff(expr, qi, qj)) for qj in q] for qi in q]

    def _eval(self, f, t, q, p):
        out = f(t, *(q[..., i] for i in range(self.n)), *(p[..., i] for i in range(self.n)))
        return np.broadcast_to(np.asarray(out, dtype=np.float64), q.shape[:-1])

    def value(self, t, q, p):
        return self._eval(self._h, t, q, p)

    def h_p(self, t, q, p):
        return np.stack([self._eval(f, t, q, p) for f in self._hp], axis=-1)

    def h_q(self, t, q, p):
        return np.stack([self._eval(f, t, q, p) for f in self._hq], axis=-1)

    def _matrix(self, fs, t, q, p):
        rows = [np.stack([self._eval(f, t, q, p) for f in row], axis=-1) for row in fs]
        return np.stack(rows, axis=-2)

    def h_pp(self, t, q, p):
        return self._matrix(self._hpp, t, q, p)

    def h_pq(self, t, q, p):
        return self._matrix(self._hpq, t, q, p)

    def h_qq(self, t, q, p):
        return self._matrix(self._hqq, t, q, p)

    def momentum_coefficients(self):
        """Coefficients c_k(t, q) of H = sum_k c_k p^k; 1 dof only."""
        if self.n != 1:
            raise PreconditionError("momentum expansion implemented for 1 dof")
        poly = sp.Poly(self.expr, self.p[0])
        coeffs = [sp.S.Zero] * (poly.degree() + 1)
        for (k,), c in poly.terms():
            coeffs[k] = c
        args = (self.t, self.q[0])
        return [sp.lambdify(args, c, modules="numpy") for c in coeffs]


def _coerce_q0(ham: FiniteDimHamiltonian, q0) -> np.ndarray:
    q0 = np.asarray(q0, dtype=np.float64)
    if q0.ndim == 0:
        q0 = q0.reshape(1, 1)
    elif q0.ndim == 1:
        q0 = q0[:, None] if ham.n == 1 else q0[None, :]
    if q0.shape[-1] != ham.n:
        raise PreconditionError("initial points must have one column per dof")
    return q0


def _grad_and_hess(ham: FiniteDimHamiltonian, s0):
    s0 = sp.sympify(s0)
    grad = [sp.lambdify(ham.q, sp.diff(s0, qi), modules="numpy") for qi in ham.q]
    hess = [[sp.lambdify(ham.q, sp.diff(s0, qi, qj), modules="numpy")
             for qj in ham.q] for qi in ham.q]
    val = sp.lambdify(ham.q, s0, modules="numpy")
    return val, grad, hess


@dataclass
class Characteristics:
    """Batched characteristic data: leading axis is time, then batch."""

    ts: np.ndarray       # (nt,)
    q: np.ndarray        # (nt, B, n)
    p: np.ndarray        # (nt, B, n)
    jac_q: np.ndarray    # (nt, B, n, n), dq(t)/dq0 along the initial manifold
    jac_p: np.ndarray    # (nt, B, n, n)
    action: np.ndarray   # (nt, B)
    energy_drift: float | None

    @property
    def batch(self) -> int:
        return self.q.shape[1]


def _rhs(ham, t, q, p, jq, jp):
    hp = ham.h_p(t, q, p)
    hq = ham.h_q(t, q, p)
    hpp = ham.h_pp(t, q, p)
    hpq = ham.h_pq(t, q, p)
    hqq = ham.h_qq(t, q, p)
    hqp = np.swapaxes(hpq, -1, -2)
    return (
        hp,
        -hq,
        hpq @ jq + hpp @ jp,
        -(hqq @ jq) - (hqp @ jp),
        np.sum(p * hp, axis=-1) - ham.value(t, q, p),
    )


def _rk4(ham, t, state, dt):
    def axpy(s, c, k):
        return tuple(a + c * b for a, b in zip(s, k))

    k1 = _rhs(ham, t, *state[:4])
    k2 = _rhs(ham, t + dt / 2, *axpy(state, dt / 2, k1)[:4])
    k3 = _rhs(ham, t + dt / 2, *axpy(state, dt / 2, k2)[:4])
    k4 = _rhs(ham, t + dt, *axpy(state, dt, k3)[:4])
    return tuple(
        s + (dt / 6) * (a + 2 * b + 2 * c + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def integrate_characteristics(ham: FiniteDimHamiltonian, s0, q0, t_final: float,
                              dt: float = 1e-3, t0: float = 0.0) -> Characteristics:
    """4th-order characteristics with the variational equations alongside.

    s0 is the initial phase (sympy expression in the q symbols); the
    initial momentum is its gradient and the initial dp/dq0 block its
    Hessian.  Raises CausticError as soon as |det dq/dq0| < 1e-8.
    """
    q0 = _coerce_q0(ham, q0)
    b, n = q0.shape
    _, grad, hess = _grad_and_hess(ham, s0)
    cols = tuple(q0[:, i] for i in range(n))
    p0 = np.stack([np.broadcast_to(np.asarray(g(*cols), dtype=np.float64), (b,)) for g in grad], axis=-1)
    jp0 = np.stack(
        [np.stack([np.broadcast_to(np.asarray(h(*cols), dtype=np.float64), (b,)) for h in row], axis=-1)
         for row in hess], axis=-2)
    jq0 = np.broadcast_to(np.eye(n), (b, n, n)).copy()

    steps = max(1, round((t_final - t0) / dt))
    dt = (t_final - t0) / steps
    ts = t0 + dt * np.arange(steps + 1)

    out_q = np.empty((steps + 1, b, n))
    out_p = np.empty_like(out_q)
    out_jq = np.empty((steps + 1, b, n, n))
    out_jp = np.empty_like(out_jq)
    out_s = np.empty((steps + 1, b))

    state = (q0.astype(np.float64), p0, jq0, jp0, np.zeros(b))
    h0 = ham.value(ts[0], state[0], state[1]) if ham.autonomous else None
    drift = 0.0
    for k in range(steps + 1):
        q, p, jq, jp, s = state
        dets = np.linalg.det(jq)
        # a sign change means the singular point fell between steps
        if np.abs(dets).min() < CAUSTIC_DET or dets.min() <= 0.0:
            raise CausticError("caustic: dq/dq0 is singular", t=float(ts[k]))
        out_q[k], out_p[k], out_jq[k], out_jp[k], out_s[k] = q, p, jq, jp, s
        if h0 is not None:
            drift = max(drift, float(np.abs(ham.value(ts[k], q, p) - h0).max()))
        if k < steps:
            state = _rk4(ham, ts[k], state, dt)

    rel = None
    if h0 is not None:
        rel = drift / max(1.0, float(np.abs(h0).max()))
    return Characteristics(ts=ts, q=out_q, p=out_p, jac_q=out_jq, jac_p=out_jp,
                           action=out_s, energy_drift=rel)


def monodromy(ham: FiniteDimHamiltonian, q0, p0, t_final: float, dt: float = 1e-3) -> np.ndarray:
    """Full 2n x 2n fundamental matrix of the variational equations."""
    q0 = _coerce_q0(ham, q0)
    p0 = _coerce_q0(ham, p0)
    b, n = q0.shape
    # [I 0; 0 I] split into the jq / jp blocks of width 2n
    jq = np.broadcast_to(np.hstack([np.eye(n), np.zeros((n, n))]), (b, n, 2 * n)).copy()
    jp = np.broadcast_to(np.hstack([np.zeros((n, n)), np.eye(n)]), (b, n, 2 * n)).copy()
    steps = max(1, round(t_final / dt))
    dt = t_final / steps
    state = (q0.astype(np.float64), p0.astype(np.float64), jq, jp, np.zeros(b))
    t = 0.0
    for _ in range(steps):
        state = _rk4(ham, t, state, dt)
        t += dt
    return np.concatenate([state[2], state[3]], axis=-2)[0]


def transport_amplitude(ham: FiniteDimHamiltonian, chars: Characteristics, a0) -> np.ndarray:
    """Half-density transport a(t) = a0(q0) det(dq/dq0)^(-1/2).

    Valid only when the mixed trace sum_i H_{p_i q_i} vanishes
    identically; otherwise the transported amplitude would need the
    extra trace term and we refuse.
    """
    if not ham.has_zero_mixed_trace:
        raise PreconditionError("transport formula needs sum_i H_{p_i q_i} = 0")
    if callable(a0) and not isinstance(a0, sp.Expr):
        a0v = np.asarray(a0(chars.q[0]), dtype=np.float64).reshape(chars.batch)
    else:
        f = sp.lambdify(ham.q, sp.sympify(a0), modules="numpy")
        cols = tuple(chars.q[0][:, i] for i in range(ham.n))
        a0v = np.broadcast_to(np.asarray(f(*cols), dtype=np.float64), (chars.batch,))
    dets = np.linalg.det(chars.jac_q)
    if dets.min() <= 0.0:
        raise CausticError("determinant crossed zero inside stored trajectory", t=float(chars.ts[-1]))
    return a0v[None, :] * dets ** (-0.5)


# ------------------------------------------------------- residual evaluators


def _d1(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _d2(f, x, h):
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def _diff5(y: np.ndarray, h: float) -> np.ndarray:
    # 5-point first derivative of a sampled array; two edge cells on
    # each side are garbage and must stay outside the reported window
    out = np.zeros_like(y)
    out[2:-2] = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * h)
    return out


@dataclass
class TransportResidualReport:
    hj_max: float
    residual_max: float

    def to_dict(self) -> dict:
        return {"hj_max": self.hj_max, "residual_max": self.residual_max}


def transport_residual(ham: FiniteDimHamiltonian, s_fn, a_fn, t_grid, q_grid,
                       dt: float = 1e-3, dq: float = 1e-3,
                       hj_tol: float = 1e-4) -> TransportResidualReport:
    """Check a_t + a_q H_p + (a/2) H_pp S_qq = 0 on a (t, q) grid, 1 dof.

    The phase is checked first: if S does not satisfy the eikonal
    equation on the grid (to hj_tol) the transport equation is not the
    right object and we refuse.
    """
    if ham.n != 1:
        raise PreconditionError("residual grids implemented for 1 dof")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    q = np.asarray(q_grid, dtype=np.float64)

    def pack(x):
        return x[..., None]

    hj_max = 0.0
    rows = []
    for t in t_grid:
        sq = _d1(lambda qq: s_fn(t, qq), q, dq)
        st = _d1(lambda tt: s_fn(tt, q), t, dt)
        hj = st + ham.value(t, pack(q), pack(sq))
        hj_max = max(hj_max, float(np.abs(hj).max()))
        rows.append((t, sq))
    if hj_max > hj_tol:
        raise PreconditionError(
            f"phase does not solve the eikonal equation on the grid (max {hj_max:.3e})")

    res_max = 0.0
    for t, sq in rows:
        sqq = _d2(lambda qq: s_fn(t, qq), q, dq)
        at = _d1(lambda tt: a_fn(tt, q), t, dt)
        aq = _d1(lambda qq: a_fn(t, qq), q, dq)
        av = a_fn(t, q)
        hp = ham.h_p(t, pack(q), pack(sq))[..., 0]
        hpp = ham.h_pp(t, pack(q), pack(sq))[..., 0, 0]
        resid = at + aq * hp + 0.5 * av * hpp * sqq
        res_max = max(res_max, float(np.abs(resid).max()))
    return TransportResidualReport(hj_max=hj_max, residual_max=res_max)


@dataclass
class WkbReport:
    h_values: tuple
    residuals: tuple
    exponent: float | None

    def to_dict(self) -> dict:
        return {"h_values": list(self.h_values), "residuals": list(self.residuals),
                "exponent": self.exponent}


def wkb_residual(ham: FiniteDimHamiltonian, s_fn, a_fn, h_values, t_grid, q_grid,
                 dt: float = 1e-3) -> WkbReport:
    """Defect of psi = a exp(iS/h) against i h psi_t = H(t, -i h d/dq, q) psi.

    The operator is normal ordered: every -i h d/dq acts to the right of
    the q-dependent coefficients.  Derivatives of the oscillatory psi
    are never formed directly; (-i h d/dq)^k psi = u_k exp(iS/h) with
    the smooth recursion u_{k+1} = S_q u_k - i h (u_k)_q, so the
    residual is evaluated entirely on smooth factors.
    """
    if ham.n != 1:
        raise PreconditionError("wkb residual implemented for 1 dof")
    q = np.asarray(q_grid, dtype=np.float64)
    spacing = np.diff(q)
    if q.size < 9 or not np.allclose(spacing, spacing[0], rtol=1e-9):
        raise PreconditionError("q grid must be uniform and reasonably fine")
    dq = float(spacing[0])
    coeffs = ham.momentum_coefficients()
    deg = len(coeffs) - 1
    margin = 2 * max(deg, 1)
    ext = np.concatenate([q[0] + dq * np.arange(-margin, 0), q,
                          q[-1] + dq * np.arange(1, margin + 1)])

    h_values = tuple(float(h) for h in h_values)
    worst = [0.0 for _ in h_values]
    for t in np.asarray(t_grid, dtype=np.float64):
        sv = s_fn(t, ext)
        av = np.asarray(a_fn(t, ext), dtype=np.float64)
        st = _d1(lambda tt: s_fn(tt, ext), t, dt)
        at = _d1(lambda tt: np.asarray(a_fn(tt, ext), dtype=np.float64), t, dt)
        sq = _diff5(sv, dq)
        cvals = [np.broadcast_to(np.asarray(c(t, ext), dtype=np.float64), ext.shape)
                 for c in coeffs]
        scale = float(np.abs(av[margin:-margin]).max())
        for j, h in enumerate(h_values):
            u = av.astype(np.complex128)
            acc = cvals[0] * u
            for k in range(1, deg + 1):
                u = sq * u - 1j * h * _diff5(u, dq)
                acc = acc + cvals[k] * u
            resid = 1j * h * at - st * av - acc
            r = float(np.abs(resid[margin:-margin]).max())
            worst[j] = max(worst[j], r if scale == 0.0 else r / scale)

    exponent = None
    if all(r > 0 for r in worst) and len(worst) >= 2:
        exponent = float(np.polyfit(np.log(h_values), np.log(worst), 1)[0])
    return WkbReport(h_values=h_values, residuals=tuple(worst), exponent=exponent)


# ------------------------------------------------------------ standard cases


def oscillator_case() -> dict:
    """H = (p^2 + q^2)/2 with the closed-form S, a valid on 0 < t < pi/2."""
    ham = FiniteDimHamiltonian((P ** 2 + Q ** 2) / 2, Q, P)

    def s_fn(t, qq):
        return -qq * qq * np.tan(t) / 2.0

    def a_fn(t, qq):
        return np.full_like(np.asarray(qq, dtype=np.float64), np.cos(t) ** -0.5)

    return {
        "name": "oscillator",
        "ham": ham,
        "s": s_fn,
        "a": a_fn,
        "s0": sp.S.Zero,
        "a0": sp.S.One,
        "t_grid": np.linspace(0.1, 1.0, 7),
        "q_grid": np.linspace(-1.0, 1.0, 201),
    }


def free_particle_case() -> dict:
    """H = p^2/2 from S0 = q^2/2: spreading solution q = q0 (1 + t)."""
    ham = FiniteDimHamiltonian(P ** 2 / 2, Q, P)

    def s_fn(t, qq):
        return qq * qq / (2.0 * (1.0 + t))

    def a_fn(t, qq):
        return np.full_like(np.asarray(qq, dtype=np.float64), (1.0 + t) ** -0.5)

    return {
        "name": "free",
        "ham": ham,
        "s": s_fn,
        "a": a_fn,
        "s0": Q ** 2 / 2,
        "a0": sp.S.One,
        "t_grid": np.linspace(0.0, 1.0, 6),
        "q_grid": np.linspace(-1.0, 1.0, 201),
    }


def quartic_case(t_final: float = 0.24, dt: float = 1e-3, n_fan: int = 411) -> dict:
    """H = p^2/2 + q^4/4 with S, a built numerically from a fan at rest.

    The fan starts on S0 = 0 (all particles at rest) with a Gaussian
    half-density, integrated well short of the first caustic; S and a
    come back as cubic-spline interpolants in t and q.
    """
    ham = FiniteDimHamiltonian(P ** 2 / 2 + Q ** 4 / 4, Q, P)
    q0 = np.linspace(-2.05, 2.05, n_fan)
    chars = integrate_characteristics(ham, sp.S.Zero, q0, t_final, dt=dt)
    amp = transport_amplitude(ham, chars, sp.exp(-Q ** 2 / 2))

    pos = CubicSpline(chars.ts, chars.q[:, :, 0], axis=0)
    act = CubicSpline(chars.ts, chars.action, axis=0)
    ampl = CubicSpline(chars.ts, amp, axis=0)

    def s_fn(t, qq):
        return CubicSpline(pos(t), act(t))(qq)

    def a_fn(t, qq):
        return CubicSpline(pos(t), ampl(t))(qq)

    return {
        "name": "quartic",
        "ham": ham,
        "s": s_fn,
        "a": a_fn,
        "s0": sp.S.Zero,
        "a0": sp.exp(-Q ** 2 / 2),
        "t_grid": np.linspace(0.05, 0.2, 4),
        "q_grid": np.arange(-1.0, 1.0 + 5e-4, 1e-3),
        "chars": chars,
    }


def standard_case(name: str) -> dict:
    builders = {"oscillator": oscillator_case, "free": free_particle_case,
                "quartic": quartic_case}
    if name not in builders:
        raise PreconditionError(f"unknown case '{name}'; pick one of {sorted(builders)}")
    return builders[name]()
