"""Characteristics, transport, and the wkb defect."""

import numpy as np
import pytest
import sympy as sp

from hamalg import (CausticError, FiniteDimHamiltonian, PreconditionError,
                    integrate_characteristics, monodromy, standard_case,
                    transport_amplitude, transport_residual, wkb_residual)


def test_oscillator_characteristics_are_rotations():
    ham = standard_case("oscillator")["ham"]
    q0 = np.linspace(-1.5, 1.5, 11)
    chars = integrate_characteristics(ham, sp.S.Zero, q0, 1.0, dt=1e-3)
    t = chars.ts[-1]
    assert np.abs(chars.q[-1, :, 0] - q0 * np.cos(t)).max() < 1e-9
    assert np.abs(chars.p[-1, :, 0] + q0 * np.sin(t)).max() < 1e-9
    assert np.abs(chars.jac_q[-1, :, 0, 0] - np.cos(t)).max() < 1e-9
    assert chars.energy_drift < 1e-12


def test_oscillator_action_closed_form():
    # along q = cos t from S0 = 0: int (p qdot - H) dt = -(1/4) sin 2t
    ham = standard_case("oscillator")["ham"]
    chars = integrate_characteristics(ham, sp.S.Zero, np.array([1.0]), 0.8,
                                      dt=1e-4)
    t = chars.ts[-1]
    assert abs(chars.action[-1, 0] + 0.25 * np.sin(2 * t)) < 1e-8


def test_caustic_detection_at_the_focus():
    ham = standard_case("oscillator")["ham"]
    with pytest.raises(CausticError) as err:
        integrate_characteristics(ham, sp.S.Zero, np.array([1.0]), 2.0, dt=1e-3)
    assert abs(err.value.t - np.pi / 2) < 5e-3


def test_free_particle_spreads_linearly():
    case = standard_case("free")
    q0 = np.linspace(-1.0, 1.0, 9)
    chars = integrate_characteristics(case["ham"], case["s0"], q0, 1.0, dt=1e-3)
    assert np.abs(chars.q[-1, :, 0] - q0 * 2.0).max() < 1e-10
    assert np.abs(chars.jac_q[-1, :, 0, 0] - 2.0).max() < 1e-10


def test_monodromy_is_the_rotation_matrix():
    ham = standard_case("oscillator")["ham"]
    t = 0.9
    mm = monodromy(ham, np.array([0.3]), np.array([-0.2]), t)
    want = np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])
    assert np.abs(mm - want).max() < 1e-9


def test_monodromy_is_symplectic():
    q, p = sp.Symbol("q0"), sp.Symbol("p0")
    ham = FiniteDimHamiltonian(p ** 2 / 2 + q ** 4 / 4, q, p)
    mm = monodromy(ham, np.array([0.9]), np.array([0.1]), 0.5)
    jj = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert np.abs(mm.T @ jj @ mm - jj).max() < 1e-9


def test_transport_amplitude_matches_the_closed_form():
    case = standard_case("oscillator")
    q0 = np.linspace(-1.0, 1.0, 5)
    chars = integrate_characteristics(case["ham"], case["s0"], q0, 1.0, dt=1e-3)
    amp = transport_amplitude(case["ham"], chars, sp.S.One)
    want = np.cos(chars.ts)[:, None] ** -0.5
    assert np.abs(amp - want).max() < 1e-8


def test_transport_residual_closed_forms():
    for name in ("oscillator", "free"):
        case = standard_case(name)
        rep = transport_residual(case["ham"], case["s"], case["a"],
                                 case["t_grid"], case["q_grid"])
        assert rep.residual_max < 1e-6
        assert rep.hj_max < 1e-4


def test_transport_refuses_a_wrong_phase():
    case = standard_case("oscillator")
    wrong = standard_case("free")["s"]
    with pytest.raises(PreconditionError):
        transport_residual(case["ham"], wrong, case["a"],
                           case["t_grid"], case["q_grid"])


def test_wkb_oscillator_is_exact():
    case = standard_case("oscillator")
    rep = wkb_residual(case["ham"], case["s"], case["a"], (0.1, 0.05),
                       case["t_grid"], case["q_grid"])
    assert max(rep.residuals) < 1e-7


def test_wkb_quartic_defect_is_second_order():
    case = standard_case("quartic")
    rep = wkb_residual(case["ham"], case["s"], case["a"], (0.1, 0.05, 0.025),
                       case["t_grid"], case["q_grid"])
    assert rep.exponent is not None
    assert rep.exponent > 1.9


def test_unknown_case_name():
    with pytest.raises(PreconditionError):
        standard_case("pendulum")


def test_transport_grid_needs_one_dof():
    q1, q2, p1, p2 = sp.symbols("q0 q1 p0 p1")
    ham = FiniteDimHamiltonian((p1 ** 2 + p2 ** 2) / 2, (q1, q2), (p1, p2))
    case = standard_case("free")
    with pytest.raises(PreconditionError):
        transport_residual(ham, case["s"], case["a"],
                           case["t_grid"], case["q_grid"])
