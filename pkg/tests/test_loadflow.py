import json

import numpy as np
import pytest

from gridlocus.errors import DimensionMismatch, SingularJacobian
from gridlocus.fixtures import two_bus_case
from gridlocus.loadflow import (
    StateVector,
    case_injections,
    complex_voltages,
    flat_start,
    jacobian,
    jacobian_state_derivatives,
    mismatch,
    newton_solve,
    swing_injection,
)
from gridlocus.loss import loss_value
from gridlocus.network import build_case, case_to_dict, parse_case

from .oracles import (
    complex_injections,
    fd_jacobian,
    random_connected_case,
    random_state,
    two_bus_load_limit,
    two_bus_voltage,
)


def zero_injection_case(n=3):
    buses = [{"id": 0, "kind": "swing"}]
    buses += [{"id": i, "kind": "pq", "p": 0.0, "q": 0.0} for i in range(1, n + 1)]
    branches = [{"from": i, "to": i + 1, "r": 0.01, "x": 0.1} for i in range(n)]
    return build_case(buses, branches)


def test_flat_start_values():
    case = zero_injection_case()
    x = flat_start(case)
    assert np.all(x.u == 1.0)
    assert np.all(x.v == 0.0)


def test_flat_start_uses_swing_magnitude():
    case = build_case(
        [
            {"id": 0, "kind": "swing", "v_re": 1.05},
            {"id": 1, "kind": "pq", "p": 0.0, "q": 0.0},
        ],
        [{"from": 0, "to": 1, "r": 0.01, "x": 0.1}],
    )
    assert np.all(flat_start(case).u == 1.05)


def test_flat_start_swing_only_grid():
    case = build_case([{"id": 0, "kind": "swing"}], [])
    x = flat_start(case)
    assert x.u.size == 0
    res = newton_solve(case, case_injections(case))
    assert res.converged and res.iterations == 0


def test_mismatch_zero_at_flat_with_zero_injections():
    case = zero_injection_case()
    m = mismatch(case, flat_start(case), case_injections(case))
    assert np.all(m.f == 0.0)


def test_mismatch_flat_start_single_load():
    case = two_bus_case(p=-0.5, q=-0.2)
    m = mismatch(case, flat_start(case), case_injections(case))
    assert m.f == pytest.approx([0.5, 0.2])


def test_computed_injections_match_complex_oracle():
    rng = np.random.default_rng(17)
    for _ in range(25):
        case = random_connected_case(rng)
        x = random_state(rng, case)
        m = mismatch(case, x, case_injections(case))
        s_oracle = complex_injections(case, x.u, x.v)
        assert m.s_calc.p == pytest.approx(s_oracle.real, abs=1e-12)
        assert m.s_calc.q == pytest.approx(s_oracle.imag, abs=1e-12)


def test_mismatch_dimension_check():
    case = zero_injection_case()
    bad = StateVector(np.ones(2), np.zeros(2))
    with pytest.raises(DimensionMismatch):
        mismatch(case, bad, case_injections(case))


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(23)
    s_dummy = None
    for _ in range(25):
        case = random_connected_case(rng)
        s = case_injections(case)
        x = random_state(rng, case)

        def f_of(arr):
            return mismatch(case, StateVector.from_array(arr), s).f

        j = jacobian(case, x).j
        j_fd = fd_jacobian(f_of, x.to_array(), step=1e-6)
        for k in range(j.shape[1]):
            scale = max(np.linalg.norm(j[:, k]), 1.0)
            assert np.linalg.norm(j[:, k] - j_fd[:, k]) / scale < 1e-6


def test_jacobian_lossless_flat_structure():
    # lossless branch at flat start: conj(Y) is purely imaginary and I = 0,
    # so the dP/du block vanishes identically
    case = build_case(
        [{"id": 0, "kind": "swing"}, {"id": 1, "kind": "pq", "p": 0.0, "q": 0.0}],
        [{"from": 0, "to": 1, "r": 0.0, "x": 0.1}],
    )
    j = jacobian(case, flat_start(case)).j
    assert j[0, 0] == pytest.approx(0.0, abs=1e-14)

    def f_of(arr):
        return mismatch(case, StateVector.from_array(arr), case_injections(case)).f

    j_fd = fd_jacobian(f_of, flat_start(case).to_array(), step=1e-6)
    assert np.allclose(j, j_fd, atol=1e-7)


def test_jacobian_permutation_equivariance():
    rng = np.random.default_rng(29)
    case = random_connected_case(rng)
    n = case.n
    doc = case_to_dict(case)
    remap = {
        b["id"]: (0 if b["kind"] == "swing" else len(doc["buses"]) + 3 - b["id"])
        for b in doc["buses"]
    }
    for b in doc["buses"]:
        b["id"] = remap[b["id"]]
    for br in doc["branches"]:
        br["from"] = remap[br["from"]]
        br["to"] = remap[br["to"]]
    permuted = parse_case(json.dumps(doc))

    x = random_state(rng, case)
    pos = {ext: i - 1 for i, ext in enumerate(permuted.external_ids) if i > 0}
    perm = np.array([pos[remap[ext]] for ext in case.external_ids[1:]])
    xp = StateVector(np.empty(n), np.empty(n))
    xp.u[perm] = x.u
    xp.v[perm] = x.v

    j = jacobian(case, x).j
    jp = jacobian(permuted, xp).j
    idx = np.concatenate([perm, n + perm])
    assert np.allclose(jp[np.ix_(idx, idx)], j, atol=1e-13)


def test_jacobian_is_affine_in_state():
    rng = np.random.default_rng(31)
    case = random_connected_case(rng)
    dj = jacobian_state_derivatives(case)
    x0 = flat_start(case)
    j0 = jacobian(case, x0).j
    x = random_state(rng, case, spread=0.3)
    delta = x.to_array() - x0.to_array()
    j_pred = j0 + sum(d * m for d, m in zip(delta, dj))
    assert np.allclose(j_pred, jacobian(case, x).j, atol=1e-12)


def test_newton_zero_injections_immediate():
    case = zero_injection_case()
    res = newton_solve(case, case_injections(case))
    assert res.converged
    assert res.iterations <= 1
    assert np.all(res.state.u == 1.0)


def test_newton_matches_two_bus_closed_form():
    case = two_bus_case(p=-0.5, q=-0.2, r=0.01, x=0.1)
    res = newton_solve(case, case_injections(case), tol=1e-12)
    assert res.converged
    u1 = two_bus_voltage(-0.5, -0.2, 0.01, 0.1)
    assert abs(complex(res.state.u[0], res.state.v[0]) - u1) < 1e-8


def test_newton_beyond_deliverability_limit():
    lam = two_bus_load_limit(-0.5, -0.2, 0.01, 0.1)
    case = two_bus_case(p=-0.5 * 1.5 * lam, q=-0.2 * 1.5 * lam)
    try:
        res = newton_solve(case, case_injections(case))
        assert not res.converged
    except SingularJacobian:
        pass


def test_newton_invalid_options():
    case = two_bus_case()
    with pytest.raises(ValueError):
        newton_solve(case, case_injections(case), tol=0.0)
    with pytest.raises(ValueError):
        newton_solve(case, case_injections(case), max_iter=0)


def test_power_balance_at_solved_states():
    rng = np.random.default_rng(37)
    checked = 0
    while checked < 10:
        case = random_connected_case(rng)
        if any(br.b_charging != 0 for br in case.branches):
            continue
        s = case_injections(case)
        try:
            res = newton_solve(case, s, tol=1e-10)
        except SingularJacobian:
            continue
        if not res.converged:
            continue
        total = swing_injection(case, res.state).real + s.p.sum()
        assert abs(total - loss_value(case, res.state)) < 1e-7
        checked += 1


def test_solution_independent_of_input_ordering():
    doc = {
        "buses": [
            {"id": 2, "kind": "pq", "p": -0.3, "q": -0.1},
            {"id": 0, "kind": "swing"},
            {"id": 1, "kind": "pq", "p": -0.2, "q": -0.05},
        ],
        "branches": [
            {"from": 0, "to": 1, "r": 0.01, "x": 0.1},
            {"from": 1, "to": 2, "r": 0.02, "x": 0.15},
        ],
    }
    case_a = parse_case(json.dumps(doc))
    doc["buses"] = list(reversed(doc["buses"]))
    doc["branches"] = list(reversed(doc["branches"]))
    case_b = parse_case(json.dumps(doc))
    res_a = newton_solve(case_a, case_injections(case_a))
    res_b = newton_solve(case_b, case_injections(case_b))
    ua = dict(zip(case_a.external_ids, complex_voltages(case_a, res_a.state)))
    ub = dict(zip(case_b.external_ids, complex_voltages(case_b, res_b.state)))
    for ext in ua:
        assert ua[ext] == pytest.approx(ub[ext], abs=1e-12)


def test_residual_history_recorded():
    case = two_bus_case()
    res = newton_solve(case, case_injections(case))
    assert res.converged
    assert len(res.residual_history) == res.iterations + 1
    assert res.residual_history[-1] == res.residual_inf
