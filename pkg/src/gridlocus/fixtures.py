"""Shipped demonstration grids.

The 16-bus fixture is two interconnected rings (a 6-bus ring carrying the
swing bus and a 10-bus ring) joined at two points, with uniform branch
impedance 0.02 + j0.08 pu. The base load pattern solves; the disturbance
variants add consumption at the figure buses large enough to push the case
past the solvability boundary, which is what the diagnostic pipeline is
for.
"""
from __future__ import annotations

from .network import GridCase, build_case

RING_R = 0.02
RING_X = 0.08

BASE_P = -0.14
BASE_Q = -0.045

# Disturbed buses mirror the demo figures: active overload at 7 and 10,
# reactive overload at 10. Sizes are calibrated so the disturbed cases are
# unsolvable while every default-sweep minimization still converges.
ACTIVE_DISTURBANCE = {7: -2.4, 10: -2.0}
REACTIVE_DISTURBANCE = {10: -1.8}

_RING_A = tuple(range(0, 6))
_RING_B = tuple(range(6, 16))
_LINKS = ((2, 6), (4, 12))


def two_bus_case(
    p: float = -0.5, q: float = -0.2, r: float = 0.01, x: float = 0.1
) -> GridCase:
    """Swing plus one PQ bus over a single series branch."""
    return build_case(
        [
            {"id": 0, "kind": "swing"},
            {"id": 1, "kind": "pq", "p": p, "q": q},
        ],
        [{"from": 0, "to": 1, "r": r, "x": x}],
    )


def _ring_topology() -> list[dict]:
    branches = []
    for ring in (_RING_A, _RING_B):
        for i, f in enumerate(ring):
            t = ring[(i + 1) % len(ring)]
            branches.append({"from": f, "to": t, "r": RING_R, "x": RING_X})
    for f, t in _LINKS:
        branches.append({"from": f, "to": t, "r": RING_R, "x": RING_X})
    return branches


def sixteen_bus_case(
    load_scale: float = 1.0,
    extra_p: dict[int, float] | None = None,
    extra_q: dict[int, float] | None = None,
) -> GridCase:
    """The 16-bus double-ring grid with optional per-bus load disturbances."""
    extra_p = extra_p or {}
    extra_q = extra_q or {}
    buses: list[dict] = [{"id": 0, "kind": "swing"}]
    for i in range(1, 16):
        buses.append(
            {
                "id": i,
                "kind": "pq",
                "p": BASE_P * load_scale + extra_p.get(i, 0.0),
                "q": BASE_Q * load_scale + extra_q.get(i, 0.0),
            }
        )
    return build_case(buses, _ring_topology())


def sixteen_bus_base(load_scale: float = 1.0) -> GridCase:
    return sixteen_bus_case(load_scale=load_scale)


def sixteen_bus_active_disturbance() -> GridCase:
    """Excess active consumption at buses 7 and 10; not solvable."""
    return sixteen_bus_case(extra_p=dict(ACTIVE_DISTURBANCE))


def sixteen_bus_reactive_disturbance() -> GridCase:
    """Excess reactive consumption at bus 10; not solvable."""
    return sixteen_bus_case(extra_q=dict(REACTIVE_DISTURBANCE))


NINE_BUS_MATPOWER = """\
function mpc = case9like
% 9-bus transmission test system, all generation as fixed injections.
mpc.baseMVA = 100;

%% bus data: bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t2\t1\t0\t0\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t3\t1\t0\t0\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t4\t1\t0\t0\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t5\t1\t90\t30\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t6\t1\t0\t0\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t7\t1\t100\t35\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t8\t1\t0\t0\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
\t9\t1\t125\t50\t0\t0\t1\t1.00\t0\t345\t1\t1.1\t0.9;
];

%% gen data: bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin
mpc.gen = [
\t1\t0\t0\t300\t-300\t1\t100\t1\t250\t10;
\t2\t163\t20\t300\t-300\t1\t100\t1\t300\t10;
\t3\t85\t5\t300\t-300\t1\t100\t1\t270\t10;
];

%% branch data: fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax
mpc.branch = [
\t1\t4\t0.0001\t0.0576\t0\t250\t250\t250\t0\t0\t1\t-360\t360;
\t4\t5\t0.017\t0.092\t0.158\t250\t250\t250\t0\t0\t1\t-360\t360;
\t5\t6\t0.039\t0.17\t0.358\t150\t150\t150\t0\t0\t1\t-360\t360;
\t3\t6\t0.0001\t0.0586\t0\t300\t300\t300\t0\t0\t1\t-360\t360;
\t6\t7\t0.0119\t0.1008\t0.209\t150\t150\t150\t0\t0\t1\t-360\t360;
\t7\t8\t0.0085\t0.072\t0.149\t250\t250\t250\t0\t0\t1\t-360\t360;
\t8\t2\t0.0001\t0.0625\t0\t250\t250\t250\t0\t0\t1\t-360\t360;
\t8\t9\t0.032\t0.161\t0.306\t250\t250\t250\t0\t0\t1\t-360\t360;
\t9\t4\t0.01\t0.085\t0.176\t250\t250\t250\t0\t0\t1\t-360\t360;
];
"""
