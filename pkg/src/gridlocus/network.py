"""Grid data model, case parsing/validation, and admittance construction.

All quantities are per-unit on a common base. Buses are renumbered
internally so the swing bus is index 0 and the remaining buses follow in
ascending external-id order; external ids are kept for reporting.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DisconnectedGraph,
    DuplicateBusId,
    InvalidImpedance,
    MalformedDocument,
    MultipleSwingBuses,
    NoSwingBus,
    UnsupportedFeature,
)

SWING = "swing"
PQ = "pq"


@dataclass(frozen=True)
class Bus:
    """One bus, already renumbered (index = position in GridCase.buses)."""

    index: int
    external_id: int
    kind: str
    p_inject: float | None = None
    q_inject: float | None = None
    v_swing: complex | None = None


@dataclass(frozen=True)
class Branch:
    """Series branch between two internal bus indices.

    Parallel branches between the same pair are allowed and distinguished
    by `ordinal`. `b_charging` is the total shunt charging susceptance,
    split half per terminal in the admittance matrix.
    """

    from_bus: int
    to_bus: int
    r: float
    x: float
    b_charging: float = 0.0
    ordinal: int = 0


@dataclass(frozen=True)
class GridCase:
    """Immutable, validated network description."""

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    external_ids: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "external_ids", tuple(b.external_id for b in self.buses)
        )

    @property
    def n(self) -> int:
        """Number of non-swing buses."""
        return len(self.buses) - 1

    @property
    def swing(self) -> Bus:
        return self.buses[0]

    @property
    def v_swing(self) -> complex:
        v = self.buses[0].v_swing
        return 1.0 + 0.0j if v is None else v


@dataclass(frozen=True, eq=False)
class AdmittanceMatrix:
    """Dense complex nodal admittance matrix, indexed by internal bus."""

    y: np.ndarray


def _require(cond: bool, exc: type[Exception], msg: str) -> None:
    if not cond:
        raise exc(msg)


def build_case(bus_specs: list[dict], branch_specs: list[dict]) -> GridCase:
    """Validate raw bus/branch records and build a renumbered GridCase.

    Each bus spec: {id, kind, p?, q?, v_re?, v_im?}; each branch spec:
    {from, to, r, x, b?} with external bus ids.
    """
    _require(len(bus_specs) > 0, MalformedDocument, "case has no buses")
    ids = [b["id"] for b in bus_specs]
    dupes = {i for i in ids if ids.count(i) > 1}
    _require(not dupes, DuplicateBusId, f"duplicate bus ids: {sorted(dupes)}")

    swing_ids = [b["id"] for b in bus_specs if b["kind"] == SWING]
    if len(swing_ids) == 0:
        raise NoSwingBus("case declares no swing bus")
    if len(swing_ids) > 1:
        raise MultipleSwingBuses(f"multiple swing buses: {sorted(swing_ids)}")

    by_id = {b["id"]: b for b in bus_specs}
    order = [swing_ids[0]] + sorted(i for i in ids if i != swing_ids[0])
    index_of = {ext: k for k, ext in enumerate(order)}

    buses: list[Bus] = []
    for k, ext in enumerate(order):
        raw = by_id[ext]
        if raw["kind"] == SWING:
            _require(
                raw.get("p") is None and raw.get("q") is None,
                MalformedDocument,
                f"bus {ext}: 'p'/'q' forbidden on the swing bus",
            )
            v = complex(raw.get("v_re", 1.0), raw.get("v_im", 0.0))
            buses.append(Bus(k, ext, SWING, v_swing=v))
        elif raw["kind"] == PQ:
            _require(
                raw.get("p") is not None and raw.get("q") is not None,
                MalformedDocument,
                f"bus {ext}: 'p' and 'q' required on pq buses",
            )
            _require(
                raw.get("v_re") is None and raw.get("v_im") is None,
                MalformedDocument,
                f"bus {ext}: 'v_re'/'v_im' only allowed on the swing bus",
            )
            p, q = float(raw["p"]), float(raw["q"])
            _require(
                np.isfinite(p) and np.isfinite(q),
                MalformedDocument,
                f"bus {ext}: injections must be finite",
            )
            buses.append(Bus(k, ext, PQ, p_inject=p, q_inject=q))
        else:
            raise MalformedDocument(f"bus {ext}: unknown kind {raw['kind']!r}")

    branches: list[Branch] = []
    seen_pairs: dict[tuple[int, int], int] = {}
    for raw in branch_specs:
        f_ext, t_ext = raw["from"], raw["to"]
        _require(
            f_ext in index_of and t_ext in index_of,
            MalformedDocument,
            f"branch {f_ext}-{t_ext}: unknown bus id",
        )
        _require(
            f_ext != t_ext,
            InvalidImpedance,
            f"branch {f_ext}-{t_ext}: self-loops are not allowed",
        )
        r, x = float(raw["r"]), float(raw["x"])
        _require(r >= 0.0, InvalidImpedance, f"branch {f_ext}-{t_ext}: r < 0")
        _require(
            r != 0.0 or x != 0.0,
            InvalidImpedance,
            f"branch {f_ext}-{t_ext}: r = x = 0",
        )
        fi, ti = index_of[f_ext], index_of[t_ext]
        key = (min(fi, ti), max(fi, ti))
        ordinal = seen_pairs.get(key, 0)
        seen_pairs[key] = ordinal + 1
        branches.append(
            Branch(fi, ti, r, x, float(raw.get("b", 0.0) or 0.0), ordinal)
        )

    _check_connected(len(buses), branches)
    return GridCase(tuple(buses), tuple(branches))


def _check_connected(n_buses: int, branches: list[Branch]) -> None:
    adj: list[list[int]] = [[] for _ in range(n_buses)]
    for br in branches:
        adj[br.from_bus].append(br.to_bus)
        adj[br.to_bus].append(br.from_bus)
    seen = {0}
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != n_buses:
        missing = sorted(set(range(n_buses)) - seen)
        raise DisconnectedGraph(
            f"{len(missing)} bus(es) unreachable from the swing bus "
            f"(internal indices {missing})"
        )


def parse_case(text: str) -> GridCase:
    """Parse the native JSON case document into a validated GridCase."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top-level JSON value must be an object")
    return case_from_dict(doc)


def case_from_dict(doc: dict) -> GridCase:
    for key in ("buses", "branches"):
        if key not in doc or not isinstance(doc[key], list):
            raise MalformedDocument(f"missing or non-list field {key!r}")
    try:
        return build_case(doc["buses"], doc["branches"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"bad case document: {exc}") from exc


def case_to_dict(case: GridCase) -> dict:
    """Inverse of case_from_dict, using external ids."""
    buses = []
    for b in case.buses:
        if b.kind == SWING:
            v = b.v_swing if b.v_swing is not None else 1.0 + 0.0j
            buses.append(
                {"id": b.external_id, "kind": SWING, "v_re": v.real, "v_im": v.imag}
            )
        else:
            buses.append(
                {"id": b.external_id, "kind": PQ, "p": b.p_inject, "q": b.q_inject}
            )
    branches = [
        {
            "from": case.external_ids[br.from_bus],
            "to": case.external_ids[br.to_bus],
            "r": br.r,
            "x": br.x,
            "b": br.b_charging,
        }
        for br in case.branches
    ]
    return {"buses": buses, "branches": branches}


def serialize_case(case: GridCase) -> str:
    return json.dumps(case_to_dict(case), indent=2) + "\n"


def build_admittance(case: GridCase) -> AdmittanceMatrix:
    """Assemble the dense nodal admittance matrix.

    Off-diagonals collect -1/(r+jx) per branch; diagonals collect the
    incident series admittances plus half the branch charging per terminal.
    """
    m = len(case.buses)
    y = np.zeros((m, m), dtype=complex)
    for br in case.branches:
        ys = 1.0 / complex(br.r, br.x)
        f, t = br.from_bus, br.to_bus
        y[f, t] -= ys
        y[t, f] -= ys
        y[f, f] += ys + 0.5j * br.b_charging
        y[t, t] += ys + 0.5j * br.b_charging
    return AdmittanceMatrix(y)


_MATRIX_RE = re.compile(
    r"mpc\.(?P<name>bus|gen|branch)\s*=\s*\[(?P<body>.*?)\]\s*;", re.DOTALL
)
_BASE_RE = re.compile(r"mpc\.baseMVA\s*=\s*(?P<val>[-0-9.eE+]+)\s*;")

_REF, _PV, _PQ_TYPE, _ISOLATED = 3, 2, 1, 4


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _parse_matrix(body: str) -> list[list[float]]:
    rows = []
    for chunk in body.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        rows.append([float(tok) for tok in chunk.replace(",", " ").split()])
    return rows


def import_matpower(text: str) -> GridCase:
    """Convert a MATPOWER-style case document (supported subset) to a GridCase.

    Supported: bus type/Pd/Qd, branch r/x/b with in-service status, gen
    Pg/Qg with status, baseMVA scaling. The reference bus becomes the swing
    bus; PV-type buses are treated as fixed-injection buses using their
    generator Pg/Qg columns. Taps, phase shifters, bus shunts, and multiple
    reference buses are rejected.
    """
    clean = _strip_comments(text)
    base_m = _BASE_RE.search(clean)
    if base_m is None:
        raise MalformedDocument("missing 'mpc.baseMVA = ...;'")
    base_mva = float(base_m.group("val"))
    if base_mva <= 0:
        raise MalformedDocument("baseMVA must be positive")

    tables: dict[str, list[list[float]]] = {}
    for m in _MATRIX_RE.finditer(clean):
        try:
            tables[m.group("name")] = _parse_matrix(m.group("body"))
        except ValueError as exc:
            raise MalformedDocument(
                f"unparsable {m.group('name')} table: {exc}"
            ) from exc
    for name in ("bus", "branch"):
        if name not in tables:
            raise MalformedDocument(f"missing 'mpc.{name}' table")

    gen_p: dict[int, float] = {}
    gen_q: dict[int, float] = {}
    for row in tables.get("gen", []):
        if len(row) < 8:
            raise MalformedDocument("gen rows need at least 8 columns")
        if row[7] <= 0:  # out of service
            continue
        bus_id = int(row[0])
        gen_p[bus_id] = gen_p.get(bus_id, 0.0) + row[1]
        gen_q[bus_id] = gen_q.get(bus_id, 0.0) + row[2]

    ref_ids = [int(r[0]) for r in tables["bus"] if int(r[1]) == _REF]
    if len(ref_ids) > 1:
        raise UnsupportedFeature(f"multiple reference buses: {sorted(ref_ids)}")

    bus_specs: list[dict] = []
    for row in tables["bus"]:
        if len(row) < 13:
            raise MalformedDocument("bus rows need at least 13 columns")
        bus_id, bus_type = int(row[0]), int(row[1])
        pd, qd, gs, bs = row[2], row[3], row[4], row[5]
        if bus_type == _ISOLATED:
            raise UnsupportedFeature(f"bus {bus_id}: isolated (type 4) buses")
        if gs != 0.0 or bs != 0.0:
            raise UnsupportedFeature(f"bus {bus_id}: bus shunt Gs/Bs")
        if bus_type == _REF:
            vm, va_deg = row[7], row[8]
            v = vm * np.exp(1j * np.deg2rad(va_deg))
            bus_specs.append(
                {"id": bus_id, "kind": SWING, "v_re": float(v.real),
                 "v_im": float(v.imag)}
            )
        elif bus_type in (_PV, _PQ_TYPE):
            p = (gen_p.get(bus_id, 0.0) - pd) / base_mva
            q = (gen_q.get(bus_id, 0.0) - qd) / base_mva
            bus_specs.append({"id": bus_id, "kind": PQ, "p": p, "q": q})
        else:
            raise MalformedDocument(f"bus {bus_id}: unknown bus type {bus_type}")

    branch_specs: list[dict] = []
    for row in tables["branch"]:
        if len(row) < 11:
            raise MalformedDocument("branch rows need at least 11 columns")
        f_id, t_id = int(row[0]), int(row[1])
        r, x, b, ratio, angle, status = row[2], row[3], row[4], row[8], row[9], row[10]
        if status <= 0:
            continue
        if ratio != 0.0:
            raise UnsupportedFeature(f"branch {f_id}-{t_id}: transformer tap ratio")
        if angle != 0.0:
            raise UnsupportedFeature(f"branch {f_id}-{t_id}: phase shifter angle")
        branch_specs.append({"from": f_id, "to": t_id, "r": r, "x": x, "b": b})

    return build_case(bus_specs, branch_specs)
