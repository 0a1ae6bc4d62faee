"""Check records and their text / tsv / json renderings."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

PASS, FAIL, UNRESOLVED, INFO = "pass", "fail", "unresolved", "info"

# concept each record is about; every record must carry one of these
ANCHORS = frozenset({
    "States",
    "Convex structure of states",
    "Partial ordering of states",
    "Caratheodory rank",
    "Caratheodory dimension",
    "Maximally chaotic state",
    "Propensities",
    "Observable",
    "Informationally complete observable",
    "Predictability and resolution",
    "Operation",
    "Transformations form a monoid",
    "Bayes",
    "Conditional state",
    "Norm for transformations",
    "Addition of coexistent transformations",
    "Multiplication of a transformation by a scalar",
    "No-information from identity transformations",
    "Actions/experiments and outcomes",
    "Distance between states",
    "Mixing reduces distances linearly",
    "Orthogonality of states",
    "Metrical dimensionality",
    "Informational dimensionality",
    "Perfectly discriminable set of states",
    "Two orthogonal states are perfectly discriminable",
    "Different dimensionalities",
    "Local state",
    "Acausality of local transformations",
    "Existence of equivalent incompatible mixtures",
    "Maximally entangled state",
    "Dynamically faithful state",
    "Informationally faithful state",
    "Preparationally faithful state",
    "Teleportation",
    "The minimal lab",
    "Vertex minimality",
})


def _plain(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return v


def digest(*parts):
    h = hashlib.sha256()
    for p in parts:
        h.update(json.dumps(_plain(p), sort_keys=True).encode())
    return h.hexdigest()[:12]


@dataclass
class Record:
    name: str
    anchor: str
    status: str
    value: object = None
    inputs: str = ""
    witness: str = ""
    detail: str = ""

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise ValueError(f"unknown anchor {self.anchor!r}")
        if self.status not in (PASS, FAIL, UNRESOLVED, INFO):
            raise ValueError(f"unknown status {self.status!r}")

    def as_dict(self):
        return {"name": self.name, "anchor": self.anchor, "status": self.status,
                "value": _plain(self.value), "inputs": self.inputs,
                "witness": self.witness, "detail": self.detail}


@dataclass
class Report:
    title: str
    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *args, **kw):
        r = Record(*args, **kw)
        self.records.append(r)
        return r

    def extend(self, records):
        self.records.extend(records)

    def sorted(self):
        return sorted(self.records, key=lambda r: r.name)

    @property
    def exit_code(self):
        statuses = {r.status for r in self.records}
        if FAIL in statuses:
            return 1
        if UNRESOLVED in statuses:
            return 2
        return 0

    def to_json(self):
        body = {"title": self.title, "meta": _plain(self.meta),
                "records": [r.as_dict() for r in self.sorted()]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def to_tsv(self):
        rows = ["name\tanchor\tstatus\tvalue\tinputs\twitness\tdetail"]
        for r in self.sorted():
            rows.append("\t".join([r.name, r.anchor, r.status, _fmt(r.value), r.inputs,
                                   r.witness, r.detail.replace("\t", " ").replace("\n", " ")]))
        return "\n".join(rows) + "\n"

    def to_text(self):
        width = max((len(r.name) for r in self.records), default=4)
        lines = [self.title, "=" * len(self.title)]
        for k in sorted(self.meta):
            lines.append(f"{k}: {_fmt(self.meta[k])}")
        for r in self.sorted():
            line = f"[{r.status.upper():>10}] {r.name:<{width}}  {_fmt(r.value)}"
            if r.detail:
                line += f"  ({r.detail})"
            lines.append(line)
        counts = {s: sum(r.status == s for r in self.records) for s in (PASS, FAIL, UNRESOLVED)}
        lines.append(f"{counts[PASS]} passed, {counts[FAIL]} failed, "
                     f"{counts[UNRESOLVED]} unresolved")
        return "\n".join(lines) + "\n"

    def render(self, fmt):
        if fmt == "json":
            return self.to_json()
        if fmt == "tsv":
            return self.to_tsv()
        return self.to_text()


def _fmt(v):
    v = _plain(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return "" if v is None else str(v)


def status_of(ok):
    return PASS if ok else FAIL
