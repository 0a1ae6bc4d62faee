"""JSON file formats: theories (with observables and instruments), scenarios, state lists.

Complex numbers are written as ``[re, im]`` pairs; plain numbers are read as
real. A theory reference in a scenario is either a path, an inline theory
object or a zoo name such as ``"zoo:classical:3"``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import zoo
from .composite import composite, joint_state, ket_joint_state, product_state
from .convex import Theory, mix
from .effects import Observable, Propensity
from .quantum import QuantumSystem
from .transforms import Instrument, Transformation, instrument, transformation


# ---------------------------------------------------------------------------
# complex arrays


def complex_array(obj, ndim):
    """An ``ndim``-dimensional complex array; leaves are numbers or ``[re, im]`` pairs."""
    a = np.asarray(obj, dtype=float)
    if a.ndim == ndim + 1 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == ndim:
        return a.astype(complex)
    raise ValueError(f"expected a {ndim}-d array of numbers or [re, im] pairs, got shape {a.shape}")


def complex_to_json(a):
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


# ---------------------------------------------------------------------------
# theories


ZOO_HELP = ("zoo:classical:K, zoo:gbit, zoo:polygon:N, zoo:quantum:D, "
            "zoo:hypersphere:N:COUNT, zoo:bloch:ORDER")


def zoo_theory(spec):
    parts = spec.split(":")
    if parts[0] != "zoo" or len(parts) < 2:
        raise ValueError(f"zoo spec must look like {ZOO_HELP}")
    kind, args = parts[1], [int(p) for p in parts[2:]]
    makers = {"classical": zoo.classical_theory, "gbit": zoo.gbit_theory,
              "polygon": zoo.polygon_theory, "quantum": zoo.quantum_theory,
              "hypersphere": zoo.hypersphere_theory, "bloch": zoo.bloch_discretization}
    if kind not in makers:
        raise ValueError(f"unknown zoo theory {kind!r}; known: {ZOO_HELP}")
    return makers[kind](*args)


@dataclass
class TheoryFile:
    theory: Theory
    observables: dict = field(default_factory=dict)
    instruments: dict = field(default_factory=dict)


def theory_from_dict(d, check=True):
    if d.get("exact"):
        dim = int(d["metadata"]["hilbert_dim"]) if "metadata" in d and "hilbert_dim" in d["metadata"] \
            else int(round(np.sqrt(d["embed_dim"])))
        if "hermitian_basis" in d:
            q = QuantumSystem((dim,), complex_array(d["hermitian_basis"], 3))
            T = zoo.quantum_system_theory(q, d.get("name"))
        else:
            T = zoo.quantum_theory(dim)
    else:
        backend = d.get("backend", "polytope")
        T = Theory(d["name"], d["unit"], d["extremal_states"],
                   effect_mode=d.get("effect_mode", "unrestricted"),
                   extremal_effects=d.get("extremal_effects"),
                   metadata=dict(d.get("metadata", {})), backend=backend)
    if "embed_dim" in d and int(d["embed_dim"]) != T.embed_dim:
        raise ValueError(f"embed_dim {d['embed_dim']} does not match the unit length {T.embed_dim}")
    tf = TheoryFile(T)
    for o in d.get("observables", []):
        tf.observables[o["name"]] = Observable(
            T, tuple(Propensity(T, np.asarray(l, float)) for l in o["elements"]), o["name"])
    for ins in d.get("instruments", []):
        ts = [Transformation(T, np.asarray(M, float), lab)
              for M, lab in zip(ins["matrices"], ins.get("labels") or
                                [str(j) for j in range(len(ins["matrices"]))])]
        tf.instruments[ins["name"]] = Instrument(T, tuple(ts), tuple(t.label for t in ts))
    return tf


def load_theory(ref, base=None):
    """A :class:`TheoryFile` from a path, a zoo spec, or an inline dict."""
    if isinstance(ref, dict):
        return theory_from_dict(ref)
    ref = str(ref)
    if ref.startswith("zoo:"):
        return TheoryFile(zoo_theory(ref))
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = Path(base) / path
    with open(path, encoding="utf-8") as fh:
        return theory_from_dict(json.load(fh))


def theory_to_dict(T, observables=None, instruments=None):
    d = {"name": T.name, "embed_dim": T.embed_dim, "unit": T.unit.tolist(),
         "effect_mode": T.effect_mode, "metadata": dict(T.metadata)}
    if T.backend == "quantum":
        d["exact"] = True
        d["metadata"]["hilbert_dim"] = T.quantum.d
        d["hermitian_basis"] = complex_to_json(T.quantum.basis)
        d["extremal_states"] = []
    else:
        d["extremal_states"] = T.extremal_states.tolist()
        if T.backend != "polytope":
            d["backend"] = T.backend
    if T.effect_mode == "explicit":
        d["extremal_effects"] = T.extremal_effects.tolist()
    if observables:
        d["observables"] = [{"name": k, "elements": o.matrix.tolist()}
                            for k, o in observables.items()]
    if instruments:
        d["instruments"] = [{"name": k, "matrices": [t.M.tolist() for t in ins],
                             "labels": list(ins.labels)} for k, ins in instruments.items()]
    return d


def observable_to_dict(name, L):
    return {"name": name, "elements": L.matrix.tolist()}


# ---------------------------------------------------------------------------
# states


def state_from_spec(T, spec, rng=None):
    """A state from a vector, or one of ``{"vertex": i}``, ``{"chaotic": true}``,
    ``{"ket": [...]}``, ``{"density": [[...]]}``, ``{"mix": [[w, spec], ...]}``,
    ``{"random": true}``."""
    if isinstance(spec, list):
        return T.state(np.asarray(spec, dtype=float))
    if "vertex" in spec:
        return T.vertex(int(spec["vertex"]))
    if spec.get("chaotic"):
        return T.chaotic
    if "ket" in spec:
        return zoo.ket_state(T, complex_array(spec["ket"], 1))
    if "density" in spec:
        return zoo.density_state(T, complex_array(spec["density"], 2))
    if "bloch" in spec:
        n = np.asarray(spec["bloch"], dtype=float)
        I, X, Y, Z = zoo.pauli_matrices()
        return zoo.density_state(T, 0.5 * (I + n[0] * X + n[1] * Y + n[2] * Z))
    if "mix" in spec:
        ws = [float(w) for w, _ in spec["mix"]]
        return mix([state_from_spec(T, s, rng) for _, s in spec["mix"]], ws)
    if spec.get("random"):
        from .sampling import random_state
        return random_state(T, rng if rng is not None else np.random.default_rng(0))
    raise ValueError(f"unrecognized state spec {spec!r}")


def load_states(T, path, rng=None):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("states", [])
    return [state_from_spec(T, s, rng) for s in data]


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    name: str
    theories: dict
    composite: object = None
    joint_states: dict = field(default_factory=dict)
    instruments: dict = field(default_factory=dict)  # name -> (party, Instrument)
    expect: dict = field(default_factory=dict)
    teleport: dict | None = None
    raw: dict = field(default_factory=dict)


def _transformations_of(T, d, check):
    if "kraus" in d:
        ts = [zoo.kraus_to_transformation([complex_array(K, 2) for K in group], T, str(j))
              for j, group in enumerate(d["kraus"])]
    elif "matrices" in d:
        ts = [transformation(T, np.asarray(M, float), str(j), check=check)
              for j, M in enumerate(d["matrices"])]
    else:
        raise ValueError("an instrument needs 'kraus' or 'matrices'")
    labels = d.get("labels") or [t.label for t in ts]
    return ts, labels


def load_scenario(ref):
    if isinstance(ref, dict):
        data, base = ref, None
    else:
        path = Path(ref)
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        base = path.parent
    theories = {k: load_theory(v, base).theory for k, v in data.get("theories", {}).items()}
    sc = Scenario(data.get("name", "scenario"), theories, expect=data.get("expect", {}), raw=data)
    if "composite" in data:
        c = data["composite"]
        f1, f2 = (theories[k] for k in c["factors"])
        sc.composite = composite(f1, f2, c.get("mode"))
        for name, js in data.get("joint_states", {}).items():
            sc.joint_states[name] = _joint_from_spec(sc.composite, js)
        for name, ins in data.get("instruments", {}).items():
            party = int(ins.get("party", 2))
            T = sc.composite.factors[party - 1]
            check = not ins.get("unchecked", False)
            ts, labels = _transformations_of(T, ins, check)
            sc.instruments[name] = (party, instrument(T, ts, labels, check=check))
    sc.teleport = data.get("teleport")
    return sc


def _joint_from_spec(C, js):
    if "ket" in js:
        return ket_joint_state(C, complex_array(js["ket"], 1))
    if "bell" in js:
        return ket_joint_state(C, zoo.max_entangled_ket(C.factors[0].quantum.d))
    if "matrix" in js:
        return joint_state(C, np.asarray(js["matrix"], float))
    if "product" in js:
        a, b = js["product"]
        return product_state(state_from_spec(C.factors[0], a), state_from_spec(C.factors[1], b), C)
    raise ValueError(f"unrecognized joint state spec {js!r}")


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
