"""Analysis and verification suites behind the command-line tool.

Each suite turns a theory or scenario into a :class:`~optw.report.Report`.
Randomized checks draw from one PCG64 stream per check, seeded from the run
seed and the check name, so records do not depend on execution order or
on how many workers run them.
"""
from __future__ import annotations

import contextvars
import hashlib
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import composite as comp
from . import convex, effects, metric, transforms
from .config import tolerances
from .errors import CutoffExceeded, NullConditioning
from .report import FAIL, INFO, PASS, UNRESOLVED, Record, Report, digest, status_of
from .sampling import random_instrument, random_state


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    cutoff: int | None = None
    jobs: int = 1
    samples: int = 40
    targets: int = 50


def check_rng(cfg, name):
    """A generator determined by the run seed and the check name."""
    salt = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    return np.random.default_rng([cfg.seed & (2**64 - 1), salt])


def run_checks(checks, cfg):
    """Run ``(name, fn)`` pairs, each returning a list of records; keep name order."""
    checks = sorted(checks, key=lambda c: c[0])
    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            futs = [ex.submit(contextvars.copy_context().run, fn) for _, fn in checks]
            out = [f.result() for f in futs]
    else:
        out = [fn() for _, fn in checks]
    return [r for rs in out for r in rs]


def _theory_digest(T):
    if T.backend == "quantum":
        return digest(T.name, T.quantum.d)
    return digest(T.name, T.extremal_states, T.unit)


# ---------------------------------------------------------------------------
# analyze


def analyze(tf, cfg=RunConfig()):
    T = tf.theory
    rep = Report(f"analyze {T.name}", meta={"backend": T.backend, "embed_dim": T.embed_dim,
                                            "seed": cfg.seed})
    dg = _theory_digest(T)
    rep.add("affine dimension", "States", INFO, T.affine_dim, dg)
    chi = T.chaotic
    rep.add("chaotic state", "Maximally chaotic state", INFO, chi.x, dg)

    cdim = None
    try:
        cdim = convex.caratheodory_dimension(T, cfg.cutoff, seed=cfg.seed)
        rep.add("caratheodory dimension", "Caratheodory dimension", PASS, cdim, dg)
    except CutoffExceeded as e:
        rep.add("caratheodory dimension", "Caratheodory dimension", UNRESOLVED, None, dg,
                detail=str(e))
    try:
        rank = convex.caratheodory_rank(chi, cfg.cutoff)
        detail = "" if cdim is None or rank == cdim else "chaotic state is not of maximal rank"
        rep.add("caratheodory rank of chaotic state", "Caratheodory rank", INFO, rank, dg,
                detail=detail)
    except CutoffExceeded as e:
        rep.add("caratheodory rank of chaotic state", "Caratheodory rank", UNRESOLVED, None, dg,
                detail=str(e))
    if T.backend == "quantum":
        rep.add("sqrt(affine dimension + 1)", "Caratheodory dimension",
                status_of(abs(np.sqrt(T.affine_dim + 1) - cdim) < 1e-12),
                float(np.sqrt(T.affine_dim + 1)), dg)

    md = metric.metric_dimension_report(T, cfg.jobs)
    rep.add("metric dimension", "Metrical dimensionality", PASS, md.value, dg,
            witness=",".join(map(str, md.clique)),
            detail="extremal clique number (lower bound)" if md.extremal_only else "exact")
    idim = None
    try:
        idr = metric.informational_dimension_report(T, cfg.cutoff, cfg.jobs)
        idim = idr.value
        rep.add("informational dimension", "Informational dimensionality", PASS, idim, dg,
                witness=",".join(map(str, idr.indices)))
        rep.add("discriminating observable", "Perfectly discriminable set of states", INFO,
                idr.observable.matrix, dg)
    except CutoffExceeded as e:
        rep.add("informational dimension", "Informational dimensionality", UNRESOLVED, None, dg,
                detail=str(e))
    if idim is not None:
        rep.add("informational <= metric dimension", "Different dimensionalities",
                status_of(idim <= md.value), [idim, md.value], dg)
    if T.backend == "polytope":
        bad = convex.vertex_minimality_violations(T)
        rep.add("vertex minimality", "Vertex minimality", status_of(not bad), bad, dg)
    return rep


# ---------------------------------------------------------------------------
# verify


def verify(tf, cfg=RunConfig()):
    T = tf.theory
    dg = _theory_digest(T)
    n = cfg.samples
    checks = [
        ("chaotic maximality", lambda: _check_chaotic(T, cfg, dg)),
        ("metric axioms", lambda: _check_metric(T, cfg, dg, n)),
        ("mixing lemma", lambda: _check_mixing(T, cfg, dg, n)),
        ("transformation norm", lambda: _check_norm(T, cfg, dg, n)),
        ("addition rules", lambda: _check_addition(T, cfg, dg, n)),
        ("bayes chain rule", lambda: _check_bayes(T, cfg, dg, n)),
        ("no information", lambda: _check_noinfo(T, cfg, dg)),
        ("orthogonal pairs", lambda: _check_orthogonal_pairs(T, cfg, dg)),
    ]
    if T.backend == "polytope":
        checks.append(("vertex minimality", lambda: [Record(
            "vertex minimality", "Vertex minimality",
            status_of(not convex.vertex_minimality_violations(T)),
            convex.vertex_minimality_violations(T), dg)]))
    for name, ins in tf.instruments.items():
        checks.append((f"instrument {name}", lambda name=name, ins=ins: _check_instrument(name, ins, dg)))
    for name, L in tf.observables.items():
        checks.append((f"observable {name}", lambda name=name, L=L: _check_observable(name, L, dg)))
    rep = Report(f"verify {T.name}", meta={"backend": T.backend, "seed": cfg.seed,
                                           "samples": n})
    rep.extend(run_checks(checks, cfg))
    return rep


def _record(name, anchor, ok, value, dg, detail=""):
    return Record(name, anchor, status_of(ok), value, dg, detail=detail)


def _check_chaotic(T, cfg, dg):
    rng = check_rng(cfg, "chaotic maximality")
    chi = T.chaotic
    probes = [chi] + [random_state(T, rng) for _ in range(10)]
    if T.backend != "quantum":
        probes += T.vertices()[:20]
    res = convex.verify_chaotic_maximality(T, chi, probes)
    worst = min(r.alpha - r.beta for r in res)
    return [_record("chaotic maximality", "Maximally chaotic state", all(r.ok for r in res),
                    worst, dg, detail=f"{len(probes)} probes; min(alpha - beta)")]


def _check_metric(T, cfg, dg, n):
    rng = check_rng(cfg, "metric axioms")
    tol = tolerances().feasibility
    worst_sym = worst_tri = worst_top = worst_self = 0.0
    for _ in range(n):
        a, b, c = (random_state(T, rng) for _ in range(3))
        dab, dba = metric.distance(a, b), metric.distance(b, a)
        dbc, dac = metric.distance(b, c), metric.distance(a, c)
        worst_sym = max(worst_sym, abs(dab - dba))
        worst_tri = max(worst_tri, dac - dab - dbc)
        worst_top = max(worst_top, dab, dbc, dac)
        worst_self = max(worst_self, metric.distance(a, a))
    return [
        _record("metric symmetry", "Distance between states", worst_sym <= tol, worst_sym, dg),
        _record("metric triangle inequality", "Distance between states", worst_tri <= tol,
                worst_tri, dg, detail="max d(a,c) - d(a,b) - d(b,c)"),
        _record("metric bounded by one", "Distance between states", worst_top <= 1 + tol,
                worst_top, dg),
        _record("metric vanishes on the diagonal", "Distance between states", worst_self <= tol,
                worst_self, dg),
    ]


def _check_mixing(T, cfg, dg, n):
    rng = check_rng(cfg, "mixing lemma")
    worst = 0.0
    for _ in range(n):
        a, b = random_state(T, rng), random_state(T, rng)
        r = metric.mixing_contraction_check(a, b, float(rng.uniform()))
        worst = max(worst, abs(r.lhs - r.rhs))
    return [_record("mixing lemma", "Mixing reduces distances linearly",
                    worst <= tolerances().feasibility, worst, dg)]


def _check_norm(T, cfg, dg, n):
    rng = check_rng(cfg, "transformation norm")
    tol = tolerances().feasibility
    top = hom = sub = 0.0
    for _ in range(n):
        ins = random_instrument(T, rng, k=int(rng.integers(2, 4)))
        A, B = ins[0], ins[1]
        nA, nB = transforms.transformation_norm(A), transforms.transformation_norm(B)
        top = max(top, nA, nB)
        lam = float(rng.uniform())
        hom = max(hom, abs(transforms.transformation_norm(transforms.scalar_mul(lam, A)) - lam * nA))
        S = transforms.add_coexistent(A, B)
        sub = max(sub, transforms.transformation_norm(S) - nA - nB)
    return [
        _record("transformations are contractions", "Norm for transformations", top <= 1 + tol,
                top, dg),
        _record("norm homogeneity", "Norm for transformations", hom <= tol, hom, dg),
        _record("norm subadditivity", "Norm for transformations", sub <= tol, sub, dg),
    ]


def _check_addition(T, cfg, dg, n):
    rng = check_rng(cfg, "addition rules")
    worst1 = worst2 = 0.0
    for _ in range(n):
        ins = random_instrument(T, rng, k=2)
        A, B = ins[0], ins[1]
        S = transforms.add_coexistent(A, B)
        w = random_state(T, rng)
        pA, pB, pS = (transforms.occurrence_prob(X, w) for X in (A, B, S))
        worst1 = max(worst1, abs(pS - pA - pB))
        if min(pA, pB) > 1e-6:
            lhs = transforms.conditional_state(S, w).x
            rhs = (pA * transforms.conditional_state(A, w).x +
                   pB * transforms.conditional_state(B, w).x) / pS
            worst2 = max(worst2, float(np.abs(lhs - rhs).max()))
    return [
        _record("addition: probabilities add", "Addition of coexistent transformations",
                worst1 <= 1e-12, worst1, dg),
        _record("addition: conditional state is the weighted mixture",
                "Addition of coexistent transformations", worst2 <= 1e-12, worst2, dg),
    ]


def _check_bayes(T, cfg, dg, n):
    rng = check_rng(cfg, "bayes chain rule")
    worst = 0.0
    for _ in range(n):
        A = random_instrument(T, rng)[0]
        B = random_instrument(T, rng)[0]
        w = random_state(T, rng)
        try:
            lhs = transforms.bayes_prob(B, A, w)
            rhs = transforms.occurrence_prob(B, transforms.conditional_state(A, w))
        except NullConditioning:
            continue
        worst = max(worst, abs(lhs - rhs))
    return [_record("bayes chain rule", "Bayes", worst <= 1e-12, worst, dg)]


def _check_noinfo(T, cfg, dg):
    rng = check_rng(cfg, "no information")
    p = rng.dirichlet(np.ones(3))
    I = transforms.identity(T)
    fixture = transforms.instrument(T, [transforms.Transformation(T, pj * I.M, f"p{j}")
                                        for j, pj in enumerate(p)])
    informative = random_instrument(T, rng, k=2)
    a = transforms.no_information_check(fixture)
    b = transforms.no_information_check(informative)
    return [
        _record("no information from scaled identities",
                "No-information from identity transformations", a, a, dg),
        Record("no information: random instrument", "No-information from identity transformations",
               INFO, b, dg),
    ]


def _check_orthogonal_pairs(T, cfg, dg, limit=40):
    if T.backend == "quantum":
        q = T.quantum
        states = [convex.State(T, q.ket_coords(np.eye(q.d)[i])) for i in range(q.d)]
    else:
        states = T.vertices()[:limit]
    pairs = [(a, b) for a, b in itertools.combinations(states, 2) if metric.orthogonal(a, b)]
    ok = all(metric.perfectly_discriminable([a, b]).feasible for a, b in pairs)
    return [_record("orthogonal pairs are perfectly discriminable",
                    "Two orthogonal states are perfectly discriminable", ok, len(pairs), dg,
                    detail="number of orthogonal pairs checked")]


def _check_instrument(name, ins, dg):
    T = ins.theory
    dev = ins.normalization_deviation
    bad = [t.label for t in ins if transforms.transformation_violations(T, t.M)]
    return [
        _record(f"instrument {name}: normalization", "Actions/experiments and outcomes",
                dev <= tolerances().feasibility, dev, dg),
        _record(f"instrument {name}: valid elements", "Operation", not bad, bad, dg),
    ]


def _check_observable(name, L, dg):
    T = L.theory
    bad = [j for j, l in enumerate(L) if not effects.is_valid_effect(T, l.l)]
    return [
        _record(f"observable {name}: valid elements", "Observable", not bad, bad, dg),
        Record(f"observable {name}: informationally complete", "Informationally complete observable",
               INFO, effects.is_informationally_complete(L), dg),
    ]


# ---------------------------------------------------------------------------
# composite scenarios


def _expect(sc, key, value):
    """Pass when ``value`` matches the scenario's expectation (default: True)."""
    return PASS if bool(value) == bool(sc.expect.get(key, True)) else FAIL


def composite_report(sc, cfg=RunConfig()):
    C = sc.composite
    if C is None:
        raise ValueError("scenario has no composite section")
    rep = Report(f"composite {sc.name}", meta={"mode": C.mode, "seed": cfg.seed,
                                               "factors": [t.name for t in C.factors]})
    checks = []
    for jname, W in sc.joint_states.items():
        checks.append((f"{jname}", lambda jname=jname, W=W: _joint_records(sc, jname, W, cfg)))
    rep.extend(run_checks(checks, cfg))
    return rep


def _joint_records(sc, jname, W, cfg):
    C = sc.composite
    T1, T2 = C.factors
    dg = digest(sc.name, jname, W.W)
    out = []
    tol = tolerances().feasibility
    out.append(Record(f"{jname}: local state 1", "Local state", INFO, comp.local_state(W, 1).x, dg))
    out.append(Record(f"{jname}: local state 2", "Local state", INFO, comp.local_state(W, 2).x, dg))
    party2 = [(n, ins) for n, (p, ins) in sc.instruments.items() if p == 2]
    for iname, ins in party2:
        dev = comp.acausality_check(W, ins)
        key = f"acausality:{iname}"
        ok = dev <= tol
        out.append(Record(f"{jname}: acausality under {iname}", "Acausality of local transformations",
                          _expect(sc, key, ok), dev, dg))
    rng = check_rng(cfg, f"{jname} random instruments")
    worst = max(comp.acausality_check(W, random_instrument(T2, rng, k=int(rng.integers(2, 4))))
                for _ in range(10))
    out.append(Record(f"{jname}: acausality under random instruments",
                      "Acausality of local transformations", status_of(worst <= tol), worst, dg))
    for (a, A), (b, B) in itertools.combinations(party2, 2):
        if A.normalization_deviation > tol or B.normalization_deviation > tol:
            continue
        r = comp.equivalent_incompatible_mixtures(W, A, B)
        out.append(Record(f"{jname}: equivalent mixtures {a}/{b}",
                          "Existence of equivalent incompatible mixtures", status_of(r.ok),
                          r.deviation, dg))
    if T1.embed_dim == T2.embed_dim and T1 is T2:
        v = comp.is_maximally_entangled(W)
        out.append(Record(f"{jname}: maximally entangled", "Maximally entangled state",
                          _expect(sc, "maximally_entangled", v.maximally_entangled),
                          v.maximally_entangled, dg,
                          detail=f"pure={v.pure} chaotic marginals={v.chaotic_marginals}"
                          + (" [classical instance]" if v.classical_instance else "")))
    df = comp.dynamically_faithful(W)
    out.append(Record(f"{jname}: dynamically faithful", "Dynamically faithful state",
                      _expect(sc, "dynamically_faithful", df.faithful), df.faithful, dg,
                      detail=f"rank {df.rank}/{df.expected_rank}, condition {df.condition_number:.4g}"))
    inf = comp.informationally_faithful(W)
    out.append(Record(f"{jname}: informationally faithful", "Informationally faithful state",
                      _expect(sc, "informationally_faithful", inf.faithful), inf.faithful, dg,
                      detail=f"rank {inf.rank}/{inf.expected_rank}, "
                             f"condition {inf.condition_number:.4g}"))
    rng = check_rng(cfg, f"{jname} preparation targets")
    targets = [random_state(T2, rng) for _ in range(cfg.targets)]
    preps = comp.preparationally_faithful(W, targets)
    ok = all(p.feasible and p.residual <= 1e-10 for p in preps)
    worst = max(p.residual for p in preps)
    out.append(Record(f"{jname}: preparationally faithful", "Preparationally faithful state",
                      _expect(sc, "preparationally_faithful", ok), ok, dg,
                      detail=f"{sum(p.feasible for p in preps)}/{len(preps)} targets, "
                             f"max residual {worst:.3g}"))
    bell = sc.raw.get("minimal_lab")
    if bell and C.mode == "quantum":
        L = comp.bell_observable(T1.quantum.d)
        sigma = random_state(T2, check_rng(cfg, f"{jname} bell preparation"))
        rank = comp.induced_effect_rank(L, sigma)
        out.append(Record(f"{jname}: bell observable informationally complete",
                          "The minimal lab", status_of(rank == T1.embed_dim), rank, dg))
    return out


# ---------------------------------------------------------------------------
# teleportation


@dataclass
class TeleportRun:
    report: Report
    table: list  # (target index, outcome label, probability, distance)


def teleport_report(sc, cfg=RunConfig()):
    from . import zoo
    from .effects import Observable, Propensity
    from .io import state_from_spec

    spec = sc.teleport
    if not spec:
        raise ValueError("scenario has no teleport section")
    T = sc.theories[spec["theory"]]
    Phi = sc.joint_states[spec["resource"]]
    C12 = comp.composite(T, Phi.composite.factors[0], Phi.composite.mode)
    obs = spec.get("observable", "bell")
    if obs == "bell":
        L = comp.bell_observable(T.quantum.d)
    else:
        L = Observable(C12.joint, tuple(Propensity(C12.joint, np.asarray(l, float))
                                        for l in obs["elements"]))
    corr = spec.get("corrections", "weyl")
    if corr == "weyl":
        U = zoo.pauli_corrections(T.quantum.d, T)
    else:
        U = [transforms.Transformation(T, np.asarray(c["matrix"], float), c.get("label", str(j)))
             if "matrix" in c else
             zoo.kraus_to_transformation([comp_array(K) for K in c["kraus"]], T, c.get("label", str(j)))
             for j, c in enumerate(corr)]
    tg = spec.get("targets", {"random": 100})
    rng = check_rng(cfg, "teleport targets")
    if isinstance(tg, dict) and "random" in tg:
        from .sampling import random_pure_state
        targets = [random_pure_state(T, rng) if tg.get("pure", True) else random_state(T, rng)
                   for _ in range(int(tg["random"]))]
    else:
        targets = [state_from_spec(T, s, rng) for s in tg]
    dg = digest(sc.name, spec)
    table = []
    per = {}
    for t, omega in enumerate(targets):
        r = comp.teleportation_check(Phi, L, U, omega)
        for o in r.outcomes:
            table.append((t, o.label, o.probability, o.distance))
            per.setdefault(o.label, []).append((o.probability, o.distance))
    rep = Report(f"teleport {sc.name}", meta={"seed": cfg.seed, "targets": len(targets),
                                              "outcomes": len(L)})
    tol_d = float(sc.expect.get("max_distance", 1e-10))
    p_expected = sc.expect.get("probability")
    for label in sorted(per):
        ps = np.array([p for p, _ in per[label]])
        ds = np.array([d for _, d in per[label]])
        rep.add(f"outcome {label}: max corrected distance", "Teleportation",
                status_of(ds.max() <= tol_d), float(ds.max()), dg)
        if p_expected is not None:
            dev = float(np.abs(ps - p_expected).max())
            rep.add(f"outcome {label}: probability", "Teleportation", status_of(dev <= 1e-12),
                    [float(ps.min()), float(ps.max())], dg, detail=f"expected {p_expected}")
        else:
            rep.add(f"outcome {label}: probability", "Teleportation", INFO,
                    [float(ps.min()), float(ps.max())], dg)
    totals = {}
    for t, _, p, _ in table:
        totals[t] = totals.get(t, 0.0) + p
    dev = max(abs(v - 1) for v in totals.values()) if totals else 0.0
    rep.add("total outcome probability", "Teleportation", status_of(dev <= 1e-12), dev, dg)
    return TeleportRun(rep, table)


def comp_array(K):
    from .io import complex_array
    return complex_array(K, 2)


# ---------------------------------------------------------------------------
# distances


def distance_report(T, states, cfg=RunConfig()):
    D = metric.distance_matrix(states, jobs=cfg.jobs)
    return D
