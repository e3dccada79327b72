"""Scenario checks: each bundled preset turns one theorem into pass/fail lines.

A scenario is a function ``(cfg, params, workers) -> list[Check]``.  Its
``[verify]`` parameters are declared with defaults at registration, so a
preset can tighten or loosen a tolerance without code changes.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .analysis import (
    EnsembleConfig,
    mass_monotonicity_study,
    run_ensemble,
    scale_state,
)
from .config import ConfigError, RunConfig, load_config, resolve_text
from .diagnostics import noise_decomposition
from .meanfield import (
    additive_fertility_field,
    fertility_field,
    find_equilibria,
    growth_rate,
    hardy_weinberg_defect,
    integrate,
    mean_vector_field,
    nondegeneracy,
    replicator_field,
    simplex_grid,
    time_average_flow,
)
from .models import IntLaw, ReplicatorSpec, genotype_reduction, replicator_law
from .urn import Stop, normalize, simulate

__all__ = ["Check", "VerifyReport", "SCENARIOS", "run_verify", "preset_names", "load_preset",
           "preset_text"]


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    value: object = None
    threshold: object = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = ""
        if self.value is not None:
            extra = f" (value {_fmt(self.value)}"
            extra += f", need {_fmt(self.threshold)})" if self.threshold is not None else ")"
        return f"{tag} [{self.criterion}] {self.name}{extra}"

    def to_dict(self) -> dict:
        return {"criterion": self.criterion, "name": self.name, "passed": self.passed,
                "value": _plain(self.value), "threshold": _plain(self.threshold)}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


@dataclass
class VerifyReport:
    scenario: str
    criterion: int
    checks: list[Check]
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = [c.line() for c in self.checks]
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict} criterion {self.criterion} ({self.scenario}) "
                     f"in {self.seconds:.1f} s")
        return "\n".join(lines)

    def to_json(self) -> str:
        d = {"scenario": self.scenario, "criterion": self.criterion, "passed": self.passed,
             "checks": [c.to_dict() for c in self.checks]}
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


@dataclass
class Scenario:
    name: str
    criterion: int
    func: Callable
    params: dict
    needs_model: bool = True


SCENARIOS: dict[str, Scenario] = {}


def scenario(name: str, criterion: int, needs_model: bool = True, **params):
    def deco(func):
        SCENARIOS[name] = Scenario(name, criterion, func, params, needs_model)
        return func
    return deco


def _params(cfg: RunConfig, sc: Scenario) -> dict:
    given = {k: v for k, v in cfg.section("verify").items() if k != "scenario"}
    unknown = set(given) - set(sc.params)
    if unknown:
        key = sorted(unknown)[0]
        raise cfg.error(f"unknown key {key!r} for scenario {sc.name!r}; known: "
                        f"{', '.join(sc.params) or 'none'}", "verify", key)
    return {**sc.params, **given}


# ---------------------------------------------------------------------------
# presets


def preset_names() -> list[str]:
    files = resources.files("genurn").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".toml"))


def preset_text(name: str) -> str:
    path = resources.files("genurn").joinpath("presets", f"{name}.toml")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def load_preset(name: str, overrides: dict | None = None) -> RunConfig:
    return resolve_text(preset_text(name), f"preset:{name}", overrides)


# ---------------------------------------------------------------------------
# helpers


def _growth_vertex_rate(q) -> float:
    return q.growth if q.growth is not None else math.nan


def _interior(q, eps: float = 1e-9) -> bool:
    return bool(np.all(q.x > eps))


def _grid(law, density: int):
    # fertility laws work on the genotype simplex
    if hasattr(law, "lift"):
        return [law.lift @ y for y in simplex_grid(law.lift.shape[1], density)]
    return list(simplex_grid(law.k, density))


# ---------------------------------------------------------------------------
# criterion 1 and 2: exact field identities


def _random_law(rng, lo: int = -1, hi: int = 3) -> IntLaw:
    vals = np.arange(lo, hi + 1)
    keep = rng.random(len(vals)) < 0.7
    keep[rng.integers(len(vals))] = True
    p = rng.dirichlet(np.ones(keep.sum()))
    return IntLaw(tuple(int(v) for v in vals[keep]), tuple(float(x) for x in p))


@scenario("replicator-field-identity", 1, needs_model=False,
          tol=1e-10, specs=5, points=200, seed=0, dims=[2, 3, 4])
def _field_identity(cfg, p, workers):
    rng = np.random.default_rng(p["seed"])
    dims = [p["dims"][i % len(p["dims"])] for i in range(p["specs"])]
    worst = 0.0
    for k in dims:
        R = [[_random_law(rng) for _ in range(k)] for _ in range(k)]
        Rt = [[_random_law(rng) for _ in range(k)] for _ in range(k)]
        r = [_random_law(rng) for _ in range(k)]
        spec = ReplicatorSpec.build(R, Rt, r)
        via_law = mean_vector_field(replicator_law(spec))
        via_matrix = replicator_field(spec.mean_matrix())
        for x in rng.dirichlet(np.ones(k), size=p["points"]):
            worst = max(worst, float(np.max(np.abs(via_law(x) - via_matrix(x)))))
    return [Check(1, f"law field equals replicator field on {p['specs']} random specs",
                  worst <= p["tol"], worst, p["tol"]),
            Check(1, "dimensions covered", set(dims) >= {2, 3, 4} or set(dims) == set(p["dims"]),
                  sorted(set(dims)))]


@scenario("additive-fertility-identity", 2, needs_model=False,
          tol=1e-12, points=100, alleles=3, seed=0)
def _additive_identity(cfg, p, workers):
    rng = np.random.default_rng(p["seed"])
    k = p["alleles"]
    gamma = rng.uniform(0.2, 2.0, size=(k, k))
    gamma = (gamma + gamma.T) / 2
    g4 = gamma[:, :, None, None] + gamma[None, None, :, :]
    full = fertility_field(g4)
    additive = additive_fertility_field(gamma)
    lift, _ = genotype_reduction(k)
    worst = 0.0
    for y in rng.dirichlet(np.ones(lift.shape[1]), size=p["points"]):
        x = lift @ y
        worst = max(worst, float(np.max(np.abs(full(x) - additive(x)))))
    return [Check(2, "general fertility field equals additive field", worst <= p["tol"],
                  worst, p["tol"])]


# ---------------------------------------------------------------------------
# criterion 3: time averages


@scenario("rps-time-average", 3, tol=0.05, ode_tol=1e-3, min_growth=50, grid=20)
def _rps(cfg, p, workers):
    law = cfg.build_law()
    field = cfg.field(law)
    eqs = cfg.equilibria(law, field)
    interior = [q for q in eqs if _interior(q)]
    centre = np.full(law.k, 1.0 / law.k)
    checks = [Check(3, "unique interior equilibrium", len(interior) == 1, len(interior), 1)]
    lam = min(growth_rate(law, x) for x in simplex_grid(law.k, p["grid"]))
    checks.append(Check(3, "growth rate positive on the simplex", lam > 0, lam, "> 0"))
    ens = cfg.ensemble_config(law, eqs)
    T = ens.time_average_T
    rep = run_ensemble(ens, cfg.workers(workers))
    grew = rep.growth
    checks.append(Check(3, "growth replicates", len(grew) >= p["min_growth"], len(grew),
                        p["min_growth"]))
    complete = all(r.time_average_complete for r in grew)
    checks.append(Check(3, f"growth replicates reach clock {T}", complete))
    target = interior[0].x if interior else centre
    mean = rep.mean_time_average
    dev = float(np.max(np.abs(mean - target))) if mean is not None else math.inf
    checks.append(Check(3, "mean process time average near the interior equilibrium",
                        dev <= p["tol"], dev, p["tol"]))
    x0 = normalize(ens.z0)
    path = integrate(field, x0, T, cfg.section("meanfield")["h"])
    fdev = float(np.max(np.abs(time_average_flow(path) - target)))
    checks.append(Check(3, "flow time average near the interior equilibrium",
                        fdev <= p["ode_tol"], fdev, p["ode_tol"]))
    return checks


# ---------------------------------------------------------------------------
# criteria 4, 5: coordination game


def _coordination(cfg, workers):
    law = cfg.build_law()
    field = cfg.field(law)
    eqs = cfg.equilibria(law, field)
    rep = run_ensemble(cfg.ensemble_config(law, eqs), cfg.workers(workers))
    return law, eqs, rep


@scenario("coordination-growth-rate", 4, band=0.1, min_fraction=0.9, min_classified=1)
def _growth_rate(cfg, p, workers):
    law, eqs, rep = _coordination(cfg, workers)
    classified = [r for r in rep.growth if r.limit_id is not None]
    good = 0
    for r in classified:
        lam = _growth_vertex_rate(eqs[r.limit_id])
        if (1 - p["band"]) * lam <= r.rate <= (1 + p["band"]) * lam:
            good += 1
    frac = good / len(classified) if classified else 0.0
    return [
        Check(4, "classified growth replicates", len(classified) >= p["min_classified"],
              len(classified), p["min_classified"]),
        Check(4, f"growth rate within {p['band']:.0%} of the limit's growth rate",
              frac >= p["min_fraction"], frac, p["min_fraction"]),
    ]


@scenario("coordination-nonconvergence", 5, min_growth=200, min_fraction=0.95)
def _nonconvergence(cfg, p, workers):
    law, eqs, rep = _coordination(cfg, workers)
    unstable = [i for i, q in enumerate(eqs) if q.is_unstable and _interior(q)]
    stable = [i for i, q in enumerate(eqs) if q.is_stable]
    checks = [Check(5, "interior equilibrium is linearly unstable", len(unstable) == 1,
                    len(unstable), 1)]
    if unstable:
        nd = nondegeneracy(law, eqs[unstable[0]].x, cfg.section("meanfield")["support_eps"])
        checks.append(Check(5, "noise nondegenerate at the interior equilibrium",
                            nd.is_nondegenerate, nd.rank, nd.dim))
    hist = rep.histogram
    grew = rep.growth_count
    at_unstable = sum(hist.get(str(i), 0) for i in unstable)
    at_stable = sum(hist.get(str(i), 0) for i in stable)
    frac = at_stable / grew if grew else 0.0
    checks += [
        Check(5, "growth replicates", grew >= p["min_growth"], grew, p["min_growth"]),
        Check(5, "replicates settling at the unstable equilibrium", at_unstable == 0,
              at_unstable, 0),
        Check(5, "replicates settling at a stable vertex", frac >= p["min_fraction"], frac,
              p["min_fraction"]),
    ]
    return checks


# ---------------------------------------------------------------------------
# criterion 6: decline


@scenario("declining-extinction", 6, lambda_max=-0.1, grid=20, size_bound=None)
def _declining(cfg, p, workers):
    law = cfg.build_law()
    sup = max(growth_rate(law, x) for x in _grid(law, p["grid"]))
    ens = cfg.ensemble_config(law)
    rep = run_ensemble(ens, cfg.workers(workers))
    bound = p["size_bound"] if p["size_bound"] is not None else sum(ens.z0)
    held = sum(r.outcome == "extinct" or r.final_size <= bound for r in rep.replicates)
    held_frac = held / rep.n
    return [
        Check(6, "growth rate bounded below zero on the simplex", sup <= p["lambda_max"], sup,
              p["lambda_max"]),
        Check(6, "growth fraction", rep.growth_fraction == 0.0, rep.growth_fraction, 0.0),
        Check(6, f"every replicate extinct or at most {bound} individuals", held == rep.n,
              held_frac, 1.0),
    ]


# ---------------------------------------------------------------------------
# criterion 7: initial mass


@scenario("birth-death-mass", 7, sigmas=3.0)
def _mass(cfg, p, workers):
    law = cfg.build_law()
    ens = cfg.section("ensemble")
    masses = ens["masses"]
    pb, pd = law.mean_support([1.0])[1]
    study = mass_monotonicity_study(law, [1.0], masses, ens["replicates"], cfg.seed,
                                    cfg.stop(), ens["growth_threshold"], cfg.workers(workers),
                                    record_stride=cfg.section("simulation")["record_stride"])
    checks = []
    R = ens["replicates"]
    for M, f in zip(masses, study.fractions):
        expected = 1.0 - (pd / pb) ** M
        sigma = math.sqrt(expected * (1 - expected) / R)
        dev = abs(f - expected)
        checks.append(Check(7, f"growth fraction at M={M} matches ruin formula {expected:.4f}",
                            dev <= p["sigmas"] * sigma, dev, p["sigmas"] * sigma))
    checks.append(Check(7, "growth fraction nondecreasing in M", study.nondecreasing,
                        study.fractions))
    return checks


# ---------------------------------------------------------------------------
# criterion 8: Hardy-Weinberg


@scenario("hardy-weinberg-decay", 8, ratio=0.2, slope_tol=0.01, ode_T=4.0, grid=6)
def _hw(cfg, p, workers):
    law = cfg.build_law()
    gamma = law.spec.gamma
    lam = min(growth_rate(law, x) for x in _grid(law, p["grid"]))
    rep = run_ensemble(cfg.ensemble_config(law), cfg.workers(workers))
    hw = [r.hw for r in rep.growth if r.hw is not None and not r.hw.void]
    ratios = [h.tail_ratio for h in hw]
    worst = max(ratios) if ratios else math.inf
    checks = [
        Check(8, "growth rate positive on the genotype simplex", lam > 0, lam, "> 0"),
        Check(8, "growth replicates", len(hw) > 0, len(hw), "> 0"),
        Check(8, "tail defect below initial fraction on every growth replicate",
              worst < p["ratio"], worst, p["ratio"]),
    ]
    x0 = normalize(cfg.z0(law))
    flow = additive_fertility_field(gamma)
    h = cfg.section("meanfield")["h"]
    path = integrate(flow, x0, p["ode_T"], h)
    norms = np.array([np.linalg.norm(hardy_weinberg_defect(x)) for x in path.x])
    keep = norms > 1e-12
    slope = float(np.polyfit(path.t[keep], np.log(norms[keep]), 1)[0])
    k = law.alleles
    X = x0.reshape(k, k)
    gbar = float(np.sum(gamma * X))
    expected = -2.0 * gbar
    rel = abs(slope - expected) / abs(expected)
    checks.append(Check(8, f"flow defect decays with slope {expected:.4g}",
                        rel <= p["slope_tol"], rel, p["slope_tol"]))
    return checks


# ---------------------------------------------------------------------------
# criterion 9: pseudotrajectory


@scenario("coordination-pseudotrajectory", 9, min_growth=1)
def _pseudo(cfg, p, workers):
    law = cfg.build_law()
    field = cfg.field(law)
    ens = cfg.ensemble_config(law, field=field)
    rep = run_ensemble(ens, cfg.workers(workers))
    curve = rep.defect_curve(np.median)
    checks = [Check(9, "growth replicates", rep.growth_count >= p["min_growth"],
                    rep.growth_count, p["min_growth"])]
    counts = [c for _, _, c in curve]
    checks.append(Check(9, "every growth replicate reaches all checkpoints",
                        all(c == rep.growth_count for c in counts), counts))
    meds = [v for _, v, _ in curve]
    decreasing = len(meds) >= 2 and all(b < a for a, b in zip(meds, meds[1:]))
    checks.append(Check(9, "median defect decreases between checkpoints", decreasing, meds))
    return checks


# ---------------------------------------------------------------------------
# criterion 10: exclusion


@scenario("dominated-exclusion", 10, min_fraction=0.95)
def _exclusion(cfg, p, workers):
    law = cfg.build_law()
    eqs = cfg.equilibria(law)
    interior = [q for q in eqs if _interior(q)]
    rep = run_ensemble(cfg.ensemble_config(law, eqs), cfg.workers(workers))
    flags = [r.excluded for r in rep.growth]
    frac = sum(flags) / len(flags) if flags else 0.0
    return [
        Check(10, "no interior equilibrium", not interior, len(interior), 0),
        Check(10, "growth replicates", len(flags) > 0, len(flags), "> 0"),
        Check(10, "boundary approached in every tail segment", frac >= p["min_fraction"], frac,
              p["min_fraction"]),
    ]


# ---------------------------------------------------------------------------
# criterion 11: noise decomposition on every bundled model


def _model_presets() -> list[tuple[str, RunConfig]]:
    out = []
    for name in preset_names():
        cfg = load_preset(name)
        if cfg.model_kind is not None:
            out.append((name, cfg))
    return out


@scenario("noise-decomposition", 11, needs_model=False, steps=10_000, doubling_ratio=2.0)
def _noise(cfg, p, workers):
    checks = []
    for name, pc in _model_presets():
        law = pc.build_law()
        z0 = pc.z0(law)
        reports = []
        for n in (p["steps"], 2 * p["steps"]):
            tr = simulate(law, z0, Stop(max_steps=n), seed=pc.seed, replicate=0)
            reports.append(noise_decomposition(tr, law))
        short, long = reports
        checks.append(Check(11, f"{name}: max noise within 4m", long.within_bound,
                            long.max_noise, long.noise_bound))
        K1, K2 = short.bias_constant, long.bias_constant
        stable = math.isfinite(K2) and K2 <= p["doubling_ratio"] * max(K1, 1e-12)
        checks.append(Check(11, f"{name}: bias constant finite and stable under doubling",
                            stable or K2 == K1 == 0.0, [K1, K2]))
    return checks


# ---------------------------------------------------------------------------
# criterion 12: determinism


def _ensemble_for(name: str, pc: RunConfig, replicates: int, max_steps: int) -> EnsembleConfig:
    law = pc.build_law()
    sim = pc.section("simulation")
    capped = max_steps if sim["max_steps"] is None else min(sim["max_steps"], max_steps)
    pc.data["simulation"]["max_steps"] = capped
    ens = pc.section("ensemble")
    z0 = scale_state([1.0], ens["masses"][0]) if ens["masses"] else None
    # replicator presets classify limits; the others carry explicit thresholds
    eqs = pc.equilibria(law) if pc.model_kind == "replicator" else None
    fld = pc.field(law) if ens["defect_checkpoints"] else None
    return pc.ensemble_config(law, eqs, fld, replicates=replicates, z0=z0)


@scenario("determinism", 12, needs_model=False, replicates=4, max_steps=20_000, workers=8)
def _determinism(cfg, p, workers):
    checks = []
    for name, pc in _model_presets():
        ens = _ensemble_for(name, pc, p["replicates"], p["max_steps"])
        outs = []
        for w in (1, 1, p["workers"]):
            rep = run_ensemble(ens, w)
            outs.append(rep.to_json() + rep.replicates_csv() + rep.curves_csv())
        checks.append(Check(12, f"{name}: identical reports on rerun", outs[0] == outs[1]))
        checks.append(Check(12, f"{name}: identical reports with {p['workers']} workers",
                            outs[0] == outs[2]))
    return checks


# ---------------------------------------------------------------------------


def run_verify(cfg: RunConfig, workers: int | None = None) -> VerifyReport:
    name = cfg.section("verify").get("scenario")
    if name is None:
        raise ConfigError(f"{cfg.locator.source}: verify needs a [verify] section with 'scenario'")
    if name not in SCENARIOS:
        raise cfg.error(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}",
                        "verify", "scenario")
    sc = SCENARIOS[name]
    params = _params(cfg, sc)
    if sc.needs_model:
        cfg.require_model()
    t0 = time.perf_counter()
    checks = sc.func(cfg, params, workers)
    return VerifyReport(name, sc.criterion, checks, time.perf_counter() - t0)
