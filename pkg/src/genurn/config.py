"""Run configuration: loading, validation, defaults and object builders.

A config is a TOML (or JSON) document with one model section
(``[replicator]``, ``[fertility]`` or ``[rates]``, plus ``[mutation]`` for
fertility) and the run sections ``[simulation]``, ``[meanfield]``,
``[ensemble]``, ``[output]`` and ``[verify]``.  Unknown sections and keys
are rejected; errors carry the line they refer to.
"""
from __future__ import annotations

import copy
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .analysis import EnsembleConfig
from .meanfield import (
    VectorField,
    additive_fertility_field,
    allele_field,
    fertility_field,
    find_equilibria,
    mean_vector_field,
    replicator_field,
)
from .models import (
    FertilitySpec,
    IntLaw,
    MutationMatrix,
    ReplicatorSpec,
    fertility_law,
    genotypes,
    mutation_fertility_law,
    replicator_law,
)
from .urn import RateLaw, Stop, TransitionLaw

__all__ = ["ConfigError", "RunConfig", "load_config", "resolve", "MODEL_SECTIONS", "DEFAULTS"]

REQUIRED = object()

MODEL_SECTIONS = ("replicator", "fertility", "rates")

DEFAULTS: dict[str, dict] = {
    "replicator": {"R": REQUIRED, "Rt": None, "r": None, "name": "replicator"},
    "fertility": {"alleles": REQUIRED, "gamma": None, "law": None, "pairs": None,
                  "name": "fertility"},
    "mutation": {"rate": None, "matrix": None},
    "rates": {"increments": REQUIRED, "probabilities": None, "linear": None, "name": "rates"},
    "simulation": {"z0": None, "genotype_counts": None, "seed": 0, "max_steps": None,
                   "max_clock": None, "on_extinction": True, "record_stride": 1,
                   "hard_cap": 50_000_000},
    "meanfield": {"field": "mean", "h": 1e-3, "newton_tol": 1e-10, "dedupe_tol": 1e-6,
                  "grid_density": 5, "fd_step": 1e-5, "hyperbolicity_tol": 1e-6,
                  "support_eps": 1e-12, "flow_x0": None, "flow_T": None, "record_every": 1},
    "ensemble": {"replicates": 100, "growth_threshold": None, "tail_fraction": 0.2,
                 "classify_tol": 0.05, "defect_checkpoints": [], "defect_T": 5.0,
                 "defect_h": 1e-2, "time_average_T": None, "exclusion_tol": None,
                 "hw_decay": False, "masses": [], "workers": None},
    "output": {"dir": "out", "formats": ["json", "csv", "ndjson"]},
    # [verify] keys beyond the scenario name are checked by the scenario itself
    "verify": {"scenario": REQUIRED},
}

FIELDS = ("mean", "replicator", "fertility", "additive", "allele")
FORMATS = ("json", "csv", "ndjson")


class ConfigError(ValueError):
    """Invalid configuration; ``str`` includes the source line when known."""


class _Locator:
    """Maps (section, key) to a line number of the source text."""

    _section = re.compile(r"^\s*\[\s*([A-Za-z0-9_\-]+)\s*\]")
    _key = re.compile(r'^\s*"?([A-Za-z0-9_\-]+)"?\s*[=:]')

    def __init__(self, text: str | None, source: str, is_json: bool):
        self.source = source
        self.lines: dict[tuple[str, str | None], int] = {}
        if not text:
            return
        current = None
        for no, line in enumerate(text.splitlines(), 1):
            if is_json:
                m = re.match(r'^\s*"([A-Za-z0-9_\-]+)"\s*:\s*\{', line)
                if m:
                    current = m.group(1)
                    self.lines.setdefault((current, None), no)
                    continue
            else:
                m = self._section.match(line)
                if m:
                    current = m.group(1)
                    self.lines.setdefault((current, None), no)
                    continue
            m = self._key.match(line)
            if m and current is not None:
                self.lines.setdefault((current, m.group(1)), no)

    def where(self, section: str | None = None, key: str | None = None) -> str:
        no = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"{self.source}:{no}" if no else self.source

    def error(self, msg: str, section: str | None = None, key: str | None = None) -> ConfigError:
        return ConfigError(f"{self.where(section, key)}: {msg}")


def _parse(text: str, source: str) -> tuple[dict, bool]:
    stripped = text.lstrip()
    if source.endswith(".json") or stripped.startswith("{"):
        try:
            return json.loads(text), True
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}: {exc.msg}") from None
    try:
        return tomli.loads(text), False
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        where = f"{source}:{m.group(1)}" if m else source
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path, overrides: dict | None = None) -> "RunConfig":
    """Read and resolve a config file.  ``overrides`` maps "section.key" to values."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return resolve_text(text, str(path), overrides)


def resolve_text(text: str, source: str = "<config>", overrides: dict | None = None) -> "RunConfig":
    raw, is_json = _parse(text, source)
    return resolve(raw, _Locator(text, source, is_json), overrides)


def resolve(raw: dict, locator: _Locator | None = None, overrides: dict | None = None) -> "RunConfig":
    loc = locator or _Locator(None, "<config>", True)
    if not isinstance(raw, dict):
        raise loc.error("config must be a table of sections")
    raw = copy.deepcopy(raw)
    for dotted, value in (overrides or {}).items():
        sec, key = dotted.split(".", 1)
        raw.setdefault(sec, {})[key] = value
    resolved: dict[str, dict] = {}
    for sec, body in raw.items():
        if sec not in DEFAULTS:
            raise loc.error(f"unknown section [{sec}]; known: {', '.join(DEFAULTS)}", sec)
        if not isinstance(body, dict):
            raise loc.error(f"[{sec}] must be a section", sec)
        schema = DEFAULTS[sec]
        if sec != "verify":
            for key in body:
                if key not in schema:
                    raise loc.error(f"unknown key {key!r} in [{sec}]; known: {', '.join(schema)}",
                                    sec, key)
        out = {}
        for key, default in schema.items():
            if key in body and body[key] is not None:
                out[key] = body[key]
            elif default is REQUIRED:
                raise loc.error(f"[{sec}] needs key {key!r}", sec)
            else:
                out[key] = copy.deepcopy(default)
        if sec == "verify":
            out.update({k: v for k, v in body.items() if k not in out})
        resolved[sec] = out
    for sec in ("simulation", "meanfield", "ensemble", "output"):
        resolved.setdefault(sec, copy.deepcopy(DEFAULTS[sec]))
    models = [s for s in MODEL_SECTIONS if s in resolved]
    if len(models) > 1:
        raise loc.error(f"only one model section allowed, found {models}", models[1])
    if "mutation" in resolved and models != ["fertility"]:
        raise loc.error("[mutation] needs a [fertility] model", "mutation")
    cfg = RunConfig(resolved, loc)
    cfg.validate()
    return cfg


def _descriptor(entry):
    if isinstance(entry, bool):
        raise ValueError("boolean is not a law descriptor")
    if isinstance(entry, (int, float)):
        if float(entry) != int(entry):
            raise ValueError(f"numeric entry {entry} must be an integer (use a table for means)")
        return IntLaw.const(int(entry))
    return IntLaw.parse(entry)


def _genotype_key(text: str, k: int) -> tuple[int, int]:
    """'1/2' -> (0, 1): alleles are numbered from 1 in config files."""
    parts = re.split(r"[/,\s]+", str(text).strip())
    if len(parts) != 2:
        raise ValueError(f"genotype {text!r} must look like '1/2'")
    i, j = sorted(int(p) - 1 for p in parts)
    if not 0 <= i <= j < k:
        raise ValueError(f"genotype {text!r} out of range for {k} alleles")
    return i, j


class _LinearRates:
    """``p_w(x) = L[w] . x``."""

    def __init__(self, L):
        self.L = np.asarray(L, dtype=float)

    def __call__(self, x):
        return (self.L @ np.asarray(x, dtype=float)).tolist()


class _ConstantRates:
    def __init__(self, p):
        self.p = [float(v) for v in p]

    def __call__(self, x):
        return self.p


@dataclass
class RunConfig:
    """Resolved configuration (every key present, defaults filled in)."""

    data: dict
    locator: _Locator = field(repr=False, default_factory=lambda: _Locator(None, "<config>", True))

    def section(self, name: str) -> dict:
        return self.data.get(name, {})

    def error(self, msg: str, section: str | None = None, key: str | None = None) -> ConfigError:
        return self.locator.error(msg, section, key)

    @property
    def model_kind(self) -> str | None:
        for s in MODEL_SECTIONS:
            if s in self.data:
                return s
        return None

    def require_model(self) -> str:
        kind = self.model_kind
        if kind is None:
            raise ConfigError(f"{self.locator.source}: missing model section; add one of "
                              + ", ".join(f"[{s}]" for s in MODEL_SECTIONS))
        return kind

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    # -- validation ------------------------------------------------------------

    def validate(self):
        sim, mf, ens, out = (self.section(s) for s in ("simulation", "meanfield", "ensemble", "output"))
        checks = [
            ("simulation", "seed", isinstance(sim["seed"], int) and sim["seed"] >= 0,
             "must be a nonnegative integer"),
            ("simulation", "record_stride", isinstance(sim["record_stride"], int) and sim["record_stride"] >= 1,
             "must be an integer >= 1"),
            ("simulation", "max_steps", sim["max_steps"] is None
             or (isinstance(sim["max_steps"], int) and sim["max_steps"] >= 0), "must be an integer >= 0"),
            ("simulation", "max_clock", sim["max_clock"] is None or _num(sim["max_clock"]) and sim["max_clock"] >= 0,
             "must be a number >= 0"),
            ("meanfield", "field", mf["field"] in FIELDS, f"must be one of {FIELDS}"),
            ("meanfield", "h", _num(mf["h"]) and mf["h"] > 0, "must be positive"),
            ("meanfield", "grid_density", isinstance(mf["grid_density"], int) and mf["grid_density"] >= 1,
             "must be an integer >= 1"),
            ("ensemble", "replicates", isinstance(ens["replicates"], int) and ens["replicates"] >= 1,
             "must be an integer >= 1"),
            ("ensemble", "tail_fraction", _num(ens["tail_fraction"]) and 0 < ens["tail_fraction"] < 1,
             "must lie in (0, 1)"),
            ("ensemble", "growth_threshold", ens["growth_threshold"] is None
             or _num(ens["growth_threshold"]) and ens["growth_threshold"] > 0, "must be positive"),
            ("ensemble", "workers", ens["workers"] is None
             or isinstance(ens["workers"], int) and ens["workers"] >= 1, "must be an integer >= 1"),
            ("ensemble", "masses", isinstance(ens["masses"], list)
             and list(ens["masses"]) == sorted(ens["masses"]), "must be an increasing list"),
            ("output", "formats", isinstance(out["formats"], list) and set(out["formats"]) <= set(FORMATS),
             f"must be a list drawn from {FORMATS}"),
        ]
        for sec, key, ok, msg in checks:
            if not ok:
                raise self.error(f"[{sec}] {key} {msg}", sec, key)
        if self.model_kind is not None:
            self.build_law()

    # -- builders ----------------------------------------------------------------

    def build_law(self) -> TransitionLaw:
        kind = self.require_model()
        sec = self.section(kind)
        try:
            if kind == "replicator":
                R = [[_descriptor(e) for e in row] for row in sec["R"]]
                k = len(R)
                if any(len(row) != k for row in R):
                    raise ValueError("R must be a square matrix")
                Rt = None if sec["Rt"] is None else [[_descriptor(e) for e in row] for row in sec["Rt"]]
                r = None if sec["r"] is None else [_descriptor(e) for e in sec["r"]]
                return replicator_law(ReplicatorSpec.build(R, Rt, r), name=sec["name"])
            if kind == "fertility":
                spec = self.fertility_spec()
                mut = self.section("mutation")
                if mut and (mut["rate"] is not None or mut["matrix"] is not None):
                    if mut["matrix"] is not None:
                        mu = MutationMatrix(spec.k, np.array(mut["matrix"], dtype=float))
                    else:
                        mu = MutationMatrix.uniform_rate(spec.k, float(mut["rate"]))
                    return mutation_fertility_law(spec, mu, name=sec["name"])
                return fertility_law(spec, name=sec["name"])
            W = sec["increments"]
            if (sec["probabilities"] is None) == (sec["linear"] is None):
                raise ValueError("give exactly one of 'probabilities' or 'linear'")
            if sec["probabilities"] is not None:
                rates = _ConstantRates(sec["probabilities"])
                if len(rates.p) != len(W):
                    raise ValueError("one probability per increment needed")
            else:
                rates = _LinearRates(sec["linear"])
                if rates.L.shape != (len(W), len(W[0])):
                    raise ValueError("linear must have one row per increment and one column per colour")
            return RateLaw(W, rates, name=sec["name"])
        except (ValueError, TypeError, IndexError) as exc:
            raise self.error(f"[{kind}] {exc}", kind) from None

    def fertility_spec(self) -> FertilitySpec:
        sec = self.section("fertility")
        k = int(sec["alleles"])
        given = [key for key in ("gamma", "law", "pairs") if sec[key] is not None]
        if sec["gamma"] is not None:
            if sec["pairs"] is not None:
                gts = genotypes(k)
                laws = {}
                for key, desc in sec["pairs"].items():
                    a, b = (gts.index(_genotype_key(g, k)) for g in key.split("x"))
                    laws[(min(a, b), max(a, b))] = desc
                return FertilitySpec.additive(np.array(sec["gamma"], dtype=float), laws)
            return FertilitySpec.additive(np.array(sec["gamma"], dtype=float))
        if sec["law"] is not None and sec["pairs"] is None:
            return FertilitySpec.uniform(k, sec["law"])
        if sec["pairs"] is not None:
            gts = genotypes(k)
            laws = {}
            for key, desc in sec["pairs"].items():
                halves = key.split("x")
                if len(halves) != 2:
                    raise ValueError(f"pair key {key!r} must look like '1/1x1/2'")
                a, b = (gts.index(_genotype_key(g, k)) for g in halves)
                laws[(min(a, b), max(a, b))] = desc
            if sec["law"] is not None:
                for a in range(len(gts)):
                    for b in range(a, len(gts)):
                        laws.setdefault((a, b), sec["law"])
            return FertilitySpec(k, laws)
        raise ValueError(f"[fertility] needs 'gamma', 'law' or 'pairs' (got {given})")

    def z0(self, law: TransitionLaw) -> list[int]:
        sim = self.section("simulation")
        try:
            if sim["genotype_counts"] is not None:
                if not hasattr(law, "state_from_counts"):
                    raise ValueError("genotype_counts needs a fertility model")
                k = law.alleles
                counts = {_genotype_key(g, k): int(c) for g, c in sim["genotype_counts"].items()}
                return law.state_from_counts(counts)
            if sim["z0"] is None:
                raise ValueError("needs 'z0' (or 'genotype_counts' for fertility)")
            z0 = [int(c) for c in sim["z0"]]
            if len(z0) != law.k or min(z0) < 0:
                raise ValueError(f"z0 must have {law.k} nonnegative entries")
            return z0
        except (ValueError, TypeError) as exc:
            raise self.error(f"[simulation] {exc}", "simulation",
                             "genotype_counts" if sim["genotype_counts"] is not None else "z0") from None

    def stop(self) -> Stop:
        sim = self.section("simulation")
        max_steps, max_clock = sim["max_steps"], sim["max_clock"]
        if max_steps is None and max_clock is None:
            max_steps = 10_000
        return Stop(max_steps=max_steps, max_clock=max_clock,
                    on_extinction=bool(sim["on_extinction"]), hard_cap=int(sim["hard_cap"]))

    @property
    def seed(self) -> int:
        return int(self.section("simulation")["seed"])

    def field(self, law: TransitionLaw | None = None) -> VectorField:
        law = law or self.build_law()
        choice = self.section("meanfield")["field"]
        kind = self.model_kind
        if choice == "mean":
            if not getattr(law, "enumerable", True):
                raise self.error("law exceeds the enumeration cap; set [meanfield] field to "
                                 "'replicator' (replicator) or 'fertility' (fertility)",
                                 "meanfield", "field")
            return mean_vector_field(law)
        if choice == "replicator" and kind == "replicator":
            return replicator_field(law.spec.mean_matrix())
        if choice == "fertility" and kind == "fertility":
            return fertility_field(law.spec)
        if choice in ("additive", "allele") and kind == "fertility":
            gamma = law.spec.gamma
            if gamma is None:
                raise self.error(f"field '{choice}' needs an additive [fertility] gamma",
                                 "meanfield", "field")
            return additive_fertility_field(gamma) if choice == "additive" else allele_field(gamma)
        raise self.error(f"field '{choice}' does not apply to a [{kind}] model", "meanfield", "field")

    def meanfield_kwargs(self) -> dict:
        mf = self.section("meanfield")
        return {k: mf[k] for k in ("grid_density", "newton_tol", "dedupe_tol", "fd_step",
                                   "hyperbolicity_tol")}

    def equilibria(self, law: TransitionLaw, field: VectorField | None = None):
        field = field or self.field(law)
        # growth rates are only meaningful when the field lives in the law's coordinates
        use_law = law if field.dim == law.k and getattr(law, "enumerable", True) else None
        return find_equilibria(field, law=use_law, **self.meanfield_kwargs())

    def workers(self, override: int | None = None) -> int | None:
        if override is not None:
            return override
        w = self.section("ensemble")["workers"]
        if w is not None:
            return w
        env = os.environ.get("GENURN_THREADS")
        return int(env) if env and env.isdigit() else None

    def ensemble_config(self, law: TransitionLaw, equilibria=None, field=None,
                        replicates: int | None = None, z0=None) -> EnsembleConfig:
        ens = self.section("ensemble")
        sim = self.section("simulation")
        try:
            return EnsembleConfig(
                law=law,
                z0=self.z0(law) if z0 is None else z0,
                replicates=replicates or ens["replicates"],
                stop=self.stop(),
                seed=self.seed,
                growth_threshold=ens["growth_threshold"],
                tail_fraction=ens["tail_fraction"],
                record_stride=sim["record_stride"],
                equilibria=equilibria,
                classify_tol=ens["classify_tol"],
                field=field,
                defect_checkpoints=tuple(float(t) for t in ens["defect_checkpoints"]),
                defect_T=float(ens["defect_T"]),
                defect_h=float(ens["defect_h"]),
                time_average_T=ens["time_average_T"],
                exclusion_tol=ens["exclusion_tol"],
                hw_decay=bool(ens["hw_decay"]),
            )
        except ValueError as exc:
            raise self.error(f"[ensemble] {exc}", "ensemble") from None


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)
