"""Command-line front end.

    genurn simulate   --config run.toml [--seed N] [--out DIR]
    genurn field      --config run.toml [--flow 0.4,0.3,0.3 50]
    genurn montecarlo --config run.toml [--threads N]
    genurn verify     --preset rps-time-average

Every command writes ``config.resolved.json`` and ``manifest.json`` (artifact
names with sha256 digests) next to its outputs.  Exit codes: 0 success,
1 verification failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import WORKERS_ENV, mass_monotonicity_study, run_ensemble
from .config import ConfigError, RunConfig, load_config
from .meanfield import hardy_weinberg_defect, integrate
from .urn import UnsupportedLawError, simulate, write_ndjson
from .verify import load_preset, preset_names, run_verify

__all__ = ["main", "build_parser"]

log = logging.getLogger("genurn")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Outputs:
    """Collects artifacts written under the output directory."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def write(self, name: str, text: str):
        (self.root / name).write_text(text)
        self.files.append(name)

    def manifest(self):
        entries = []
        for name in sorted(set(self.files)):
            data = (self.root / name).read_bytes()
            entries.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(),
                            "bytes": len(data)})
        (self.root / "manifest.json").write_text(
            json.dumps({"artifacts": entries}, indent=2, sort_keys=True) + "\n")


def _load(args) -> RunConfig:
    overrides = {}
    if args.seed is not None:
        overrides["simulation.seed"] = args.seed
    if args.out is not None:
        overrides["output.dir"] = args.out
    if args.preset and args.config:
        raise ConfigError("give either --config or --preset, not both")
    if args.preset:
        return load_preset(args.preset, overrides)
    if not args.config:
        raise ConfigError("no configuration: pass --config PATH or --preset NAME "
                          f"(presets: {', '.join(preset_names())})")
    return load_config(args.config, overrides)


def _start(cfg: RunConfig) -> _Outputs:
    out = _Outputs(Path(cfg.section("output")["dir"]))
    out.write("config.resolved.json", cfg.to_json())
    return out


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_simulate(cfg: RunConfig, args) -> int:
    law = cfg.build_law()
    z0 = cfg.z0(law)
    traj = simulate(law, z0, cfg.stop(), seed=cfg.seed,
                    record_stride=cfg.section("simulation")["record_stride"])
    outcome = "extinct" if traj.extinct else "truncated" if traj.truncated else "completed"
    summary = {"steps": traj.n_steps, "tau_max": traj.tau_max, "outcome": outcome,
               "final_state": [int(c) for c in traj.final_state], "seed": cfg.seed}
    out = _start(cfg)
    formats = cfg.section("output")["formats"]
    if "ndjson" in formats:
        buf = io.StringIO()
        write_ndjson(traj, buf, model=law.name)
        out.write("trajectory.ndjson", buf.getvalue())
    out.write("summary.json", _json(summary))
    out.manifest()
    print(f"steps={traj.n_steps} tau_max={traj.tau_max:.6g} outcome={outcome}")
    return EXIT_OK


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"--flow point {text!r} must be comma-separated numbers") from None


def cmd_field(cfg: RunConfig, args) -> int:
    law = cfg.build_law()
    try:
        field = cfg.field(law)
    except UnsupportedLawError as exc:
        raise ConfigError(f"{exc}; choose an explicit [meanfield] field") from None
    eqs = cfg.equilibria(law, field)
    entries = []
    for q in eqs:
        d = q.to_dict()
        if cfg.model_kind == "fertility" and field.dim == law.k:
            d["hw_defect"] = float(np.linalg.norm(hardy_weinberg_defect(q.x)))
        entries.append(d)
    out = _start(cfg)
    out.write("equilibria.json", _json({"field": field.provenance, "equilibria": entries}))
    for i, q in enumerate(eqs):
        print(f"[{i}] x={np.array2string(q.x, precision=4)} {q.stability}"
              + (f" lambda={q.growth:.4g}" if q.growth is not None else ""))
    mf = cfg.section("meanfield")
    x0, T = mf["flow_x0"], mf["flow_T"]
    if args.flow:
        x0, T = _parse_point(args.flow[0]), float(args.flow[1])
    if x0 is not None and T is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (field.dim,):
            raise ConfigError(f"flow start needs {field.dim} coordinates")
        path = integrate(field, x0, T, mf["h"], record_every=mf["record_every"])
        buf = io.StringIO()
        path.to_csv(buf)
        out.write("flow.csv", buf.getvalue())
    out.manifest()
    return EXIT_OK


def _progress(done: int, total: int):
    if done == total or done % max(1, total // 10) == 0:
        log.info("replicates %d/%d", done, total)


def cmd_montecarlo(cfg: RunConfig, args) -> int:
    law = cfg.build_law()
    ens = cfg.section("ensemble")
    workers = cfg.workers(args.threads)
    out = _start(cfg)
    if ens["masses"]:
        if ens["growth_threshold"] is None:
            raise cfg.error("a mass study needs [ensemble] growth_threshold", "ensemble")
        comp = cfg.z0(law)
        study = mass_monotonicity_study(law, comp, ens["masses"], ens["replicates"], cfg.seed,
                                        cfg.stop(), ens["growth_threshold"], workers,
                                        cfg.section("simulation")["record_stride"], _progress)
        out.write("mass.json", _json({"masses": study.masses, "fractions": study.fractions,
                                      "se": study.ses, "nondecreasing": study.nondecreasing}))
        for M, rep in zip(study.masses, study.reports):
            out.write(f"replicates_M{M}.csv", rep.replicates_csv())
        for M, f in zip(study.masses, study.fractions):
            print(f"M={M} growth fraction {f:.4f}")
        out.manifest()
        return EXIT_OK
    eqs = None
    field = None
    if getattr(law, "enumerable", True) and law.k > 1:
        field = cfg.field(law)
        eqs = cfg.equilibria(law, field)
    if ens["growth_threshold"] is None and not any(q.is_stable and (q.growth or 0) > 0
                                                    for q in eqs or []):
        raise cfg.error("no stable equilibrium with positive growth rate; set "
                        "[ensemble] growth_threshold", "ensemble")
    ecfg = cfg.ensemble_config(law, eqs, field if ens["defect_checkpoints"] else None)
    rep = run_ensemble(ecfg, workers, _progress)
    formats = cfg.section("output")["formats"]
    if "json" in formats:
        out.write("report.json", rep.to_json() + "\n")
    if "csv" in formats:
        out.write("replicates.csv", rep.replicates_csv())
        out.write("curves.csv", rep.curves_csv())
    out.manifest()
    se = rep.growth_se
    band = "" if se is None else f" +/- {1.96 * se:.4f}"
    print(f"replicates={rep.n} growth fraction={rep.growth_fraction:.4f}{band} "
          f"extinction fraction={rep.extinction_fraction:.4f}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    report = run_verify(cfg, cfg.workers(args.threads))
    out = _start(cfg)
    out.write("verify.json", report.to_json())
    out.manifest()
    print(report.summary())
    if not report.passed:
        names = "; ".join(c.name for c in report.failed)
        print(f"criterion {report.criterion} ({report.scenario}) failed: {names}",
              file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "simulate one trajectory and write it as NDJSON"),
    "field": (cmd_field, "find and classify equilibria of the mean-limit field"),
    "montecarlo": (cmd_montecarlo, "run a Monte Carlo ensemble"),
    "verify": (cmd_verify, "run a bundled scenario check"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genurn", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="TOML or JSON run configuration")
        p.add_argument("--preset", metavar="NAME", help="bundled scenario preset")
        p.add_argument("--seed", type=int, help="override [simulation] seed")
        p.add_argument("--out", metavar="DIR", help="override [output] dir")
        p.add_argument("--threads", type=int, metavar="N",
                       help=f"worker processes (default: ${WORKERS_ENV} or 1)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "field":
            p.add_argument("--flow", nargs=2, metavar=("X0", "T"),
                           help="also integrate from X0 (comma list) for time T")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    func = COMMANDS[args.command][0]
    try:
        cfg = _load(args)
        return func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
