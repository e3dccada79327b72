"""Monte Carlo ensembles and finite-horizon checks of the asymptotic results.

Each replicate runs on its own stream ``SeedSequence(seed, spawn_key=(i,))``
and is reduced to a ``ReplicateSummary`` inside the worker.  The ensemble
report is built from the summaries in replicate order, so it does not depend
on how many workers ran or in which order they finished.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .meanfield import EquilibriumReport, VectorField, hardy_weinberg_defect, integrate
from .urn import Stop, Trajectory, TransitionLaw, replicate_seed_sequence, simulate

__all__ = [
    "EnsembleConfig",
    "EnsembleReport",
    "ReplicateSummary",
    "TimeAverage",
    "HWDecay",
    "MassStudy",
    "run_ensemble",
    "growth_rate_estimate",
    "pseudotrajectory_defect",
    "time_average_process",
    "limit_classification",
    "exclusion_check",
    "hw_decay_check",
    "mass_monotonicity_study",
    "default_growth_threshold",
    "scale_state",
    "wald_interval",
    "default_workers",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "GENURN_THREADS"
Z_95 = 1.96


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def wald_interval(successes: int, trials: int) -> tuple[float, float | None]:
    """Binomial fraction and its Wald standard error (None for a single trial)."""
    f = successes / trials if trials else 0.0
    if trials < 2:
        return f, None
    return f, math.sqrt(f * (1 - f) / trials)


# ---------------------------------------------------------------------------
# single-trajectory statistics


def _tail_start(traj: Trajectory, tail_fraction: float) -> int:
    N = traj.n_steps
    return max(1, int(math.ceil((1.0 - tail_fraction) * N)))


def growth_rate_estimate(traj: Trajectory, tail_fraction: float = 0.2) -> float:
    """Minimum of ``|z_n|/n`` over the last ``tail_fraction`` of updates.

    Returns NaN for extinct or empty trajectories.
    """
    if traj.extinct or traj.n_steps < 1:
        return math.nan
    n0 = _tail_start(traj, tail_fraction)
    n = np.arange(n0, traj.n_steps + 1)
    return float(np.min(traj.sizes[n0:] / n))


def _tail_records(traj: Trajectory, tail_fraction: float) -> np.ndarray:
    n0 = _tail_start(traj, tail_fraction) if traj.n_steps else 0
    return np.flatnonzero(traj.steps >= n0)


def limit_classification(traj: Trajectory, equilibria: Sequence[EquilibriumReport],
                         tol: float = 0.05, tail_fraction: float = 0.2) -> int | None:
    """Index of the equilibrium that every tail-window state lies within ``tol`` of."""
    if traj.extinct or not equilibria:
        return None
    xs = traj.x[_tail_records(traj, tail_fraction)]
    for i, q in enumerate(equilibria):
        if np.all(np.linalg.norm(xs - q.x, axis=1) <= tol):
            return i
    return None


def exclusion_check(traj: Trajectory, tol: float = 0.05, tail_fraction: float = 0.2) -> bool:
    """Recurrent boundary approach.

    True when some coordinate drops below ``tol`` in each of the three equal
    segments of the tail window.
    """
    idx = _tail_records(traj, tail_fraction)
    if len(idx) < 3:
        idx = np.arange(len(traj.steps))
    low = traj.x[idx].min(axis=1) < tol
    return all(seg.any() for seg in np.array_split(low, 3))


class TimeAverage(NamedTuple):
    point: np.ndarray
    horizon: float
    complete: bool


def time_average_process(traj: Trajectory, T: float) -> TimeAverage:
    """``(1/T) int_0^T X_t dt`` for the piecewise-constant interpolated process.

    If the clock stops before ``T`` the average over ``[0, tau_max]`` is
    returned with ``complete=False``.
    """
    traj.require_full_resolution("time_average_process")
    taus = traj.taus
    horizon = min(T, float(taus[-1]))
    complete = taus[-1] >= T
    if horizon <= 0:
        return TimeAverage(traj.x[0].copy(), 0.0, complete)
    dt = np.clip(np.minimum(taus[1:], horizon) - taus[:-1], 0.0, None)
    return TimeAverage(dt @ traj.x[:-1] / horizon, horizon, bool(complete))


def pseudotrajectory_defect(traj: Trajectory, field: VectorField, T: float,
                            checkpoints: Sequence[float], h: float = 1e-2
                            ) -> list[tuple[float, float]]:
    """``sup_{0<=s<=T} ||phi_s(X_t) - X_{t+s}||`` at each checkpoint ``t``.

    ``s`` runs over the update times of the trajectory inside ``[t, t+T]``.
    Checkpoints whose window extends past the end of the trajectory are
    dropped (and logged).
    """
    traj.require_full_resolution("pseudotrajectory_defect")
    taus = traj.taus
    x = traj.x
    out = []
    for t in checkpoints:
        if t + T > taus[-1] or t < 0:
            log.debug("checkpoint t=%s beyond trajectory (tau_max=%s)", t, taus[-1])
            continue
        n0 = int(np.searchsorted(taus, t, side="right")) - 1
        n1 = int(np.searchsorted(taus, t + T, side="right"))
        path = integrate(field, x[n0], T, h)
        s = taus[n0 + 1:n1] - t
        flow = np.column_stack([np.interp(s, path.t, path.x[:, c]) for c in range(x.shape[1])])
        d = np.linalg.norm(flow - x[n0 + 1:n1], axis=1)
        out.append((float(t), float(d.max()) if len(d) else 0.0))
    return out


@dataclass
class HWDecay:
    initial: float
    head_median: float
    tail_median: float
    void: bool = False

    @property
    def decayed(self) -> bool:
        return not self.void and self.tail_median < self.head_median

    @property
    def tail_ratio(self) -> float:
        return self.tail_median / self.initial if self.initial > 0 else math.nan


def hw_decay_check(traj: Trajectory, tail_fraction: float = 0.2) -> HWDecay:
    """Hardy-Weinberg defect (Frobenius norm) at the head and tail of a genotype trajectory."""
    if traj.extinct:
        return HWDecay(math.nan, math.nan, math.nan, void=True)
    norms = np.array([np.linalg.norm(hardy_weinberg_defect(x)) for x in traj.x])
    n_head = np.flatnonzero(traj.steps <= tail_fraction * traj.n_steps)
    n_tail = _tail_records(traj, tail_fraction)
    return HWDecay(float(norms[0]), float(np.median(norms[n_head])),
                   float(np.median(norms[n_tail])))


# ---------------------------------------------------------------------------
# ensembles


def default_growth_threshold(equilibria: Sequence[EquilibriumReport]) -> float:
    """Half the smallest positive growth rate among stable equilibria."""
    rates = [q.growth for q in equilibria if q.is_stable and q.growth is not None and q.growth > 0]
    if not rates:
        raise ValueError("no stable equilibrium with positive growth; give growth_threshold")
    return min(rates) / 2.0


@dataclass
class EnsembleConfig:
    """Everything a Monte Carlo ensemble needs; analyses run when their inputs are set."""

    law: TransitionLaw
    z0: Sequence[int]
    replicates: int
    stop: Stop
    seed: int = 0
    growth_threshold: float | None = None
    tail_fraction: float = 0.2
    record_stride: int = 1
    equilibria: list[EquilibriumReport] | None = None
    classify_tol: float = 0.05
    field: VectorField | None = None
    defect_checkpoints: tuple[float, ...] = ()
    defect_T: float = 5.0
    defect_h: float = 1e-2
    time_average_T: float | None = None
    exclusion_tol: float | None = None
    hw_decay: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0 < self.tail_fraction < 1:
            raise ValueError("tail_fraction must lie in (0, 1)")
        if self.growth_threshold is None:
            if self.equilibria is None:
                raise ValueError("growth_threshold needed when no equilibria are given")
            self.growth_threshold = default_growth_threshold(self.equilibria)
        if self.growth_threshold <= 0:
            raise ValueError("growth_threshold must be positive")
        needs_full = self.time_average_T is not None or (self.field is not None and self.defect_checkpoints)
        if needs_full and self.record_stride != 1:
            raise ValueError("time averages and defects need record_stride = 1")
        self.z0 = [int(c) for c in self.z0]


@dataclass
class ReplicateSummary:
    replicate: int
    seed: int
    outcome: str
    steps: int
    final_size: int
    tau_max: float
    rate: float
    limit_id: int | None = None
    defects: list[tuple[float, float]] = field(default_factory=list)
    time_average: list[float] | None = None
    time_average_complete: bool | None = None
    excluded: bool | None = None
    hw: HWDecay | None = None

    @property
    def grew(self) -> bool:
        return self.outcome == "growth"


def summarize(cfg: EnsembleConfig, traj: Trajectory, index: int) -> ReplicateSummary:
    n = traj.n_steps
    size = int(traj.sizes[-1])
    if traj.extinct:
        outcome = "extinct"
    elif n > 0 and size / n >= cfg.growth_threshold:
        outcome = "growth"
    else:
        outcome = "stalled"
    s = ReplicateSummary(
        replicate=index,
        seed=int(replicate_seed_sequence(cfg.seed, index).generate_state(1)[0]),
        outcome=outcome,
        steps=n,
        final_size=size,
        tau_max=traj.tau_max,
        rate=growth_rate_estimate(traj, cfg.tail_fraction),
    )
    if cfg.equilibria:
        s.limit_id = limit_classification(traj, cfg.equilibria, cfg.classify_tol, cfg.tail_fraction)
    if cfg.field is not None and cfg.defect_checkpoints:
        s.defects = pseudotrajectory_defect(traj, cfg.field, cfg.defect_T,
                                            cfg.defect_checkpoints, cfg.defect_h)
    if cfg.time_average_T is not None:
        ta = time_average_process(traj, cfg.time_average_T)
        s.time_average = [float(v) for v in ta.point]
        s.time_average_complete = ta.complete
    if cfg.exclusion_tol is not None:
        s.excluded = exclusion_check(traj, cfg.exclusion_tol, cfg.tail_fraction)
    if cfg.hw_decay:
        s.hw = hw_decay_check(traj, cfg.tail_fraction)
    return s


def run_replicate(cfg: EnsembleConfig, index: int) -> ReplicateSummary:
    traj = simulate(cfg.law, cfg.z0, cfg.stop, seed=cfg.seed, replicate=index,
                    record_stride=cfg.record_stride)
    return summarize(cfg, traj, index)


_WORKER_CFG: EnsembleConfig | None = None


def _init_worker(cfg):
    global _WORKER_CFG
    _WORKER_CFG = cfg


def _work(index):
    return run_replicate(_WORKER_CFG, index)


def _map_replicates(cfg: EnsembleConfig, workers: int, progress=None):
    indices = range(cfg.replicates)
    out = []
    if workers <= 1 or cfg.replicates == 1:
        for i in indices:
            out.append(run_replicate(cfg, i))
            if progress:
                progress(len(out), cfg.replicates)
        return out
    # fork start: the config (laws may hold closures) is inherited, not pickled
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, cfg.replicates // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx,
                             initializer=_init_worker, initargs=(cfg,)) as pool:
        # map yields in replicate order whatever the completion order
        for s in pool.map(_work, indices, chunksize=chunk):
            out.append(s)
            if progress:
                progress(len(out), cfg.replicates)
    return out


@dataclass
class EnsembleReport:
    replicates: list[ReplicateSummary]
    growth_threshold: float
    equilibria: list[EquilibriumReport] | None = None
    checkpoints: tuple[float, ...] = ()

    @property
    def n(self) -> int:
        return len(self.replicates)

    @property
    def growth(self) -> list[ReplicateSummary]:
        return [r for r in self.replicates if r.grew]

    @property
    def growth_count(self) -> int:
        return len(self.growth)

    @property
    def growth_fraction(self) -> float:
        return wald_interval(self.growth_count, self.n)[0]

    @property
    def growth_se(self) -> float | None:
        return wald_interval(self.growth_count, self.n)[1]

    @property
    def extinction_fraction(self) -> float:
        return sum(r.outcome == "extinct" for r in self.replicates) / self.n

    @property
    def rates(self) -> list[float]:
        return [r.rate for r in self.growth]

    @property
    def histogram(self) -> dict[str, int]:
        """Limit classification counts over growth replicates."""
        hist: dict[str, int] = {}
        if self.equilibria:
            hist = {str(i): 0 for i in range(len(self.equilibria))}
        hist["unclassified"] = 0
        for r in self.growth:
            key = "unclassified" if r.limit_id is None else str(r.limit_id)
            hist[key] = hist.get(key, 0) + 1
        return hist

    def defect_curve(self, stat=np.median) -> list[tuple[float, float, int]]:
        """Per checkpoint: (t, statistic over growth replicates, replicates reaching t)."""
        out = []
        for t in self.checkpoints:
            vals = [d for r in self.growth for (tt, d) in r.defects if tt == t]
            out.append((t, float(stat(vals)) if vals else math.nan, len(vals)))
        return out

    @property
    def mean_time_average(self) -> np.ndarray | None:
        pts = [r.time_average for r in self.growth if r.time_average is not None]
        return np.mean(pts, axis=0) if pts else None

    def to_dict(self) -> dict:
        se = self.growth_se
        d = {
            "replicates": self.n,
            "growth_threshold": self.growth_threshold,
            "growth_count": self.growth_count,
            "growth_fraction": self.growth_fraction,
            "growth_se": se,
            "growth_ci95": None if se is None else [self.growth_fraction - Z_95 * se,
                                                   self.growth_fraction + Z_95 * se],
            "extinction_fraction": self.extinction_fraction,
            "rates": self.rates,
            "histogram": self.histogram,
        }
        if self.equilibria:
            d["equilibria"] = [q.to_dict() for q in self.equilibria]
        if self.checkpoints:
            d["defect_mean"] = [[t, v, c] for t, v, c in self.defect_curve(np.mean)]
            d["defect_median"] = [[t, v, c] for t, v, c in self.defect_curve(np.median)]
        ta = self.mean_time_average
        if ta is not None:
            d["mean_time_average"] = [float(v) for v in ta]
        hw = [r.hw for r in self.growth if r.hw is not None and not r.hw.void]
        if hw:
            d["hw_tail_ratio_median"] = float(np.median([h.tail_ratio for h in hw]))
        ex = [r.excluded for r in self.growth if r.excluded is not None]
        if ex:
            d["exclusion_fraction"] = sum(ex) / len(ex)
        return d

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)

    def replicates_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "seed", "outcome", "rate", "limit_id"])
        for r in self.replicates:
            w.writerow([r.replicate, r.seed, r.outcome, repr(r.rate),
                        "" if r.limit_id is None else r.limit_id])
        return buf.getvalue()

    def curves_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "kind", "t", "value"])
        for r in self.replicates:
            for t, d in r.defects:
                w.writerow([r.replicate, "defect", repr(t), repr(d)])
            if r.time_average is not None:
                for c, v in enumerate(r.time_average):
                    w.writerow([r.replicate, f"time_average_x{c + 1}", "", repr(v)])
        return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) else obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def run_ensemble(cfg: EnsembleConfig, workers: int | None = None,
                 progress=None) -> EnsembleReport:
    """Run ``cfg.replicates`` independent trajectories and aggregate them.

    ``progress(done, total)`` is called after each replicate, in order.
    """
    workers = default_workers() if workers is None else workers
    log.info("ensemble: %d replicates of %s on %d worker(s)", cfg.replicates,
             cfg.law.name, workers)
    summaries = _map_replicates(cfg, workers, progress)
    return EnsembleReport(summaries, cfg.growth_threshold, cfg.equilibria,
                          tuple(cfg.defect_checkpoints) if cfg.field is not None else ())


# ---------------------------------------------------------------------------
# initial mass


def scale_state(composition, total: int) -> list[int]:
    """Integer state with ``|z| = total`` closest to ``total * composition``."""
    c = np.asarray(composition, dtype=float)
    c = c / c.sum()
    raw = c * total
    z = np.floor(raw).astype(np.int64)
    short = total - int(z.sum())
    order = np.argsort(-(raw - z), kind="stable")
    z[order[:short]] += 1
    return z.tolist()


@dataclass
class MassStudy:
    masses: list[int]
    fractions: list[float]
    ses: list[float | None]
    reports: list[EnsembleReport] = field(repr=False, default_factory=list)

    @property
    def nondecreasing(self) -> bool:
        """Consecutive fractions never drop by more than two combined standard errors."""
        for i in range(len(self.masses) - 1):
            a, b = self.ses[i] or 0.0, self.ses[i + 1] or 0.0
            if self.fractions[i + 1] < self.fractions[i] - 2.0 * math.hypot(a, b):
                return False
        return True


def mass_monotonicity_study(law: TransitionLaw, composition, masses: Sequence[int],
                            replicates: int, seed: int, stop: Stop,
                            growth_threshold: float, workers: int | None = None,
                            record_stride: int = 100, progress=None) -> MassStudy:
    """Growth fraction as a function of the initial population size."""
    if list(masses) != sorted(masses):
        raise ValueError("masses must be increasing")
    fr, ses, reps = [], [], []
    for M in masses:
        cfg = EnsembleConfig(law, scale_state(composition, M), replicates, stop, seed=seed,
                             growth_threshold=growth_threshold, record_stride=record_stride)
        rep = run_ensemble(cfg, workers, progress)
        reps.append(rep)
        fr.append(rep.growth_fraction)
        ses.append(rep.growth_se)
    return MassStudy(list(masses), fr, ses, reps)
