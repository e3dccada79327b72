"""Noise decomposition of a simulated path and checks of the standing assumptions on a law."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .urn import Trajectory, TransitionLaw, UnsupportedLawError, normalize

__all__ = [
    "NoiseReport",
    "noise_decomposition",
    "AssumptionReport",
    "validate_assumptions",
    "LIPSCHITZ_SCALES",
    "A2_SIZES",
]

LIPSCHITZ_SCALES = (1e-1, 1e-2, 1e-3, 1e-4)
A2_SIZES = (20, 200, 2000)
# growth of the zoomed difference quotient that marks a discontinuity
LIPSCHITZ_BLOWUP = 10.0


def _mean_drift(W, p, x) -> np.ndarray:
    """``sum_w p_w (w - x alpha(w))``."""
    alpha = W.sum(axis=1)
    return p @ (W - np.outer(alpha, x))


@dataclass
class NoiseReport:
    """Per-step martingale noise ``U`` and drift bias ``b`` along a trajectory.

    Row ``i`` belongs to the update ``steps[i] -> steps[i] + 1``.
    """

    steps: np.ndarray
    sizes: np.ndarray
    U: np.ndarray
    b: np.ndarray
    m: int

    @property
    def max_noise(self) -> float:
        return float(np.linalg.norm(self.U, axis=1).max()) if len(self.U) else 0.0

    @property
    def bias_constant(self) -> float:
        """Fitted ``K = max |z_n| ||b_{n+1}||``."""
        if not len(self.b):
            return 0.0
        return float((self.sizes * np.linalg.norm(self.b, axis=1)).max())

    @property
    def noise_bound(self) -> int:
        return 4 * self.m

    @property
    def within_bound(self) -> bool:
        return self.max_noise <= self.noise_bound + 1e-12


def noise_decomposition(traj: Trajectory, law: TransitionLaw) -> NoiseReport:
    """Split each increment of ``x`` into conditional mean and noise.

    ``U = (x' - x - E[x' - x | z]) |z|`` uses the exact kernel of the sampler
    and ``b = |z| E[x' - x | z] - g(x)`` compares it with the mean-limit field.
    Only updates from states with ``|z| > m`` are analysed, where no single
    jump can empty the urn.
    """
    traj.require_full_resolution("noise_decomposition")
    Z = traj.z
    X = traj.x
    rows, sizes, Us, bs = [], [], [], []
    for n in range(len(Z) - 1):
        z = Z[n]
        total = int(z.sum())
        if total <= law.m:
            continue
        x = X[n]
        W, p = law.kernel(z)
        mask = p > 0
        W, p = W[mask], p[mask]
        nxt = (z[None, :] + W).astype(float)
        nxt /= nxt.sum(axis=1, keepdims=True)
        expected = p @ (nxt - x) if len(p) else np.zeros_like(x)
        Wl, pl = law.mean_support(x)
        g = _mean_drift(Wl, pl, x)
        Us.append((X[n + 1] - x - expected) * total)
        bs.append(total * expected - g)
        rows.append(int(traj.steps[n]))
        sizes.append(total)
    k = traj.k
    return NoiseReport(np.array(rows, dtype=np.int64), np.array(sizes, dtype=float),
                       np.array(Us).reshape(-1, k), np.array(bs).reshape(-1, k), law.m)


# ---------------------------------------------------------------------------


@dataclass
class AssumptionReport:
    m: int
    jump_violations: list = field(default_factory=list)
    lipschitz_quotients: dict = field(default_factory=dict)
    lipschitz_estimate: float = 0.0
    lipschitz_flagged: bool = False
    lipschitz_witness: tuple | None = None
    a2_fits: dict = field(default_factory=dict)
    a2_constant: float | None = None
    a2_violations: list = field(default_factory=list)
    a2_skipped: str | None = None

    @property
    def jump_ok(self) -> bool:
        return not self.jump_violations

    @property
    def lipschitz_ok(self) -> bool:
        return math.isfinite(self.lipschitz_estimate) and not self.lipschitz_flagged

    @property
    def a2_ok(self) -> bool:
        return not self.a2_violations

    @property
    def ok(self) -> bool:
        return self.jump_ok and self.lipschitz_ok and self.a2_ok

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "jump_ok": self.jump_ok,
            "jump_violations": [[list(map(float, x)), list(map(int, w))]
                                for x, w in self.jump_violations],
            "lipschitz_quotients": {repr(k): v for k, v in self.lipschitz_quotients.items()},
            "lipschitz_estimate": self.lipschitz_estimate,
            "lipschitz_ok": self.lipschitz_ok,
            "a2_fits": {str(k): v for k, v in self.a2_fits.items()},
            "a2_constant": self.a2_constant,
            "a2_ok": self.a2_ok,
            "a2_violations": [[list(map(int, z)), list(map(int, w)), d]
                              for z, w, d in self.a2_violations],
            "a2_skipped": self.a2_skipped,
        }


def _support_dict(W, p) -> dict:
    return {tuple(int(c) for c in w): float(q) for w, q in zip(W, p)}


def _rate_gap(law, x, y) -> float:
    px = _support_dict(*law.mean_support(x))
    py = _support_dict(*law.mean_support(y))
    return max(abs(px.get(w, 0.0) - py.get(w, 0.0)) for w in set(px) | set(py))


def _toward(x, target, dist):
    gap = np.linalg.norm(target - x)
    if gap == 0:
        return x
    return x + min(1.0, dist / gap) * (target - x)


def validate_assumptions(law: TransitionLaw, sample_pairs: int = 200, seed: int = 0
                         ) -> AssumptionReport:
    """Check the jump bound, Lipschitz rates and the finite-size kernel gap.

    Lipschitz: for ``sample_pairs`` random pairs at distance 0.1 the pair
    with the largest difference quotient is bisected repeatedly, keeping the
    half with the larger quotient.  A Lipschitz rate keeps the quotient
    bounded; a jump makes it grow like ``1/distance``, which is flagged.
    """
    rng = np.random.default_rng(seed)
    rep = AssumptionReport(m=law.m, a2_constant=law.a2_constant)

    points = [law.random_composition(rng) for _ in range(sample_pairs)]
    for x in points:
        W, p = law.mean_support(x)
        for w, q in zip(W, p):
            if q > 0 and np.abs(w).sum() > law.m:
                rep.jump_violations.append((x, w))

    best, best_q = None, -1.0
    coarse = LIPSCHITZ_SCALES[0]
    for x in points:
        y = _toward(x, law.random_composition(rng), coarse)
        d = np.linalg.norm(y - x)
        if d == 0:
            continue
        q = _rate_gap(law, x, y) / d
        if q > best_q:
            best, best_q = (x, y), q
    quotients = {}
    if best is not None:
        a, b = best
        scale_iter = iter(LIPSCHITZ_SCALES)
        target = next(scale_iter)
        peak = 0.0
        while True:
            d = np.linalg.norm(b - a)
            q = _rate_gap(law, a, b) / d
            peak = max(peak, q)
            if d <= target * (1 + 1e-9):
                quotients[target] = q
                target = next(scale_iter, None)
                if target is None:
                    break
            mid = (a + b) / 2
            qa = _rate_gap(law, a, mid)
            qb = _rate_gap(law, mid, b)
            a, b = (a, mid) if qa >= qb else (mid, b)
        rep.lipschitz_estimate = peak
        first = quotients[LIPSCHITZ_SCALES[0]]
        last = quotients[LIPSCHITZ_SCALES[-1]]
        rep.lipschitz_flagged = last > LIPSCHITZ_BLOWUP * max(first, 1e-300) and last > 0
        if rep.lipschitz_flagged:
            rep.lipschitz_witness = (a, b)
    rep.lipschitz_quotients = quotients

    try:
        for size in A2_SIZES:
            worst = 0.0
            for _ in range(max(1, sample_pairs // 10)):
                z = np.asarray(law.random_state(size, rng), dtype=np.int64)
                total = int(z.sum())
                if total == 0:
                    continue
                fin = _support_dict(*law.kernel(z))
                lim = _support_dict(*law.mean_support(normalize(z)))
                for w in set(fin) | set(lim):
                    gap = abs(fin.get(w, 0.0) - lim.get(w, 0.0))
                    worst = max(worst, gap * total)
                    if rep.a2_constant is not None and gap * total > rep.a2_constant + 1e-9:
                        rep.a2_violations.append((z, w, gap))
            rep.a2_fits[size] = worst
    except UnsupportedLawError as exc:
        rep.a2_skipped = str(exc)
    return rep
