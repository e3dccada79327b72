"""Generalized urn processes: state, transition laws, clock and trajectories.

A process lives on nonnegative integer count vectors ``z``.  Each update
adds the increment ``w`` with a probability that, for large populations,
depends only on the composition ``x = z/|z|``.  Time is measured on the
``tau`` clock, which advances by ``1/|z|`` per update so that the
composition tracks the mean-limit ODE in ``tau`` units.
"""
from __future__ import annotations

import json
import math
from array import array
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "UnsupportedLawError",
    "OutOfRangeError",
    "Uniforms",
    "replicate_seed_sequence",
    "make_uniforms",
    "alpha_and_l1",
    "normalize",
    "TransitionLaw",
    "RateLaw",
    "Stop",
    "Trajectory",
    "step",
    "simulate",
    "interpolate",
    "write_ndjson",
    "read_ndjson",
]


class UnsupportedLawError(ValueError):
    """The law cannot enumerate the distribution an operation needs."""


class OutOfRangeError(ValueError):
    """A time or index lies outside the simulated trajectory."""


# ---------------------------------------------------------------------------
# randomness


class Uniforms:
    """Callable stream of U(0, 1) floats drawn in blocks from a numpy Generator.

    Samplers call the stream once per uniform they need; pulling blocks
    keeps the per-draw cost at a list lookup.
    """

    __slots__ = ("generator", "_block", "_buf", "_pos")

    def __init__(self, generator: np.random.Generator, block: int = 4096):
        self.generator = generator
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    def __call__(self) -> float:
        pos = self._pos
        if pos == len(self._buf):
            self._buf = self.generator.random(self._block).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]


def replicate_seed_sequence(seed: int, replicate: int | None = None) -> np.random.SeedSequence:
    """Split function for per-replicate streams.

    Replicate ``i`` of root seed ``s`` uses ``SeedSequence(s, spawn_key=(i,))``,
    which is what ``SeedSequence(s).spawn(n)[i]`` produces.  Streams therefore
    depend only on ``(s, i)`` and never on execution order.
    """
    if replicate is None:
        return np.random.SeedSequence(seed)
    return np.random.SeedSequence(seed, spawn_key=(int(replicate),))


def make_uniforms(seed: int, replicate: int | None = None) -> Uniforms:
    return Uniforms(np.random.Generator(np.random.PCG64(replicate_seed_sequence(seed, replicate))))


# ---------------------------------------------------------------------------
# elementary maps


def alpha_and_l1(w: Sequence[int]) -> tuple[int, int]:
    """Return ``(alpha(w), |w|)``: the signed and the absolute coordinate sums."""
    return int(sum(w)), int(sum(abs(int(c)) for c in w))


def normalize(z) -> np.ndarray:
    """Composition ``z/|z|``; the all-zero null point when ``z = 0``."""
    z = np.asarray(z, dtype=float)
    total = z.sum()
    if total == 0:
        return np.zeros_like(z)
    return z / total


# ---------------------------------------------------------------------------
# transition laws


class TransitionLaw:
    """Base class for urn transition laws.

    Subclasses provide

    * ``mean_support(x)`` -> ``(W, p)``: the nonzero increments (rows of the
      integer array ``W``) and their mean-limit probabilities ``p_w(x)``.  The
      zero increment is never listed; ``p_0 = 1 - sum(p)``.
    * ``kernel(z)`` -> ``(W, p)``: the exact finite-population distribution
      ``Pi(z, z + w)`` of the sampler, same convention.  Optional.
    * ``sample(z, u)``: draw the next state from the list ``z`` using the
      uniform stream ``u``.  May update ``z`` in place; returns the new state.

    ``m`` is the jump bound (|w| <= m for every increment) and ``a2_constant``
    the documented bound ``|p_w(z/|z|) - Pi(z, z+w)| <= a/|z|``.
    """

    name = "law"
    enumerable = True

    def __init__(self, k: int, m: int, a2_constant: float | None = None):
        if k < 1 or m < 1:
            raise ValueError("dimension and jump bound must be positive")
        self.k = int(k)
        self.m = int(m)
        self.a2_constant = a2_constant

    def mean_support(self, x) -> tuple[np.ndarray, np.ndarray]:
        raise UnsupportedLawError(f"{self.name}: mean-limit support not enumerable")

    def kernel(self, z) -> tuple[np.ndarray, np.ndarray]:
        raise UnsupportedLawError(f"{self.name}: finite-population kernel not enumerable")

    def sample(self, z: list[int], u: Callable[[], float]) -> list[int]:
        raise NotImplementedError

    # coordinates in which nondegeneracy and equilibria are judged; identity by default
    reduction: np.ndarray | None = None

    def random_composition(self, rng: np.random.Generator) -> np.ndarray:
        return rng.dirichlet(np.ones(self.k))

    def random_state(self, total: int, rng: np.random.Generator) -> list[int]:
        return rng.multinomial(total, np.full(self.k, 1.0 / self.k)).tolist()

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} k={self.k} m={self.m}>"


class RateLaw(TransitionLaw):
    """Law given directly by its mean-limit rates ``p_w(x)``.

    Parameters
    ----------
    increments : sequence of integer k-tuples
        The nonzero increments ``w``.
    rates : callable
        ``rates(x)`` returns one probability per increment.  ``x`` is a plain
        list of floats (the composition).
    m : int, optional
        Jump bound; defaults to the largest ``|w|``.

    The sampler draws ``w`` with probability ``p_w(z/|z|)`` and keeps ``z``
    otherwise.  A draw that would make a coordinate negative is replaced by
    the zero increment, so ``Pi(z, z+w) = p_w(x)`` for feasible ``w`` and 0
    for infeasible ones.
    """

    def __init__(self, increments, rates: Callable, *, m: int | None = None,
                 name: str = "rates", a2_constant: float | None = None):
        W = np.array(increments, dtype=np.int64)
        if W.ndim != 2 or len(W) == 0:
            raise ValueError("increments must be a nonempty list of k-tuples")
        if np.any(np.all(W == 0, axis=1)):
            raise ValueError("the zero increment is implicit and must not be listed")
        l1 = np.abs(W).sum(axis=1)
        if m is None:
            m = int(l1.max())
        if np.any(l1 > m):
            raise ValueError(f"increment exceeds jump bound m={m}")
        super().__init__(W.shape[1], m, a2_constant)
        self.name = name
        self.W = W
        self.W.setflags(write=False)
        self._rates = rates
        self._wlist = [tuple(int(c) for c in w) for w in W]

    def mean_support(self, x):
        p = np.asarray(self._rates(list(map(float, x))), dtype=float)
        if p.shape != (len(self.W),):
            raise ValueError("rates(x) must return one value per increment")
        return self.W, p

    def kernel(self, z):
        z = np.asarray(z, dtype=np.int64)
        total = z.sum()
        if total == 0:
            return self.W, np.zeros(len(self.W))
        _, p = self.mean_support(z / total)
        feasible = np.all(z[None, :] + self.W >= 0, axis=1)
        return self.W, np.where(feasible, p, 0.0)

    def sample(self, z, u):
        total = sum(z)
        x = [c / total for c in z]
        r = u()
        acc = 0.0
        for w, p in zip(self._wlist, self._rates(x)):
            acc += p
            if r < acc:
                new = [a + b for a, b in zip(z, w)]
                if min(new) < 0:
                    return z
                return new
        return z


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Stop:
    """Stop rule for ``simulate``.

    Runs until ``max_steps`` updates, until the clock reaches ``max_clock``,
    or until extinction (when ``on_extinction``), whichever comes first.
    ``hard_cap`` bounds the number of updates when only a clock target is
    given; hitting it sets the trajectory's ``truncated`` flag.
    """

    max_steps: int | None = None
    max_clock: float | None = None
    on_extinction: bool = True
    hard_cap: int = 50_000_000

    def __post_init__(self):
        if self.max_steps is None and self.max_clock is None and not self.on_extinction:
            raise ValueError("stop rule can never trigger")


@dataclass
class Trajectory:
    """Recorded path of an urn process.

    ``sizes`` and ``taus`` hold ``|z_n|`` and ``tau_n`` for every update
    ``n = 0..N``.  Full states are kept for the recorded steps ``steps``
    (every ``stride``-th update plus the last one) in ``z``.
    """

    k: int
    steps: np.ndarray
    z: np.ndarray
    sizes: np.ndarray
    taus: np.ndarray
    seed: int | None = None
    replicate: int | None = None
    stride: int = 1
    extinct: bool = False
    truncated: bool = False
    model: str = ""
    m: int = 0
    _x: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_steps(self) -> int:
        return len(self.sizes) - 1

    @property
    def x(self) -> np.ndarray:
        """Compositions at the recorded steps (null rows where extinct)."""
        if self._x is None:
            tot = self.z.sum(axis=1, keepdims=True).astype(float)
            with np.errstate(invalid="ignore", divide="ignore"):
                x = np.where(tot > 0, self.z / np.where(tot > 0, tot, 1.0), 0.0)
            self._x = x
        return self._x

    @property
    def tau(self) -> np.ndarray:
        """Clock values at the recorded steps."""
        return self.taus[self.steps]

    @property
    def tau_max(self) -> float:
        return float(self.taus[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.z[-1]

    def require_full_resolution(self, what: str):
        if self.stride != 1:
            raise ValueError(f"{what} needs a trajectory recorded with stride 1")


def step(law: TransitionLaw, z, tau: float, u: Callable[[], float]):
    """One update of the chain and of the clock.

    Returns ``(z', tau')`` with ``tau' = tau + 1/|z|`` (or ``tau + 1`` from the
    absorbing null state).
    """
    z = [int(c) for c in z]
    total = sum(z)
    if total == 0:
        return z, tau + 1.0
    return law.sample(z, u), tau + 1.0 / total


def simulate(law: TransitionLaw, z0, stop: Stop | None = None, seed: int = 0,
             record_stride: int = 1, replicate: int | None = None,
             uniforms: Uniforms | None = None) -> Trajectory:
    """Run the chain from ``z0`` until the stop rule fires.

    The run is a deterministic function of ``(law, z0, stop, seed, replicate)``.
    """
    if stop is None:
        stop = Stop(max_steps=10_000)
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    z = [int(c) for c in z0]
    if len(z) != law.k:
        raise ValueError(f"initial state has {len(z)} coordinates, law expects {law.k}")
    if min(z) < 0:
        raise ValueError("initial state has a negative coordinate")
    u = uniforms if uniforms is not None else make_uniforms(seed, replicate)
    sample = law.sample
    max_steps = stop.max_steps if stop.max_steps is not None else stop.hard_cap
    max_steps = min(max_steps, stop.hard_cap)
    max_clock = stop.max_clock if stop.max_clock is not None else math.inf
    on_ext = stop.on_extinction

    size = sum(z)
    tau = 0.0
    sizes = array("q", [size])
    taus = array("d", [0.0])
    rec_n = array("q", [0])
    rec_z = array("q", z)
    n = 0
    extinct = size == 0
    truncated = False
    while True:
        if size == 0 and on_ext:
            break
        if tau >= max_clock:
            break
        if n >= max_steps:
            if stop.max_steps is None or stop.max_steps > stop.hard_cap:
                truncated = True
            break
        if size:
            z = sample(z, u)
            tau += 1.0 / size
            size = sum(z)
        else:
            tau += 1.0
        n += 1
        sizes.append(size)
        taus.append(tau)
        if n % record_stride == 0:
            rec_n.append(n)
            rec_z.extend(z)
    extinct = size == 0
    if rec_n[-1] != n:
        rec_n.append(n)
        rec_z.extend(z)
    return Trajectory(
        k=law.k,
        steps=np.frombuffer(rec_n, dtype=np.int64).copy(),
        z=np.frombuffer(rec_z, dtype=np.int64).reshape(-1, law.k).copy(),
        sizes=np.frombuffer(sizes, dtype=np.int64).copy(),
        taus=np.frombuffer(taus, dtype=np.float64).copy(),
        seed=seed,
        replicate=replicate,
        stride=record_stride,
        extinct=extinct,
        truncated=truncated,
        model=getattr(law, "name", ""),
        m=law.m,
    )


def interpolate(traj: Trajectory, t: float) -> np.ndarray:
    """Continuous-time process ``X_t = x_n`` for ``tau_n <= t < tau_{n+1}``.

    With a strided trajectory the most recent recorded state is returned.
    """
    if t < 0 or t > traj.tau_max:
        raise OutOfRangeError(f"t={t} outside [0, {traj.tau_max}]")
    rec_tau = traj.tau
    i = int(np.searchsorted(rec_tau, t, side="right")) - 1
    return traj.x[i].copy()


# ---------------------------------------------------------------------------
# serialization


def write_ndjson(traj: Trajectory, fh, model: str | None = None):
    """Write a header line then one record per recorded step."""
    header = {"k": traj.k, "m": traj.m, "seed": traj.seed,
              "model": model if model is not None else traj.model}
    fh.write(json.dumps(header) + "\n")
    x = traj.x
    for i, n in enumerate(traj.steps):
        rec = {"n": int(n), "tau": float(traj.taus[n]),
               "z": [int(c) for c in traj.z[i]], "x": [float(c) for c in x[i]]}
        fh.write(json.dumps(rec) + "\n")


def read_ndjson(fh) -> tuple[dict, list[dict]]:
    lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise ValueError("empty trajectory file")
    header = json.loads(lines[0])
    return header, [json.loads(ln) for ln in lines[1:]]
