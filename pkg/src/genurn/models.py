"""Concrete urn models: replicator processes and fertility-selection processes.

Both models are pair-interaction laws.  Every update picks an ordered pair
(an interaction *channel*), and the channel alone fixes the distribution of
the increment.  Only the channel weights depend on the state:

* mean limit: products of frequencies, ``x^a x^b``;
* finite population: the exact draw probabilities of the sampler.

Both the mean-limit support and the exact kernel are therefore ``P @ weights``
for one precomputed matrix ``P``.  The mechanistic samplers do not use that
matrix.  They follow the update rules literally, so the two routes can be
checked against each other.
"""
from __future__ import annotations

import bisect
import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .urn import RateLaw, TransitionLaw, UnsupportedLawError

__all__ = [
    "IntLaw",
    "ReplicatorSpec",
    "FertilitySpec",
    "MutationMatrix",
    "ReplicatorLaw",
    "FertilityLaw",
    "replicator_law",
    "fertility_law",
    "mutation_fertility_law",
    "replicator_mean_matrix",
    "genotypes",
    "genotype_reduction",
    "polya_law",
    "pure_death_law",
    "birth_death_law",
]

MAX_ENUM_K = 6
MAX_ENUM_JUMP = 8


# ---------------------------------------------------------------------------
# integer laws


@dataclass(frozen=True)
class IntLaw:
    """Finitely supported law on the integers.

    Descriptor grammar (``IntLaw.parse``)::

        const C            point mass at C
        uniform A B        uniform on {A, ..., B}
        table v:p, v:p     explicit table; probabilities must sum to 1
    """

    values: tuple[int, ...]
    probs: tuple[float, ...]
    _cdf: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be nonempty and of equal length")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")
        merged: dict[int, float] = {}
        for v, p in zip(self.values, self.probs):
            if p > 0:
                merged[int(v)] = merged.get(int(v), 0.0) + float(p)
        vals = tuple(sorted(merged))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", tuple(merged[v] for v in vals))
        object.__setattr__(self, "_cdf", tuple(itertools.accumulate(self.probs)))

    @classmethod
    def const(cls, c: int) -> "IntLaw":
        return cls((int(c),), (1.0,))

    @classmethod
    def uniform(cls, a: int, b: int) -> "IntLaw":
        if b < a:
            raise ValueError("uniform law needs a <= b")
        n = b - a + 1
        return cls(tuple(range(a, b + 1)), (1.0 / n,) * n)

    @classmethod
    def table(cls, table: dict) -> "IntLaw":
        return cls(tuple(int(v) for v in table), tuple(float(p) for p in table.values()))

    @classmethod
    def two_point(cls, mean: float) -> "IntLaw":
        """Law on ``{floor(mean), floor(mean)+1}`` with the given mean."""
        lo = math.floor(mean)
        frac = mean - lo
        if frac < 1e-15:
            return cls.const(lo)
        return cls((lo, lo + 1), (1.0 - frac, frac))

    @classmethod
    def parse(cls, text) -> "IntLaw":
        if isinstance(text, IntLaw):
            return text
        if isinstance(text, (int, np.integer)):
            return cls.const(int(text))
        s = str(text).strip()
        head, _, rest = s.partition(" ")
        rest = rest.strip()
        try:
            if head == "const":
                return cls.const(int(rest))
            if head == "uniform":
                a, b = rest.split()
                return cls.uniform(int(a), int(b))
            if head == "table":
                table = {}
                for item in re.split(r"[,\s]+", rest):
                    if not item:
                        continue
                    v, p = item.split(":")
                    table[int(v)] = table.get(int(v), 0.0) + float(p)
                return cls.table(table)
        except ValueError as exc:
            raise ValueError(f"bad law descriptor {s!r}: {exc}") from None
        raise ValueError(f"bad law descriptor {s!r}: expected const/uniform/table")

    def describe(self) -> str:
        if len(self.values) == 1:
            return f"const {self.values[0]}"
        return "table " + ", ".join(f"{v}:{p!r}" for v, p in zip(self.values, self.probs))

    @property
    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    @property
    def low(self) -> int:
        return self.values[0]

    @property
    def high(self) -> int:
        return self.values[-1]

    def pmf(self, v: int) -> float:
        try:
            return self.probs[self.values.index(v)]
        except ValueError:
            return 0.0

    def draw(self, u) -> int:
        """Inverse-CDF draw; a point mass consumes no randomness."""
        if len(self.values) == 1:
            return self.values[0]
        i = bisect.bisect_right(self._cdf, u())
        return self.values[min(i, len(self.values) - 1)]

    def items(self):
        return zip(self.values, self.probs)


def _law_grid(entries, shape) -> tuple:
    arr = np.empty(shape, dtype=object)
    src = np.asarray(entries, dtype=object)
    if src.shape != shape:
        raise ValueError(f"expected entry laws of shape {shape}, got {src.shape}")
    for idx in np.ndindex(shape):
        arr[idx] = IntLaw.parse(src[idx])
    return tuple(map(tuple, arr)) if len(shape) == 2 else tuple(arr)


# ---------------------------------------------------------------------------
# replicator processes


@dataclass(frozen=True)
class ReplicatorSpec:
    """Random payoff laws of a k-strategy replicator process.

    ``R[i][j]`` is the number of strategy-i offspring of the first chosen
    individual (strategy i) when the second is a distinct strategy-j
    individual, and ``Rt[j][i]`` that of the second individual.  ``r[i]`` is
    used when the same individual is drawn twice.  Values lie in
    ``{-1, ..., m_r}``; -1 removes the individual.
    """

    R: tuple
    Rt: tuple
    r: tuple

    def __post_init__(self):
        k = len(self.R)
        object.__setattr__(self, "R", _law_grid(self.R, (k, k)))
        object.__setattr__(self, "Rt", _law_grid(self.Rt, (k, k)))
        object.__setattr__(self, "r", _law_grid(self.r, (k,)))
        for law in self._all_laws():
            if law.low < -1:
                raise ValueError("replicator entries must be >= -1")

    @classmethod
    def build(cls, R, Rt=None, r=None) -> "ReplicatorSpec":
        k = len(R)
        if Rt is None:
            Rt = [["const 0"] * k for _ in range(k)]
        if r is None:
            r = ["const 0"] * k
        return cls(R, Rt, r)

    @classmethod
    def deterministic(cls, R, Rt=None, r=None) -> "ReplicatorSpec":
        as_const = lambda M: None if M is None else [[IntLaw.const(int(v)) for v in row] for row in M]
        return cls.build(as_const(R), as_const(Rt),
                         None if r is None else [IntLaw.const(int(v)) for v in r])

    @property
    def k(self) -> int:
        return len(self.R)

    def _all_laws(self):
        yield from (law for row in self.R for law in row)
        yield from (law for row in self.Rt for law in row)
        yield from self.r

    @property
    def max_progeny(self) -> int:
        return max(1, max(law.high for law in self._all_laws()))

    @property
    def jump_bound(self) -> int:
        return 2 * max(self.max_progeny, 1)

    def mean_matrix(self) -> np.ndarray:
        k = self.k
        return np.array([[self.R[i][j].mean + self.Rt[i][j].mean for j in range(k)]
                         for i in range(k)])

    def offspring_matrix(self) -> np.ndarray:
        """Expected total offspring of an interaction between strategies i and j."""
        k = self.k
        return np.array([[self.R[i][j].mean + self.Rt[j][i].mean for j in range(k)]
                         for i in range(k)])


def replicator_mean_matrix(spec: ReplicatorSpec) -> np.ndarray:
    """Mean payoff matrix ``A = E[R + Rt]``."""
    return spec.mean_matrix()


def _accumulate(dist: dict, w: tuple, p: float):
    if p > 0:
        dist[w] = dist.get(w, 0.0) + p


class _ChannelLaw(TransitionLaw):
    """Shared machinery for pair-interaction laws (see module docstring)."""

    def _set_channels(self, channel_dists: list[dict]):
        support = sorted({w for d in channel_dists for w in d if any(w)})
        index = {w: i for i, w in enumerate(support)}
        P = np.zeros((len(support), len(channel_dists)))
        for c, d in enumerate(channel_dists):
            for w, p in d.items():
                if any(w):
                    P[index[w], c] += p
        self.W = np.array(support, dtype=np.int64).reshape(-1, self.k)
        self.P = P
        self.W.setflags(write=False)
        self.P.setflags(write=False)

    def channel_weights_limit(self, x) -> np.ndarray:
        raise NotImplementedError

    def channel_weights_finite(self, z) -> np.ndarray:
        raise NotImplementedError

    def mean_support(self, x):
        return self.W, self.P @ self.channel_weights_limit(np.asarray(x, dtype=float))


class ReplicatorLaw(_ChannelLaw):
    """Replicator process with exact mechanistic sampler.

    Channels: ordered strategy pairs ``(i, j)`` of distinct individuals,
    followed by the k same-individual events.  The same-individual event has
    probability ``sum_i z^i/|z|^2`` and vanishes in the mean limit.
    """

    def __init__(self, spec: ReplicatorSpec, name: str = "replicator"):
        k = spec.k
        super().__init__(k, spec.jump_bound, a2_constant=1.0)
        self.name = name
        self.spec = spec
        if k > MAX_ENUM_K or spec.max_progeny > MAX_ENUM_JUMP:
            self.enumerable = False
            self.W = self.P = None
        else:
            self._set_channels(self._channel_distributions())
        self._R = spec.R
        self._Rt = spec.Rt
        self._r = spec.r

    def _channel_distributions(self):
        k, spec = self.k, self.spec
        dists = []
        for i in range(k):
            for j in range(k):
                d: dict = {}
                for a, pa in spec.R[i][j].items():
                    for b, pb in spec.Rt[j][i].items():
                        w = [0] * k
                        w[i] += a
                        w[j] += b
                        _accumulate(d, tuple(w), pa * pb)
                dists.append(d)
        for i in range(k):
            d = {}
            for a, pa in spec.r[i].items():
                w = [0] * k
                w[i] = a
                _accumulate(d, tuple(w), pa)
            dists.append(d)
        return dists

    def channel_weights_limit(self, x):
        return np.concatenate([np.outer(x, x).ravel(), np.zeros(self.k)])

    def channel_weights_finite(self, z):
        z = np.asarray(z, dtype=float)
        n2 = z.sum() ** 2
        pair = np.outer(z, z) - np.diag(z)
        return np.concatenate([pair.ravel(), z]) / n2

    def mean_support(self, x):
        if not self.enumerable:
            raise UnsupportedLawError("replicator spec exceeds the enumeration cap")
        return super().mean_support(x)

    def kernel(self, z):
        if not self.enumerable:
            raise UnsupportedLawError("replicator spec exceeds the enumeration cap")
        z = np.asarray(z, dtype=np.int64)
        if z.sum() == 0:
            return self.W, np.zeros(len(self.W))
        return self.W, self.P @ self.channel_weights_finite(z)

    def sample(self, z, u):
        n = sum(z)
        a = int(u() * n)
        b = int(u() * n)
        i = _locate(z, a)
        if a == b:
            d = self._r[i].draw(u)
            z[i] = max(z[i] + d, 0)
            return z
        j = _locate(z, b)
        di = self._R[i][j].draw(u)
        dj = self._Rt[j][i].draw(u)
        z[i] = max(z[i] + di, 0)
        # a removal with nobody left of that strategy is skipped
        z[j] = max(z[j] + dj, 0)
        return z


def _locate(counts, idx):
    for i, c in enumerate(counts):
        if idx < c:
            return i
        idx -= c
    raise IndexError("individual index beyond population")


def replicator_law(spec: ReplicatorSpec, name: str = "replicator") -> ReplicatorLaw:
    return ReplicatorLaw(spec, name=name)


# ---------------------------------------------------------------------------
# fertility-selection processes


def genotypes(k: int) -> list[tuple[int, int]]:
    """Unordered genotypes ``(i, j)`` with ``i <= j`` in a fixed order."""
    return [(i, j) for i in range(k) for j in range(i, k)]


def genotype_reduction(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear maps between the k*k genotype coordinates and genotype proportions.

    Returns ``(lift, reduce)``.  ``lift`` (k^2 x G) sends genotype proportions
    ``f`` to the symmetric matrix coordinates ``x`` (``x^{ij} = f_ij/2`` off the
    diagonal).  ``reduce`` (G x k^2) is its left inverse: ``f_ij = x^{ij} + x^{ji}``.
    Both preserve coordinate sums.
    """
    gts = genotypes(k)
    lift = np.zeros((k * k, len(gts)))
    red = np.zeros((len(gts), k * k))
    for g, (i, j) in enumerate(gts):
        if i == j:
            lift[i * k + i, g] = 1.0
            red[g, i * k + i] = 1.0
        else:
            lift[i * k + j, g] = lift[j * k + i, g] = 0.5
            red[g, i * k + j] = red[g, j * k + i] = 1.0
    return lift, red


def _genotype_vector(k: int, i: int, j: int) -> np.ndarray:
    """Contribution of one A_iA_j individual to the k*k coordinates."""
    v = np.zeros(k * k, dtype=np.int64)
    v[i * k + j] += 1
    v[j * k + i] += 1
    return v


@dataclass(frozen=True)
class FertilitySpec:
    """Progeny-count laws ``G(ij, rs)`` for a k-allele fertility process.

    ``laws`` maps each unordered pair of genotype indices ``(g1, g2)`` with
    ``g1 <= g2`` (indices into ``genotypes(k)``) to an ``IntLaw`` on
    ``{0, ..., m_g}``.  ``gamma`` is set when the spec was built additively.
    """

    k: int
    laws: dict
    gamma: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        G = len(genotypes(self.k))
        laws = {}
        for key, law in self.laws.items():
            g1, g2 = sorted(key)
            laws[(g1, g2)] = IntLaw.parse(law)
        missing = [(a, b) for a in range(G) for b in range(a, G) if (a, b) not in laws]
        if missing:
            raise ValueError(f"missing progeny laws for genotype pairs {missing}")
        for law in laws.values():
            if law.low < 0:
                raise ValueError("progeny counts must be nonnegative")
        object.__setattr__(self, "laws", laws)

    @classmethod
    def uniform(cls, k: int, law) -> "FertilitySpec":
        G = len(genotypes(k))
        law = IntLaw.parse(law)
        return cls(k, {(a, b): law for a in range(G) for b in range(a, G)})

    @classmethod
    def additive(cls, gamma, laws=None) -> "FertilitySpec":
        """Spec with mean progeny ``gamma_ij + gamma_rs``.

        Without explicit ``laws`` each pair gets the two-point law on the
        integers bracketing its mean.
        """
        gamma = np.asarray(gamma, dtype=float)
        k = gamma.shape[0]
        if gamma.shape != (k, k) or not np.allclose(gamma, gamma.T):
            raise ValueError("gamma must be a symmetric k x k matrix")
        gts = genotypes(k)
        out = {}
        for a in range(len(gts)):
            for b in range(a, len(gts)):
                mean = gamma[gts[a]] + gamma[gts[b]]
                if laws is not None and (a, b) in laws:
                    law = IntLaw.parse(laws[(a, b)])
                    if abs(law.mean - mean) > 1e-9:
                        raise ValueError(f"law for pair {(a, b)} has mean {law.mean}, need {mean}")
                else:
                    if mean < 0:
                        raise ValueError("additive mean progeny must be nonnegative")
                    law = IntLaw.two_point(mean)
                out[(a, b)] = law
        return cls(k, out, gamma.copy())

    def law(self, g1: int, g2: int) -> IntLaw:
        return self.laws[(g1, g2) if g1 <= g2 else (g2, g1)]

    @property
    def max_progeny(self) -> int:
        return max(law.high for law in self.laws.values())

    def mean_tensor(self) -> np.ndarray:
        """``g[i, j, r, s] = E G(ij, rs)`` over ordered allele indices."""
        k = self.k
        index = {gt: n for n, gt in enumerate(genotypes(k))}
        gidx = lambda i, j: index[(min(i, j), max(i, j))]
        g = np.zeros((k, k, k, k))
        for i, j, r, s in itertools.product(range(k), repeat=4):
            g[i, j, r, s] = self.law(gidx(i, j), gidx(r, s)).mean
        return g


@dataclass(frozen=True)
class MutationMatrix:
    """Mutation probabilities ``mu(ij -> rs)`` over unordered genotypes.

    ``matrix[g, h]`` is the probability that an offspring of random-mating
    genotype ``genotypes(k)[g]`` becomes ``genotypes(k)[h]``; rows sum to 1
    over all unordered targets, homozygotes included.
    """

    k: int
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        G = len(genotypes(self.k))
        if M.shape != (G, G):
            raise ValueError(f"mutation matrix must be {G} x {G}")
        if np.any(M < 0) or np.any(np.abs(M.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("mutation matrix must be row-stochastic")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def identity(cls, k: int) -> "MutationMatrix":
        return cls(k, np.eye(len(genotypes(k))))

    @classmethod
    def uniform_rate(cls, k: int, eps: float) -> "MutationMatrix":
        """Stay with probability ``1 - eps``, else move to another genotype uniformly."""
        G = len(genotypes(k))
        if G == 1:
            return cls.identity(k)
        M = np.full((G, G), eps / (G - 1))
        np.fill_diagonal(M, 1.0 - eps)
        return cls(k, M)


class FertilityLaw(_ChannelLaw):
    """Fertility-selection process on ``k*k`` genotype coordinates.

    State ``z`` is the flattened symmetric matrix with ``z^{ii}`` twice the
    number of A_iA_i homozygotes and ``z^{ij} = z^{ji}`` the number of A_iA_j
    heterozygotes, so ``|z|`` is twice the population size.  Channels are
    ordered pairs of unordered genotypes.
    """

    def __init__(self, spec: FertilitySpec, mutation: MutationMatrix | None = None,
                 name: str = "fertility"):
        k = spec.k
        super().__init__(k * k, 4 + 2 * max(spec.max_progeny, 1), a2_constant=8.0)
        self.name = name
        self.alleles = k
        self.spec = spec
        self.mutation = mutation
        self.genotypes = genotypes(k)
        G = len(self.genotypes)
        self.reduction = genotype_reduction(k)[1]
        self.lift = genotype_reduction(k)[0]
        self._gvec = [_genotype_vector(k, i, j) for i, j in self.genotypes]
        self._gindex = {gt: n for n, gt in enumerate(self.genotypes)}
        self._laws = [[spec.law(a, b) for b in range(G)] for a in range(G)]
        # per offspring: cumulative target distribution, or a single target
        self._mut_rows = None
        if mutation is not None:
            if mutation.k != k:
                raise ValueError("mutation matrix allele count differs from spec")
            rows = []
            for g in range(G):
                row = mutation.matrix[g]
                nz = np.flatnonzero(row > 0)
                if len(nz) == 1:
                    rows.append(int(nz[0]))
                else:
                    rows.append((list(np.cumsum(row)), G))
            self._mut_rows = rows
        self._flat_pos = [(i * k + j, j * k + i) for i, j in self.genotypes]
        if k > MAX_ENUM_K or spec.max_progeny > MAX_ENUM_JUMP:
            self.enumerable = False
            self.W = self.P = None
        else:
            self._set_channels(self._channel_distributions())

    # -- enumeration -------------------------------------------------------

    def offspring_distribution(self, g1: int, g2: int) -> np.ndarray:
        """Probability of each unordered offspring genotype from parents g1, g2."""
        (i, j), (r, s) = self.genotypes[g1], self.genotypes[g2]
        q = np.zeros(len(self.genotypes))
        for uu in (i, j):
            for vv in (r, s):
                q[self._gindex[(min(uu, vv), max(uu, vv))]] += 0.25
        if self.mutation is not None:
            q = q @ self.mutation.matrix
        return q

    def _channel_distributions(self):
        G = len(self.genotypes)
        dists = []
        for g1 in range(G):
            for g2 in range(G):
                q = self.offspring_distribution(g1, g2)
                one = {tuple(self._gvec[h]): q[h] for h in range(G) if q[h] > 0}
                removal = -(self._gvec[g1] + self._gvec[g2])
                law = self._laws[g1][g2]
                d: dict = {}
                conv = {tuple(np.zeros(self.k, dtype=np.int64)): 1.0}
                for count in range(law.high + 1):
                    pc = law.pmf(count)
                    if pc > 0:
                        for w, p in conv.items():
                            _accumulate(d, tuple(int(a + b) for a, b in zip(w, removal)), pc * p)
                    if count < law.high:
                        conv = _convolve(conv, one)
                dists.append(d)
        return dists

    def genotype_frequencies(self, x) -> np.ndarray:
        return self.reduction @ np.asarray(x, dtype=float)

    def channel_weights_limit(self, x):
        f = self.genotype_frequencies(x)
        return np.outer(f, f).ravel()

    def genotype_counts(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64).reshape(self.alleles, self.alleles)
        return np.array([z[i, j] // 2 if i == j else z[i, j] for i, j in self.genotypes],
                        dtype=np.int64)

    def channel_weights_finite(self, z):
        n = self.genotype_counts(z).astype(float)
        N = n.sum()
        return ((np.outer(n, n) - np.diag(n)) / (N * (N - 1))).ravel()

    def mean_support(self, x):
        if not self.enumerable:
            raise UnsupportedLawError("fertility spec exceeds the enumeration cap")
        return super().mean_support(x)

    def kernel(self, z):
        if not self.enumerable:
            raise UnsupportedLawError("fertility spec exceeds the enumeration cap")
        z = np.asarray(z, dtype=np.int64)
        total = z.sum()
        if total == 0:
            return self.W, np.zeros(len(self.W))
        if total < 4:
            return -z[None, :], np.ones(1)
        return self.W, self.P @ self.channel_weights_finite(z)

    def random_composition(self, rng):
        return self.lift @ rng.dirichlet(np.ones(len(self.genotypes)))

    def random_state(self, total, rng):
        pop = max(int(total) // 2, 0)
        n = rng.multinomial(pop, np.full(len(self.genotypes), 1.0 / len(self.genotypes)))
        z = np.zeros(self.k, dtype=np.int64)
        for g, c in enumerate(n):
            z += c * self._gvec[g]
        return z.tolist()

    def state_from_counts(self, counts: dict) -> list[int]:
        """Build ``z`` from ``{(i, j): number of A_iA_j individuals}``."""
        z = np.zeros(self.k, dtype=np.int64)
        for (i, j), c in counts.items():
            z += int(c) * _genotype_vector(self.alleles, i, j)
        return z.tolist()

    # -- mechanistic sampler -------------------------------------------------

    def sample(self, z, u):
        total = sum(z)
        if total < 4:
            return [0] * self.k
        counts = [z[a] // 2 if a == b else z[a] for a, b in self._flat_pos]
        N = total // 2
        g1 = _locate(counts, int(u() * N))
        counts[g1] -= 1
        g2 = _locate(counts, int(u() * (N - 1)))
        self._add(z, g1, -1)
        self._add(z, g2, -1)
        (i, j), (r, s) = self.genotypes[g1], self.genotypes[g2]
        progeny = self._laws[g1][g2].draw(u)
        gindex = self._gindex
        rows = self._mut_rows
        for _ in range(progeny):
            a = i if u() < 0.5 else j
            b = r if u() < 0.5 else s
            h = gindex[(a, b) if a <= b else (b, a)]
            if rows is not None:
                row = rows[h]
                if isinstance(row, int):
                    h = row
                else:
                    cdf, G = row
                    h = min(bisect.bisect_right(cdf, u()), G - 1)
            self._add(z, h, 1)
        return z

    def _add(self, z, g, sign):
        p, q = self._flat_pos[g]
        z[p] += sign
        z[q] += sign


def _convolve(a: dict, b: dict) -> dict:
    out: dict = {}
    for wa, pa in a.items():
        for wb, pb in b.items():
            _accumulate(out, tuple(x + y for x, y in zip(wa, wb)), pa * pb)
    return out


def fertility_law(spec: FertilitySpec, name: str = "fertility") -> FertilityLaw:
    return FertilityLaw(spec, None, name=name)


def mutation_fertility_law(spec: FertilitySpec, mu: MutationMatrix,
                           name: str = "fertility-mutation") -> FertilityLaw:
    return FertilityLaw(spec, mu, name=name)


# ---------------------------------------------------------------------------
# textbook laws


def polya_law(k: int) -> RateLaw:
    """Classical Polya urn: add one ball of a colour drawn from the urn."""
    inc = [tuple(int(i == j) for j in range(k)) for i in range(k)]
    return RateLaw(inc, lambda x: x, name="polya", a2_constant=0.0)


def pure_death_law(k: int) -> RateLaw:
    """Remove one ball of a colour drawn from the urn."""
    inc = [tuple(-int(i == j) for j in range(k)) for i in range(k)]
    return RateLaw(inc, lambda x: x, name="pure-death", a2_constant=0.0)


def birth_death_law(p_birth: float, p_death: float) -> RateLaw:
    """One-colour walk: +1 with probability ``p_birth``, -1 with ``p_death``."""
    if p_birth < 0 or p_death < 0 or p_birth + p_death > 1 + 1e-12:
        raise ValueError("birth and death probabilities must be a sub-probability")
    rates = (float(p_birth), float(p_death))
    return RateLaw([(1,), (-1,)], lambda x: rates, name="birth-death", a2_constant=0.0)
