"""Mean-limit ODEs of urn processes and their analysis.

Fields act on the ambient coordinates of the process.  Fertility fields
live on the k*k genotype coordinates and carry a linear reduction to
genotype proportions.  Equilibrium search and stability analysis work in
those reduced coordinates, so only symmetric (physical) perturbations
count.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import null_space

from .models import genotype_reduction
from .urn import TransitionLaw, UnsupportedLawError

__all__ = [
    "VectorField",
    "EquilibriumReport",
    "Path",
    "IntegrationError",
    "mean_vector_field",
    "replicator_field",
    "fertility_field",
    "additive_fertility_field",
    "allele_field",
    "integrate",
    "growth_rate",
    "min_growth_rate",
    "find_equilibria",
    "classify",
    "nondegeneracy",
    "hardy_weinberg_defect",
    "time_average_flow",
    "simplex_grid",
]

log = logging.getLogger(__name__)

STABLE = "linearly stable"
UNSTABLE = "linearly unstable"
NONHYPERBOLIC = "nonhyperbolic"


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class VectorField:
    """Tangent vector field ``g`` on the simplex of dimension ``dim``.

    ``lift``/``reduce`` (optional) map between reduced simplex coordinates
    and the ambient ones; see ``models.genotype_reduction``.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    provenance: str
    lift: np.ndarray | None = field(default=None, repr=False)
    reduce: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, x) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float))

    @property
    def reduced_dim(self) -> int:
        return self.dim if self.reduce is None else self.reduce.shape[0]

    def to_reduced(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x if self.reduce is None else self.reduce @ x

    def from_reduced(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return y if self.lift is None else self.lift @ y

    def reduced(self, y) -> np.ndarray:
        """The field in reduced coordinates."""
        if self.reduce is None:
            return self(y)
        return self.reduce @ self(self.lift @ y)


def mean_vector_field(law: TransitionLaw) -> VectorField:
    """``g(x) = sum_w p_w(x) (w - x alpha(w))`` from the law's mean support."""
    if not getattr(law, "enumerable", True):
        raise UnsupportedLawError(f"{law.name}: mean-limit support not enumerable")

    def g(x):
        W, p = law.mean_support(x)
        return p @ W - x * (p @ W.sum(axis=1))

    lift = getattr(law, "lift", None)
    return VectorField(law.k, g, "derived-from-law", lift=lift,
                       reduce=law.reduction if lift is not None else None)


def replicator_field(A) -> VectorField:
    """``diag(x) A x - (x.Ax) x``."""
    A = np.array(A, dtype=float)
    A.setflags(write=False)

    def g(x):
        Ax = A @ x
        return x * Ax - (x @ Ax) * x

    return VectorField(A.shape[0], g, "replicator(A)")


def _genotype_field(k: int, func, provenance: str) -> VectorField:
    lift, red = genotype_reduction(k)
    return VectorField(k * k, func, provenance, lift=lift, reduce=red)


def fertility_field(g_means) -> VectorField:
    """Fertility-selection equations on the k*k genotype coordinates.

    ``g_means[i, j, r, s]`` is the mean progeny of an A_iA_j x A_rA_s mating
    (a ``FertilitySpec`` is accepted too).  The field is
    ``dx^{ij}/dt = sum_{r,s} g(ir, js) x^{ir} x^{js} - x^{ij} gbar``.
    """
    if hasattr(g_means, "mean_tensor"):
        g_means = g_means.mean_tensor()
    g4 = np.array(g_means, dtype=float)
    k = g4.shape[0]
    if g4.shape != (k, k, k, k):
        raise ValueError("g_means must have shape (k, k, k, k)")
    if not np.allclose(g4, g4.transpose(2, 3, 0, 1)):
        raise ValueError("g_means must be symmetric in the two parents")
    g4.setflags(write=False)

    def g(x):
        X = x.reshape(k, k)
        gbar = np.einsum("ijrs,ij,rs->", g4, X, X)
        return (np.einsum("irjs,ir,js->ij", g4, X, X) - X * gbar).ravel()

    return _genotype_field(k, g, "fertility(g)")


def additive_fertility_field(gamma) -> VectorField:
    """Additive fertility equations ``x^j gamma_i + x^i gamma_j - 2 x^{ij} gammabar``."""
    gamma = np.array(gamma, dtype=float)
    k = gamma.shape[0]
    gamma.setflags(write=False)

    def g(x):
        X = x.reshape(k, k)
        alleles = X.sum(axis=1)
        gi = (gamma * X).sum(axis=1)
        gbar = gi.sum()
        return (np.outer(gi, alleles) + np.outer(alleles, gi) - 2.0 * X * gbar).ravel()

    return _genotype_field(k, g, "additive(gamma)")


def allele_field(gamma) -> VectorField:
    """Selection equation on allele frequencies, ``dx^i/dt = gamma_i - x^i gammabar``.

    ``gamma_i`` is evaluated on the Hardy-Weinberg manifold
    (``x^{ir} = x^i x^r``), where it equals ``x^i (gamma x)_i``.
    """
    gamma = np.array(gamma, dtype=float)
    gamma.setflags(write=False)

    def g(x):
        gx = gamma @ x
        return x * gx - (x @ gx) * x

    return VectorField(gamma.shape[0], g, "allele(gamma)")


# ---------------------------------------------------------------------------
# flow


@dataclass
class Path:
    """Sampled ODE solution; ``x[i]`` is the state at time ``t[i]``."""

    t: np.ndarray
    x: np.ndarray
    max_projection: float = 0.0
    projections: int = 0

    def to_csv(self, fh):
        k = self.x.shape[1]
        fh.write(",".join(["t"] + [f"x{i + 1}" for i in range(k)]) + "\n")
        for t, row in zip(self.t, self.x):
            fh.write(",".join([repr(float(t))] + [repr(float(v)) for v in row]) + "\n")


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(field: VectorField, x0, T: float, h: float = 1e-3,
              record_every: int = 1) -> Path:
    """Classical RK4 with fixed step ``h`` from ``x0`` over ``[0, T]``.

    After each step negative coordinates are clamped to zero and the state is
    renormalized to the simplex; the largest such correction is kept on the
    returned path.  ``record_every`` thins the stored samples (the final time
    is always stored).
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    x = np.array(x0, dtype=float)
    if x.shape != (field.dim,):
        raise ValueError(f"x0 must have {field.dim} coordinates")
    nsteps = int(np.ceil(T / h - 1e-9))
    ts = [0.0]
    xs = [x.copy()]
    max_proj = 0.0
    nproj = 0
    t = 0.0
    for n in range(1, nsteps + 1):
        step = min(h, T - t)
        y = _rk4_step(field, x, step)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite field value at t={t:.6g}, x={x}")
        if y.min() < 0 or abs(y.sum() - 1.0) > 1e-12:
            z = np.clip(y, 0.0, None)
            z /= z.sum()
            d = float(np.abs(z - y).max())
            if y.min() < 0:
                nproj += 1
            max_proj = max(max_proj, d)
            y = z
        x = y
        t = n * h if n < nsteps else T
        if n % record_every == 0 or n == nsteps:
            ts.append(t)
            xs.append(x.copy())
    if nproj:
        log.debug("integrate: %d clamp projections, largest correction %.3g", nproj, max_proj)
    return Path(np.array(ts), np.array(xs), max_proj, nproj)


def time_average_flow(path: Path) -> np.ndarray:
    """Trapezoidal average of ``x(t)`` over the path's time span."""
    T = path.t[-1] - path.t[0]
    if T <= 0:
        return path.x[0].copy()
    return np.trapezoid(path.x, path.t, axis=0) / T


# ---------------------------------------------------------------------------
# growth


def growth_rate(law: TransitionLaw, x) -> float:
    """Expected change of ``|z|`` per update at composition x: ``sum_w p_w(x) alpha(w)``."""
    W, p = law.mean_support(np.asarray(x, dtype=float))
    return float(p @ W.sum(axis=1))


def min_growth_rate(law: TransitionLaw, points) -> float:
    """Infimum of ``growth_rate`` over a finite sample of compositions."""
    return min(growth_rate(law, x) for x in points)


def simplex_grid(dim: int, density: int, interior_only: bool = False) -> np.ndarray:
    """Barycentric lattice ``{a/density : a_i >= 0, sum a = density}``."""
    lo = 1 if interior_only else 0
    D = density + (dim if interior_only else 0)
    pts = []
    for cuts in itertools.combinations(range(D + dim - 1), dim - 1):
        parts = np.diff((-1,) + cuts + (D + dim - 1,)) - 1
        if parts.min() >= lo:
            pts.append(parts / D)
    return np.array(pts)


# ---------------------------------------------------------------------------
# equilibria


@dataclass
class EquilibriumReport:
    """Equilibrium with tangent-space spectrum, stability class and growth rate."""

    x: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    stability: str
    growth: float | None = None
    face: tuple[int, ...] = ()

    @property
    def is_stable(self) -> bool:
        return self.stability == STABLE

    @property
    def is_unstable(self) -> bool:
        return self.stability == UNSTABLE

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "residual": float(self.residual),
            "eigs": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "class": self.stability,
            "lambda": None if self.growth is None else float(self.growth),
            "face": list(self.face),
        }


def _tangent_basis(dim: int, support=None) -> np.ndarray:
    """Orthonormal basis of ``{u : sum u = 0, u_i = 0 off support}``."""
    if support is None:
        support = range(dim)
    support = list(support)
    s = len(support)
    B = np.zeros((dim, max(s - 1, 0)))
    if s > 1:
        B[support, :] = null_space(np.ones((1, s)))
    return B


def _fd_jacobian(f, y, basis, h):
    """Central-difference Jacobian of ``basis.T f`` along the basis directions."""
    cols = []
    for c in range(basis.shape[1]):
        d = basis[:, c] * h
        cols.append(basis.T @ (f(y + d) - f(y - d)) / (2 * h))
    return np.array(cols).T


def _newton(f, y0, basis, tol, fd_step, max_iter=60):
    y = y0.copy()
    F = basis.T @ f(y)
    for _ in range(max_iter):
        if np.linalg.norm(f(y)) <= tol:
            return y
        J = _fd_jacobian(f, y, basis, fd_step)
        try:
            dc = np.linalg.lstsq(J, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        step = basis @ dc
        nrm = np.linalg.norm(step)
        if nrm > 0.5:
            step *= 0.5 / nrm
        # backtrack on the projected residual
        fn = np.linalg.norm(F)
        lam = 1.0
        while lam > 1e-4:
            y_new = y + lam * step
            F_new = basis.T @ f(y_new)
            if np.linalg.norm(F_new) < fn or fn == 0:
                break
            lam *= 0.5
        else:
            return None
        y, F = y_new, F_new
        if y.min() < -0.5:
            return None
    return y if np.linalg.norm(f(y)) <= tol else None


def find_equilibria(field: VectorField, grid_density: int = 5, newton_tol: float = 1e-10,
                    dedupe_tol: float = 1e-6, law: TransitionLaw | None = None,
                    fd_step: float = 1e-5, hyperbolicity_tol: float = 1e-6
                    ) -> list[EquilibriumReport]:
    """Equilibria of the field on the simplex, each classified.

    Newton runs in the affine hull of every face of the (reduced) simplex,
    starting from the relative-interior points of a barycentric grid with
    ``grid_density`` points per axis.  Converged points with residual at most
    ``newton_tol`` that lie in the simplex are kept once (within
    ``dedupe_tol``).
    """
    d = field.reduced_dim
    f = field.reduced
    found: list[np.ndarray] = []
    residuals: list[float] = []
    for s in range(1, d + 1):
        for support in itertools.combinations(range(d), s):
            basis = _tangent_basis(d, support)
            if s == 1:
                starts = [np.eye(d)[support[0]]]
            else:
                local = simplex_grid(s, max(grid_density - 1, 0),
                                     interior_only=True)
                starts = []
                for pt in local:
                    y = np.zeros(d)
                    y[list(support)] = pt
                    starts.append(y)
            for y0 in starts:
                if s == 1:
                    y = y0 if np.linalg.norm(f(y0)) <= newton_tol else None
                else:
                    y = _newton(f, y0, basis, newton_tol, fd_step)
                if y is None:
                    log.debug("newton discarded start %s", y0)
                    continue
                if y.min() < -1e-9:
                    continue
                y = np.clip(y, 0.0, None)
                y /= y.sum()
                res = float(np.linalg.norm(f(y)))
                if res > newton_tol:
                    continue
                if any(np.linalg.norm(y - q) <= dedupe_tol for q in found):
                    continue
                found.append(y)
                residuals.append(res)
    reports = [classify(field, field.from_reduced(y), law=law, fd_step=fd_step,
                        hyperbolicity_tol=hyperbolicity_tol) for y in found]
    return reports


def classify(field: VectorField, x, law: TransitionLaw | None = None, fd_step: float = 1e-5,
             hyperbolicity_tol: float = 1e-6) -> EquilibriumReport:
    """Tangent-space linearization at an equilibrium and its stability class."""
    x = np.asarray(x, dtype=float)
    y = field.to_reduced(x)
    d = field.reduced_dim
    basis = _tangent_basis(d)
    J = _fd_jacobian(field.reduced, y, basis, fd_step)
    eig = np.linalg.eigvals(J) if J.size else np.zeros(0, dtype=complex)
    eig = np.array(sorted(eig, key=lambda e: (-e.real, -e.imag)), dtype=complex)
    re = eig.real
    if len(re) and np.all(re < -hyperbolicity_tol):
        cls = STABLE
    elif len(re) and np.any(re > hyperbolicity_tol):
        cls = UNSTABLE
    elif len(re) == 0:
        cls = STABLE
    else:
        cls = NONHYPERBOLIC
    lam = growth_rate(law, x) if law is not None else None
    face = tuple(int(i) for i in np.flatnonzero(np.abs(x) <= 1e-12))
    return EquilibriumReport(x=x, residual=float(np.linalg.norm(field(x))), eigenvalues=eig,
                             stability=cls, growth=lam, face=face)


# ---------------------------------------------------------------------------
# nondegeneracy and Hardy-Weinberg structure


@dataclass(frozen=True)
class Nondegeneracy:
    rank: int
    dim: int

    @property
    def is_nondegenerate(self) -> bool:
        return self.rank == self.dim


def nondegeneracy(law: TransitionLaw, x, support_eps: float = 1e-12) -> Nondegeneracy:
    """Rank of the increments charged with probability above ``support_eps``.

    Laws with a coordinate reduction (fertility laws) are judged in reduced
    coordinates; their increments are symmetric by construction.
    """
    W, p = law.mean_support(np.asarray(x, dtype=float))
    rows = W[p > support_eps].astype(float)
    red = getattr(law, "reduction", None)
    dim = law.k
    if red is not None:
        rows = rows @ red.T
        dim = red.shape[0]
    rank = int(np.linalg.matrix_rank(rows)) if len(rows) else 0
    return Nondegeneracy(rank, dim)


def hardy_weinberg_defect(x) -> np.ndarray:
    """``x^{ij} - x^i x^j`` for genotype coordinates x (flat k*k or k x k)."""
    x = np.asarray(x, dtype=float)
    k = int(round(np.sqrt(x.size)))
    X = x.reshape(k, k)
    p = X.sum(axis=1)
    return X - np.outer(p, p)
