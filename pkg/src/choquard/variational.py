"""Energy functionals, the Nehari constraint, and geometry probes.

The energy is J(u) = (1/2)||u||^2 - (1/(2p)) D(u), where the squared norm is
the quadratic form of the sparse self-adjoint operator Delta^2 - Delta +
(1 + lam*a) (well mode: Delta^2 - Delta + 1 acting on fields that vanish
outside the well) and D is the kernel pair energy with the diagonal
excluded.  The constraint set is the set of nonzero fields with
(J'(u), u) = 0; every field with positive pair energy has a unique positive
scale landing on it, given in closed form, and ground states minimize J
there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from . import calculus as _calculus
from . import kernels as _kernels
from .errors import InputError, NoProjectionError, ParameterError, ProbeInconclusiveError
from .fields import Field
from .lattice import BALL, LatticeWindow, SiteSet

MODE_FULL = "full"
MODE_DIRICHLET = "dirichlet"
_MODES = (MODE_FULL, MODE_DIRICHLET)


@lru_cache(maxsize=None)
def _difference_matrices(window: LatticeWindow):
    """Sparse Laplacian (window -> enlarged window) and the zero-extension embedding."""
    big = window.enlarged(1)
    col = window.indices_of(big.sites)
    inside = np.nonzero(col >= 0)[0]
    pad = np.append(col, -1)
    nb_cols = pad[big.neighbors]
    valid = nb_cols >= 0
    rows_nb = np.repeat(np.arange(big.count), 2 * window.dim)[valid.ravel()]
    cols_nb = nb_cols[valid]
    rows = np.concatenate([rows_nb, inside])
    cols = np.concatenate([cols_nb, col[inside]])
    vals = np.concatenate([np.ones(rows_nb.size), np.full(inside.size, -2.0 * window.dim)])
    lap = sparse.csr_matrix((vals, (rows, cols)), shape=(big.count, window.count))
    embed = sparse.csr_matrix(
        (np.ones(inside.size), (inside, col[inside])), shape=(big.count, window.count)
    )
    return lap, embed


@dataclass(frozen=True)
class ProblemSpec:
    """One minimization problem: mode, window, potential, kernel, and exponents.

    In full mode the norm weight is 1 + lam * a(x); in dirichlet mode the
    unknowns live on the potential well only and the weight is 1.
    """

    mode: str
    window: LatticeWindow
    potential: _calculus.PotentialSpec
    kernel: _kernels.KernelTable
    p: float
    lam: Optional[float] = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ParameterError(f"mode must be one of {_MODES}, got {self.mode!r}")
        n = self.window.dim
        if self.potential.dim != n:
            raise InputError(f"potential dimension {self.potential.dim} does not match window ({n})")
        if self.kernel.dim != n:
            raise InputError(f"kernel dimension {self.kernel.dim} does not match window ({n})")
        if self.kernel.radius < self.window.radius:
            raise InputError(
                f"kernel table radius {self.kernel.radius} is too small for window radius {self.window.radius}"
            )
        critical = (n + self.kernel.alpha) / n
        if not self.p > critical:
            raise ParameterError(f"exponent p={self.p} must exceed (N + alpha)/N = {critical}")
        if self.mode == MODE_FULL:
            if self.lam is None or not self.lam > 0.0:
                raise ParameterError(f"full mode requires coupling lam > 0, got {self.lam}")
        elif self.lam is not None:
            raise ParameterError("dirichlet mode takes no coupling")
        coords = self.potential.well.as_array()
        idx = self.window.indices_of(coords)
        if np.any(idx < 0):
            raise InputError("the well must lie inside the window")
        if self.window.shape == BALL:
            reach = int(np.abs(coords).sum(axis=1).max())
        else:
            reach = int(np.abs(coords).max())
        margin = self.window.radius - reach
        if margin < 3:
            raise InputError(f"well needs margin >= 3 to the window edge, got {margin}")
        object.__setattr__(self, "_cache", {})

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def well(self) -> SiteSet:
        return self.potential.well

    def _cached(self, key, build):
        value = self._cache.get(key)
        if value is None:
            value = build()
            self._cache[key] = value
        return value

    def weight_values(self) -> np.ndarray:
        """Diagonal norm weight per window site."""

        def build():
            if self.mode == MODE_FULL:
                w = 1.0 + self.lam * self.potential.values_on(self.window)
            else:
                w = np.ones(self.window.count)
            w.setflags(write=False)
            return w

        return self._cached("weight", build)

    def well_mask(self) -> np.ndarray:
        def build():
            mask = np.zeros(self.window.count, dtype=bool)
            mask[self.window.indices_of(self.potential.well.as_array())] = True
            mask.setflags(write=False)
            return mask

        return self._cached("well_mask", build)

    def free_indices(self) -> np.ndarray:
        """Window indices of the unknowns (all sites, or the well in dirichlet mode)."""

        def build():
            if self.mode == MODE_FULL:
                idx = np.arange(self.window.count)
            else:
                idx = np.nonzero(self.well_mask())[0]
            idx.setflags(write=False)
            return idx

        return self._cached("free", build)

    def operator_matrix(self) -> sparse.csr_matrix:
        """CSR matrix of Delta^2 - Delta + weight on the free sites."""

        def build():
            lap, embed = _difference_matrices(self.window)
            a = (lap.T @ lap - embed.T @ lap + sparse.diags(self.weight_values())).tocsr()
            if self.mode == MODE_DIRICHLET:
                free = self.free_indices()
                a = a[free][:, free].tocsr()
            a.sort_indices()
            return a

        return self._cached("operator", build)

    def operator_diagonal(self) -> np.ndarray:
        def build():
            d = self.operator_matrix().diagonal()
            d.setflags(write=False)
            return d

        return self._cached("diag", build)

    def __repr__(self) -> str:
        tail = f", lam={self.lam!r}" if self.mode == MODE_FULL else ""
        return (
            f"ProblemSpec({self.mode!r}, {self.window!r}, kind={self.kernel.kind!r}, "
            f"alpha={self.kernel.alpha!r}, p={self.p!r}{tail})"
        )


def _check_window(u: Field, prob: ProblemSpec) -> None:
    if u.window != prob.window:
        raise InputError(f"field window {u.window} does not match problem window {prob.window}")


def _require_admissible(u: Field, prob: ProblemSpec) -> None:
    _check_window(u, prob)
    if prob.mode == MODE_DIRICHLET and np.any(u.values[~prob.well_mask()] != 0.0):
        raise InputError("field must vanish outside the well in dirichlet mode")


def norm_sq(u: Field, prob: ProblemSpec) -> float:
    """Squared problem norm as the quadratic form of the sparse operator."""
    _require_admissible(u, prob)
    if prob.mode == MODE_FULL:
        x = u.values
    else:
        x = u.values[prob.free_indices()]
    return float(x @ (prob.operator_matrix() @ x))


def nonlocal_term(u: Field, prob: ProblemSpec) -> float:
    """Pair energy D(u) of the problem kernel."""
    _check_window(u, prob)
    return _calculus.nonlocal_energy(u, prob.kernel, prob.p)


def energy(u: Field, prob: ProblemSpec) -> float:
    """J(u) = (1/2)||u||^2 - (1/(2p)) D(u)."""
    return 0.5 * norm_sq(u, prob) - nonlocal_term(u, prob) / (2.0 * prob.p)


def _nonlinear_values(values: np.ndarray, prob: ProblemSpec) -> np.ndarray:
    """(K * |u|^p) |u|^{p-2} u evaluated on the window."""
    absu = np.abs(values)
    h = absu**prob.p
    conv = _kernels.convolve(prob.kernel, Field(prob.window, h))
    factor = np.zeros_like(values)
    nz = values != 0.0
    factor[nz] = absu[nz] ** (prob.p - 2.0) * values[nz]
    return conv.values * factor


def euler_lagrange_residual(u: Field, prob: ProblemSpec) -> Field:
    """Coordinate gradient of J on the free sites (zero elsewhere).

    In dirichlet mode the field is read through its restriction to the well,
    matching the constrained unknowns.
    """
    _check_window(u, prob)
    if prob.mode == MODE_FULL:
        x = u.values
        grad = prob.operator_matrix() @ x - _nonlinear_values(x, prob)
        return Field(prob.window, grad)
    free = prob.free_indices()
    restricted = np.zeros(prob.window.count)
    restricted[free] = u.values[free]
    grad = np.zeros(prob.window.count)
    grad[free] = prob.operator_matrix() @ u.values[free] - _nonlinear_values(restricted, prob)[free]
    return Field(prob.window, grad)


def nehari_defect(u: Field, prob: ProblemSpec) -> float:
    """(J'(u), u) = ||u||^2 - D(u); zero exactly on the constraint set."""
    return norm_sq(u, prob) - nonlocal_term(u, prob)


def nehari_project(u: Field, prob: ProblemSpec) -> Tuple[float, Field]:
    """The unique scale t > 0 with (J'(tu), tu) = 0, and the scaled field.

    t = (||u||^2 / D(u))^(1/(2(p-1))); fields with vanishing pair energy
    (for example, single-site fields) admit no such scale.
    """
    a = norm_sq(u, prob)
    d = nonlocal_term(u, prob)
    if d == 0.0:
        raise NoProjectionError("pair energy vanishes; no scale meets the constraint")
    t = (a / d) ** (1.0 / (2.0 * (prob.p - 1.0)))
    return t, t * u


def nehari_level(u: Field, prob: ProblemSpec) -> float:
    """J(u) for a field on the constraint set; candidate for the ground level.

    On the constraint set the energy reduces to (1/2 - 1/(2p)) ||u||^2; the
    field must satisfy the constraint to 1e-10 relative.
    """
    a = norm_sq(u, prob)
    if a == 0.0:
        raise InputError("level undefined for the zero field")
    defect = a - nonlocal_term(u, prob)
    if abs(defect) > 1.0e-10 * a:
        raise InputError(f"field is off the constraint set: relative defect {abs(defect) / a:.3e}")
    return energy(u, prob)


@dataclass(frozen=True)
class MountainPassProbe:
    """Sampled geometry of J near zero and along one escape ray."""

    theta_hat: float
    t_neg: float
    witness: Field
    rho: float
    samples: int


def mountain_pass_probe(prob: ProblemSpec, rho: float, samples: int, seed: int = 0) -> MountainPassProbe:
    """Minimum of J over random fields of norm rho, plus a negative-energy scale.

    theta_hat estimates the energy barrier on the sphere of radius rho;
    t_neg scales the first sampled field with positive pair energy (renormed
    to norm 1) so that J(t_neg * witness) < 0.
    """
    if not rho > 0.0:
        raise ParameterError(f"rho must be > 0, got {rho}")
    if samples < 1:
        raise ParameterError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    free = prob.free_indices()
    theta = math.inf
    witness = None
    for _ in range(samples):
        vals = np.zeros(prob.window.count)
        vals[free] = rng.standard_normal(free.size)
        u = Field(prob.window, vals)
        a = norm_sq(u, prob)
        if a == 0.0:
            continue
        u = (rho / math.sqrt(a)) * u
        theta = min(theta, energy(u, prob))
        if witness is None and nonlocal_term(u, prob) > 0.0:
            witness = (1.0 / rho) * u
    if witness is None:
        raise ProbeInconclusiveError("no sampled field has positive pair energy")
    a = norm_sq(witness, prob)
    d = nonlocal_term(witness, prob)
    t_neg = (2.0 * prob.p * a / d) ** (1.0 / (2.0 * prob.p - 2.0))
    return MountainPassProbe(theta_hat=theta, t_neg=t_neg, witness=witness, rho=rho, samples=samples)
