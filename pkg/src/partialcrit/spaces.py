"""Finite-dimensional Hilbert spaces with an operator-weighted inner product.

A space is a coefficient vector space R^dim equipped with

* a symmetric positive definite operator ``A`` defining the working inner
  product ``(u, v)_A = <A u, v>``,
* a strictly positive weight vector defining a discrete L2 product
  ``(u, v)_mass = sum_i w_i u_i v_i``.

Everything downstream (residuals, energies, convergence checks) is phrased
in the A-norm; the mass product only enters through lifting pointwise data
into the space and through the embedding constant that relates the two
norms.
"""

from __future__ import annotations

import hashlib
import weakref
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, IntegrityError

__all__ = [
    "SpdOperator",
    "DiscreteSpace",
    "HVector",
    "make_space",
    "inner_a",
    "norm_a",
    "l2_mass_norm",
    "solve_a",
    "riesz_lift",
    "embedding_constant",
    "validate_space",
]


@dataclass(frozen=True, eq=False)
class SpdOperator:
    """Symmetric positive definite operator in matrix form.

    Parameters
    ----------
    dim : int
        Number of degrees of freedom.
    matrix : scipy.sparse.csr_matrix
        The operator matrix. Must be symmetric and positive definite;
        `validate_space` probes both properties.
    theta : float
        Strong monotonicity constant relative to the mass product:
        ``<A x, x> >= theta * (x, x)_mass``. Builders fill this with the
        computed smallest generalized eigenvalue.
    """

    dim: int
    matrix: sp.csr_matrix
    theta: float

    def __post_init__(self):
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError(
                f"operator matrix shape {self.matrix.shape} does not match dim {self.dim}"
            )
        if not (self.theta > 0.0):
            raise ValueError("theta must be positive")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Return ``A @ x`` as a dense vector."""
        return self.matrix @ x

    def as_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True, eq=False)
class DiscreteSpace:
    """A coefficient space together with its operator and mass weights."""

    dim: int
    operator: SpdOperator
    mass_weights: np.ndarray
    space_id: str

    def __post_init__(self):
        w = np.asarray(self.mass_weights, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError("mass_weights length must equal dim")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("mass_weights must be finite and strictly positive")
        object.__setattr__(self, "mass_weights", w)

    def zero(self) -> "HVector":
        return HVector(np.zeros(self.dim), self.space_id)

    def wrap(self, coeffs: np.ndarray) -> "HVector":
        return HVector(np.asarray(coeffs, dtype=float), self.space_id)


@dataclass(frozen=True)
class HVector:
    """Coefficient vector tied to a space by its identifier.

    Supports the little arithmetic the iteration needs (addition,
    subtraction, scalar multiples); mixing vectors from different spaces
    raises ``ValueError``.
    """

    coeffs: np.ndarray
    space_id: str

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def _check(self, other: "HVector") -> None:
        if self.space_id != other.space_id:
            raise ValueError(
                f"space mismatch: {self.space_id!r} vs {other.space_id!r}"
            )

    def __add__(self, other: "HVector") -> "HVector":
        self._check(other)
        return HVector(self.coeffs + other.coeffs, self.space_id)

    def __sub__(self, other: "HVector") -> "HVector":
        self._check(other)
        return HVector(self.coeffs - other.coeffs, self.space_id)

    def __mul__(self, scalar: float) -> "HVector":
        return HVector(self.coeffs * float(scalar), self.space_id)

    __rmul__ = __mul__

    def __neg__(self) -> "HVector":
        return HVector(-self.coeffs, self.space_id)


def _require_member(u: HVector, space: DiscreteSpace) -> np.ndarray:
    if u.space_id != space.space_id:
        raise ValueError(
            f"vector belongs to {u.space_id!r}, not {space.space_id!r}"
        )
    if u.coeffs.shape != (space.dim,):
        raise ValueError("vector length does not match space dimension")
    return u.coeffs


def make_space(matrix, mass_weights, space_id: str | None = None,
               theta: float | None = None) -> DiscreteSpace:
    """Assemble a `DiscreteSpace` from a matrix and mass weights.

    When `theta` is omitted it is computed as the smallest generalized
    eigenvalue of (A, mass), i.e. the reciprocal of the squared embedding
    constant. The default `space_id` is derived from the matrix content so
    identical inputs give identical identifiers.
    """
    m = sp.csr_matrix(matrix, dtype=float)
    w = np.asarray(mass_weights, dtype=float)
    dim = m.shape[0]
    if space_id is None:
        digest = hashlib.sha256()
        digest.update(m.toarray().tobytes())
        digest.update(w.tobytes())
        space_id = f"space-{dim}-{digest.hexdigest()[:10]}"
    # bootstrap with a provisional theta, then tighten via the computed
    # embedding constant (which does not depend on theta)
    c = None
    if theta is None:
        op = SpdOperator(dim=dim, matrix=m, theta=1.0)
        provisional = DiscreteSpace(dim=dim, operator=op, mass_weights=w,
                                    space_id=space_id)
        c = embedding_constant(provisional)
        theta = (1.0 / c**2) * (1.0 - 1e-9)
    op = SpdOperator(dim=dim, matrix=m, theta=float(theta))
    space = DiscreteSpace(dim=dim, operator=op, mass_weights=w, space_id=space_id)
    if c is not None:
        _EMBEDDING_CACHE[space] = c
    return space


def inner_a(u: HVector, v: HVector, space: DiscreteSpace) -> float:
    """A-weighted inner product ``<A u, v>``."""
    uc = _require_member(u, space)
    vc = _require_member(v, space)
    return float(np.dot(space.operator.apply(uc), vc))


def norm_a(u: HVector, space: DiscreteSpace) -> float:
    """A-norm, guarding against roundoff-negative quadratic forms."""
    q = inner_a(u, u, space)
    if q < 0.0:
        if q < -1e-10 * float(np.dot(u.coeffs, u.coeffs) + 1.0):
            raise IntegrityError(
                f"quadratic form returned {q}; operator is not positive definite"
            )
        q = 0.0
    # the + 0.0 folds a possible negative zero from sqrt(-0.0)
    return float(np.sqrt(q) + 0.0)


def l2_mass_norm(u: HVector, space: DiscreteSpace) -> float:
    """Weighted l2 norm ``sqrt(sum_i w_i u_i^2)``."""
    uc = _require_member(u, space)
    return float(np.sqrt(np.dot(space.mass_weights, uc * uc)))


def solve_a(h, space: DiscreteSpace, tol: float = 1e-10,
            max_iters: int | None = None) -> HVector:
    """Solve ``A x = h`` by preconditioned conjugate gradients.

    Parameters
    ----------
    h : array_like or HVector
        Right-hand side (coefficients of a dual vector).
    tol : float
        Relative residual target, ``||A x - h||_2 <= tol * ||h||_2``.
    max_iters : int, optional
        Iteration budget; default ``10 * dim``.

    Raises
    ------
    ConvergenceError
        If the budget is exhausted; the error carries the final residual.
    """
    if isinstance(h, HVector):
        b = _require_member(h, space)
    else:
        b = np.asarray(h, dtype=float)
        if b.shape != (space.dim,):
            raise ValueError("right-hand side length does not match space dimension")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return space.zero()
    target = tol * bnorm
    if max_iters is None:
        max_iters = 10 * space.dim

    diag = space.operator.matrix.diagonal()
    inv_diag = np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), 1.0)

    x = np.zeros(space.dim)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(np.dot(r, z))
    rnorm = bnorm
    for _ in range(max_iters):
        if rnorm <= target:
            return space.wrap(x)
        ap = space.operator.apply(p)
        pap = float(np.dot(p, ap))
        if pap <= 0.0:
            raise IntegrityError("conjugate gradients met a non-positive curvature direction")
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        rnorm = float(np.linalg.norm(r))
        z = inv_diag * r
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    if rnorm <= target:
        return space.wrap(x)
    raise ConvergenceError(
        f"conjugate gradients did not reach {tol:g} in {max_iters} iterations",
        residual=rnorm / bnorm, iterations=max_iters,
    )


def riesz_lift(f_pointwise, space: DiscreteSpace, tol: float = 1e-10) -> HVector:
    """Lift pointwise values into the space: solve ``A x = W f``.

    The result represents the functional ``v -> (f, v)_mass`` in the
    A-product, so ``inner_a(riesz_lift(f), v) == (f, v)_mass`` up to the
    solver tolerance.
    """
    f = np.asarray(f_pointwise, dtype=float)
    if f.shape != (space.dim,):
        raise ValueError("pointwise data length does not match space dimension")
    return solve_a(space.mass_weights * f, space, tol=tol)


_EMBEDDING_CACHE: "weakref.WeakKeyDictionary[DiscreteSpace, float]" = (
    weakref.WeakKeyDictionary()
)


def dominant_inverse_eig(space: DiscreteSpace,
                         apply_m: Callable[[np.ndarray], np.ndarray],
                         tol: float = 1e-7, max_iters: int = 5000) -> float:
    """Largest eigenvalue of ``A^{-1} M`` for a symmetric PSD map ``M``.

    Power iteration; the map is self-adjoint in the A-product, so the
    Rayleigh quotient ``x^T M x / x^T A x`` converges at the squared gap
    rate. Deterministic start vector, with one seeded restart before
    giving up.
    """
    def run(x0: np.ndarray) -> float | None:
        x = x0 / float(np.linalg.norm(x0))
        lam_old = None
        for _ in range(max_iters):
            mx = apply_m(x)
            num = float(np.dot(x, mx))
            den = float(np.dot(x, space.operator.apply(x)))
            lam = num / den
            if lam_old is not None and abs(lam - lam_old) <= tol * max(abs(lam), 1e-300):
                return lam
            lam_old = lam
            y = solve_a(mx, space, tol=1e-12).coeffs
            ynorm = float(np.linalg.norm(y))
            if ynorm == 0.0:
                return 0.0
            x = y / ynorm
        return None

    lam = run(np.ones(space.dim))
    if lam is None:
        rng = np.random.default_rng(0)
        lam = run(rng.standard_normal(space.dim))
    if lam is None:
        raise ConvergenceError(
            f"power iteration stagnated after {max_iters} iterations",
            iterations=max_iters,
        )
    return lam


def embedding_constant(space: DiscreteSpace) -> float:
    """Smallest ``c`` with ``l2_mass_norm(u) <= c * norm_a(u)`` for all u.

    Computed as the square root of the largest eigenvalue of the
    generalized problem mass-versus-A, by power iteration on
    ``A^{-1} W``. Relative accuracy about 1e-6. Results are cached per
    space object.
    """
    cached = _EMBEDDING_CACHE.get(space)
    if cached is not None:
        return cached
    w = space.mass_weights
    lam = dominant_inverse_eig(space, lambda x: w * x)
    if lam <= 0.0:
        raise IntegrityError("generalized eigenvalue came out non-positive")
    c = float(np.sqrt(lam))
    _EMBEDDING_CACHE[space] = c
    return c


def validate_space(space: DiscreteSpace, n_probes: int = 8, seed: int = 0) -> None:
    """Probe operator symmetry and strong monotonicity on random vectors.

    Raises ``IntegrityError`` on failure. Cheap enough to run after every
    assembly.
    """
    rng = np.random.default_rng(seed)
    a = space.operator
    for _ in range(n_probes):
        x = rng.standard_normal(space.dim)
        y = rng.standard_normal(space.dim)
        ax = a.apply(x)
        ay = a.apply(y)
        lhs = float(np.dot(ax, y))
        rhs = float(np.dot(x, ay))
        scale = max(abs(lhs), abs(rhs), 1.0)
        if abs(lhs - rhs) > 1e-12 * scale:
            raise IntegrityError(
                f"operator symmetry violated: {lhs} vs {rhs}"
            )
        quad = float(np.dot(ax, x))
        mass = float(np.dot(space.mass_weights, x * x))
        if quad < a.theta * mass * (1.0 - 1e-10) - 1e-14:
            raise IntegrityError(
                f"strong monotonicity violated: {quad} < theta * {mass}"
            )
