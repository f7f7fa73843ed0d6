"""Independent cross-checks for the alternating scheme.

`newton_full` solves the stacked critical-point equations directly, with
no knowledge of the partial-energy splitting, so agreement with the
scheme is a genuine two-sided test. `fd_gradient_check` validates the
residual maps against finite differences of the energies, and
`brute_nash` scans a coefficient box exhaustively on tiny spaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConvergenceError
from .scheme import CoupledSystem, SolutionPair, energies, residual_u, residual_v
from .spaces import HVector, inner_a, norm_a

__all__ = [
    "OracleResult",
    "BruteScanReport",
    "newton_full",
    "fd_gradient_check",
    "brute_nash",
]


@dataclass(frozen=True)
class OracleResult:
    u_star: HVector
    v_star: HVector
    residual_norm: float
    iterations: int
    converged: bool


def _fd_jacobian(resid, x: np.ndarray, r0: np.ndarray) -> np.ndarray:
    m = x.size
    jac = np.empty((m, m))
    sqrt_eps = np.sqrt(np.finfo(float).eps)
    for j in range(m):
        step = sqrt_eps * (1.0 + abs(x[j]))
        xp = x.copy()
        xp[j] += step
        jac[:, j] = (resid(xp) - r0) / step
    return jac


def _gmres_step(resid, x: np.ndarray, r0: np.ndarray) -> np.ndarray:
    sqrt_eps = np.sqrt(np.finfo(float).eps)
    norm_x = float(np.linalg.norm(x))

    def matvec(w: np.ndarray) -> np.ndarray:
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return np.zeros_like(w)
        t = sqrt_eps * (1.0 + norm_x) / norm_w
        return (resid(x + t * w) - r0) / t

    op = LinearOperator((x.size, x.size), matvec=matvec)
    try:
        delta, info = gmres(op, -r0, rtol=1e-4, atol=0.0,
                            restart=60, maxiter=300)
    except TypeError:  # older scipy spells the relative tolerance "tol"
        delta, info = gmres(op, -r0, tol=1e-4, atol=0.0,
                            restart=60, maxiter=300)
    if info != 0:
        raise ConvergenceError(
            f"inner linear solve did not converge (gmres info {info})",
            residual=float(np.linalg.norm(r0)),
        )
    return delta


def newton_full(sys: CoupledSystem,
                init: tuple[HVector, HVector] | None = None,
                tol: float = 1e-8, max_iters: int = 50,
                jacobian_free: bool | None = None) -> OracleResult:
    """Damped Newton on the stacked residual (u - Nu, -v - Nv).

    The Jacobian is taken by finite differences, columnwise for small
    stacked dimension and matrix-free through restarted GMRES above 400
    unknowns (``jacobian_free`` overrides the switch). Convergence is
    declared on the same metric the scheme uses: both A-norm residuals at
    the pair below ``tol``. Line search halves the step until the squared
    euclidean residual decreases; running out of halvings or iterations
    raises `ConvergenceError`.
    """
    space = sys.space
    n = space.dim
    if init is None:
        x = np.zeros(2 * n)
    else:
        u0, v0 = init
        x = np.concatenate([np.asarray(u0.coeffs, float),
                            np.asarray(v0.coeffs, float)])
    if jacobian_free is None:
        jacobian_free = 2 * n > 400

    def split(vec: np.ndarray) -> tuple[HVector, HVector]:
        return space.wrap(vec[:n].copy()), space.wrap(vec[n:].copy())

    def resid(vec: np.ndarray) -> np.ndarray:
        u, v = split(vec)
        return np.concatenate([residual_u(sys, u, v).coeffs,
                               residual_v(sys, u, v).coeffs])

    r = resid(x)
    for it in range(max_iters):
        ru = norm_a(space.wrap(r[:n].copy()), space)
        rv = norm_a(space.wrap(r[n:].copy()), space)
        if max(ru, rv) <= tol:
            u, v = split(x)
            return OracleResult(u_star=u, v_star=v,
                                residual_norm=max(ru, rv),
                                iterations=it, converged=True)
        if jacobian_free:
            delta = _gmres_step(resid, x, r)
        else:
            delta = np.linalg.solve(_fd_jacobian(resid, x, r), -r)
        phi0 = float(r @ r)
        alpha = 1.0
        for _ in range(30):
            x_new = x + alpha * delta
            r_new = resid(x_new)
            if float(r_new @ r_new) <= (1.0 - 1e-4 * alpha) * phi0:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError(
                "line search could not reduce the stacked residual",
                residual=float(np.sqrt(phi0)), iterations=it,
            )
        x, r = x_new, r_new
    raise ConvergenceError(
        f"no convergence in {max_iters} iterations",
        residual=float(np.linalg.norm(r)), iterations=max_iters,
    )


def fd_gradient_check(sys: CoupledSystem, u: HVector, v: HVector,
                      step: float = 1e-4, n_dirs: int = 10,
                      seed: int = 0) -> float:
    """Largest relative mismatch between analytic and central-difference
    directional derivatives of the three energies at (u, v).

    Directions are unit vectors in the operator norm; the relative error
    uses max(1, |analytic|) as denominator so near-critical points do not
    inflate it. Checks the first energy against the u-residual, the second
    against the v-residual, and the total against their sum.
    """
    space = sys.space
    rng = np.random.default_rng(seed)
    ru = residual_u(sys, u, v)
    rv = residual_v(sys, u, v)
    worst = 0.0

    def unit_direction() -> HVector:
        raw = space.wrap(rng.standard_normal(space.dim))
        scale = norm_a(raw, space)
        return raw * (1.0 / scale)

    for _ in range(n_dirs):
        du = unit_direction()
        dv = unit_direction()

        e1p = energies(sys, u + step * du, v)[0]
        e1m = energies(sys, u - step * du, v)[0]
        an1 = inner_a(ru, du, space)
        worst = max(worst, abs((e1p - e1m) / (2.0 * step) - an1)
                    / max(1.0, abs(an1)))

        e2p = energies(sys, u, v + step * dv)[1]
        e2m = energies(sys, u, v - step * dv)[1]
        an2 = inner_a(rv, dv, space)
        worst = max(worst, abs((e2p - e2m) / (2.0 * step) - an2)
                    / max(1.0, abs(an2)))

        ep = energies(sys, u + step * du, v + step * dv)[2]
        em = energies(sys, u - step * du, v - step * dv)[2]
        an3 = an1 + an2
        worst = max(worst, abs((ep - em) / (2.0 * step) - an3)
                    / max(1.0, abs(an3)))
    return worst


@dataclass(frozen=True)
class BruteScanReport:
    """Exhaustive box scan around a candidate pair.

    ``min_e1_delta`` is the smallest E1(u* + d, v*) - E1(u*, v*) over the
    grid; ``max_e2_delta`` the largest E2(u*, v* + d) - E2(u*, v*). For a
    genuine min-max point the first stays above -slack and the second
    below +slack.
    """

    grid_n: int
    grid_radius: float
    slack: float
    min_e1_delta: float
    max_e2_delta: float

    @property
    def ok(self) -> bool:
        return (self.min_e1_delta >= -self.slack
                and self.max_e2_delta <= self.slack)


def brute_nash(sys: CoupledSystem, pair: SolutionPair,
               grid_radius: float = 0.5, grid_n: int = 401,
               slack: float | None = None) -> BruteScanReport:
    """Scan a coefficient box exhaustively; spaces of dimension 1 or 2 only.

    The slack defaults to a first-order allowance for the pair's residual,
    2 * radius * max residual, plus roundoff.
    """
    space = sys.space
    if space.dim > 2:
        raise ValueError("exhaustive scan is limited to dimension <= 2")
    if not pair.converged:
        raise ValueError("the candidate pair did not converge")
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3")
    if slack is None:
        slack = 2.0 * grid_radius * max(pair.residuals) + 1e-12

    line = np.linspace(-grid_radius, grid_radius, grid_n)
    if space.dim == 1:
        offsets = line.reshape(-1, 1)
    else:
        ax, ay = np.meshgrid(line, line)
        offsets = np.column_stack([ax.reshape(-1), ay.reshape(-1)])

    e1_star, e2_star, _ = energies(sys, pair.u_star, pair.v_star)
    min_e1 = np.inf
    max_e2 = -np.inf
    for off in offsets:
        du = space.wrap(off.copy())
        e1 = energies(sys, pair.u_star + du, pair.v_star)[0]
        e2 = energies(sys, pair.u_star, pair.v_star + du)[1]
        min_e1 = min(min_e1, e1 - e1_star)
        max_e2 = max(max_e2, e2 - e2_star)

    return BruteScanReport(grid_n=grid_n, grid_radius=grid_radius,
                           slack=float(slack),
                           min_e1_delta=float(min_e1),
                           max_e2_delta=float(max_e2))
