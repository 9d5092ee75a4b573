"""Saddle-point solvers: the alternating primal/multiplier iteration, a
symmetric-indefinite Krylov reference path, and the full mixed formulation.

All three act on the reduced SaddleSystem

    [A  B^T] [u    ]   [rhs_u    ]
    [B   0 ] [sigma] = [rhs_sigma]

(the mixed formulation replaces the zero block by -M0). Convergence is
declared only when both the primal residual ||rhs_u - A u - B^T sigma|| /
||rhs_u|| and the constraint residual ||B u - rhs_sigma|| / max(1, ||u||)
fall below the tolerance; either alone can stall misleadingly.

Solves are single-threaded and deterministic: fixed zero initial guesses
and a fixed-seed start vector for the spectral estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dofs import FormVector


class DivergedError(RuntimeError):
    """Raised when an iteration produces a non-finite iterate."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


@dataclass
class AhaParams:
    """Step sizes and stopping control for the alternating iteration.

    delta/omega default to 1/lam_hat with lam_hat a 20-step power-iteration
    estimate of ||A||; max_iter defaults to 200*sqrt(n_free) capped at 5e5.

    `augment` > 0 applies the identical two-line update to the equivalent
    augmented system (A + augment * B^T B, rhs_u + augment * B^T rhs_sigma),
    which has the same solution. The plain update is only marginally stable
    on loads with a component in the kernel of A (the multiplier/kernel
    error pair rotates with unit modulus); the augmentation contracts those
    modes and is required when the load is not discretely consistent.
    """

    delta: float | None = None
    omega: float | None = None
    tol: float = 1e-8
    max_iter: int | None = None
    lam_hat: float | None = None
    augment: float = 0.0

    def __post_init__(self):
        for name in ("delta", "omega", "tol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.augment < 0:
            raise ValueError("augment must be >= 0")


@dataclass(frozen=True)
class SolveResult:
    """Solver output over free DOFs, with per-iteration residual history."""

    u: FormVector
    sigma: FormVector
    iterations: int
    residual_primal: np.ndarray
    residual_constraint: np.ndarray
    converged: bool
    method: str


def estimate_operator_norm(A, iterations=20, seed=0):
    """Power-iteration estimate of the spectral norm of a sparse SPD matrix."""
    n = A.shape[0]
    if n == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    lam = 1.0
    for _ in range(iterations):
        w = A @ v
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 1.0
        v = w / lam
    return float(lam)


def auto_augmentation(system):
    """Augmentation weight balancing the kernel modes against ||A||.

    Returns ||A|| / ||B^T B|| (power-iteration estimates), so the augmented
    operator A + rho B^T B weights constraint energy at the scale of A.
    """
    lam_a = estimate_operator_norm(system.A)
    lam_b = estimate_operator_norm((system.B.T @ system.B).tocsr())
    return lam_a / lam_b if lam_b > 0 else 1.0


def _empty_result(system, method):
    return SolveResult(
        u=FormVector(1, np.zeros(system.A.shape[0])),
        sigma=FormVector(0, np.zeros(system.B.shape[0])),
        iterations=0,
        residual_primal=np.zeros(0),
        residual_constraint=np.zeros(0),
        converged=True,
        method=method,
    )


def _residual_scale(rhs_u):
    s = np.linalg.norm(rhs_u)
    return s if s > 0 else 1.0


def arrow_hurwicz(system, params=None):
    """Alternating multiplier-ascent / primal-descent iteration.

    Implements exactly

        sigma <- sigma + delta * (B u - rhs_sigma)
        u     <- u + omega * (rhs_u - A u - B^T sigma)

    from zero initial guesses, stopping when both residuals fall below the
    tolerance or max_iter is reached (returned as a non-converged result).
    A non-finite iterate raises DivergedError.
    """
    params = params or AhaParams()
    A, B = system.A, system.B
    n_u = A.shape[0]
    if n_u == 0:
        return _empty_result(system, "aha")

    rhs_u = system.rhs_u
    if params.augment > 0:
        A = (A + params.augment * (B.T @ B)).tocsr()
        rhs_u = rhs_u + params.augment * (B.T @ system.rhs_sigma)

    lam = params.lam_hat or estimate_operator_norm(A)
    omega = params.omega if params.omega is not None else 1.0 / lam
    delta = params.delta if params.delta is not None else omega
    max_iter = params.max_iter
    if max_iter is None:
        max_iter = int(min(200 * np.sqrt(n_u), 5e5))

    scale = _residual_scale(rhs_u)
    u = np.zeros(n_u)
    sigma = np.zeros(B.shape[0])
    Au = np.zeros(n_u)
    Bu = np.zeros(B.shape[0])
    hist_p, hist_c = [], []
    converged = False
    iterations = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, max_iter + 1):
            sigma += delta * (Bu - system.rhs_sigma)
            Bt_sigma = B.T @ sigma
            u += omega * (rhs_u - Au - Bt_sigma)
            Au = A @ u
            Bu = B @ u
            res_p = np.linalg.norm(rhs_u - Au - Bt_sigma) / scale
            res_c = np.linalg.norm(Bu - system.rhs_sigma) / max(
                1.0, np.linalg.norm(u)
            )
            if not (np.isfinite(res_p) and np.isfinite(res_c)):
                raise DivergedError("alternating iteration diverged", k)
            hist_p.append(res_p)
            hist_c.append(res_c)
            iterations = k
            if res_p <= params.tol and res_c <= params.tol:
                converged = True
                break
    return SolveResult(
        u=FormVector(1, u),
        sigma=FormVector(0, sigma),
        iterations=iterations,
        residual_primal=np.asarray(hist_p),
        residual_constraint=np.asarray(hist_c),
        converged=converged,
        method="aha",
    )


def _block_diag_preconditioner(A, B):
    """Inverse diagonal preconditioner: diag(A) and its induced Schur diagonal."""
    dA = A.diagonal()
    dA = np.where(dA > 0, dA, 1.0)
    dS = np.asarray(B.multiply(B) @ (1.0 / dA)).ravel()
    dS = np.where(dS > 0, dS, 1.0)
    dinv = np.concatenate([1.0 / dA, 1.0 / dS])
    n = dinv.size
    return spla.LinearOperator((n, n), matvec=lambda v: dinv * v)


def _residual_pair(system, x):
    n_u = system.A.shape[0]
    u, sigma = x[:n_u], x[n_u:]
    scale = _residual_scale(system.rhs_u)
    res_p = np.linalg.norm(system.rhs_u - system.A @ u - system.B.T @ sigma) / scale
    res_c = np.linalg.norm(system.B @ u - system.rhs_sigma) / max(
        1.0, np.linalg.norm(u)
    )
    return res_p, res_c


def _split_result(system, x, iterations, converged, method, hist_p, hist_c):
    n_u = system.A.shape[0]
    res_p, res_c = _residual_pair(system, x)
    return SolveResult(
        u=FormVector(1, x[:n_u]),
        sigma=FormVector(0, x[n_u:]),
        iterations=iterations,
        residual_primal=np.asarray(hist_p + [res_p]),
        residual_constraint=np.asarray(hist_c + [res_c]),
        converged=converged,
        method=method,
    )


def krylov_reference(system, tol=1e-8, max_iter=None):
    """Solve the same saddle system by preconditioned MINRES.

    Verification path independent of the alternating iteration; the
    indefinite matrix is handled by a symmetric Krylov recurrence with
    diagonal preconditioning of the A block (plus the induced diagonal
    Schur surrogate for the multiplier block). The result satisfies the
    same two-residual convergence contract.
    """
    n_u, n_s = system.A.shape[0], system.B.shape[0]
    if n_u == 0:
        return _empty_result(system, "krylov")
    kkt = sp.bmat(
        [[system.A, system.B.T], [system.B, None]], format="csr"
    )
    rhs = np.concatenate([system.rhs_u, system.rhs_sigma])
    if not np.linalg.norm(rhs) > 0:
        return _empty_result(system, "krylov")
    M = _block_diag_preconditioner(system.A, system.B)

    x = np.zeros(n_u + n_s)
    hist_p, hist_c = [], []

    def track(xk):
        rp, rc = _residual_pair(system, xk)
        hist_p.append(rp)
        hist_c.append(rc)

    rtol = tol
    for _ in range(4):
        x, info = spla.minres(
            kkt, rhs, x0=x, rtol=rtol, maxiter=max_iter, M=M, callback=track
        )
        if not np.isfinite(x).all():
            raise DivergedError("minres breakdown", len(hist_p))
        res_p, res_c = _residual_pair(system, x)
        if res_p <= tol and res_c <= tol:
            return _split_result(
                system, x, len(hist_p), True, "krylov", hist_p, hist_c
            )
        if info < 0:
            raise DivergedError("minres breakdown", len(hist_p))
        rtol *= 1e-2
        if rtol < 1e-15:
            break
    return _split_result(system, x, len(hist_p), False, "krylov", hist_p, hist_c)


def mixed_full_solve(system, tol=1e-10):
    """Solve the full mixed formulation with the 0-form mass block present:

        [A  B^T ] [u    ]   [rhs_u    ]
        [B  -M0 ] [sigma] = [rhs_sigma]

    For a discretely consistent load the multiplier stays near zero and u
    matches the constrained solve to discretization accuracy; for a pure
    gradient load the multiplier absorbs the gradient part instead of the
    constraint forcing it out of u.
    """
    n_u, n_s = system.A.shape[0], system.B.shape[0]
    if n_u == 0:
        return _empty_result(system, "mixed")
    kkt = sp.bmat(
        [[system.A, system.B.T], [system.B, -system.M0]], format="csr"
    )
    rhs = np.concatenate([system.rhs_u, system.rhs_sigma])
    if kkt.shape[0] <= 50_000:
        x = spla.spsolve(kkt.tocsc(), rhs)
        iters = 1
        if not np.isfinite(x).all():
            raise DivergedError("sparse factorization breakdown", 0)
    else:
        M = _block_diag_preconditioner(system.A, system.B)
        iters = [0]

        def count(_xk):
            iters[0] += 1

        x, info = spla.minres(kkt, rhs, rtol=tol, M=M, callback=count)
        iters = iters[0]
        if info < 0 or not np.isfinite(x).all():
            raise DivergedError("minres breakdown", iters)
    # residuals of the mixed system itself (its second row carries -M0 sigma)
    r = rhs - kkt @ x
    res_p = np.linalg.norm(r[:n_u]) / _residual_scale(system.rhs_u)
    res_c = np.linalg.norm(r[n_u:]) / max(1.0, np.linalg.norm(x[:n_u]))
    return SolveResult(
        u=FormVector(1, x[:n_u]),
        sigma=FormVector(0, x[n_u:]),
        iterations=iters,
        residual_primal=np.asarray([res_p]),
        residual_constraint=np.asarray([res_c]),
        converged=True,
        method="mixed",
    )


def dense_reference_solve(system):
    """Dense factorization of the saddle system (test oracle for small meshes)."""
    A = system.A.toarray()
    B = system.B.toarray()
    n_u, n_s = A.shape[0], B.shape[0]
    kkt = np.block([[A, B.T], [B, np.zeros((n_s, n_s))]])
    rhs = np.concatenate([system.rhs_u, system.rhs_sigma])
    x = np.linalg.solve(kkt, rhs)
    return x[:n_u], x[n_u:]


def solve(system, method="krylov", params=None, tol=1e-8):
    """Dispatch a solve by method name: 'aha', 'krylov' or 'mixed'."""
    if method == "aha":
        return arrow_hurwicz(system, params or AhaParams(tol=tol))
    if method == "krylov":
        return krylov_reference(system, tol=tol)
    if method == "mixed":
        return mixed_full_solve(system)
    raise ValueError(f"unknown solver {method!r}")


def m1_norm(system, values):
    """Mass-weighted norm of a free 1-form coefficient vector."""
    return float(np.sqrt(values @ (system.M1 @ values)))
