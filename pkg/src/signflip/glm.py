"""Constrained GLM fitting, score contributions and Fisher information.

The null fit runs IRLS on the nuisance columns only, with the
hypothesized tested effect absorbed into the offset; the full fit runs
the same IRLS over all columns.  Convergence uses the relative deviance
criterion |dev - dev_old| < tol * (|dev| + 0.1) with step-halving on
deviance increases or invalid means.  All symmetric solves go through a
Cholesky factorization with a pivoted symmetric fallback; explicit
matrix inverses are never formed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DesignError, NumericalError

__all__ = [
    "NullFit",
    "FullFit",
    "ScoreSet",
    "InfoBlocks",
    "fit_null",
    "fit_full",
    "score_contributions",
    "information_blocks",
    "log_likelihood",
    "solve_spd",
]

MAX_ITER = 100
DEV_TOL = 1e-8
MAX_HALVINGS = 20
COND_LIMIT = 1e12


def solve_spd(A, B):
    """Solve A X = B for symmetric positive-definite A.

    Cholesky first; on failure falls back to the pivoted symmetric
    (Bunch-Kaufman) solver.  Raises NumericalError when both fail.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.size == 0:
        return np.zeros(B.shape)
    try:
        c = scipy.linalg.cho_factor(A, lower=True)
        return scipy.linalg.cho_solve(c, B)
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    try:
        return scipy.linalg.solve(A, B, assume_a="sym")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"symmetric solve failed: {exc}") from exc


@dataclass(frozen=True)
class NullFit:
    """Constrained fit under the null: nuisance MLE with tested effect fixed."""

    gamma_hat: np.ndarray
    beta0: np.ndarray
    mu_hat: np.ndarray
    eta_hat: np.ndarray
    W_hat: np.ndarray
    deviance: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FullFit:
    """Unconstrained fit over all design columns."""

    beta_hat: np.ndarray
    mu_hat: np.ndarray
    eta_hat: np.ndarray
    W_hat: np.ndarray
    deviance: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class InfoBlocks:
    """Partitioned average information n^-1 X'WX.

    ``I11`` is d x d for the tested coordinates, ``I12`` is
    (k-d) x d (nuisance rows, tested columns) and ``I22`` is the
    nuisance block.  ``i_star`` is the effective information
    I11 - I12' I22^-1 I12, computed by a factorization solve.
    """

    I11: np.ndarray
    I12: np.ndarray
    I22: np.ndarray
    i_star: np.ndarray


@dataclass(frozen=True)
class ScoreSet:
    """Per-observation score contributions at the null fit.

    ``nu`` holds the tested columns x_i (y_i - mu_i) / a_i, row per
    observation; ``nu_nuis`` the nuisance columns.  ``info`` carries the
    information blocks evaluated at the same fit.
    """

    nu: np.ndarray
    nu_nuis: np.ndarray
    info: InfoBlocks


def _irls(X, y, family, offset):
    """IRLS for a canonical-link GLM; returns the fit tuple.

    Works for zero-column X (nothing to fit: the linear predictor is the
    offset).  Raises NumericalError on non-convergence or when
    step-halving cannot produce a valid mean.
    """
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise DesignError(f"response has shape {y.shape}, expected ({n},)")

    if p == 0:
        eta = offset.astype(float).copy()
        mu = np.asarray(family.inv_link(eta), dtype=float)
        if not family.valid_mean(mu):
            raise NumericalError("offset-only predictor leaves the valid mean range")
        W = family.b_double_prime(eta) / family.dispersion(n)
        return np.zeros(0), eta, mu, W, family.deviance(y, mu), 0, True

    mu = np.asarray(family.initial_mean(y), dtype=float)
    eta = np.asarray(family.link(mu), dtype=float)
    dev = family.deviance(y, mu)
    a = family.dispersion(n)
    coef = None

    for it in range(1, MAX_ITER + 1):
        bpp = np.asarray(family.b_double_prime(eta), dtype=float)
        W = bpp / a
        z = (eta - offset) + (y - mu) / bpp
        Wz = W * z
        A = X.T @ (W[:, None] * X)
        rhs = X.T @ Wz
        coef_new = solve_spd(A, rhs)

        base = coef if coef is not None else np.zeros(p)
        step = coef_new - base
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            coef_try = base + t * step
            eta_try = offset + X @ coef_try
            mu_try = np.asarray(family.inv_link(eta_try), dtype=float)
            if family.valid_mean(mu_try) and np.all(np.isfinite(eta_try)):
                dev_try = family.deviance(y, mu_try)
                # fight deviance increases only once a previous iterate
                # exists; after the smallest step, accept what is valid
                no_increase = dev_try <= dev + 1e-10 * (abs(dev) + 1.0)
                if np.isfinite(dev_try) and (
                    coef is None or no_increase or t <= 2.0**-MAX_HALVINGS
                ):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            raise NumericalError(
                "IRLS step-halving failed: fitted mean left the valid range"
            )

        coef, eta, mu = coef_try, eta_try, mu_try
        dev_old, dev = dev, dev_try
        if abs(dev - dev_old) < DEV_TOL * (abs(dev) + 0.1):
            bpp = np.asarray(family.b_double_prime(eta), dtype=float)
            return coef, eta, mu, bpp / a, dev, it, True

    raise NumericalError(f"IRLS did not converge in {MAX_ITER} iterations")


def fit_null(y, design, family):
    """Maximize the likelihood over the nuisance block under the null.

    The tested effect ``X_tested @ null_value`` is folded into the
    offset, so only the nuisance coefficients (including any intercept)
    are estimated.  At convergence the nuisance score sums vanish.
    """
    if not family.can_fit:
        raise DesignError(f"family {family.name!r} cannot be a fitting target")
    family.validate_response(y)
    Z = design.X_nuisance
    coef, eta, mu, W, dev, it, conv = _irls(Z, y, family, design.fitting_offset)
    return NullFit(
        gamma_hat=coef,
        beta0=design.null_value.copy(),
        mu_hat=mu,
        eta_hat=eta,
        W_hat=W,
        deviance=dev,
        iterations=it,
        converged=conv,
    )


def fit_full(y, design, family):
    """Maximize the likelihood over all design columns."""
    if not family.can_fit:
        raise DesignError(f"family {family.name!r} cannot be a fitting target")
    family.validate_response(y)
    if np.linalg.matrix_rank(design.X) < design.k:
        raise DesignError("design matrix is rank deficient for the full fit")
    coef, eta, mu, W, dev, it, conv = _irls(design.X, y, family, design.offset)
    return FullFit(
        beta_hat=coef,
        mu_hat=mu,
        eta_hat=eta,
        W_hat=W,
        deviance=dev,
        iterations=it,
        converged=conv,
    )


def information_blocks(null_fit, design):
    """Partition n^-1 X' W X by (tested, nuisance) and form I*.

    Raises NumericalError when the nuisance block is numerically
    singular (condition estimate above 1e12).
    """
    W = null_fit.W_hat
    n = design.n
    XD = design.X_tested
    Z = design.X_nuisance
    WXD = W[:, None] * XD
    I11 = XD.T @ WXD / n
    I12 = Z.T @ WXD / n
    I22 = Z.T @ (W[:, None] * Z) / n
    if I22.shape[0]:
        evals = np.linalg.eigvalsh(I22)
        if evals[0] <= 0 or evals[-1] / evals[0] > COND_LIMIT:
            raise NumericalError(
                "nuisance information block is numerically singular"
            )
        i_star = I11 - I12.T @ solve_spd(I22, I12)
    else:
        i_star = I11.copy()
    return InfoBlocks(I11=I11, I12=I12, I22=I22, i_star=i_star)


def score_contributions(y, null_fit, design, family):
    """Per-observation scores for the tested and nuisance coordinates.

    Row i is x_i (y_i - mu_i) / a_i restricted to the respective column
    block, evaluated at the null fit (canonical link).
    """
    y = np.asarray(y, dtype=float)
    resid = (y - null_fit.mu_hat) / family.dispersion(design.n)
    nu = design.X_tested * resid[:, None]
    nu_nuis = design.X_nuisance * resid[:, None]
    info = information_blocks(null_fit, design)
    return ScoreSet(nu=nu, nu_nuis=nu_nuis, info=info)


def log_likelihood(params, y, design, family):
    """Sum of log densities at the full coefficient vector ``params``.

    Used as the finite-difference oracle for the score contributions and
    as a deviance reference; ``params`` follows the design column order.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (design.k,):
        raise DesignError(f"params has shape {params.shape}, expected ({design.k},)")
    y = np.asarray(y, dtype=float)
    eta = design.offset + design.X @ params
    mu = np.asarray(family.inv_link(eta), dtype=float)
    if not family.valid_mean(mu):
        raise DesignError("parameters leave the valid mean range")
    return float(np.sum(family.log_density(y, eta)))
