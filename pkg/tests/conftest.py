"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's solution paths: the
constrained fit is checked against projected functional gradient descent, and
the selection criteria against plain-Python double/quadruple loops.
"""

import math

import numpy as np
import pytest

from rkhsball.kernels import GaussianKernel, gram


def random_instance(rng, n_max=40, d_max=3, gamma_range=(0.5, 2.0)):
    """Random Gaussian-kernel regression instance (kernel, K, X, Y)."""
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    gamma = float(rng.uniform(*gamma_range))
    x = rng.uniform(0.0, 1.0, size=(n, d))
    y = rng.normal(0.0, 1.0, size=n)
    kernel = GaussianKernel(gamma=gamma, dim=d)
    return kernel, gram(kernel, x), x, y


def conditioned_instance(rng, n_max=6, cond_max=20.0):
    """Random well-conditioned PSD instance (K, Y); keeps gradient oracles honest."""
    n = int(rng.integers(2, n_max + 1))
    basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
    evals = rng.uniform(1.0 / cond_max, 1.0, size=n)
    k = (basis * evals) @ basis.T
    k = 0.5 * (k + k.T)
    y = rng.normal(0.0, 1.0, size=n)
    return k, y


def stable_radius_scale(k, y, cutoff=1e-6):
    """Interpolation-norm scale restricted to numerically trustworthy directions."""
    evals, vecs = np.linalg.eigh(k)
    proj = vecs.T @ y
    keep = evals > cutoff * max(float(evals.max()), 0.0)
    if not keep.any():
        return 1.0
    return float(np.sqrt(np.sum(proj[keep] ** 2 / evals[keep])))


def pgd_constrained_loss(k, y, r, iters=60000, tol=1e-15):
    """Projected functional gradient descent oracle for the constrained loss.

    Gradient steps on the kernel coefficients with the exact ball projection
    (radial scaling in the function-space geometry); returns the final
    empirical squared loss.
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if r == 0:
        return float(np.mean(y**2))
    lam_max = float(np.linalg.eigvalsh(k).max())
    if lam_max <= 0:
        return float(np.mean(y**2))
    step = n / (2.0 * lam_max)
    a = np.zeros(n)
    prev = math.inf
    for _ in range(iters):
        resid = k @ a - y
        a = a - step * (2.0 / n) * resid
        sq_norm = float(a @ (k @ a))
        if sq_norm > r * r:
            a *= r / math.sqrt(sq_norm)
        loss = float(np.mean((k @ a - y) ** 2))
        if abs(prev - loss) <= tol * (1.0 + loss):
            break
        prev = loss
    return float(np.mean((k @ a - y) ** 2))


def naive_fixed_criterion(preds, radii, tau, nu, n):
    """Plain-loop evaluation of the radius-selection criterion.

    Returns (rows, r_hat) with rows = [(r, bias_proxy, variance_term, total)].
    """
    sqrt_n = math.sqrt(n)
    rows = []
    for i, r in enumerate(radii):
        best = -math.inf
        for j in range(i, len(radii)):
            dist = sum((preds[i][t] - preds[j][t]) ** 2 for t in range(n)) / n
            best = max(best, dist - tau * (r + radii[j]) / sqrt_n)
        var = 2.0 * (1.0 + nu) * tau * r / sqrt_n
        rows.append((r, best, var, best + var))
    r_hat = min(rows, key=lambda row: (row[3], row[0]))[0]
    return rows, r_hat


def naive_gauss_criterion(preds, gammas, radii, tau, nu, dim, n):
    """Plain quadruple-loop evaluation of the width/radius criterion.

    ``preds[i][j]`` are the training predictions for width i, radius j.
    Returns (rows, gamma_hat, r_hat) with the tie-break: smallest total,
    then largest width, then smallest radius.
    """
    sqrt_n = math.sqrt(n)
    rows = []
    for i, gamma in enumerate(gammas):
        for j, r in enumerate(radii):
            best = -math.inf
            for p in range(0, i + 1):
                for q in range(j, len(radii)):
                    dist = sum((preds[i][j][t] - preds[p][q][t]) ** 2 for t in range(n)) / n
                    pen = tau * (gamma ** (-dim / 2.0) * r
                                 + gammas[p] ** (-dim / 2.0) * radii[q]) / sqrt_n
                    best = max(best, dist - pen)
            var = 2.0 * (1.0 + nu) * tau * gamma ** (-dim / 2.0) * r / sqrt_n
            rows.append((gamma, r, best, var, best + var))
    winner = min(rows, key=lambda row: (row[4], -row[0], row[1]))
    return rows, winner[0], winner[1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
