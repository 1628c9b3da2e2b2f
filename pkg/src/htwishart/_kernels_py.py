"""Pure numpy versions of the compiled kernels (same signatures)."""
import numpy as np


def bartlett_factors(chi2, normals):
    chi2 = np.asarray(chi2, dtype=float)
    n, d = chi2.shape
    out = np.zeros((n, d, d))
    idx = np.arange(d)
    out[:, idx, idx] = np.sqrt(chi2)
    rows, cols = np.tril_indices(d, -1)
    out[:, rows, cols] = normals
    return out


def assemble_alg(T, Z, A, R, scale):
    # Y T = Z  <=>  T^T Y^T = Z^T
    Y = np.linalg.solve(np.swapaxes(T, 1, 2), np.swapaxes(Z, 1, 2))
    Y = np.swapaxes(Y, 1, 2)
    return scale * (A @ Y @ R)


def assemble_gauss(Z, A, B):
    return A @ Z @ B.T


def gram_batch(X, side, order):
    if side == 0:
        W = X @ np.swapaxes(X, 1, 2) / X.shape[2]
    else:
        W = np.swapaxes(X, 1, 2) @ X / X.shape[1]
    W = 0.5 * (W + np.swapaxes(W, 1, 2))
    if order == 2:
        W = W @ W
        W = 0.5 * (W + np.swapaxes(W, 1, 2))
    return W


def inverse_entries(T):
    n, d = T.shape[:2]
    cols = min(d, 2)
    rhs = np.zeros((d, cols))
    rhs[np.arange(cols), np.arange(cols)] = 1.0
    U = np.linalg.solve(T, np.broadcast_to(rhs, (n, d, cols)))
    out = np.zeros((n, 3))
    out[:, 0] = 2.0 * np.sum(U[:, :, 0] ** 2, axis=1)
    if d > 1:
        out[:, 1] = 2.0 * np.sum(U[:, :, 1] ** 2, axis=1)
        out[:, 2] = 2.0 * np.sum(U[:, :, 0] * U[:, :, 1], axis=1)
    return out


def trace_form(X, J, norm):
    return np.einsum("skj,kl,slj->s", X, J, X) / norm


def condition_bound(T):
    # forward substitution instead of solve: a zero pivot gives inf/nan, not an exception
    n, d = T.shape[:2]
    U = np.zeros((n, d, d))
    eye = np.eye(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(d):
            acc = eye[i] - np.einsum("sl,slj->sj", T[:, i, :i], U[:, :i, :])
            U[:, i, :] = acc / T[:, i, i, None]
        return np.sum(T * T, axis=(1, 2)) * np.sum(U * U, axis=(1, 2))
