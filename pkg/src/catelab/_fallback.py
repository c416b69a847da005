"""Pure-NumPy kernels. Signatures mirror the compiled ``_kernels`` module."""

import numpy as np

BACKEND = "python"


def simulate_linear(g, e, u, mu_x, mu_z, l00, l10, l11, betas, noise_sd, prop_kind, const_p):
    b0, b1, b2, b3, b4, b5 = betas
    x = mu_x + l00 * g[:, 0]
    z = mu_z + (l10 * g[:, 0] + l11 * g[:, 1])
    if prop_kind == 0:
        p = 1.0 / (1.0 + np.exp(-x))
    elif prop_kind == 1:
        p = 1.0 / (1.0 + np.exp(z - x))
    else:
        p = const_p
    base = b0 + b2 * x + b3 * z + noise_sd * e
    tau = b1 + b4 * x + b5 * z
    y0 = base
    y1 = base + tau
    ite = y1 - y0
    treated = u < p
    a = treated.astype(np.int8)
    y = np.where(treated, y1, y0)
    return x, z, a, y0, y1, y, ite


def fit_interaction(a, x, y):
    design = np.column_stack([np.ones_like(x), a, x, a * x])
    colnorm = np.linalg.norm(design, axis=0)
    q, r = np.linalg.qr(design, mode="reduced")
    rdiag = np.diag(r).copy()
    if np.any(rdiag == 0.0):
        return np.full(4, np.nan), np.nan, rdiag, colnorm
    qty = q.T @ y
    coef = np.empty(4)
    for k in range(3, -1, -1):
        coef[k] = (qty[k] - r[k, k + 1:] @ coef[k + 1:]) / r[k, k]
    resid = y - (coef[0] + coef[1] * a + coef[2] * x + coef[3] * (a * x))
    return coef, float(resid @ resid), rdiag, colnorm


def discordance_stats(c, t):
    mc = c.mean()
    mt = t.mean()
    dc = c - mc
    dt = t - mt
    opposite = int(np.count_nonzero(((c < 0) & (t > 0)) | ((c > 0) & (t < 0))))
    return float(mc), float(mt), float(dc @ dc / c.size), float(dt @ dt / c.size), float(dc @ dt / c.size), opposite
