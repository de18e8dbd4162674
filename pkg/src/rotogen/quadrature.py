"""Weighted running averages on a uniform grid.

The startup maps are built from the operator

    K_lam[g](v) = v^(-lam) * integral_0^v g(eta) eta^(lam - 1) d eta

for real or complex ``lam`` with positive real part.  ``K_lam`` maps
polynomials to polynomials (``K_lam[eta^p] = v^p / (lam + p)``) and is
evaluated here by product integration: ``g`` is replaced on every panel by
its local cubic interpolant and the weight ``eta^(lam - 1)`` is integrated
against it (exact moments on the first panel, Gauss-Legendre elsewhere).
The result is exact for cubics, whatever ``lam`` is.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

GAUSS_POINTS = 10


def _lagrange_matrix(nodes):
    """Rows are monomial coefficients (ascending) of the Lagrange basis."""
    V = np.vander(np.asarray(nodes, dtype=float), increasing=True)
    return np.linalg.inv(V).T


@lru_cache(maxsize=64)
def _weights(n_panels: int, lam: complex):
    if n_panels < 3:
        raise ValueError("need at least three panels")
    lam_c = complex(lam)
    real = lam_c.imag == 0.0
    dtype = float if real else complex
    lam_v = lam_c.real if real else lam_c

    starts = np.clip(np.arange(n_panels) - 1, 0, n_panels - 3)
    W = np.empty((n_panels, 4), dtype=dtype)

    # first panel: exact moments of t^(lam-1) t^p on [0, 1]
    L0 = _lagrange_matrix([0, 1, 2, 3])
    moments = np.array([1.0 / (lam_v + p) for p in range(4)], dtype=dtype)
    W[0] = L0 @ moments

    x, w = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    k = np.arange(1, n_panels)
    t = k[:, None] + 0.5 * (x[None, :] + 1.0)  # (panels, gauss)
    wt = 0.5 * w[None, :] * np.exp((lam_v - 1.0) * np.log(t))
    # Lagrange basis values at the Gauss points, relative to each stencil
    rel = t - starts[k][:, None]
    basis = np.empty((len(k), GAUSS_POINTS, 4))
    for m in range(4):
        others = [i for i in range(4) if i != m]
        val = np.ones_like(rel)
        for i in others:
            val = val * (rel - i) / (m - i)
        basis[:, :, m] = val
    W[1:] = np.einsum("kg,kgm->km", wt, basis)
    W.setflags(write=False)
    starts.setflags(write=False)
    return W, starts


class Kernel:
    """``K_lam`` on the grid ``v_j = j V / N``, ``j = 0..N``.

    The operator is scale free: node values depend on ``g`` at the nodes
    only, not on ``V``.
    """

    def __init__(self, n_panels: int, lam):
        lam = complex(lam)
        if lam.real <= 0.0:
            raise ValueError("K_lam needs Re(lam) > 0")
        self.n = n_panels
        self.lam = lam if lam.imag != 0.0 else lam.real
        self.W, self.starts = _weights(n_panels, lam)
        j = np.arange(1, n_panels + 1, dtype=float)
        self.scale = np.exp(-self.lam * np.log(j))
        self._idx = self.starts[:, None] + np.arange(4)[None, :]

    def __call__(self, g):
        g = np.asarray(g)
        if g.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} node values, got {g.shape}")
        contrib = np.sum(self.W * g[self._idx], axis=1)
        out = np.empty(self.n + 1, dtype=np.result_type(contrib, g, self.scale))
        out[0] = g[0] / self.lam
        out[1:] = self.scale * np.cumsum(contrib)
        return out


@lru_cache(maxsize=64)
def kernel(n_panels: int, lam) -> Kernel:
    return Kernel(n_panels, lam)


def running_mean(g, n_panels: int):
    """``v^-1 integral_0^v g``, i.e. ``K_1``."""
    return kernel(n_panels, 1.0)(g)


def cumulative(g, V: float):
    """``integral_0^v g`` at every node of the grid on ``[0, V]``."""
    g = np.asarray(g)
    n = len(g) - 1
    v = np.linspace(0.0, V, n + 1)
    return v * running_mean(g, n)
