"""Gaussian-mixture input densities.

The joint distribution of the d correlated parameters is a finite mixture of
Gaussians. This module provides seeded sampling, pointwise density evaluation,
and exact raw moments E[xi^gamma]; the moment recursion replaces any sampling
or quadrature in everything built on top (basis construction, rule residuals,
reference statistics).
"""

import json
from dataclasses import dataclass

import numpy as np

from .basis import enumerate_indices

__all__ = [
    "GaussianMixture",
    "MomentTable",
    "MomentOverflowError",
    "sample",
    "density",
    "raw_moments",
    "mixture_to_json",
    "mixture_from_json",
]

WEIGHT_TOL = 1e-12
SYMMETRY_TOL = 1e-12


class MomentOverflowError(ValueError):
    """Moment recursion left the finite float range at some multi-index."""

    def __init__(self, gamma, component):
        self.gamma = tuple(gamma)
        self.component = component
        super().__init__(
            f"raw moment overflowed at gamma = {self.gamma} "
            f"(component {component}); order or covariance scale too extreme"
        )


class GaussianMixture:
    """Finite Gaussian mixture sum_k pi_k N(mu_k, Sigma_k) on R^d.

    Immutable after construction. Validation is strict: weights must form a
    probability vector, every covariance must be symmetric and admit a
    Cholesky factorization, and all components must share one dimension.
    Error messages name the offending component so config mistakes are easy
    to trace.
    """

    def __init__(self, mix_weights, means, covariances):
        w = np.asarray(mix_weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("mix_weights must be a nonempty vector")
        if np.any(w < 0):
            raise ValueError("mix_weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mix_weights sum to {w.sum()!r}, expected 1 within {WEIGHT_TOL:g}")
        if len(means) != w.size or len(covariances) != w.size:
            raise ValueError(
                f"got {w.size} weights, {len(means)} means, {len(covariances)} covariances"
            )
        means = [np.asarray(m, dtype=float) for m in means]
        covs = [np.asarray(S, dtype=float) for S in covariances]
        d = means[0].shape[0] if means[0].ndim == 1 else -1
        chols = []
        for k, (m, S) in enumerate(zip(means, covs)):
            if m.ndim != 1 or m.shape[0] != d:
                raise ValueError(f"component {k}: mean must be a vector of dimension {d}")
            if S.shape != (d, d):
                raise ValueError(f"component {k}: covariance must be {d}x{d}, got {S.shape}")
            asym = np.abs(S - S.T).max() if S.size else 0.0
            if asym > SYMMETRY_TOL:
                raise ValueError(
                    f"component {k}: covariance asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:g}"
                )
            try:
                chols.append(np.linalg.cholesky(S))
            except np.linalg.LinAlgError:
                raise ValueError(
                    f"component {k}: covariance is not positive definite"
                ) from None
        self._weights = w
        self._means = means
        self._covs = covs
        self._chols = chols
        for arr in [w, *means, *covs]:
            arr.flags.writeable = False

    @property
    def n_components(self):
        return self._weights.size

    @property
    def dim(self):
        return self._means[0].shape[0]

    @property
    def mix_weights(self):
        return self._weights

    @property
    def means(self):
        return self._means

    @property
    def covariances(self):
        return self._covs

    def cholesky_factors(self):
        """Lower-triangular factors L_k with L_k L_k^T = Sigma_k."""
        return self._chols

    def __repr__(self):
        return f"GaussianMixture(n_components={self.n_components}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Complete table of raw moments E[xi^gamma] for all |gamma| <= max_order.

    values maps exponent tuples to floats; the zero index is always present
    with value exactly 1.
    """

    max_order: int
    values: dict

    def __getitem__(self, gamma):
        return self.values[tuple(gamma)]


def sample(gm, n, seed):
    """Draw n i.i.d. vectors from the mixture.

    Component labels are drawn first, then each component's block is filled
    from standard normals pushed through that component's Cholesky factor.
    Deterministic given the seed.

    Returns
    -------
    ndarray, shape (n, dim)
    """
    if n < 1:
        raise ValueError(f"need n >= 1 draws, got {n}")
    rng = np.random.default_rng(seed)
    K = gm.n_components
    d = gm.dim
    comps = rng.choice(K, size=n, p=gm.mix_weights)
    X = np.empty((n, d))
    for k in range(K):
        mask = comps == k
        L = gm.cholesky_factors()[k]
        X[mask] = gm.means[k] + rng.standard_normal((int(mask.sum()), d)) @ L.T
    return X


def density(gm, x):
    """Mixture density sum_k pi_k N(x; mu_k, Sigma_k) at a point x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (gm.dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({gm.dim},)")
    d = gm.dim
    total = 0.0
    for k in range(gm.n_components):
        L = gm.cholesky_factors()[k]
        z = np.linalg.solve(L, x - gm.means[k])
        logdet = np.log(np.diag(L)).sum()
        total += gm.mix_weights[k] * np.exp(
            -0.5 * z @ z - logdet - 0.5 * d * np.log(2.0 * np.pi)
        )
    return float(total)


def _gaussian_moments(mu, cov, max_order, component, index_list):
    """Raw moments of one Gaussian component by exact recursion.

    m(gamma + e_i) = mu_i m(gamma) + sum_j Sigma_ij gamma_j m(gamma - e_j),
    with m(0) = 1; visiting indices in graded order guarantees every parent
    is already present.
    """
    d = len(mu)
    m = {(0,) * d: 1.0}
    # overflow is detected per entry and reported with the offending index
    with np.errstate(over="ignore", invalid="ignore"):
        for mi in index_list[1:]:
            g = mi.exponents
            i = next(j for j in range(d) if g[j] > 0)
            base = list(g)
            base[i] -= 1
            val = mu[i] * m[tuple(base)]
            for j in range(d):
                if base[j] > 0:
                    b2 = list(base)
                    b2[j] -= 1
                    val += cov[i, j] * base[j] * m[tuple(b2)]
            if not np.isfinite(val):
                raise MomentOverflowError(g, component)
            m[tuple(g)] = val
    return m


def raw_moments(gm, max_order):
    """Exact raw moments of the mixture up to total order max_order.

    The mixture moment is the weighted sum of per-component Gaussian moments.
    Callers building a basis of order 2p need moments to order 4p (the
    Gram matrix pairs two order-2p monomials).

    Returns
    -------
    MomentTable
    """
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    index_list = enumerate_indices(gm.dim, max_order)
    tables = [
        _gaussian_moments(gm.means[k], gm.covariances[k], max_order, k, index_list)
        for k in range(gm.n_components)
    ]
    w = gm.mix_weights
    values = {}
    for mi in index_list:
        g = mi.exponents
        values[g] = float(sum(w[k] * tables[k][g] for k in range(gm.n_components)))
    values[(0,) * gm.dim] = 1.0
    return MomentTable(max_order=max_order, values=values)


def mixture_to_json(gm):
    """Serialize to canonical JSON (fixed key order, round-trip decimals)."""
    obj = {
        "dim": int(gm.dim),
        "components": [
            {
                "weight": float(gm.mix_weights[k]),
                "mean": [float(v) for v in gm.means[k]],
                "cov": [[float(v) for v in row] for row in gm.covariances[k]],
            }
            for k in range(gm.n_components)
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def mixture_from_json(text):
    """Parse a mixture specification (see mixture_to_json for the schema)."""
    obj = json.loads(text)
    try:
        comps = obj["components"]
        weights = [c["weight"] for c in comps]
        means = [c["mean"] for c in comps]
        covs = [c["cov"] for c in comps]
        declared = int(obj["dim"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed mixture specification: missing {exc}") from None
    gm = GaussianMixture(weights, means, covs)
    if gm.dim != declared:
        raise ValueError(f"declared dim {declared} but components have dimension {gm.dim}")
    return gm
