"""Orthonormal polynomial bases for correlated measures.

Basis functions are stored as rows of a lower-triangular coefficient matrix
over graded-lexicographic monomials. Orthonormalization uses exact moments of
the measure only, never samples, so construction is fully deterministic.
"""

import json
from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "MultiIndex",
    "OrthoBasis",
    "DegenerateBasisError",
    "enumerate_indices",
    "gram_schmidt",
    "eval_basis",
    "eval_basis_batch",
    "eval_basis_jacobian",
    "eval_basis_jacobian_batch",
    "basis_to_json",
    "basis_from_json",
]

# E[psi_hat^2] at or below this is treated as a numerically singular
# moment matrix rather than a small-but-usable pivot.
DEGENERACY_TOL = 1e-12

# Achieved orthonormality residual a constructed basis must satisfy.
ORTHONORMALITY_TOL = 1e-8


class DegenerateBasisError(ValueError):
    """Gram-Schmidt hit a (near-)zero norm: the moment matrix is singular."""

    def __init__(self, index, norm2):
        self.index = index
        self.norm2 = norm2
        super().__init__(
            f"degenerate basis at function index {index}: "
            f"E[psi_hat^2] = {norm2:.6e} <= {DEGENERACY_TOL:g} "
            "(nearly singular moment matrix)"
        )


@dataclass(frozen=True)
class MultiIndex:
    """Monomial exponent vector alpha with its total order |alpha|."""

    exponents: tuple

    @property
    def total_order(self):
        return int(sum(self.exponents))

    def __len__(self):
        return len(self.exponents)


def enumerate_indices(d, q):
    """All multi-indices with |alpha| <= q in graded-lexicographic order.

    Within a grade, ties are broken by comparing exponent vectors left to
    right with the higher exponent first, so for d=2, q=1 the order is
    (0,0), (1,0), (0,1). This convention is frozen: node and coefficient
    files depend on it.

    Parameters
    ----------
    d : int
        Dimension (number of variables), >= 1.
    q : int
        Maximum total order, >= 0.

    Returns
    -------
    list of MultiIndex, of length binom(d + q, d).
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if q < 0:
        raise ValueError(f"max order must be >= 0, got {q}")
    out = []

    def rec(prefix, rem, slots):
        if slots == 1:
            out.append(prefix + (rem,))
            return
        for k in range(rem, -1, -1):
            rec(prefix + (k,), rem - k, slots - 1)

    for t in range(q + 1):
        rec((), t, d)
    assert len(out) == comb(d + q, d)
    return [MultiIndex(a) for a in out]


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """Orthonormal basis Psi_j = sum_{i<=j} C[j,i] * p_i over graded-lex monomials p_i.

    Attributes
    ----------
    dim : int
    order : int
        Maximum total order q of included basis functions.
    indices : tuple of MultiIndex
        All |alpha| <= order in canonical order; length binom(dim+order, dim).
    coeff_matrix : ndarray, shape (N, N)
        Lower triangular with strictly positive diagonal; row j holds the
        monomial coefficients of Psi_j. Row 0 is e_1 (Psi_1 is constant 1).
    gram_residual : float
        Achieved max |E[Psi_i Psi_j] - delta_ij| under the exact moments
        the basis was built from.
    """

    dim: int
    order: int
    indices: tuple
    coeff_matrix: np.ndarray
    gram_residual: float

    @property
    def size(self):
        return len(self.indices)

    def exponent_matrix(self):
        """Exponents as an (N, dim) integer array."""
        return np.array([mi.exponents for mi in self.indices], dtype=int)


def _moment_gram(moments, idx):
    """Gram matrix of monomials, G[a,b] = E[xi^(alpha_a + alpha_b)]."""
    values = moments.values
    N = len(idx)
    G = np.empty((N, N))
    for a in range(N):
        ea = idx[a].exponents
        for b in range(a, N):
            g = values[tuple(x + y for x, y in zip(ea, idx[b].exponents))]
            G[a, b] = g
            G[b, a] = g
    return G


def gram_schmidt(moments, d, q):
    """Build the orthonormal basis of total order q by moment-based Gram-Schmidt.

    Implements psi_hat_j = p_j - sum_{i<j} E[p_j Psi_i] Psi_i followed by
    normalization, where every expectation reduces to lookups in the moment
    table (the integrand is a polynomial in monomial form). Modified
    Gram-Schmidt with one full re-orthogonalization pass is used because the
    moment matrices of high-order monomials are badly conditioned.

    Parameters
    ----------
    moments : MomentTable
        Must cover total order >= 2q.
    d, q : int
        Dimension and maximum total order.

    Returns
    -------
    OrthoBasis

    Raises
    ------
    DegenerateBasisError
        If some E[psi_hat_j^2] <= 1e-12, with the offending index j.
    ValueError
        If the moment table is too short or the achieved orthonormality
        residual exceeds 1e-8.
    """
    if moments.max_order < 2 * q:
        raise ValueError(
            f"moment table covers order {moments.max_order}, "
            f"need {2 * q} for a basis of order {q}"
        )
    idx = enumerate_indices(d, q)
    N = len(idx)
    G = _moment_gram(moments, idx)
    C = np.zeros((N, N))
    for j in range(N):
        c = np.zeros(N)
        c[j] = 1.0
        # two MGS sweeps: the second pass mops up cancellation error
        for _ in range(2):
            for i in range(j):
                c -= (c @ G @ C[i]) * C[i]
        nrm2 = c @ G @ c
        if nrm2 <= DEGENERACY_TOL:
            raise DegenerateBasisError(j, nrm2)
        C[j] = c / np.sqrt(nrm2)
    gram_residual = float(np.abs(C @ G @ C.T - np.eye(N)).max())
    if gram_residual > ORTHONORMALITY_TOL:
        raise ValueError(
            f"orthonormality residual {gram_residual:.3e} exceeds "
            f"{ORTHONORMALITY_TOL:g}; moment matrix too ill-conditioned"
        )
    return OrthoBasis(
        dim=d,
        order=q,
        indices=tuple(idx),
        coeff_matrix=C,
        gram_residual=gram_residual,
    )


def _power_table(basis, X):
    """P[i, e, :] = X[:, i] ** e for e = 0..order."""
    n, d = X.shape
    q = basis.order
    P = np.ones((d, q + 1, n))
    for i in range(d):
        for e in range(1, q + 1):
            P[i, e] = P[i, e - 1] * X[:, i]
    return P


def eval_basis_batch(basis, xs):
    """Evaluate all basis functions at many points.

    Parameters
    ----------
    xs : ndarray, shape (n, dim)

    Returns
    -------
    ndarray, shape (n, N) with entry (s, j) = Psi_j(xs[s]).
    """
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    n, d = X.shape
    if d != basis.dim:
        raise ValueError(f"points have dimension {d}, basis expects {basis.dim}")
    P = _power_table(basis, X)
    N = basis.size
    mono = np.ones((N, n))
    for a, mi in enumerate(basis.indices):
        v = np.ones(n)
        for i, e in enumerate(mi.exponents):
            if e:
                v = v * P[i, e]
        mono[a] = v
    return (basis.coeff_matrix @ mono).T


def eval_basis(basis, x):
    """Evaluate [Psi_1(x), ..., Psi_N(x)] at a single point x in R^dim."""
    return eval_basis_batch(basis, np.asarray(x, dtype=float)[None, :])[0]


def eval_basis_jacobian_batch(basis, xs):
    """Jacobians of all basis functions at many points.

    Returns
    -------
    ndarray, shape (N, dim, n) with entry (j, i, s) = dPsi_j/dxi_i at xs[s].
    """
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    n, d = X.shape
    if d != basis.dim:
        raise ValueError(f"points have dimension {d}, basis expects {basis.dim}")
    P = _power_table(basis, X)
    N = basis.size
    dmono = np.zeros((N, d, n))
    for a, mi in enumerate(basis.indices):
        g = mi.exponents
        for i in range(d):
            if g[i]:
                # d xi^g / d xi_i = g_i * xi^(g - e_i)
                v = np.full(n, float(g[i]))
                for j in range(d):
                    e = g[j] - (1 if j == i else 0)
                    if e:
                        v = v * P[j, e]
                dmono[a, i] = v
    return np.einsum("ab,bin->ain", basis.coeff_matrix, dmono)


def eval_basis_jacobian(basis, x):
    """N x dim matrix of partial derivatives dPsi_j/dxi_i at a single point."""
    return eval_basis_jacobian_batch(basis, np.asarray(x, dtype=float)[None, :])[:, :, 0]


def basis_to_json(basis):
    """Serialize to canonical JSON (fixed key order, round-trip decimals)."""
    return json.dumps(basis_to_dict(basis), indent=2) + "\n"


def basis_to_dict(basis):
    return {
        "dim": int(basis.dim),
        "order": int(basis.order),
        "indices": [list(mi.exponents) for mi in basis.indices],
        "coeff_matrix": [[float(v) for v in row] for row in basis.coeff_matrix],
        "gram_residual": float(basis.gram_residual),
    }


def basis_from_dict(obj):
    try:
        indices = tuple(MultiIndex(tuple(int(e) for e in a)) for a in obj["indices"])
        return OrthoBasis(
            dim=int(obj["dim"]),
            order=int(obj["order"]),
            indices=indices,
            coeff_matrix=np.array(obj["coeff_matrix"], dtype=float),
            gram_residual=float(obj["gram_residual"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed basis document: {exc}") from exc


def basis_from_json(text):
    """Parse a basis serialized by basis_to_json."""
    return basis_from_dict(json.loads(text))
