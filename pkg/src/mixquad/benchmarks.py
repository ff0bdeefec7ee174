"""Builtin benchmark mixtures and analytic stand-in models.

The toolkit ships two fully specified Gaussian-mixture inputs (gm6, six
parameters; gm4, four parameters) and two smooth analytic models that stand
in for external circuit simulators:

ro6, an oscillator-like response on six parameters,

    u = a . xi,  v = b . xi,
    ro6(xi) = 2.4 * exp(0.4 * u) / (1 + 0.3 * v^2),

and filter4, a resonator transmission on four parameters probed at a fixed
frequency. The resonance center shifts linearly with the parameters and the
line shape is Lorentzian:

    s = c . xi,  f_res(xi) = 1 + 0.03 * s,
    T(xi; f) = 1 / (1 + ((f - f_res(xi)) / 0.06)^2),

with the scalar benchmark evaluated at f = 1.06 (on the skirt of the
resonance for typical draws, so the response stays smooth and one-sided).
filter4_response exposes the same model on a whole frequency grid for
per-frequency projections. All constants here are frozen: tests use these
closed forms as oracles, and serialized artifacts depend on them.
"""

import numpy as np

from .distribution import GaussianMixture

__all__ = [
    "gm6",
    "gm4",
    "ro6",
    "filter4",
    "filter4_response",
    "FILTER4_PROBE",
    "FILTER4_GRID",
    "BUILTIN_MIXTURES",
    "BUILTIN_MODELS",
    "builtin_mixture",
    "builtin_model",
]

RO6_A = np.array([0.25, -0.2, 0.15, 0.2, -0.15, 0.1])
RO6_B = np.array([0.1, 0.15, -0.1, 0.05, 0.1, -0.05])

FILTER4_C = np.array([0.5, 0.3, 0.15, 0.05])
FILTER4_PROBE = 1.06
FILTER4_HALF_WIDTH = 0.06
FILTER4_GRID = np.linspace(0.9, 1.14, 33)


def _scaled_ar1(sig, rho):
    """Covariance sig_i sig_j rho^|i-j|: AR(1)-style correlation, per-axis scales."""
    s = np.asarray(sig, dtype=float)
    i = np.arange(s.size)
    return rho ** np.abs(i[:, None] - i[None, :]) * np.outer(s, s)


def gm6():
    """Six-parameter two-component benchmark mixture with opposite-sign correlations."""
    return GaussianMixture(
        mix_weights=[0.55, 0.45],
        means=[
            [-0.4, -0.2, 0.3, -0.3, 0.2, -0.1],
            [0.5, 0.3, -0.2, 0.2, -0.3, 0.2],
        ],
        covariances=[
            _scaled_ar1([0.8, 0.9, 0.7, 1.0, 0.8, 0.9], 0.35),
            _scaled_ar1([0.9, 0.7, 0.8, 0.7, 1.0, 0.8], -0.25),
        ],
    )


def gm4():
    """Four-parameter two-component benchmark mixture."""
    return GaussianMixture(
        mix_weights=[0.6, 0.4],
        means=[
            [-0.3, 0.2, -0.2, 0.3],
            [0.4, -0.3, 0.3, -0.2],
        ],
        covariances=[
            _scaled_ar1([0.9, 0.8, 1.0, 0.7], 0.4),
            _scaled_ar1([0.7, 1.0, 0.8, 0.9], -0.3),
        ],
    )


def ro6(X):
    """Oscillator-like six-parameter response; smooth, positive, nonlinear."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u = X @ RO6_A
    v = X @ RO6_B
    return 2.4 * np.exp(0.4 * u) / (1.0 + 0.3 * v * v)


def filter4_response(X, freqs=None):
    """Resonator transmission over a frequency grid.

    Returns an (n_points, n_freqs) array; column f holds the transmission of
    every parameter vector at frequency freqs[f]. Default grid FILTER4_GRID
    spans the resonance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if freqs is None:
        freqs = FILTER4_GRID
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    f_res = 1.0 + 0.03 * (X @ FILTER4_C)
    detune = (freqs[None, :] - f_res[:, None]) / FILTER4_HALF_WIDTH
    return 1.0 / (1.0 + detune * detune)


def filter4(X):
    """Scalar four-parameter benchmark: transmission at the fixed probe frequency."""
    return filter4_response(X, [FILTER4_PROBE])[:, 0]


BUILTIN_MIXTURES = {"gm6": gm6, "gm4": gm4}
BUILTIN_MODELS = {"ro6": ro6, "filter4": filter4}


def builtin_mixture(name):
    try:
        return BUILTIN_MIXTURES[name]()
    except KeyError:
        raise ValueError(
            f"unknown builtin mixture {name!r}; available: {sorted(BUILTIN_MIXTURES)}"
        ) from None


def builtin_model(name):
    try:
        return BUILTIN_MODELS[name]
    except KeyError:
        raise ValueError(
            f"unknown builtin model {name!r}; available: {sorted(BUILTIN_MODELS)}"
        ) from None
