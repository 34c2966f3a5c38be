"""Shared numeric helpers for the test suite."""

import numpy as np


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_hermitian(rng, dim, norm=None):
    """Random dense Hermitian matrix, optionally rescaled to a given 1-norm."""
    a = random_complex(rng, (dim, dim))
    h = (a + a.conj().T) / 2
    if norm is not None:
        h *= norm / np.abs(h).sum(axis=0).max()
    return h


def haar_unitary(rng, dim):
    z = random_complex(rng, (dim, dim)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def expm_eigh(h):
    """exp(-i h) for Hermitian h via the spectral decomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T
