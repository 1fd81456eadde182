"""Shared fixtures and independent oracles for the test suite.

Oracles here never call the code paths they check: the finite-difference
Dirac spectrum, the Berry-curvature Riemann sum, and the random-object
constructions are self-contained.
"""

import numpy as np
import pytest

from specflow import SymbolFunction


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_projector(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(dim, rng)
    return u[:, :rank] @ u[:, :rank].conj().T


def random_hermitian(dim: int, rng: np.random.Generator,
                     scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_hermitian_symbol(rank: int, bandwidth: int,
                            rng: np.random.Generator,
                            scale: float = 0.2) -> SymbolFunction:
    """Hermitian-valued trigonometric polynomial: c_{-k} = c_k*."""
    coeffs = {0: scale * random_hermitian(rank, rng)}
    for k in range(1, bandwidth + 1):
        c = scale * (rng.normal(size=(rank, rank))
                     + 1j * rng.normal(size=(rank, rank)))
        coeffs[k] = c
        coeffs[-k] = c.conj().T
    return SymbolFunction(coeffs, rank=rank)


def random_trig_unitary(rank: int, rng: np.random.Generator,
                        max_winding: int = 2,
                        product_factors: int = 1):
    """Pointwise-unitary trigonometric polynomial U diag(e^{i n_j x}) V,
    optionally a product of several; returns (symbol, total winding)."""
    symbol = None
    total = 0
    for _ in range(product_factors):
        ns = rng.integers(-max_winding, max_winding + 1, size=rank)
        u = random_unitary(rank, rng)
        v = random_unitary(rank, rng)
        coeffs = {}
        for j, nj in enumerate(ns):
            e = np.zeros((rank, rank), dtype=complex)
            e[j, j] = 1.0
            blk = u @ e @ v
            coeffs[int(nj)] = coeffs.get(int(nj), 0) + blk
        factor = SymbolFunction(coeffs, rank=rank, unitary=True)
        symbol = factor if symbol is None else symbol.product(factor,
                                                              unitary=True)
        total += int(ns.sum())
    return symbol, total


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def fd_dirac_cos_spectrum(points: int = 1025, low_mode: int = 10,
                          n_wanted: int = 5) -> np.ndarray:
    """Finite-difference oracle for -i d/dx + cos(x): central differences
    on a periodic grid, keeping only eigenpairs whose eigenvectors are
    low-frequency (the central stencil also carries grid-scale doubler
    modes near zero, which the Fourier mass filter removes).  Returns the
    n_wanted eigenvalues closest to zero, sorted ascending."""
    m = points
    h = 2 * np.pi / m
    xs = h * np.arange(m)
    c = np.zeros((m, m), dtype=complex)
    idx = np.arange(m)
    c[idx, (idx + 1) % m] = 1.0 / (2 * h)
    c[idx, (idx - 1) % m] = -1.0 / (2 * h)
    ham = -1j * c + np.diag(np.cos(xs))
    w, v = np.linalg.eigh(ham)
    spectra = np.fft.fft(v, axis=0)
    freqs = np.fft.fftfreq(m, d=1.0 / m)
    low = np.abs(freqs) <= low_mode
    mass = (np.abs(spectra[low, :]) ** 2).sum(axis=0) \
        / (np.abs(spectra) ** 2).sum(axis=0)
    keep = w[mass > 0.9]
    order = np.argsort(np.abs(keep))
    return np.sort(keep[order[:n_wanted]])


def berry_chern_oracle(proj_fn, grid: int = 64) -> float:
    """Riemann sum of the Berry curvature -Tr(P [d1 P, d2 P]) / (2 pi i)
    with central differences; sign matches the package's plaquette
    orientation (the reference two-band wrap integrates to +1)."""
    bs = 2 * np.pi * np.arange(grid) / grid
    h = 2 * np.pi / grid
    total = 0.0 + 0.0j
    for i in range(grid):
        for j in range(grid):
            p = proj_fn(bs[i], bs[j])
            d1 = (proj_fn(bs[(i + 1) % grid], bs[j])
                  - proj_fn(bs[i - 1], bs[j])) / (2 * h)
            d2 = (proj_fn(bs[i], bs[(j + 1) % grid])
                  - proj_fn(bs[i], bs[j - 1])) / (2 * h)
            total += np.trace(p @ (d1 @ d2 - d2 @ d1)) * h * h
    return float((-total / (2j * np.pi)).real)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
