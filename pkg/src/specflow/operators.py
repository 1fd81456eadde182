"""Fourier-truncated operators on the circle.

A first-order operator -i d/dx + V(x) acting on C^N-valued functions is
modeled on the span of the Fourier modes e^{ikx}, |k| <= K.  The basis is
mode-major: index (k + K) * N + n holds component n of mode k.  Spectral
truncation keeps the integer eigenvalues of the free operator exact and
avoids spurious doubler modes; assertions that involve products of symbols
exclude the modes near +-K where truncation bites.

Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import IllConditioned


@dataclass(frozen=True)
class FourierTruncation:
    """Finite Fourier window: modes -K..K, each carrying a C^N factor."""

    max_mode: int
    bundle_rank: int = 1

    def __post_init__(self):
        if self.max_mode < 1:
            raise ValueError(f"max_mode must be >= 1, got {self.max_mode}")
        if self.bundle_rank < 1:
            raise ValueError(f"bundle_rank must be >= 1, got {self.bundle_rank}")

    @property
    def dim(self) -> int:
        return (2 * self.max_mode + 1) * self.bundle_rank

    def modes(self) -> np.ndarray:
        """Mode number of each basis index (length ``dim``)."""
        return np.repeat(np.arange(-self.max_mode, self.max_mode + 1),
                         self.bundle_rank)

    def doubled(self) -> "FourierTruncation":
        return FourierTruncation(2 * self.max_mode, self.bundle_rank)


def _as_block(value, rank: int) -> np.ndarray:
    block = np.asarray(value, dtype=complex)
    if block.ndim == 0:
        block = block * np.eye(rank)
    if block.shape != (rank, rank):
        raise ValueError(f"coefficient block has shape {block.shape}, "
                         f"expected ({rank}, {rank})")
    block = block.copy()
    block.setflags(write=False)
    return block


@dataclass(frozen=True)
class SymbolFunction:
    """Matrix-valued function on the circle, stored by Fourier coefficients.

    g(x) = sum_k c_k e^{ikx} with c_k an N x N complex matrix.  Sampled
    input is converted by the discrete Fourier transform.  The ``unitary``
    flag is a promise that is verified on a sample grid at construction.
    """

    coefficients: Mapping[int, np.ndarray]
    rank: int
    unitary: bool = False
    native_grid: int | None = field(default=None, repr=False, compare=False)
    tolerances: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        clean = {}
        for k, c in self.coefficients.items():
            block = _as_block(c, self.rank)
            if np.abs(block).max() > 0:
                clean[int(k)] = block
        object.__setattr__(self, "coefficients", clean)
        if self.unitary:
            err = self.unitarity_defect()
            if err > self.tolerances.unitary:
                raise ValueError(
                    f"symbol marked unitary but ||g g* - I|| = {err:.3e}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, matrix, rank: int | None = None, **kw) -> "SymbolFunction":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim == 0:
            rank = rank or 1
            m = m * np.eye(rank)
        return cls({0: m}, rank=m.shape[0], **kw)

    @classmethod
    def exponential(cls, n: int, rank: int = 1, **kw) -> "SymbolFunction":
        """e^{inx} times the identity."""
        return cls({n: np.eye(rank)}, rank=rank, unitary=True, **kw)

    @classmethod
    def from_samples(cls, samples, rank: int | None = None, **kw) -> "SymbolFunction":
        """Uniform samples g(2*pi*j/M), j = 0..M-1; DFT gives coefficients
        for modes in [-M/2, M/2)."""
        arr = np.asarray(samples, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None, None]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError("samples must be scalars or square matrices")
        m = arr.shape[0]
        coeff = np.fft.fft(arr, axis=0) / m
        freqs = np.fft.fftfreq(m, d=1.0 / m).astype(int)
        return cls({int(k): coeff[i] for i, k in enumerate(freqs)},
                   rank=arr.shape[1], native_grid=m, **kw)

    # -- basic queries -----------------------------------------------------
    @property
    def bandwidth(self) -> int:
        return max((abs(k) for k in self.coefficients), default=0)

    def evaluate(self, xs) -> np.ndarray:
        """Values g(x) at the given points, shape (len(xs), N, N)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = np.zeros((len(xs), self.rank, self.rank), dtype=complex)
        for k, c in self.coefficients.items():
            out += np.exp(1j * k * xs)[:, None, None] * c[None]
        return out

    def unitarity_defect(self, samples: int = 0) -> float:
        # sampled-input symbols promise unitarity at their own sample
        # points; coefficient-built ones are checked on a dense grid
        m = samples or self.native_grid or max(4 * self.bandwidth + 8, 32)
        vals = self.evaluate(2 * np.pi * np.arange(m) / m)
        eye = np.eye(self.rank)
        return max(np.linalg.norm(v @ v.conj().T - eye, 2) for v in vals)

    def hermitian_defect(self) -> float:
        """max_k ||c_{-k} - c_k*||, the coefficient form of pointwise
        self-adjointness."""
        worst = 0.0
        for k, c in self.coefficients.items():
            other = self.coefficients.get(-k, np.zeros_like(c))
            worst = max(worst, float(np.abs(other - c.conj().T).max()))
        return worst

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return self.hermitian_defect() <= atol

    # -- algebra -----------------------------------------------------------
    def adjoint(self) -> "SymbolFunction":
        return SymbolFunction({-k: c.conj().T for k, c in self.coefficients.items()},
                              rank=self.rank, unitary=self.unitary)

    def derivative(self) -> "SymbolFunction":
        return SymbolFunction({k: 1j * k * c for k, c in self.coefficients.items()},
                              rank=self.rank)

    def __add__(self, other: "SymbolFunction") -> "SymbolFunction":
        self._check_rank(other)
        keys = set(self.coefficients) | set(other.coefficients)
        z = np.zeros((self.rank, self.rank))
        return SymbolFunction(
            {k: self.coefficients.get(k, z) + other.coefficients.get(k, z)
             for k in keys}, rank=self.rank)

    def __sub__(self, other: "SymbolFunction") -> "SymbolFunction":
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> "SymbolFunction":
        return SymbolFunction({k: factor * c for k, c in self.coefficients.items()},
                              rank=self.rank)

    def product(self, other: "SymbolFunction", unitary: bool = False) -> "SymbolFunction":
        """Pointwise product gh via coefficient convolution (exact for
        trigonometric polynomials)."""
        self._check_rank(other)
        out: dict[int, np.ndarray] = {}
        for k1, c1 in self.coefficients.items():
            for k2, c2 in other.coefficients.items():
                k = k1 + k2
                blk = c1 @ c2
                out[k] = out.get(k, 0) + blk
        return SymbolFunction(out, rank=self.rank, unitary=unitary)

    def bandlimit(self, kmax: int) -> "SymbolFunction":
        return SymbolFunction({k: c for k, c in self.coefficients.items()
                               if abs(k) <= kmax}, rank=self.rank)

    def hermitized(self) -> "SymbolFunction":
        """Project onto pointwise-Hermitian symbols (kills roundoff skew)."""
        keys = set(self.coefficients)
        keys |= {-k for k in keys}
        z = np.zeros((self.rank, self.rank))
        return SymbolFunction(
            {k: 0.5 * (self.coefficients.get(k, z)
                       + self.coefficients.get(-k, z).conj().T)
             for k in keys}, rank=self.rank)

    def _check_rank(self, other: "SymbolFunction"):
        if other.rank != self.rank:
            raise ValueError(f"symbol ranks differ: {self.rank} vs {other.rank}")


def gauge_transformed_potential(g: SymbolFunction,
                                potential: SymbolFunction | None = None) -> SymbolFunction:
    """Potential of g (-i d/dx + V) g^{-1}, namely i g' g* + g V g*.

    Requires a pointwise-unitary g; the result is Hermitian up to roundoff
    and is re-symmetrized exactly.
    """
    gstar = g.adjoint()
    out = g.derivative().product(gstar).scale(1j)
    if potential is not None:
        out = out + g.product(potential).product(gstar)
    return out.hermitized()


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense Hermitian matrix with its truncation metadata."""

    matrix: np.ndarray
    truncation: FourierTruncation
    label: str = ""
    tolerances: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.truncation.dim, self.truncation.dim):
            raise ValueError(f"matrix shape {m.shape} does not match "
                             f"truncation dim {self.truncation.dim}")
        scale = 1.0 + float(np.abs(m).max())
        defect = float(np.abs(m - m.conj().T).max())
        if defect > self.tolerances.hermitian_max * scale:
            raise ValueError(f"matrix is not Hermitian: defect {defect:.3e}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.truncation.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with a deterministic orthonormal eigenbasis."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def validate(self, matrix: np.ndarray, tolerances: Tolerances = DEFAULT):
        w, v = self.eigenvalues, self.eigenvectors
        if np.any(np.diff(w) < 0):
            raise AssertionError("eigenvalues not nondecreasing")
        norm = max(np.linalg.norm(matrix, 2), 1e-300)
        res = np.linalg.norm(matrix @ v - v * w[None, :], axis=0).max()
        if res > tolerances.eig_residual * norm:
            raise AssertionError(f"eigen residual {res:.3e} exceeds bound")
        gram = v.conj().T @ v
        if np.abs(gram - np.eye(v.shape[1])).max() > tolerances.gram:
            raise AssertionError("eigenbasis not orthonormal")


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-8 * max(np.abs(v).max(), 1e-300))
    if len(idx) == 0:
        return v
    lead = v[idx[0]]
    return v * (abs(lead) / lead)


def eigh(operator, tolerances: Tolerances = DEFAULT) -> EigenDecomposition:
    """Hermitian eigendecomposition with a fixed degeneracy tie-break.

    Within a degenerate cluster (relative gap below the configured
    threshold) the eigenvectors are phase-normalized (leading nonzero
    entry real positive) and ordered by leading index, then
    lexicographically, so identical input always yields identical output.
    """
    m = operator.matrix if isinstance(operator, TruncatedOperator) else np.asarray(operator)
    scale = 1.0 + float(np.abs(m).max())
    if np.abs(m - m.conj().T).max() > tolerances.hermitian_max * scale:
        raise ValueError("eigh requires a Hermitian matrix")
    w, v = np.linalg.eigh(m)
    v = np.stack([_canonical_phase(v[:, i]) for i in range(v.shape[1])], axis=1)

    cluster_tol = tolerances.degenerate_cluster * max(np.abs(w).max(), 1.0)
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > cluster_tol:
            if i - start > 1:
                v[:, start:i] = _sort_cluster(v[:, start:i])
            start = i
    v = v.copy()
    v.setflags(write=False)
    w = w.copy()
    w.setflags(write=False)
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def _sort_cluster(block: np.ndarray) -> np.ndarray:
    def key(col):
        a = np.abs(col)
        lead = int(np.argmax(a > 1e-8 * max(a.max(), 1e-300)))
        return (lead,) + tuple(np.round(np.c_[col.real, col.imag].ravel(), 9))
    order = sorted(range(block.shape[1]), key=lambda j: key(block[:, j]))
    return block[:, order]


def eigvalsh(operator) -> np.ndarray:
    m = operator.matrix if isinstance(operator, TruncatedOperator) else np.asarray(operator)
    return np.linalg.eigvalsh(m)


# -- builders ---------------------------------------------------------------

def build_derivative(trunc: FourierTruncation) -> TruncatedOperator:
    """The operator -i d/dx: diagonal with entry k on every copy of mode k."""
    return TruncatedOperator(np.diag(trunc.modes().astype(complex)), trunc,
                             label="-i d/dx")


def build_multiplication(symbol: SymbolFunction,
                         trunc: FourierTruncation) -> np.ndarray:
    """Block-Toeplitz matrix of pointwise multiplication by the symbol:
    B[j, k] = c_{j-k} over modes j, k in [-K, K].  Coefficients beyond
    mode 2K cannot couple truncated modes and are dropped.  The result is
    Hermitian exactly when the symbol is."""
    if symbol.rank != trunc.bundle_rank:
        raise ValueError(f"symbol rank {symbol.rank} does not match "
                         f"bundle rank {trunc.bundle_rank}")
    K, N = trunc.max_mode, trunc.bundle_rank
    out = np.zeros((trunc.dim, trunc.dim), dtype=complex)
    for d, c in symbol.coefficients.items():
        if abs(d) > 2 * K:
            continue
        for k in range(-K, K + 1):
            j = k + d
            if -K <= j <= K:
                out[(j + K) * N:(j + K + 1) * N, (k + K) * N:(k + K + 1) * N] = c
    return out


def build_dirac(potential: SymbolFunction, trunc: FourierTruncation,
                label: str = "") -> TruncatedOperator:
    """-i d/dx tensor I_N plus multiplication by a Hermitian potential."""
    if not potential.is_hermitian():
        raise ValueError("Dirac potential must be Hermitian-valued "
                         f"(defect {potential.hermitian_defect():.3e})")
    m = build_derivative(trunc).matrix + build_multiplication(potential, trunc)
    return TruncatedOperator(m, trunc, label=label or "dirac")


def numerical_rank(matrix, tol: float, tolerances: Tolerances = DEFAULT) -> int:
    """Number of singular values above tol * sigma_max; 0 for the zero
    matrix."""
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    m = np.asarray(matrix)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def rank_with_gap_check(matrix, tol: float,
                        tolerances: Tolerances = DEFAULT) -> int:
    """numerical_rank plus the contract that the singular spectrum splits
    cleanly: the smallest kept and largest dropped value must differ by the
    configured factor."""
    m = np.asarray(matrix)
    if m.size == 0:
        return 0
    s = np.sort(np.linalg.svd(m, compute_uv=False))[::-1]
    if s.size == 0 or s[0] == 0.0:
        return 0
    r = int(np.count_nonzero(s > tol * s[0]))
    if 0 < r < s.size:
        kept, dropped = s[r - 1], s[r]
        if dropped > 0 and kept / dropped < tolerances.svd_gap_factor:
            raise IllConditioned(
                f"singular values cluster at the threshold: "
                f"{kept:.3e} / {dropped:.3e} = {kept / dropped:.1f} "
                f"< {tolerances.svd_gap_factor}")
    return r


def conjugate(operator, unitary, tolerances: Tolerances = DEFAULT):
    """U M U* for a unitary U; preserves the spectrum and Hermiticity."""
    m = operator.matrix if isinstance(operator, TruncatedOperator) else np.asarray(operator)
    u = np.asarray(unitary, dtype=complex)
    defect = np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]), 2)
    if defect > tolerances.unitary:
        raise ValueError(f"conjugation requires a unitary matrix "
                         f"(defect {defect:.3e})")
    out = u @ m @ u.conj().T
    if isinstance(operator, TruncatedOperator):
        out = 0.5 * (out + out.conj().T)
        return TruncatedOperator(out, operator.truncation,
                                 label=operator.label + " conjugated")
    return out
