"""Hardy-space Toeplitz compressions, their Fredholm indices, winding
numbers, and discrete odd-Chern cochains.

Truncation-edge handling.  The compression of multiplication by e^{inx} to
modes 0..K is a square matrix, so its raw kernel and cokernel dimensions
are forced equal; the classical index lives in where the null vectors sit.
Genuine kernel/cokernel vectors of a band-limited unitary symbol decay
away from mode 0, while truncation artifacts concentrate within a
bandwidth of the top mode K.  The index routine therefore splits the small
singular subspaces of T and T* by mode localization (interior means
|mode| <= K/2) and counts only the interior part.  Every index is
recomputed at truncation 2K and must agree; that stability contract is the
module's main correctness device.

Degree-1 normalization.  The per-plaquette odd-Chern cochain carries the
frozen constant 1/(2 pi)^2: one factor of 2 pi per cohomology degree.  It
was fixed once by requiring the reference rank-1 twist family (Bott-type
symbol over the two-torus) to integrate to its plaquette Chern number and
is asserted by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .basegrid import BaseGrid
from .config import DEFAULT, Tolerances
from .errors import (GridResolutionError, IllConditioned, RoundingAmbiguous,
                     UnstableIndex)
from .flow import SpectralSection, aps_projection
from .operators import (FourierTruncation, SymbolFunction,
                        build_derivative, build_dirac, build_multiplication)

#: Degree-1 cochain normalization, one (2 pi) per cohomology degree; see
#: the module docstring for how the sign and power were frozen.
CH1_NORMALIZATION = 1.0 / (4.0 * np.pi ** 2)


def hardy_section(trunc: FourierTruncation,
                  tolerances: Tolerances = DEFAULT) -> SpectralSection:
    """Projection onto the nonnegative Fourier modes (the discrete Hardy
    space), i.e. the inclusive-at-zero positive projector of -i d/dx."""
    section = aps_projection(build_derivative(trunc), 0.0, policy="inclusive",
                             tolerances=tolerances)
    section = SpectralSection(
        section.projector, section.threshold_window, "hardy", section.basis,
        rebuilder=lambda tr: hardy_section(tr, tolerances))
    return section


def dirac_aps_section(potential: SymbolFunction, trunc: FourierTruncation,
                      cutoff: float = 0.0, policy: str = "inclusive",
                      tolerances: Tolerances = DEFAULT) -> SpectralSection:
    """Positive-cutoff projector of -i d/dx + V with a rebuild recipe, so
    Toeplitz indices over it can run the two-truncation stability check."""
    section = aps_projection(build_dirac(potential, trunc), cutoff,
                             policy=policy, tolerances=tolerances)
    return SpectralSection(
        section.projector, section.threshold_window,
        f"dirac-aps cutoff {cutoff:g}", section.basis,
        rebuilder=lambda tr: dirac_aps_section(potential, tr, cutoff, policy,
                                               tolerances))


@dataclass(frozen=True)
class ToeplitzOperator:
    """Compression P M_g P written in an orthonormal basis of Im P."""

    matrix: np.ndarray
    section: SpectralSection
    symbol: SymbolFunction
    truncation: FourierTruncation

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    def rebuild(self, trunc: FourierTruncation) -> "ToeplitzOperator":
        if self.section.rebuilder is None:
            raise UnstableIndex(
                "section carries no rebuild recipe, so the two-truncation "
                "stability contract cannot run; use hardy_section / "
                "dirac_aps_section or pass check_stability=False")
        return toeplitz_compress(self.section.rebuilder(trunc), self.symbol,
                                 trunc)

    def adjoint_matrix(self) -> np.ndarray:
        return self.matrix.conj().T


def toeplitz_compress(section: SpectralSection, symbol: SymbolFunction,
                      trunc: FourierTruncation,
                      tolerances: Tolerances = DEFAULT) -> ToeplitzOperator:
    """Matrix of P M_g P on Im P for a pointwise-unitary symbol."""
    defect = symbol.unitarity_defect()
    if defect > tolerances.unitary:
        raise ValueError(f"Toeplitz symbol must be unitary-valued "
                         f"(defect {defect:.3e})")
    if section.dim != trunc.dim:
        raise ValueError("section dimension does not match truncation")
    mg = build_multiplication(symbol, trunc)
    t = section.basis.conj().T @ mg @ section.basis
    return ToeplitzOperator(t, section, symbol, trunc)


def interior_compression(symbol: SymbolFunction, trunc: FourierTruncation,
                         tolerances: Tolerances = DEFAULT) -> np.ndarray:
    """Rectangular Hardy compression with the top bandwidth modes removed
    from the domain, so every retained column reproduces the untruncated
    operator exactly.  For nonnegative-winding symbols its null data is
    free of edge artifacts; used to hand honest matrix families to generic
    kernel extraction."""
    t = toeplitz_compress(hardy_section(trunc, tolerances), symbol, trunc,
                          tolerances)
    drop = symbol.bandwidth * trunc.bundle_rank
    if drop == 0:
        return t.matrix
    return t.matrix[:, :-drop]


# ---------------------------------------------------------------------------
# kernel/cokernel splitting at the truncation edge
# ---------------------------------------------------------------------------

def _interior_counts(lifted: np.ndarray, trunc: FourierTruncation,
                     tolerances: Tolerances) -> int:
    """Number of directions of the lifted subspace localized on interior
    modes |k| <= K/2 (principal-angle count against the interior mask)."""
    if lifted.shape[1] == 0:
        return 0
    interior = np.abs(trunc.modes()) <= trunc.max_mode // 2
    sv = np.linalg.svd(lifted[interior, :], compute_uv=False)
    return int(np.count_nonzero(sv > np.sqrt(tolerances.localization_mass)))


@dataclass(frozen=True)
class SmallSubspaces:
    """Numerically-null data of a Toeplitz compression, split by
    localization."""

    kernel_interior: np.ndarray      # lifted, dim x n_k
    cokernel_interior: np.ndarray    # lifted, dim x n_c
    kernel_dim: int
    cokernel_dim: int
    edge_artifacts: int
    singular_values: np.ndarray


def toeplitz_small_subspaces(t: ToeplitzOperator, tol: float | None = None,
                             tolerances: Tolerances = DEFAULT) -> SmallSubspaces:
    tol = tolerances.rank_rtol if tol is None else tol
    u, s, vh = np.linalg.svd(t.matrix)
    smax = max(float(s[0]) if s.size else 0.0, 1e-300)
    small = s < tol * smax
    ns = int(small.sum())
    if 0 < ns < s.size:
        gap = s[-ns - 1] / max(s[-1 * ns:].max(), 1e-300) if s[-ns:].max() > 0 \
            else np.inf
        if gap < tolerances.svd_gap_factor:
            raise IllConditioned(
                f"Toeplitz singular spectrum has no clean zero split: "
                f"ratio {gap:.1f} < {tolerances.svd_gap_factor}")
    basis = t.section.basis
    ker = basis @ vh.conj().T[:, -ns:] if ns else basis[:, :0]
    cok = basis @ u[:, -ns:] if ns else basis[:, :0]
    nk = _interior_counts(ker, t.truncation, tolerances)
    nc = _interior_counts(cok, t.truncation, tolerances)

    def interior_part(w, count):
        if count == 0:
            return w[:, :0]
        interior = np.abs(t.truncation.modes()) <= t.truncation.max_mode // 2
        uu, ss, vvh = np.linalg.svd(w[interior, :], full_matrices=False)
        directions = w @ vvh.conj().T[:, :count]
        q, _ = np.linalg.qr(directions)
        return q

    return SmallSubspaces(kernel_interior=interior_part(ker, nk),
                          cokernel_interior=interior_part(cok, nc),
                          kernel_dim=nk, cokernel_dim=nc,
                          edge_artifacts=2 * ns - nk - nc,
                          singular_values=s)


def fredholm_index(t: ToeplitzOperator, tol: float | None = None,
                   check_stability: bool = True,
                   tolerances: Tolerances = DEFAULT) -> int:
    """dim ker - dim coker of the compression, counting only
    interior-localized null directions; recomputed at doubled truncation
    and required to agree when ``check_stability`` is set."""
    sub = toeplitz_small_subspaces(t, tol, tolerances)
    index = sub.kernel_dim - sub.cokernel_dim
    if check_stability:
        t2 = t.rebuild(t.truncation.doubled())
        sub2 = toeplitz_small_subspaces(t2, tol, tolerances)
        index2 = sub2.kernel_dim - sub2.cokernel_dim
        if index2 != index:
            raise UnstableIndex(
                f"index {index} at K={t.truncation.max_mode} but {index2} "
                f"at K={t2.truncation.max_mode}")
    return index


# ---------------------------------------------------------------------------
# winding numbers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindingData:
    winding: int
    raw_integral: float
    grid: int


def winding(symbol: SymbolFunction, grid: int | None = None,
            tolerances: Tolerances = DEFAULT) -> WindingData:
    """Degree of det g : S^1 -> U(1) via the trapezoid integral of
    tr(g^{-1} g') / (2 pi i)."""
    grid = tolerances.winding_grid if grid is None else int(grid)
    if grid < 64:
        raise ValueError("winding needs at least 64 sample points")
    defect = symbol.unitarity_defect()
    if defect > tolerances.unitary:
        raise ValueError(f"winding expects a unitary symbol "
                         f"(defect {defect:.3e})")
    xs = 2 * np.pi * np.arange(grid) / grid
    g = symbol.evaluate(xs)
    dg = symbol.derivative().evaluate(xs)
    ginv = np.conj(np.swapaxes(g, -1, -2))
    integrand = np.trace(ginv @ dg, axis1=-2, axis2=-1)
    raw = complex(integrand.sum()) / (1j * grid)
    nearest = int(np.round(raw.real))
    if abs(raw.real - nearest) > tolerances.winding_ambiguity:
        raise RoundingAmbiguous(
            f"winding integral {raw.real:.6f} is {abs(raw.real - nearest):.3f} "
            f"from the nearest integer")
    return WindingData(winding=nearest, raw_integral=float(raw.real), grid=grid)


# ---------------------------------------------------------------------------
# odd Chern cochains over a base grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OddChernCochain:
    degree: int
    values: Mapping[tuple, float]
    total: float


def _family_values(g_family, base: BaseGrid):
    if callable(g_family):
        return {v: g_family(v) for v in base.vertices}
    return dict(g_family)


def odd_chern_integral(g_family, base: BaseGrid, n: int,
                       fiber_grid: int = 256,
                       tolerances: Tolerances = DEFAULT) -> OddChernCochain:
    """Discrete Chern-character cochain of the Toeplitz index bundle of a
    unitary symbol family.

    n = 0: the 0-cochain vertex -> -winding(g_v); checked locally constant.
    n = 1 (torus base): per-plaquette numbers built from the degree-three
    trace form of g^{-1} dg, base derivatives taken spectrally over the
    periodic grid, normalized by the frozen constant so the total over the
    closed base is the first Chern number of the index bundle.
    """
    fam = _family_values(g_family, base)
    if n == 0:
        values = {v: float(-winding(fam[v], tolerances=tolerances).winding)
                  for v in base.vertices}
        for a, b in base.edges:
            if abs(values[a] - values[b]) > tolerances.closedness:
                raise GridResolutionError(
                    f"degree-0 cochain jumps across edge {a} -> {b}")
        return OddChernCochain(0, values, float(sum(values.values())))
    if n != 1:
        raise ValueError("only degrees 0 and 1 are implemented")
    if not base.is_torus:
        raise ValueError("the degree-1 cochain needs a torus base")

    m = base.size
    rank = next(iter(fam.values())).rank
    xs = 2 * np.pi * np.arange(fiber_grid) / fiber_grid
    g = np.empty((m, m, fiber_grid, rank, rank), dtype=complex)
    dxg = np.empty_like(g)
    for (i, j) in base.vertices:
        g[i, j] = fam[i, j].evaluate(xs)
        dxg[i, j] = fam[i, j].derivative().evaluate(xs)

    freq = 1j * np.fft.fftfreq(m, d=1.0 / m)
    d1g = np.fft.ifft(freq[:, None, None, None, None] * np.fft.fft(g, axis=0),
                      axis=0)
    d2g = np.fft.ifft(freq[None, :, None, None, None] * np.fft.fft(g, axis=1),
                      axis=1)
    ginv = np.linalg.inv(g)
    a = ginv @ dxg
    b1 = ginv @ d1g
    b2 = ginv @ d2g
    density = np.trace(a @ (b1 @ b2 - b2 @ b1), axis1=-2, axis2=-1)
    density = 0.5 * density.sum(axis=2).real * (2 * np.pi / fiber_grid)

    h = 2 * np.pi / m
    values = {}
    for p in base.plaquettes:
        corners = base.plaquette_corners(p)
        avg = np.mean([density[c] for c in corners])
        values[p] = float(CH1_NORMALIZATION * avg * h * h)
    total = float(sum(values.values()))
    if abs(total - round(total)) > tolerances.chern_integer_guard:
        raise GridResolutionError(
            f"degree-1 cochain total {total:.4f} is not near an integer; "
            f"refine the base grid")
    # a 2-cochain on a closed surface has no 3-cells, so its discrete
    # exterior derivative vanishes identically; nothing further to check
    return OddChernCochain(1, values, total)
