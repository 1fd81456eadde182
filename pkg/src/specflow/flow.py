"""Spectral flow of operator curves and finite spectral sections.

The crossing count uses a gap-partition scheme: the parameter interval is
adaptively bisected until every subinterval admits a level a > 0 with both
+a and -a certifiably outside the spectrum throughout (sampled spectra plus
a Lipschitz bound on the operator curve).  On such a subinterval the
flow contribution is the change in the number of eigenvalues inside
[0, a); eigenvalues can enter or leave that window only through zero.

Sign convention: an eigenvalue moving from lambda < 0 to lambda >= 0
contributes +1; zero eigenvalues at interval ends count on the
nonnegative side, matching the inclusive-at-zero default of
``aps_projection``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (EigenvalueAtCutoff, IllConditioned, InvalidSection,
                     NoGapFound, ResolutionExceeded, UnstableIndex)
from .operators import (FourierTruncation, SymbolFunction, TruncatedOperator,
                        build_dirac, eigh, eigvalsh)


# ---------------------------------------------------------------------------
# spectral sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralSection:
    """Orthogonal projector that agrees with the positive spectral
    projector above a threshold window and vanishes below it."""

    projector: np.ndarray
    threshold_window: float
    provenance: str
    basis: np.ndarray = field(repr=False)
    rebuilder: Callable[[FourierTruncation], "SpectralSection"] | None = \
        field(default=None, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.projector, dtype=complex).copy()
        p.setflags(write=False)
        object.__setattr__(self, "projector", p)
        b = np.asarray(self.basis, dtype=complex).copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.projector.shape[0]

    def validate(self, tolerances: Tolerances = DEFAULT):
        p = self.projector
        if np.linalg.norm(p @ p - p, 2) > tolerances.projector_idempotent:
            raise InvalidSection("projector is not idempotent")
        if np.linalg.norm(p - p.conj().T, 2) > tolerances.projector_hermitian:
            raise InvalidSection("projector is not Hermitian")

    def complement(self) -> "SpectralSection":
        p = np.eye(self.dim) - self.projector
        w, v = np.linalg.eigh(p)
        basis = v[:, w > 0.5]
        return SpectralSection(p, self.threshold_window,
                               self.provenance + " complement", basis)


def section_from_basis(basis: np.ndarray, threshold_window: float = 0.0,
                       provenance: str = "explicit") -> SpectralSection:
    basis = np.asarray(basis, dtype=complex)
    return SpectralSection(basis @ basis.conj().T, threshold_window,
                           provenance, basis)


def aps_projection(operator: TruncatedOperator, cutoff: float,
                   policy: str = "strict",
                   tolerances: Tolerances = DEFAULT) -> SpectralSection:
    """Projector onto the eigenspaces with eigenvalue >= cutoff.

    ``policy`` controls eigenvalues within ``cutoff_atol`` of the cutoff:
    "strict" raises, "inclusive" keeps them, "exclusive" drops them.
    """
    if policy not in ("strict", "inclusive", "exclusive"):
        raise ValueError(f"unknown cutoff policy {policy!r}")
    dec = eigh(operator, tolerances)
    w = dec.eigenvalues
    atol = tolerances.cutoff_atol
    at_cut = np.abs(w - cutoff) <= atol
    if policy == "strict":
        if np.any(at_cut):
            raise EigenvalueAtCutoff(
                f"eigenvalue {w[at_cut][0]:.12g} within {atol:g} of cutoff "
                f"{cutoff:g}; pass policy='inclusive' or 'exclusive'")
        keep = w >= cutoff
    elif policy == "inclusive":
        keep = w >= cutoff - atol
    else:
        keep = w > cutoff + atol

    basis = dec.eigenvectors[:, keep]
    projector = basis @ basis.conj().T
    # the window must cover the cutoff tolerance band; add half the gap to
    # the nearest eigenvalue beyond the band as slack
    outside = np.abs(w - cutoff) - atol
    outside = outside[outside > 0]
    slack = 0.5 * float(outside.min()) if outside.size else 0.0
    return SpectralSection(projector, abs(cutoff) + atol + slack,
                           provenance=f"aps cutoff {cutoff:g} ({policy})",
                           basis=basis)


def section_condition_defect(operator: TruncatedOperator,
                             section: SpectralSection,
                             tolerances: Tolerances = DEFAULT) -> float:
    """Worst violation of the section condition: eigenvectors above the
    window must be fixed, eigenvectors below must be annihilated."""
    dec = eigh(operator, tolerances)
    w, v = dec.eigenvalues, dec.eigenvectors
    p = section.projector
    R = section.threshold_window
    worst = 0.0
    above = w > R
    if np.any(above):
        cols = v[:, above]
        worst = max(worst, float(np.linalg.norm(p @ cols - cols, axis=0).max()))
    below = w < -R
    if np.any(below):
        cols = v[:, below]
        worst = max(worst, float(np.linalg.norm(p @ cols, axis=0).max()))
    return worst


def validate_section_for(operator: TruncatedOperator, section: SpectralSection,
                         tolerances: Tolerances = DEFAULT):
    section.validate(tolerances)
    defect = section_condition_defect(operator, section, tolerances)
    if defect > tolerances.section_condition:
        raise InvalidSection(
            f"section condition fails with defect {defect:.3e} "
            f"(window R = {section.threshold_window:g})")


# ---------------------------------------------------------------------------
# difference elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DifferenceElement:
    """Index data of the comparison map between two projector ranges."""

    value: int
    kernel_dim: int
    cokernel_dim: int

    def __post_init__(self):
        assert self.value == self.kernel_dim - self.cokernel_dim


def comparison_map(p: SpectralSection, q: SpectralSection) -> np.ndarray:
    """Matrix of Q restricted to Im P -> Im Q in orthonormal bases."""
    if p.dim != q.dim:
        raise ValueError("projectors act on different spaces")
    return q.basis.conj().T @ p.basis


def difference_element(p: SpectralSection, q: SpectralSection,
                       tol: float = None,
                       tolerances: Tolerances = DEFAULT) -> DifferenceElement:
    """Index of Q o P : Im P -> Im Q, the finite difference element [P - Q].

    Raises IllConditioned when singular values of the comparison map
    cluster at the rank threshold.
    """
    tol = tolerances.rank_rtol if tol is None else tol
    t = comparison_map(p, q)
    rp, rq = p.rank, q.rank
    if min(t.shape) == 0:
        rank = 0
    else:
        s = np.sort(np.linalg.svd(t, compute_uv=False))[::-1]
        if s[0] == 0.0:
            rank = 0
        else:
            thresh = tol * s[0]
            near = (s > thresh / 10) & (s < thresh * 10)
            if np.any(near):
                raise IllConditioned(
                    f"comparison-map singular value {s[near][0]:.3e} sits at "
                    f"the rank threshold {thresh:.3e}")
            rank = int(np.count_nonzero(s > thresh))
    return DifferenceElement(value=rp - rq, kernel_dim=rp - rank,
                             cokernel_dim=rq - rank)


# ---------------------------------------------------------------------------
# operator curves
# ---------------------------------------------------------------------------

class OperatorCurve:
    """Sampled curve [0, 1] -> Hermitian truncated operators.

    When built from potentials the curve refines itself exactly
    (linear-in-symbol interpolation); a plain matrix curve falls back to
    piecewise-linear interpolation between samples, which is then the curve
    being analyzed.
    """

    def __init__(self, ts: Sequence[float], operators: Sequence[TruncatedOperator],
                 generator: Callable[[float], TruncatedOperator] | None = None,
                 potentials: Sequence[SymbolFunction] | None = None,
                 interpolation: str = "linear"):
        ts = np.asarray(ts, dtype=float)
        if ts.ndim != 1 or len(ts) != len(operators) or len(ts) < 2:
            raise ValueError("need matching ts/operators with at least 2 samples")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("parameter samples must be strictly increasing")
        if abs(ts[0]) > 1e-12 or abs(ts[-1] - 1.0) > 1e-12:
            raise ValueError("curve must be sampled on [0, 1] with endpoints")
        trunc = operators[0].truncation
        for op in operators:
            if op.truncation != trunc:
                raise ValueError("all operators must share one truncation")
        self.ts = ts
        self.operators = list(operators)
        self.truncation = trunc
        self.generator = generator
        self.potentials = list(potentials) if potentials is not None else None
        self.interpolation = interpolation
        self._cache: dict[float, TruncatedOperator] = {
            float(t): op for t, op in zip(ts, operators)}

    @classmethod
    def from_potentials(cls, ts, potentials: Sequence[SymbolFunction],
                        trunc: FourierTruncation) -> "OperatorCurve":
        ts = np.asarray(ts, dtype=float)
        ops = [build_dirac(p, trunc) for p in potentials]
        curve = cls(ts, ops, potentials=potentials,
                    interpolation="linear-in-symbol")
        return curve

    @classmethod
    def from_generator(cls, generator, trunc: FourierTruncation,
                       samples: int = 9) -> "OperatorCurve":
        ts = np.linspace(0.0, 1.0, samples)
        return cls(ts, [generator(float(t)) for t in ts], generator=generator)

    def potential_at(self, t: float) -> SymbolFunction:
        if self.potentials is None:
            raise ValueError("curve carries no potential data")
        i = bisect.bisect_right(self.ts, t) - 1
        i = min(max(i, 0), len(self.ts) - 2)
        t0, t1 = self.ts[i], self.ts[i + 1]
        lam = (t - t0) / (t1 - t0)
        return self.potentials[i].scale(1 - lam) + self.potentials[i + 1].scale(lam)

    def at(self, t: float) -> TruncatedOperator:
        t = float(t)
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        if self.generator is not None:
            op = self.generator(t)
        elif self.potentials is not None:
            op = build_dirac(self.potential_at(t), self.truncation)
        else:
            i = bisect.bisect_right(self.ts, t) - 1
            i = min(max(i, 0), len(self.ts) - 2)
            t0, t1 = self.ts[i], self.ts[i + 1]
            lam = (t - t0) / (t1 - t0)
            m = (1 - lam) * self.operators[i].matrix \
                + lam * self.operators[i + 1].matrix
            op = TruncatedOperator(m, self.truncation)
        self._cache[t] = op
        return op

    def reparametrized(self, new_ts) -> "OperatorCurve":
        """Same operators attached to a new monotone sample grid."""
        return OperatorCurve(new_ts, self.operators, potentials=self.potentials,
                             interpolation=self.interpolation)


# ---------------------------------------------------------------------------
# gap partition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapInterval:
    t_left: float
    t_right: float
    level: float
    margin: float


@dataclass(frozen=True)
class Partition:
    intervals: tuple[GapInterval, ...]

    @property
    def breakpoints(self) -> list[float]:
        return [self.intervals[0].t_left] + [iv.t_right for iv in self.intervals]

    @property
    def min_gap(self) -> float:
        return min(iv.margin for iv in self.intervals)


def certify_level(evals_left, evals_right, lipschitz: float, width: float,
                  tolerances: Tolerances = DEFAULT) -> tuple[float, float] | None:
    """Find a level a > 0 with +-a certifiably outside the sampled spectra
    for the whole subinterval, or None.

    The arguments are eigenvalue arrays, or lists of arrays (one per family
    member).  Certification: the distance from +-a to every sampled
    spectrum must exceed half the Lipschitz drift lipschitz * width, and
    for families the count of eigenvalues above the level must agree
    across members at each end, so the transported projectors have a
    well-defined constant rank over the base.  Returns (a, margin)
    maximizing the margin over gap midpoints of the merged |spectrum|.
    """
    lists = [np.sort(np.asarray(e)) for e in
             (evals_left if isinstance(evals_left, list) else [evals_left])]
    lists_r = [np.sort(np.asarray(e)) for e in
               (evals_right if isinstance(evals_right, list) else [evals_right])]
    merged = np.sort(np.abs(np.concatenate(lists + lists_r)))
    merged = merged[np.concatenate([[True], np.diff(merged) > 1e-14])]
    candidates = []
    if merged.size and merged[0] > 0:
        candidates.append(0.5 * merged[0])
    candidates.extend(0.5 * (merged[:-1] + merged[1:]))
    if not candidates:
        candidates = [1.0]

    def dist(x):
        return min(np.abs(sp - x).min() for sp in lists + lists_r)

    def count_constant(a):
        for group in (lists, lists_r):
            counts = {int((sp > a).sum()) for sp in group}
            if len(counts) != 1:
                return False
        return True

    need = max(0.5 * lipschitz * width, tolerances.cutoff_atol)
    best, best_margin = None, -np.inf
    for a in candidates:
        if a <= tolerances.cutoff_atol:
            continue
        margin = min(dist(a), dist(-a))
        if margin > max(best_margin, need) and count_constant(a):
            best, best_margin = a, margin
    if best is None:
        return None
    return float(best), float(best_margin)


class _SpectrumCache:
    def __init__(self, curve: OperatorCurve):
        self.curve = curve
        self._evals: dict[float, np.ndarray] = {}

    def __call__(self, t: float) -> np.ndarray:
        t = float(t)
        if t not in self._evals:
            self._evals[t] = eigvalsh(self.curve.at(t))
        return self._evals[t]

    def lipschitz(self, u: float, v: float, safety: float) -> float:
        du = self.curve.at(v).matrix - self.curve.at(u).matrix
        rate = np.linalg.norm(du, 2) / (v - u)
        return safety * rate


def gap_partition(curve: OperatorCurve, tolerances: Tolerances = DEFAULT,
                  lipschitz: float | None = None,
                  initial_breaks: Sequence[float] | None = None,
                  _cache: "_SpectrumCache | None" = None) -> Partition:
    """Adaptively bisect [0, 1] into subintervals each carrying a certified
    spectral-gap level.  Raises NoGapFound at the resolution floor and
    ResolutionExceeded past the subdivision budget."""
    cache = _cache if _cache is not None else _SpectrumCache(curve)
    breaks = list(initial_breaks) if initial_breaks is not None else list(curve.ts)
    stack = [(breaks[i], breaks[i + 1]) for i in range(len(breaks) - 1)]
    stack.reverse()
    done: list[GapInterval] = []
    while stack:
        u, v = stack.pop()
        lip = lipschitz if lipschitz is not None \
            else cache.lipschitz(u, v, tolerances.lipschitz_safety)
        cert = certify_level(cache(u), cache(v), lip, v - u, tolerances)
        if cert is not None:
            a, margin = cert
            done.append(GapInterval(u, v, a, margin))
            continue
        if v - u < tolerances.min_interval_width:
            raise NoGapFound(
                f"no certified spectral gap on [{u:.8f}, {v:.8f}] at the "
                f"resolution floor {tolerances.min_interval_width:g} "
                f"(Lipschitz bound {lip:.3g})")
        if len(done) + len(stack) >= tolerances.max_partitions:
            raise ResolutionExceeded(
                f"partition exceeded {tolerances.max_partitions} subintervals; "
                f"{len(done)} certified so far, current width {v - u:.3g}")
        mid = 0.5 * (u + v)
        stack.append((mid, v))
        stack.append((u, mid))
    done.sort(key=lambda iv: iv.t_left)
    return Partition(tuple(done))


# ---------------------------------------------------------------------------
# spectral flow
# ---------------------------------------------------------------------------

def _count_window(evals: np.ndarray, level: float, atol: float) -> int:
    """Eigenvalues in [0, level), inclusive at zero within atol."""
    return int(np.count_nonzero((evals >= -atol) & (evals < level)))


def _count_at_least(evals: np.ndarray, cutoff: float, atol: float) -> int:
    return int(np.count_nonzero(evals >= cutoff - atol))


@dataclass(frozen=True)
class SpectralFlowResult:
    sf: int
    partitions: int
    min_gap: float


def spectral_flow_result(curve: OperatorCurve, cutoff0: float = 0.0,
                         cutoff1: float = 0.0,
                         tolerances: Tolerances = DEFAULT,
                         lipschitz: float | None = None) -> SpectralFlowResult:
    """Spectral flow together with partition diagnostics.

    Endpoint cutoffs move the reference projector at t=0 / t=1 from the
    zero level to the given one; eigenvalues within tolerance of a cutoff
    are counted on the nonnegative side (inclusive endpoint policy).
    """
    cache = _SpectrumCache(curve)
    part = gap_partition(curve, tolerances, lipschitz, _cache=cache)
    atol = tolerances.cutoff_atol
    total = 0
    for iv in part.intervals:
        total += _count_window(cache(iv.t_right), iv.level, atol) \
            - _count_window(cache(iv.t_left), iv.level, atol)
    ev0, ev1 = cache(0.0), cache(1.0)
    total += _count_at_least(ev1, cutoff1, atol) - _count_at_least(ev1, 0.0, atol)
    total -= _count_at_least(ev0, cutoff0, atol) - _count_at_least(ev0, 0.0, atol)
    return SpectralFlowResult(sf=int(total), partitions=len(part.intervals),
                              min_gap=part.min_gap)


def spectral_flow(curve: OperatorCurve, cutoff0: float = 0.0,
                  cutoff1: float = 0.0, tolerances: Tolerances = DEFAULT,
                  lipschitz: float | None = None) -> int:
    """Net number of eigenvalues crossing zero, upward crossings +1,
    measured against endpoint cutoff levels."""
    return spectral_flow_result(curve, cutoff0, cutoff1, tolerances,
                                lipschitz).sf


def sf_pairs(curve: OperatorCurve, q0: SpectralSection, q1: SpectralSection,
             tolerances: Tolerances = DEFAULT,
             refine_check: bool = True) -> int:
    """Spectral flow between endpoint pairs (D_0, q0) and (D_1, q1).

    The transported section is realized per gap subinterval as the
    projector above the certified level; contributions are the difference
    elements against the endpoint sections (interval boundaries use the
    inclusive-at-zero positive projector).  With ``refine_check`` the
    computation is repeated on a once-bisected partition and must agree.
    """
    d0, d1 = curve.at(0.0), curve.at(1.0)
    validate_section_for(d0, q0, tolerances)
    validate_section_for(d1, q1, tolerances)

    def run(initial_breaks=None) -> int:
        part = gap_partition(curve, tolerances, initial_breaks=initial_breaks)
        total = 0
        n = len(part.intervals)
        for j, iv in enumerate(part.intervals):
            p_left = aps_projection(curve.at(iv.t_left), iv.level,
                                    policy="inclusive", tolerances=tolerances)
            p_right = aps_projection(curve.at(iv.t_right), iv.level,
                                     policy="inclusive", tolerances=tolerances)
            a_left = q0 if j == 0 else aps_projection(
                curve.at(iv.t_left), 0.0, policy="inclusive",
                tolerances=tolerances)
            a_right = q1 if j == n - 1 else aps_projection(
                curve.at(iv.t_right), 0.0, policy="inclusive",
                tolerances=tolerances)
            total += difference_element(a_right, p_right, tolerances=tolerances).value
            total -= difference_element(a_left, p_left, tolerances=tolerances).value
        return total

    value = run()
    if refine_check:
        part = gap_partition(curve, tolerances)
        finer = []
        for iv in part.intervals:
            finer.extend([iv.t_left, 0.5 * (iv.t_left + iv.t_right)])
        finer.append(1.0)
        refined = run(initial_breaks=finer)
        if refined != value:
            raise UnstableIndex(
                f"sf_pairs changed under partition refinement: "
                f"{value} vs {refined}")
    return value
