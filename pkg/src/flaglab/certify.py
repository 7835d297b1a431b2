"""Gap-growth certification and boundary flag samples.

A representation is certified along index k when the per-length minima of
the k-th singular value gap over a word ball grow affinely; boundary
points are realized as Cartan attractors (top singular subspaces) of high
powers of cyclically reduced words.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import words as W
from .errors import InputError, NotAnosovError, PrecisionError
from .prodsvd import ProductSVD
from .reps import Representation
from .subspaces import Subspace, batched_gaps, hausdorff_subspace_dist, orth
from .words import Word

SLOPE_THRESHOLD = 0.01
R2_THRESHOLD = 0.95
TARGET_GAP = 18.0
NESTING_TOL = 1e-6


@dataclass(frozen=True)
class GapSweep:
    """Per-length minima of every gap index over a word ball."""

    radius: int
    lengths: tuple[int, ...]
    minima: np.ndarray  # shape (radius, d-1)
    argmin_words: tuple[tuple[Word, ...], ...]  # [length-1][k-1]

    def minima_for(self, k: int) -> np.ndarray:
        return self.minima[:, k - 1]


def gap_sweep(rep: Representation, radius: int, accurate: bool | None = None) -> GapSweep:
    """Sweep all freely reduced words of length 1..radius and record the
    minimum gap vector per length.  accurate=True routes every word through
    the graded product SVD, keeping tiny gaps honest to ~1e-12."""
    if radius < 1:
        raise InputError("radius must be >= 1")
    if accurate is None:
        # the graded path is needed once middle singular values matter, and
        # affordable while the ball is small
        rank = rep.presentation.generator_count
        accurate = rep.dim >= 3 and W.ball_size(rank, radius) <= 40000
    if accurate:
        return _accurate_sweep(rep, radius)
    d = rep.dim
    letters = sorted(rep.presentation.letters(), key=W.letter_key)
    level_words: list[Word] = [()]
    level_mats = np.eye(d, dtype=complex)[None, :, :]
    level_last = np.zeros(1, dtype=int)
    minima = np.full((radius, d - 1), np.inf)
    argmin: list[list[Word]] = [[()] * (d - 1) for _ in range(radius)]
    for n in range(1, radius + 1):
        blocks = []
        block_words: list[Word] = []
        block_last = []
        for letter in letters:
            sel = level_last != -letter
            if not np.any(sel):
                continue
            prod = level_mats[sel] @ rep.matrix(letter)
            blocks.append(prod)
            block_last.append(np.full(prod.shape[0], letter))
            block_words.extend(w + (letter,) for w, keep in zip(level_words, sel) if keep)
        level_mats = np.concatenate(blocks, axis=0)
        dets = np.linalg.det(level_mats)
        if not np.all(np.isfinite(dets)) or np.any(dets == 0):
            bad = int(np.argmin(np.abs(dets)))
            raise NotAnosovError(
                f"conditioning failure at length {n}, word {W.word_to_str(block_words[bad])}"
            )
        scale = np.exp(np.log(dets.astype(complex)) / d)
        level_mats = level_mats / scale[:, None, None]
        level_last = np.concatenate(block_last)
        level_words = block_words
        gaps = batched_gaps(level_mats)
        idx = np.argmin(gaps, axis=0)
        minima[n - 1] = gaps[idx, np.arange(d - 1)]
        argmin[n - 1] = [level_words[i] for i in idx]
    return GapSweep(
        radius=radius,
        lengths=tuple(range(1, radius + 1)),
        minima=minima,
        argmin_words=tuple(tuple(row) for row in argmin),
    )


def _accurate_sweep(rep: Representation, radius: int) -> GapSweep:
    d = rep.dim
    letters = sorted(rep.presentation.letters(), key=W.letter_key)
    minima = np.full((radius, d - 1), np.inf)
    argmin: list[list[Word]] = [[()] * (d - 1) for _ in range(radius)]

    def descend(state: ProductSVD, word: Word):
        depth = len(word)
        for letter in letters:
            if word and letter == -word[-1]:
                continue
            child = state.copy().absorb(rep.matrix(letter))
            cw = word + (letter,)
            gaps = child.gaps()
            row = minima[depth]
            better = gaps < row
            if np.any(better):
                row[better] = gaps[better]
                for k0 in np.nonzero(better)[0]:
                    argmin[depth][k0] = cw
            if depth + 1 < radius:
                descend(child, cw)

    descend(ProductSVD(d), ())
    return GapSweep(
        radius=radius,
        lengths=tuple(range(1, radius + 1)),
        minima=minima,
        argmin_words=tuple(tuple(row) for row in argmin),
    )


@dataclass(frozen=True)
class AnosovCertificate:
    """Affine-lower-bound fit of per-length gap minima and its verdict."""

    label: str
    k: int
    radius: int
    lengths: tuple[int, ...]
    min_gaps: tuple[float, ...]
    c1: float
    c2: float
    r_squared: float
    residual: float
    verdict: str  # certified | refuted | inconclusive
    slope_threshold: float = SLOPE_THRESHOLD
    r2_threshold: float = R2_THRESHOLD
    notes: tuple[str, ...] = ()

    def supports(self, slack: float = 1e-9) -> bool:
        return all(
            g >= self.c1 * n - self.c2 - slack
            for n, g in zip(self.lengths, self.min_gaps)
        )


def _affine_fit(lengths: np.ndarray, values: np.ndarray) -> tuple[float, float, float, float]:
    slope, intercept = np.polyfit(lengths, values, 1)
    pred = slope * lengths + intercept
    ss_res = float(np.sum((values - pred) ** 2))
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 and ss_res == 0 else (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    return float(slope), float(intercept), r2, math.sqrt(ss_res / len(values))


def _doubling_ratio(rep: Representation, word: Word, k: int) -> tuple[float, float]:
    """Gap growth along powers of a word: returns (last gap, ratio of the
    gaps at the last two power doublings).  Affine growth gives ratio -> 2,
    logarithmic growth (e.g. unipotents) gives ratio -> 1.  Powers are
    accumulated letter by letter in the graded product SVD, so arbitrarily
    large gaps stay measurable."""
    state = ProductSVD(rep.dim)
    factors = [rep.matrix(letter) for letter in word]
    gaps: list[float] = []
    absorbed = 0
    for n in (1, 2, 4, 8, 16, 32, 64, 128, 256):
        while absorbed < n:
            for f in factors:
                state.absorb(f)
            absorbed += 1
        g = float(state.gaps()[k - 1])
        gaps.append(g)
        if g > 40.0 and len(gaps) >= 2:
            break
    g_prev, g_last = gaps[-2], gaps[-1]
    if g_last < 1e-9:
        return g_last, 0.0
    return g_last, g_last / max(g_prev, 1e-12)


def certify_anosov(
    rep: Representation,
    k: int,
    radius: int,
    slope_threshold: float = SLOPE_THRESHOLD,
    r2_threshold: float = R2_THRESHOLD,
    sweep: GapSweep | None = None,
    accurate: bool | None = None,
) -> AnosovCertificate:
    """Certify affine growth of the k-th gap over the radius ball.

    certified: fitted slope >= slope_threshold and R^2 >= r2_threshold.
    refuted:   the gap vanishes on the ball, or a witness word (the worst
               word of the sweep, or a generator) shows sublinear growth
               under power doubling (ratio < 1.5 instead of -> 2).
    Anything else is inconclusive; sampled verdicts are evidence, not proof.
    """
    if not 1 <= k <= rep.dim - 1:
        raise InputError(f"k={k} out of range 1..{rep.dim - 1}")
    if radius < 3:
        raise InputError("radius must be >= 3 to fit a slope")
    notes: list[str] = []
    if rep.presentation.relations:
        girth = min(len(r) for r in rep.presentation.relations)
        if radius >= girth:
            # beyond the relator length letter-count words start representing
            # short group elements and the minima are no longer meaningful
            radius = girth - 1
            notes.append(f"radius capped at {radius} (shortest relator has length {girth})")
        if sweep is not None and sweep.radius > radius:
            sweep = None
    if sweep is None:
        sweep = gap_sweep(rep, radius, accurate=accurate)
    lengths = np.asarray(sweep.lengths, dtype=float)
    minima = sweep.minima_for(k).astype(float)
    slope, _, r2, resid = _affine_fit(lengths, minima)
    c1 = slope
    c2 = max(0.0, float(np.max(c1 * lengths - minima)))

    verdict = None
    if float(np.max(minima)) < 1e-9:
        verdict = "refuted"
        notes.append("gap vanishes on the whole ball")
    else:
        witnesses: list[Word] = [sweep.argmin_words[-1][k - 1]]
        witnesses += [(g,) for g in range(1, rep.presentation.generator_count + 1)]
        for w in witnesses:
            if not w:
                continue
            g_last, ratio = _doubling_ratio(rep, w, k)
            if ratio < 1.5:
                verdict = "refuted"
                notes.append(
                    f"sublinear gap growth along {W.word_to_str(w)} "
                    f"(doubling ratio {ratio:.3f}, gap {g_last:.3f})"
                )
                break
    if verdict is None:
        if slope >= slope_threshold and r2 >= r2_threshold:
            verdict = "certified"
        else:
            verdict = "inconclusive"
    return AnosovCertificate(
        label=rep.label,
        k=k,
        radius=radius,
        lengths=sweep.lengths,
        min_gaps=tuple(float(x) for x in minima),
        c1=c1,
        c2=c2,
        r_squared=r2,
        residual=resid,
        verdict=verdict,
        slope_threshold=slope_threshold,
        r2_threshold=r2_threshold,
        notes=tuple(notes),
    )


# --- boundary flags -------------------------------------------------------


class FlagSample:
    """Nested attractor subspaces of one boundary direction.

    spaces maps each requested dimension k to a k-dimensional Subspace;
    indices 0 and d are synthesized.  quality records the worst attractor /
    nesting residual met while producing the sample.
    """

    __slots__ = ("source", "spaces", "quality", "_fiber_frames")

    def __init__(self, source: Word, spaces: dict[int, Subspace], quality: float = 0.0):
        if not spaces:
            raise InputError("a flag needs at least one subspace")
        dims = {k: s.dim for k, s in spaces.items()}
        for k, dim in dims.items():
            if k != dim:
                raise InputError(f"space at index {k} has dimension {dim}")
        ks = sorted(spaces)
        for k1, k2 in zip(ks, ks[1:]):
            if not spaces[k2].contains(spaces[k1], tol=NESTING_TOL):
                raise PrecisionError(f"nesting residual too large between {k1} and {k2}")
        self.source = source
        self.spaces = spaces
        self.quality = quality
        self._fiber_frames: dict[int, np.ndarray] = {}

    @property
    def ambient_dim(self) -> int:
        return next(iter(self.spaces.values())).ambient_dim

    @property
    def ks(self) -> list[int]:
        return sorted(self.spaces)

    def space(self, k: int) -> Subspace:
        d = self.ambient_dim
        if k == 0:
            return Subspace.zero(d)
        if k == d:
            return Subspace.full(d)
        try:
            return self.spaces[k]
        except KeyError:
            raise InputError(f"flag sample carries {self.ks}, not {k}")

    def fiber_frame(self, k: int) -> np.ndarray:
        """Orthonormal (d, 2) basis of the complement of space(k-1) inside
        space(k+1): the working frame of the fiber at this flag.  Cached so
        that repeated use of one flag object is gauge-consistent."""
        frame = self._fiber_frames.get(k)
        if frame is None:
            upper = self.space(k + 1).frame
            lower = self.space(k - 1)
            rest = upper - lower.frame @ (lower.frame.conj().T @ upper) if lower.dim else upper
            frame = orth(rest)
            if frame.shape[1] != 2:
                raise PrecisionError(f"fiber frame at k={k} is not 2-dimensional")
            self._fiber_frames[k] = frame
        return frame

    def __repr__(self):
        return f"FlagSample({W.word_to_str(self.source)}, ks={self.ks})"


def flag_dist(a: FlagSample, b: FlagSample) -> float:
    """Largest Hausdorff subspace distance over the common indices."""
    common = sorted(set(a.spaces) & set(b.spaces))
    if not common:
        raise InputError("flags share no indices")
    return max(hausdorff_subspace_dist(a.space(k), b.space(k)) for k in common)


def cartan_attractor(m: np.ndarray, k: int, min_gap: float = 0.1, return_residual: bool = False):
    """Span of the k leading left singular vectors.  Requires the k-th gap
    to clear min_gap; the reported residual exp(-2 gap) bounds how far the
    attractor can move under right multiplication by a unitary."""
    m = np.asarray(m, dtype=complex)
    d = m.shape[0]
    if not 1 <= k <= d - 1:
        raise InputError(f"k={k} out of range 1..{d - 1}")
    u, s, _ = np.linalg.svd(m)
    s = np.maximum(s, 1e-300)
    gap = (math.log(s[k - 1]) - math.log(s[k])) / 2.0
    if gap <= min_gap:
        raise PrecisionError(
            f"gap {gap:.3f} at k={k} below {min_gap}; lengthen the word before projecting"
        )
    sub = Subspace(u[:, :k], check=False)
    if return_residual:
        return sub, math.exp(-2.0 * gap)
    return sub


def boundary_sample(
    rep: Representation,
    word,
    ks,
    target_gap: float = TARGET_GAP,
    max_letters: int = 20000,
) -> FlagSample:
    """Nested attractors of rho(word^n), n raised until every requested gap
    clears target_gap.  The flag stands for the attracting endpoint of the
    word's axis.

    Powers are accumulated in the graded product SVD, which keeps every
    singular subspace (not just the top one) accurate and has no overflow
    ceiling, so middle flags of high-dimensional representations are as
    reliable as the extremes.
    """
    w = W.reduce(word, rep.presentation)
    if not w:
        raise InputError("boundary_sample needs a nontrivial word")
    ks = sorted(set(int(k) for k in ks))
    d = rep.dim
    for k in ks:
        if not 1 <= k <= d - 1:
            raise InputError(f"flag index {k} out of range 1..{d - 1}")
    factors = [rep.matrix(letter) for letter in w]
    state = ProductSVD(d)
    history: list[float] = []
    letters_used = 0
    worst = -math.inf
    while letters_used < max_letters:
        for f in factors:
            state.absorb(f)
        letters_used += len(factors)
        gaps = state.gaps()
        worst = min(float(gaps[k - 1]) for k in ks)
        if worst >= target_gap:
            break
        history.append(worst)
        if len(history) >= 4 and history[-1] - history[-4] < 1e-3:
            raise NotAnosovError(
                f"gap stalled at {worst:.4f} along {W.word_to_str(w)}; "
                "not Anosov along this word"
            )
    else:
        raise NotAnosovError(
            f"gap reached only {worst:.3f} of {target_gap} along {W.word_to_str(w)}"
        )
    spaces = {k: Subspace(state.u[:, :k], check=False) for k in ks}
    return FlagSample(source=w, spaces=spaces, quality=math.exp(-2.0 * worst))


def transport_flag(rep: Representation, gamma, flag: FlagSample) -> FlagSample:
    """Image flag under rho(gamma); nesting is re-enforced by projecting
    each space into the next one up."""
    g = W.reduce(gamma, rep.presentation)
    if not g:
        return flag  # identity transport: share the object, gauge included
    m = rep.evaluate(g)
    moved: dict[int, Subspace] = {}
    prev_upper: Subspace | None = None
    residual = 0.0
    for k in sorted(flag.spaces, reverse=True):
        frame = orth(m @ flag.spaces[k].frame)
        if frame.shape[1] != k:
            raise PrecisionError(f"transport collapsed the {k}-space")
        if prev_upper is not None:
            proj = prev_upper.projector() @ frame
            resid = float(np.linalg.norm(frame - proj, ord=2))
            if resid > NESTING_TOL:
                raise PrecisionError(f"transported flag lost nesting at {k}: {resid:.2e}")
            residual = max(residual, resid)
            frame = orth(proj)
        moved[k] = Subspace(frame, check=False)
        prev_upper = moved[k]
    src = W.concat(rep.presentation, g, flag.source, W.invert(g))
    return FlagSample(source=src, spaces=moved, quality=max(flag.quality, residual))


def limit_set_sample(
    rep: Representation,
    ks,
    count: int,
    length: int,
    seed: int,
    target_gap: float = TARGET_GAP,
) -> tuple[list[FlagSample], list[tuple[Word, str]]]:
    """count flags from distinct random cyclically reduced words; failed
    words are skipped and reported alongside the samples."""
    if count < 1:
        raise InputError("count must be >= 1")
    failures: list[tuple[Word, str]] = []
    samples: list[FlagSample] = []
    batch = 0
    while len(samples) < count and batch < 8:
        need = count - len(samples) + 4 * batch
        cand = W.random_cyclic_words(rep.presentation, need, length, seed + batch)
        taken = {f.source for f in samples}
        for w in cand:
            if len(samples) >= count:
                break
            if w in taken:
                continue
            try:
                samples.append(boundary_sample(rep, w, ks, target_gap=target_gap))
                taken.add(w)
            except (NotAnosovError, PrecisionError) as exc:
                failures.append((w, str(exc)))
        batch += 1
    if len(samples) < count:
        raise NotAnosovError(
            f"only {len(samples)}/{count} boundary samples succeeded; "
            f"first failure: {failures[0][1] if failures else 'none'}"
        )
    return samples, failures
