"""Finitely generated groups as symmetric alphabets with word combinatorics.

A word is a tuple of nonzero ints: letter ``+i`` is the i-th generator
(1-based), ``-i`` its inverse.  Free reduction cancels adjacent inverse
pairs only, which is exact for free groups and a quasi-isometric proxy
for the other kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, InputError

Word = tuple[int, ...]

_MAX_BALL = 2**63 - 1


def letter_key(letter: int) -> int:
    """Total order on letters: g1 < g1^-1 < g2 < g2^-1 < ..."""
    return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)


def word_to_str(w: Word) -> str:
    """Compact text form, a/A for generator 1 and its inverse, b/B, ..."""
    if not w:
        return "e"
    out = []
    for letter in w:
        idx = abs(letter) - 1
        if idx < 26:
            ch = chr(ord("a") + idx)
            out.append(ch if letter > 0 else ch.upper())
        else:
            out.append(f"g{letter}" if letter > 0 else f"G{-letter}")
    return "".join(out)


def str_to_word(text: str) -> Word:
    """Inverse of word_to_str for the a/A alphabet."""
    if text in ("", "e"):
        return ()
    letters = []
    for ch in text:
        if not ch.isalpha():
            raise InputError(f"bad word character {ch!r}")
        idx = ord(ch.lower()) - ord("a") + 1
        letters.append(idx if ch.islower() else -idx)
    return tuple(letters)


@dataclass(frozen=True)
class GroupPresentation:
    """A marked group: symmetric generating set plus optional relations.

    kind is one of "free", "surface", "custom".  Free groups use true
    reduced-word length; the other kinds count letters of the freely
    reduced word, which rescales fitted growth constants but is the
    documented precision trade-off of this tool.
    """

    generator_count: int
    kind: str = "free"
    relations: tuple[Word, ...] = field(default_factory=tuple)
    length_mode: str = "reduced-word"

    def __post_init__(self):
        if self.generator_count < 1:
            raise InputError("generator_count must be >= 1")
        if self.kind not in ("free", "surface", "custom"):
            raise InputError(f"unknown presentation kind {self.kind!r}")
        if self.kind == "free" and self.relations:
            raise InputError("free presentations carry no relations")
        if self.length_mode not in ("reduced-word", "letter-count"):
            raise InputError(f"unknown length_mode {self.length_mode!r}")

    @property
    def rank(self) -> int:
        return self.generator_count

    def letters(self) -> list[int]:
        """All 2r letters in the canonical enumeration order."""
        out = []
        for i in range(1, self.generator_count + 1):
            out.extend((i, -i))
        return out

    def check_word(self, w: Sequence[int]) -> None:
        for letter in w:
            if letter == 0 or abs(letter) > self.generator_count:
                raise InputError(f"letter {letter} not in alphabet of rank {self.generator_count}")


def free_group(rank: int) -> GroupPresentation:
    return GroupPresentation(generator_count=rank, kind="free")


def surface_group(genus: int, relation: Word) -> GroupPresentation:
    return GroupPresentation(
        generator_count=2 * genus,
        kind="surface",
        relations=(relation,),
        length_mode="letter-count",
    )


def reduce(w: Sequence[int], presentation: GroupPresentation) -> Word:
    """Freely reduce w.  Unique normal form for free groups; for the
    other kinds only free cancellations are applied."""
    presentation.check_word(w)
    stack: list[int] = []
    for letter in w:
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def invert(w: Word) -> Word:
    return tuple(-letter for letter in reversed(w))


def concat(presentation: GroupPresentation, *parts: Word) -> Word:
    out: Sequence[int] = [letter for part in parts for letter in part]
    return reduce(out, presentation)


def cyclic_reduce(w: Word) -> Word:
    """Strip matching prefix/suffix inverse pairs: a conjugacy normal form."""
    lo, hi = 0, len(w)
    while hi - lo >= 2 and w[lo] == -w[hi - 1]:
        lo += 1
        hi -= 1
    return w[lo:hi]


def is_reduced(w: Word) -> bool:
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def ball_size(rank: int, radius: int) -> int:
    """Closed-form count of reduced words of length <= radius in a free group."""
    total = 1
    level = 2 * rank
    for _ in range(radius):
        total += level
        level *= 2 * rank - 1
    return total


def enumerate_ball(presentation: GroupPresentation, radius: int) -> Iterator[Word]:
    """Stream the freely reduced words of length <= radius, ordered by
    (length, lexicographic).  For free groups every group element of the
    ball appears exactly once."""
    if radius < 1:
        raise InputError("radius must be >= 1")
    if ball_size(presentation.generator_count, radius) > _MAX_BALL:
        raise CapacityError(f"ball of radius {radius} overflows a 64-bit counter")
    letters = sorted(presentation.letters(), key=letter_key)
    level: list[Word] = [()]
    yield ()
    for _ in range(radius):
        nxt: list[Word] = []
        for w in level:
            last = w[-1] if w else 0
            for letter in letters:
                if letter == -last:
                    continue
                nw = w + (letter,)
                nxt.append(nw)
                yield nw
        level = nxt


def sphere_words(presentation: GroupPresentation, length: int) -> Iterator[Word]:
    """Reduced words of exactly the given length, lexicographic order."""
    for w in enumerate_ball(presentation, max(length, 1)):
        if len(w) == length:
            yield w


def random_geodesic_word(
    presentation: GroupPresentation, length: int, seed: int
) -> Word:
    """Uniform non-backtracking walk of exactly `length` letters,
    reproducible from the seed."""
    if length < 0:
        raise InputError("length must be >= 0")
    rng = np.random.default_rng(seed)
    return _random_word(presentation, length, rng)


def _random_word(
    presentation: GroupPresentation, length: int, rng: np.random.Generator
) -> Word:
    letters = sorted(presentation.letters(), key=letter_key)
    w: list[int] = []
    for _ in range(length):
        if w:
            choices = [letter for letter in letters if letter != -w[-1]]
        else:
            choices = letters
        w.append(choices[int(rng.integers(len(choices)))])
    return tuple(w)


def random_cyclic_words(
    presentation: GroupPresentation, count: int, length: int, seed: int
) -> list[Word]:
    """Distinct cyclically reduced random words, deterministic under seed.

    Used as the boundary-direction sampler: each word stands for the
    attracting endpoint of its axis.
    """
    if count < 1:
        raise InputError("count must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    seen: set[Word] = set()
    out: list[Word] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 200 * count + 1000:
            raise CapacityError(
                f"could not find {count} distinct cyclically reduced words of length {length}"
            )
        w = cyclic_reduce(_random_word(presentation, length, rng))
        if len(w) != length or w in seen:
            continue
        seen.add(w)
        out.append(w)
    return out
