"""Surface-group words, curves, pants decompositions and holonomy values."""

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from quakelab.models.geometry import Isometry2

Word = tuple[str, ...]

_LETTER = re.compile(r"^[abAB][1-9][0-9]*$")


# ------------------------------------------------------------------ words

def inverse_letter(letter: str) -> str:
    return letter.swapcase()


def invert_word(word: Sequence[str]) -> Word:
    return tuple(inverse_letter(x) for x in reversed(word))


def free_reduce(word: Sequence[str]) -> Word:
    stack: list[str] = []
    for letter in word:
        if stack and stack[-1] == inverse_letter(letter):
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def cyclic_reduce(word: Sequence[str]) -> Word:
    w = free_reduce(word)
    start, end = 0, len(w)
    while end - start > 1 and w[start] == inverse_letter(w[end - 1]):
        start += 1
        end -= 1
    return w[start:end]


def rotations(word: Sequence[str]) -> list[Word]:
    w = tuple(word)
    return [w[k:] + w[:k] for k in range(len(w))]


def word_power(word: Sequence[str], k: int) -> Word:
    base = tuple(word) if k >= 0 else invert_word(word)
    return base * abs(k)


def substitute(word: Sequence[str], mapping: Mapping[str, Word]) -> Word:
    """Apply a free-group endomorphism given on generators; result freely reduced."""
    out: list[str] = []
    for letter in word:
        if letter in mapping:
            out.extend(mapping[letter])
        elif letter.swapcase() in mapping:
            out.extend(invert_word(mapping[letter.swapcase()]))
        else:
            out.append(letter)
    return free_reduce(out)


def parse_word(text) -> Word:
    letters = tuple(text.split()) if isinstance(text, str) else tuple(text)
    for letter in letters:
        if not _LETTER.match(letter):
            raise ValueError(f"malformed letter {letter!r} in word {text!r}")
    return letters


def format_word(word: Sequence[str]) -> str:
    return " ".join(word)


# ------------------------------------------------------------------ curves

class CurveClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    word: Word
    name: str = ""

    @field_validator("word", mode="before")
    @classmethod
    def parse_letters(cls, value):
        return parse_word(value)

    @model_validator(mode="after")
    def cyclically_reduced(self) -> "CurveClass":
        if not self.word:
            raise ValueError("curve word must be nonempty")
        if cyclic_reduce(self.word) != self.word:
            raise ValueError(f"word {format_word(self.word)!r} is not cyclically reduced")
        return self

    @classmethod
    def parse(cls, text, name: Optional[str] = None) -> "CurveClass":
        """Reduce any word to its cyclically reduced representative."""
        word = cyclic_reduce(parse_word(text))
        return cls(word=word, name=name if name is not None else "".join(word))

    def inverse(self) -> "CurveClass":
        return CurveClass(word=invert_word(self.word), name=f"({self.name})^-1")

    def conjugated(self, by: Sequence[str]) -> "CurveClass":
        return CurveClass.parse(tuple(by) + self.word + invert_word(by), name=f"{self.name}^h")

    def __str__(self) -> str:
        return self.name or format_word(self.word)


# ------------------------------------------------------------------ pants data

class PantsEdge(BaseModel):
    model_config = ConfigDict(frozen=True)

    curve: str
    ends: tuple[str, str]


class PantsGraph(BaseModel):
    model_config = ConfigDict(frozen=True)

    genus: int = Field(ge=2)
    pants: tuple[str, ...]
    edges: tuple[PantsEdge, ...]
    curve_words: dict[str, Word]

    @field_validator("curve_words", mode="before")
    @classmethod
    def parse_curve_words(cls, value):
        return {key: parse_word(word) for key, word in dict(value).items()}

    @model_validator(mode="after")
    def check_gluing(self) -> "PantsGraph":
        g = self.genus
        if len(self.pants) != 2 * g - 2:
            raise ValueError(f"genus {g} needs {2 * g - 2} pants, got {len(self.pants)}")
        if len(self.edges) != 3 * g - 3:
            raise ValueError(f"genus {g} needs {3 * g - 3} pants curves, got {len(self.edges)}")
        degree = {name: 0 for name in self.pants}
        for edge in self.edges:
            for end in edge.ends:
                if end not in degree:
                    raise ValueError(f"edge {edge.curve} touches unknown pants {end!r}")
                degree[end] += 1
        bad = {name: n for name, n in degree.items() if n != 3}
        if bad:
            raise ValueError(f"pants without exactly 3 boundary circles: {bad}")
        ids = [edge.curve for edge in self.edges]
        if set(self.curve_words) != set(ids) or len(set(ids)) != len(ids):
            raise ValueError(f"curve words {sorted(self.curve_words)} do not match edges {ids}")
        gens = set(self.generators)
        for key, word in self.curve_words.items():
            if not word or any(letter.lower() not in gens for letter in word):
                raise ValueError(f"curve word for {key!r} uses letters outside {sorted(gens)}")
        return self

    @property
    def generators(self) -> tuple[str, ...]:
        return tuple(f"{x}{i}" for i in range(1, self.genus + 1) for x in ("a", "b"))

    @property
    def relator(self) -> Word:
        out: list[str] = []
        for i in range(1, self.genus + 1):
            out += [f"a{i}", f"b{i}", f"A{i}", f"B{i}"]
        return tuple(out)

    @property
    def curve_ids(self) -> tuple[str, ...]:
        return tuple(edge.curve for edge in self.edges)

    def pants_curve(self, curve_id: str) -> CurveClass:
        return CurveClass.parse(self.curve_words[curve_id], name=curve_id)

    def pants_curves(self) -> list[CurveClass]:
        return [self.pants_curve(cid) for cid in self.curve_ids]

    def curve_index(self, curve: CurveClass) -> Optional[int]:
        """Index of the pants curve freely homotopic to curve (either orientation)."""
        candidates = {tuple(r) for r in rotations(curve.word)}
        candidates |= {tuple(r) for r in rotations(invert_word(curve.word))}
        for k, cid in enumerate(self.curve_ids):
            if cyclic_reduce(self.curve_words[cid]) in candidates:
                return k
        return None

    @classmethod
    def genus_two(cls) -> "PantsGraph":
        return cls(
            genus=2,
            pants=("P1", "P2"),
            edges=(
                PantsEdge(curve="c1", ends=("P1", "P1")),
                PantsEdge(curve="c2", ends=("P1", "P2")),
                PantsEdge(curve="c3", ends=("P2", "P2")),
            ),
            curve_words=GENUS_TWO_CURVE_WORDS,
        )


GENUS_TWO_CURVE_WORDS = {"c1": "b1", "c2": "a1 b1 A1 B1", "c3": "b2"}

MARKING_WORDS = (
    ("b1", "b1"),
    ("a1b1A1B1", "a1 b1 A1 B1"),
    ("b2", "b2"),
    ("a1", "a1"),
    ("a2", "a2"),
    ("a1b1", "a1 b1"),
    ("a2b2", "a2 b2"),
    ("a1a2", "a1 a2"),
    ("b1b2", "b1 b2"),
)


def marking_set() -> list[CurveClass]:
    return [CurveClass.parse(word, name=name) for name, word in MARKING_WORDS]


class FenchelNielsen(BaseModel):
    model_config = ConfigDict(frozen=True)

    lengths: tuple[float, ...]
    twists: tuple[float, ...]

    @model_validator(mode="after")
    def positive_lengths(self) -> "FenchelNielsen":
        if len(self.lengths) != len(self.twists):
            raise ValueError("lengths and twists must have the same size")
        if not all(np.isfinite(self.lengths)) or not all(np.isfinite(self.twists)):
            raise ValueError("Fenchel-Nielsen coordinates must be finite")
        if any(length <= 0 for length in self.lengths):
            raise ValueError(f"pants lengths must be positive, got {self.lengths}")
        return self

    def with_twists(self, twists: Sequence[float]) -> "FenchelNielsen":
        return FenchelNielsen(lengths=self.lengths, twists=tuple(float(t) for t in twists))

    def as_vector(self) -> np.ndarray:
        """(log ℓ, τ) coordinates used by the solvers."""
        return np.concatenate([np.log(self.lengths), np.asarray(self.twists)])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "FenchelNielsen":
        x = np.asarray(x, dtype=float)
        n = len(x) // 2
        return cls(lengths=tuple(np.exp(x[:n]).tolist()), twists=tuple(x[n:].tolist()))


# ------------------------------------------------------------------ holonomy

@dataclass(frozen=True)
class FuchsianRep:
    """Holonomy ρ = base ∘ marking.

    `images` hold the base representation (bounded twists); `marking` is a free-group
    automorphism on generators (Dehn twists along pants curves) applied to words before
    they are evaluated. An empty marking is the identity.
    """

    topology: PantsGraph
    images: Mapping[str, Isometry2]
    relator_residual: float
    marking: Mapping[str, Word] = field(default_factory=dict)

    @cached_property
    def table(self) -> dict:
        from quakelab.services.moebius_core import letter_table

        return letter_table(self.images)

    def pull_back(self, word: Sequence[str]) -> Word:
        if not self.marking:
            return cyclic_reduce(word)
        return cyclic_reduce(substitute(word, self.marking))

    def generator_images(self) -> dict[str, Isometry2]:
        """Images of generators under ρ, marking included."""
        from quakelab.services.moebius_core import evaluate_word

        return {
            gen: evaluate_word(self.table, free_reduce(self.marking.get(gen, (gen,))))
            for gen in self.topology.generators
        }


class SurfaceDiagnostics(BaseModel):
    relator_residual: float
    min_pants_length: float
    max_pants_length: float
    pants_lengths: dict[str, float]
    shortest_translation: float
    shortest_word: str
    systole_ok: bool
    residual_ok: bool

    @property
    def passed(self) -> bool:
        return self.systole_ok and self.residual_ok


def symmetric_base() -> FenchelNielsen:
    """Genus-2 base surface used when a run does not name one."""
    return FenchelNielsen(lengths=(1.5, 1.5, 1.5), twists=(0.0, 0.0, 0.0))
