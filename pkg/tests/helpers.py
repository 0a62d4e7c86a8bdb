"""Random inputs shared by the test modules."""

import math

import numpy as np
from hypothesis import strategies as st

from quakelab.models.geometry import Isometry2
from quakelab.models.surface import FenchelNielsen


def random_fn(rng: np.random.Generator, lengths=(0.5, 3.0), twists=(-1.0, 1.0)) -> FenchelNielsen:
    return FenchelNielsen(
        lengths=tuple(rng.uniform(*lengths, size=3).tolist()),
        twists=tuple(rng.uniform(*twists, size=3).tolist()),
    )


def random_isometry(rng: np.random.Generator) -> Isometry2:
    while True:
        m = rng.normal(size=(2, 2))
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) > 0.1:
            break
    if det < 0:
        m = m[:, ::-1]
    return Isometry2.from_matrix(m)


@st.composite
def fn_coordinates(draw, lengths=(0.5, 3.0), twists=(-1.0, 1.0)):
    """Genus-2 Fenchel-Nielsen coordinates inside the given boxes."""
    ls = [draw(st.floats(min_value=lengths[0], max_value=lengths[1])) for _ in range(3)]
    ts = [draw(st.floats(min_value=twists[0], max_value=twists[1])) for _ in range(3)]
    return FenchelNielsen(lengths=tuple(ls), twists=tuple(ts))


@st.composite
def hyperbolic_isometries(draw):
    """Hyperbolic elements with translation length in [0.1, 5]."""
    length = draw(st.floats(min_value=0.1, max_value=5.0))
    angle = draw(st.floats(min_value=0.0, max_value=math.pi))
    shift = draw(st.floats(min_value=-3.0, max_value=3.0))
    half = length / 2.0
    diag = np.diag([math.exp(half), math.exp(-half)])
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    move = np.array([[1.0, shift], [0.0, 1.0]])
    frame = move @ rot
    return Isometry2.from_matrix(frame @ diag @ np.linalg.inv(frame)), length
