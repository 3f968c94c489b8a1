"""2x2 binary images: encoding to reference steps, digital rotation, decoding."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import NamedTuple

from .grid_model import GridError
from .weight_compiler import Calibration, WeightTask

# Decimal place value of each row-major pixel position.
POSITION_WEIGHTS = (8, 4, 2, 1)

DECODE_CONFIDENCE = 0.25


class DecodeError(GridError):
    pass


@dataclass(frozen=True)
class Image2x2:
    """Row-major bits: top-left, top-right, bottom-left, bottom-right."""

    bits: tuple[int, int, int, int]

    def __post_init__(self):
        bits = tuple(self.bits)
        if len(bits) != 4 or any(b not in (0, 1) for b in bits):
            raise ValueError(f"a 2x2 image needs exactly four 0/1 bits, got {self.bits!r}")
        object.__setattr__(self, "bits", tuple(int(b) for b in bits))

    @classmethod
    def parse(cls, text: str) -> "Image2x2":
        text = text.strip()
        if len(text) != 4 or set(text) - {"0", "1"}:
            raise ValueError(f"expected a 4-character bit string such as '0101', got {text!r}")
        return cls(tuple(int(c) for c in text))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


def all_images() -> list[Image2x2]:
    """The 16 images in ascending bit-string order."""
    return [Image2x2(bits) for bits in itertools.product((0, 1), repeat=4)]


class Direction(str, enum.Enum):
    CLOCKWISE = "clockwise"
    COUNTERCLOCKWISE = "counterclockwise"

    @classmethod
    def parse(cls, text: str) -> "Direction":
        aliases = {"cw": cls.CLOCKWISE, "ccw": cls.COUNTERCLOCKWISE}
        key = text.strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


# Destination position (1-based) of each source pixel.
_DESTINATIONS = {
    Direction.CLOCKWISE: (2, 4, 1, 3),
    Direction.COUNTERCLOCKWISE: (3, 1, 4, 2),
}


def rotate(image: Image2x2, direction: Direction) -> Image2x2:
    out = [0] * 4
    for src, dst in enumerate(_DESTINATIONS[Direction(direction)]):
        out[dst - 1] = image.bits[src]
    return Image2x2(tuple(out))


@dataclass(frozen=True)
class RotationTask:
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def weights(self) -> tuple[int, ...]:
        # Place value each source pixel lands on after rotation.
        return tuple(POSITION_WEIGHTS[d - 1] for d in _DESTINATIONS[self.direction])

    @property
    def anchor(self) -> int:
        return self.weights.index(1) + 1

    def weight_task(self) -> WeightTask:
        return WeightTask(self.weights, self.anchor)


def encode(image: Image2x2, amplitude: float = 1.0) -> tuple[float, ...]:
    """Reference-voltage steps: ``amplitude`` volts per lit pixel."""
    if not amplitude > 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    return tuple(amplitude * b for b in image.bits)


def digital_oracle(image: Image2x2, task: RotationTask) -> int:
    """Integer the rotated image spells out, computed two ways."""
    rotated = rotate(image, task.direction)
    by_position = sum(p * b for p, b in zip(POSITION_WEIGHTS, rotated.bits))
    by_weights = sum(w * b for w, b in zip(task.weights, image.bits))
    if by_position != by_weights:
        raise AssertionError(f"rotation oracle mismatch for {image}: {by_position} != {by_weights}")
    return by_position


class Decoded(NamedTuple):
    value: int
    residual: float


def decode(delta_i_down: float, calibration: Calibration, confidence: float = DECODE_CONFIDENCE) -> Decoded:
    """Turn a downstream current deviation into an integer.

    Raises DecodeError when the scaled current lies more than ``confidence``
    away from the nearest integer.
    """
    scaled = delta_i_down / calibration.kappa
    value = round(scaled)
    residual = abs(scaled - value)
    if residual > confidence:
        raise DecodeError(
            f"current {delta_i_down:.6g} A decodes to {scaled:.4f}, {residual:.3f} from an integer"
        )
    return Decoded(int(value), float(residual))
