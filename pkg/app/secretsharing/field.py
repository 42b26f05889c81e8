"""
Prime-field elements.

Values are kept canonical (0 <= value < modulus). The default modulus is the
Mersenne prime 2^61 - 1, large enough that aggregate record counts never wrap;
tests may pass a small prime such as 97.
"""

from dataclasses import dataclass

from app.errors import OverflowSuspectedError

DEFAULT_PRIME = 2**61 - 1

FIELD_ELEMENT_SIZE = 8


@dataclass(frozen=True, slots=True)
class FieldElement:
    """An element of GF(modulus)."""
    value: int
    modulus: int = DEFAULT_PRIME

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError(f"modulus must be a prime >= 2, got {self.modulus}")
        if not 0 <= self.value < self.modulus:
            object.__setattr__(self, "value", self.value % self.modulus)

    def _coerce(self, other: "FieldElement | int") -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ValueError("cannot combine elements of different fields")
            return other.value
        return other % self.modulus

    def __add__(self, other: "FieldElement | int") -> "FieldElement":
        return FieldElement((self.value + self._coerce(other)) % self.modulus, self.modulus)

    __radd__ = __add__

    def __sub__(self, other: "FieldElement | int") -> "FieldElement":
        return FieldElement((self.value - self._coerce(other)) % self.modulus, self.modulus)

    def __mul__(self, other: "FieldElement | int") -> "FieldElement":
        return FieldElement((self.value * self._coerce(other)) % self.modulus, self.modulus)

    __rmul__ = __mul__

    def __neg__(self) -> "FieldElement":
        return FieldElement((-self.value) % self.modulus, self.modulus)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(pow(self.value, -1, self.modulus), self.modulus)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(FIELD_ELEMENT_SIZE, "big")

    @classmethod
    def from_bytes(cls, data: bytes, modulus: int = DEFAULT_PRIME) -> "FieldElement":
        return cls(int.from_bytes(data, "big"), modulus)


def encode_count(count: int, modulus: int = DEFAULT_PRIME) -> FieldElement:
    """Place a nonnegative histogram count on a field wire."""
    if count < 0:
        raise ValueError(f"counts are nonnegative, got {count}")
    if 2 * count >= modulus:
        raise OverflowSuspectedError(f"count {count} does not fit below p/2")
    return FieldElement(count, modulus)


def decode_count(element: FieldElement) -> int:
    """Read a count back; values in the upper half of the field mean wraparound."""
    if 2 * element.value >= element.modulus:
        raise OverflowSuspectedError(
            f"decoded value {element.value} is above p/2; aggregate wrapped or was tampered"
        )
    return element.value
