"""
Shamir (t+1)-out-of-n secret sharing over a prime field.

Sharings are additively homomorphic: adding share vectors point-wise yields a
sharing of the sum, which is all the aggregation circuit needs. Evaluation
points are x = 1..n (agent index + 1).
"""

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.errors import (
    DuplicatePointError,
    InsufficientSharesError,
    InvalidThresholdError,
    MixedThresholdError,
    PointMismatchError,
    ShapeMismatchError,
)
from app.secretsharing.field import DEFAULT_PRIME, FIELD_ELEMENT_SIZE, FieldElement

SHARE_WIRE_SIZE = 2 * FIELD_ELEMENT_SIZE

_SHARE_STRUCT = struct.Struct(">QQ")


@dataclass(frozen=True, slots=True)
class Share:
    """One evaluation point of a sharing polynomial."""
    x: int
    y: FieldElement
    threshold: int

    def __post_init__(self):
        if self.x == 0:
            raise ValueError("share at x=0 would reveal the secret")
        if not 0 < self.x < self.y.modulus:
            raise ValueError(f"evaluation point {self.x} outside [1, p)")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")

    @property
    def modulus(self) -> int:
        return self.y.modulus


def _check_parameters(t: int, n: int, modulus: int) -> None:
    if t < 0 or t >= n:
        raise InvalidThresholdError(f"need 0 <= t < n, got t={t}, n={n}")
    if n >= modulus:
        raise InvalidThresholdError(f"n={n} must be below the field modulus {modulus}")


def _random_coefficients(rng: np.random.Generator, count: int, modulus: int) -> list[int]:
    if count == 0:
        return []
    return [int(c) for c in rng.integers(0, modulus, size=count, dtype=np.int64)]


def _evaluate(coefficients: Sequence[int], x: int, modulus: int) -> int:
    # Horner; coefficients[0] is the secret
    acc = 0
    for c in reversed(coefficients):
        acc = (acc * x + c) % modulus
    return acc


def share_secret(
    secret: FieldElement | int,
    t: int,
    n: int,
    rng: np.random.Generator,
    coefficients: Sequence[int] | None = None,
) -> list[Share]:
    """
    Split a secret into n shares, any t+1 of which reconstruct it.

    Args:
        secret: Field element (or int, taken in the default field)
        t: Polynomial degree; t+1 shares are needed to reconstruct
        n: Number of shares, evaluated at x = 1..n
        rng: Seeded numpy generator for the random coefficients
        coefficients: Test hook fixing coefficients 1..t instead of drawing them

    Returns:
        n shares ordered by evaluation point
    """
    if not isinstance(secret, FieldElement):
        secret = FieldElement(secret, DEFAULT_PRIME)
    modulus = secret.modulus
    _check_parameters(t, n, modulus)

    if coefficients is None:
        tail = _random_coefficients(rng, t, modulus)
    else:
        if len(coefficients) != t:
            raise InvalidThresholdError(f"expected {t} fixed coefficients, got {len(coefficients)}")
        tail = [c % modulus for c in coefficients]

    poly = [secret.value, *tail]
    return [
        Share(x=x, y=FieldElement(_evaluate(poly, x, modulus), modulus), threshold=t)
        for x in range(1, n + 1)
    ]


def _lagrange_at_zero(xs: Sequence[int], modulus: int) -> list[int]:
    weights = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if i == j:
                continue
            num = (num * xj) % modulus
            den = (den * (xj - xi)) % modulus
        weights.append((num * pow(den, -1, modulus)) % modulus)
    return weights


def _validate_points(shares: Sequence[Share]) -> tuple[list[int], int, int]:
    if not shares:
        raise InsufficientSharesError("no shares given")
    threshold = shares[0].threshold
    modulus = shares[0].modulus
    seen: set[int] = set()
    for share in shares:
        if share.threshold != threshold:
            raise MixedThresholdError(
                f"shares carry thresholds {threshold} and {share.threshold}"
            )
        if share.modulus != modulus:
            raise MixedThresholdError("shares come from different fields")
        if share.x in seen:
            raise DuplicatePointError(f"evaluation point x={share.x} appears twice")
        seen.add(share.x)
    if len(shares) < threshold + 1:
        raise InsufficientSharesError(
            f"need at least {threshold + 1} shares, got {len(shares)}"
        )
    return [s.x for s in shares], threshold, modulus


def reconstruct(shares: Sequence[Share]) -> FieldElement:
    """Lagrange-interpolate the sharing polynomial at x = 0."""
    xs, _, modulus = _validate_points(shares)
    weights = _lagrange_at_zero(xs, modulus)
    total = sum(w * s.y.value for w, s in zip(weights, shares)) % modulus
    return FieldElement(total, modulus)


def add_share_vectors(a: Sequence[Share], b: Sequence[Share]) -> list[Share]:
    """Point-wise sum of two share vectors held at the same evaluation points."""
    if len(a) != len(b):
        raise ShapeMismatchError(f"share vectors have lengths {len(a)} and {len(b)}")
    out = []
    for left, right in zip(a, b):
        if left.x != right.x or left.threshold != right.threshold or left.modulus != right.modulus:
            raise PointMismatchError(
                f"cannot add share at x={left.x} (t={left.threshold}) "
                f"to share at x={right.x} (t={right.threshold})"
            )
        out.append(Share(x=left.x, y=left.y + right.y, threshold=left.threshold))
    return out


def share_vector(
    values: Sequence[int],
    t: int,
    n: int,
    rng: np.random.Generator,
    modulus: int = DEFAULT_PRIME,
) -> list[list[Share]]:
    """
    Share every cell of an integer vector.

    Returns:
        n share vectors; entry j holds the shares for evaluation point j+1
    """
    _check_parameters(t, n, modulus)
    if t > 0 and len(values) > 0:
        tails = rng.integers(0, modulus, size=(len(values), t), dtype=np.int64).tolist()
    else:
        tails = [[] for _ in values]

    per_point: list[list[Share]] = [[] for _ in range(n)]
    for value, tail in zip(values, tails):
        poly = [value % modulus, *tail]
        for x in range(1, n + 1):
            per_point[x - 1].append(
                Share(x=x, y=FieldElement(_evaluate(poly, x, modulus), modulus), threshold=t)
            )
    return per_point


def reconstruct_vector(vectors: Sequence[Sequence[Share]]) -> list[FieldElement]:
    """Reconstruct a vector from share vectors held at distinct points."""
    if not vectors:
        raise InsufficientSharesError("no share vectors given")
    width = len(vectors[0])
    if any(len(v) != width for v in vectors):
        raise ShapeMismatchError("share vectors differ in length")
    if width == 0:
        return []
    heads = [v[0] for v in vectors]
    xs, _, modulus = _validate_points(heads)
    weights = _lagrange_at_zero(xs, modulus)
    out = []
    for cell in range(width):
        column = [v[cell] for v in vectors]
        if [s.x for s in column] != xs:
            raise PointMismatchError(f"cell {cell} mixes evaluation points")
        out.append(FieldElement(sum(w * s.y.value for w, s in zip(weights, column)) % modulus, modulus))
    return out


def encode_shares(shares: Sequence[Share]) -> bytes:
    """Wire form: 8-byte x then 8-byte y per share, big-endian."""
    return b"".join(_SHARE_STRUCT.pack(s.x, s.y.value) for s in shares)


def decode_shares(payload: bytes, threshold: int, modulus: int = DEFAULT_PRIME) -> list[Share]:
    """Inverse of encode_shares; threshold travels with the protocol config."""
    if len(payload) % SHARE_WIRE_SIZE:
        raise ShapeMismatchError(
            f"payload of {len(payload)} bytes is not a whole number of shares"
        )
    return [
        Share(x=x, y=FieldElement(y, modulus), threshold=threshold)
        for x, y in _SHARE_STRUCT.iter_unpack(payload)
    ]
