"""Prime-field arithmetic and Shamir threshold sharing."""

from app.secretsharing.field import (
    DEFAULT_PRIME,
    FieldElement,
    encode_count,
    decode_count,
)
from app.secretsharing.shamir import (
    Share,
    share_secret,
    reconstruct,
    add_share_vectors,
    share_vector,
    reconstruct_vector,
    encode_shares,
    decode_shares,
    SHARE_WIRE_SIZE,
)

__all__ = [
    "DEFAULT_PRIME",
    "FieldElement",
    "encode_count",
    "decode_count",
    "Share",
    "share_secret",
    "reconstruct",
    "add_share_vectors",
    "share_vector",
    "reconstruct_vector",
    "encode_shares",
    "decode_shares",
    "SHARE_WIRE_SIZE",
]
