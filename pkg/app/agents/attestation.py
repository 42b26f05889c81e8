"""
Simulated remote attestation and the attested reveal channel.

The enclave's quote binds the SHA-256 measurement of its code manifest to the
verifier's challenge nonce and to the enclave's X25519 channel key, and is
MAC'd with a simulated platform key. A verifier accepts iff the MAC checks,
the measurement equals the pinned digest and the nonce is the one it just
issued. Acceptance yields an AES-GCM channel keyed by HKDF over the X25519
shared secret.
"""

import logging

import numpy as np
from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, hmac
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from app.agents.models import AttestationReport, AttestationVerdict, manifest_digest
from app.errors import ProtocolError

logger = logging.getLogger(__name__)

# Stands in for the hardware root of trust that signs quotes.
PLATFORM_KEY = b"podsynth-simulated-platform-key!"

NONCE_SIZE = 16
KEY_SIZE = 32
CHALLENGE_SIZE = NONCE_SIZE + KEY_SIZE
_GCM_NONCE_SIZE = 12
_CHANNEL_INFO = b"podsynth reveal channel v1"


def measure(manifest: bytes) -> bytes:
    return bytes.fromhex(manifest_digest(manifest))


def _quote_mac(platform_key: bytes, measurement: bytes, nonce: bytes, public_key: bytes) -> bytes:
    mac = hmac.HMAC(platform_key, hashes.SHA256())
    mac.update(measurement + nonce + public_key)
    return mac.finalize()


def _private_key(rng: np.random.Generator) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(rng.bytes(KEY_SIZE))


def _public_bytes(key: X25519PrivateKey) -> bytes:
    return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def _session_key(private_key: X25519PrivateKey, peer_public: bytes, measurement: bytes, nonce: bytes) -> bytes:
    shared = private_key.exchange(X25519PublicKey.from_public_bytes(peer_public))
    return HKDF(
        algorithm=hashes.SHA256(),
        length=KEY_SIZE,
        salt=nonce,
        info=_CHANNEL_INFO + measurement,
    ).derive(shared)


def attest(
    manifest: bytes,
    nonce: bytes = bytes(NONCE_SIZE),
    public_key: bytes = bytes(KEY_SIZE),
    platform_key: bytes = PLATFORM_KEY,
) -> AttestationReport:
    """Produce a quote over the manifest measurement, a challenge nonce and a channel key."""
    measurement = measure(manifest)
    return AttestationReport(
        measurement=measurement,
        nonce=nonce,
        public_key=public_key,
        signature=_quote_mac(platform_key, measurement, nonce, public_key),
    )


def verify_attestation(
    report: AttestationReport,
    expected_digest: str | bytes,
    expected_nonce: bytes | None = None,
    platform_key: bytes = PLATFORM_KEY,
) -> AttestationVerdict:
    """
    Check a quote against the pinned measurement.

    Args:
        report: Quote returned by the enclave
        expected_digest: Pinned manifest digest (hex string or raw bytes)
        expected_nonce: The challenge this verifier issued, if any
        platform_key: Key the simulated platform signs quotes with

    Returns:
        AttestationVerdict with one entry per check
    """
    if isinstance(expected_digest, str):
        expected_digest = bytes.fromhex(expected_digest)
    checks: dict[str, bool] = {}
    reasons: list[str] = []

    mac = hmac.HMAC(platform_key, hashes.SHA256())
    mac.update(report.measurement + report.nonce + report.public_key)
    try:
        mac.verify(report.signature)
        checks["signature"] = True
    except InvalidSignature:
        checks["signature"] = False
        reasons.append("quote signature does not verify")

    checks["measurement"] = report.measurement == expected_digest
    if not checks["measurement"]:
        reasons.append(
            f"measurement {report.measurement.hex()[:16]}... does not match pinned digest"
        )

    if expected_nonce is not None:
        checks["nonce_fresh"] = report.nonce == expected_nonce
        if not checks["nonce_fresh"]:
            reasons.append("quote answers a stale or foreign nonce")

    allowed = all(checks.values())
    return AttestationVerdict(
        allowed=allowed,
        reason="; ".join(reasons) if reasons else "enclave attested",
        checks=checks,
    )


class SecureChannel:
    """AES-GCM with counter nonces; one instance per direction of one link."""

    def __init__(self, key: bytes):
        self._aead = AESGCM(key)
        self._next_seal = 0
        self._last_open = -1

    def seal(self, plaintext: bytes, aad: bytes = b"") -> bytes:
        nonce = self._next_seal.to_bytes(_GCM_NONCE_SIZE, "big")
        self._next_seal += 1
        return nonce + self._aead.encrypt(nonce, plaintext, aad)

    def open(self, sealed: bytes, aad: bytes = b"") -> bytes:
        if len(sealed) < _GCM_NONCE_SIZE + 16:
            raise ProtocolError(f"sealed payload of {len(sealed)} bytes is too short")
        nonce, body = sealed[:_GCM_NONCE_SIZE], sealed[_GCM_NONCE_SIZE:]
        counter = int.from_bytes(nonce, "big")
        if counter <= self._last_open:
            raise ProtocolError(f"replayed channel frame (counter {counter})")
        try:
            plaintext = self._aead.decrypt(nonce, body, aad)
        except InvalidTag as e:
            raise ProtocolError("channel frame failed authentication") from e
        self._last_open = counter
        return plaintext


class Enclave:
    """The attesting side: runs a manifest and answers challenges."""

    def __init__(self, manifest: bytes, rng: np.random.Generator, platform_key: bytes = PLATFORM_KEY):
        self.manifest = manifest
        self.measurement = measure(manifest)
        self._key = _private_key(rng)
        self._platform_key = platform_key
        self.public_key = _public_bytes(self._key)

    def respond(self, challenge: bytes) -> tuple[AttestationReport, SecureChannel]:
        """Answer a challenge (nonce || verifier key) with a quote and the matching channel."""
        if len(challenge) != CHALLENGE_SIZE:
            raise ProtocolError(f"challenge must be {CHALLENGE_SIZE} bytes, got {len(challenge)}")
        nonce, verifier_key = challenge[:NONCE_SIZE], challenge[NONCE_SIZE:]
        report = attest(self.manifest, nonce, self.public_key, self._platform_key)
        channel = SecureChannel(_session_key(self._key, verifier_key, self.measurement, nonce))
        return report, channel


class Verifier:
    """The relying side: issues nonces and checks quotes against a pinned digest."""

    def __init__(
        self,
        expected_digest: str,
        rng: np.random.Generator,
        enforce: bool = True,
        platform_key: bytes = PLATFORM_KEY,
    ):
        self.expected_digest = expected_digest
        self.enforce = enforce
        self._rng = rng
        self._key = _private_key(rng)
        self._platform_key = platform_key
        self._outstanding: bytes | None = None
        self.channel: SecureChannel | None = None

    def challenge(self) -> bytes:
        self._outstanding = self._rng.bytes(NONCE_SIZE)
        return self._outstanding + _public_bytes(self._key)

    def verify(self, report: AttestationReport) -> AttestationVerdict:
        """Check a quote; the outstanding nonce is consumed whatever the outcome."""
        nonce, self._outstanding = self._outstanding, None
        if nonce is None:
            verdict = AttestationVerdict(
                allowed=False, reason="no challenge outstanding", checks={"nonce_fresh": False}
            )
        else:
            verdict = verify_attestation(report, self.expected_digest, nonce, self._platform_key)

        if verdict.allowed or not self.enforce:
            if not verdict.allowed:
                logger.warning(f"Attestation not enforced, proceeding despite: {verdict.reason}")
            self.channel = SecureChannel(
                _session_key(self._key, report.public_key, report.measurement, report.nonce)
            )
        return verdict
