"""
Elliptic-curve crypto suite: P-256 key agreement (ECDH + HKDF), AES-256-GCM,
and ECDSA P-256 signatures.

Keys, public points and signatures travel as raw fixed-length byte strings:

    public key   65 bytes  uncompressed SEC1 point (0x04 || X || Y)
    private key  32 bytes  big-endian scalar
    signature    64 bytes  r || s
    shared key   32 bytes
    AEAD nonce   12 bytes  (prepended to the ciphertext)

Each primitive charges its operation counter through src.metrics.counters.
"""

import hashlib
import os
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    Prehashed, decode_dss_signature, encode_dss_signature)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from src.exceptions import AuthenticationFailure, InvalidPublicKey
from src.metrics.counters import charge

CURVE = ec.SECP256R1()
CURVE_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551

PUBLIC_KEY_SIZE = 65
PRIVATE_KEY_SIZE = 32
SIGNATURE_SIZE = 64
SHARED_KEY_SIZE = 32
NONCE_SIZE = 12
TAG_SIZE = 16

_CHANNEL_SALT = b'ztmesh/channel/v1'
_CHANNEL_INFO = b'inter-domain request channel'


@dataclass(frozen=True)
class KeyPair:
    public_key: bytes
    private_key: bytes = field(repr=False)

    def private_key_obj(self):
        return _load_private_key(self.private_key)


@dataclass(frozen=True)
class SharedKey:
    key_bytes: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.key_bytes) != SHARED_KEY_SIZE:
            raise ValueError(f"shared key must be {SHARED_KEY_SIZE} bytes")

    def fingerprint(self):
        """Short hex id, safe to log."""
        return hashlib.sha256(self.key_bytes).hexdigest()[:12]


def _public_bytes(public_key_obj):
    return public_key_obj.public_bytes(Encoding.X962, PublicFormat.UncompressedPoint)


def _load_private_key(private_bytes):
    return ec.derive_private_key(int.from_bytes(private_bytes, 'big'), CURVE)


def _scalar_from_seed(seed):
    material = hashlib.sha256(b'ztmesh/keypair/' + int(seed).to_bytes(16, 'big', signed=True)).digest()
    return int.from_bytes(material, 'big') % (CURVE_ORDER - 1) + 1


def generate_keypair(rng_seed=None):
    """
    Generate a P-256 key pair.

    Args:
        rng_seed: Optional integer; the same seed always yields the same pair.

    Returns:
        KeyPair
    """
    if rng_seed is None:
        private = ec.generate_private_key(CURVE)
    else:
        private = ec.derive_private_key(_scalar_from_seed(rng_seed), CURVE)
    charge('exp')
    scalar = private.private_numbers().private_value
    return KeyPair(
        public_key=_public_bytes(private.public_key()),
        private_key=scalar.to_bytes(PRIVATE_KEY_SIZE, 'big'),
    )


def load_public_key(public_bytes):
    """Decode raw point bytes, rejecting anything that is not a valid curve point."""
    if not isinstance(public_bytes, (bytes, bytearray)) or len(public_bytes) != PUBLIC_KEY_SIZE:
        raise InvalidPublicKey(f"expected {PUBLIC_KEY_SIZE} byte uncompressed point")
    try:
        return ec.EllipticCurvePublicKey.from_encoded_point(CURVE, bytes(public_bytes))
    except ValueError as e:
        raise InvalidPublicKey(str(e)) from e


def validate_public_key(public_bytes):
    """Registration-time key validation; charged as one exponentiation."""
    key = load_public_key(public_bytes)
    charge('exp')
    return key


def derive_shared_key(my_private, their_public):
    """
    ECDH on P-256 followed by HKDF-SHA256.

    The HKDF salt mixes both public keys (sorted), so the derived key is bound
    to the pair of identities and is the same on both sides.
    """
    peer = load_public_key(their_public)
    charge('m')
    private = _load_private_key(my_private)
    secret = private.exchange(ec.ECDH(), peer)
    charge('m')
    mine = _public_bytes(private.public_key())
    salt = hashlib.sha256(_CHANNEL_SALT + b''.join(sorted([mine, bytes(their_public)]))).digest()
    key = HKDF(algorithm=hashes.SHA256(), length=SHARED_KEY_SIZE, salt=salt, info=_CHANNEL_INFO).derive(secret)
    return SharedKey(key)


def new_nonce():
    return os.urandom(NONCE_SIZE)


def encrypt(key, plaintext, nonce=None, associated_data=b''):
    """AES-256-GCM; returns nonce || ciphertext || tag."""
    nonce = new_nonce() if nonce is None else bytes(nonce)
    if len(nonce) != NONCE_SIZE:
        raise ValueError(f"nonce must be {NONCE_SIZE} bytes")
    sealed = AESGCM(key.key_bytes).encrypt(nonce, bytes(plaintext), associated_data or None)
    charge('cs')
    return nonce + sealed


def decrypt(key, ciphertext, associated_data=b''):
    charge('cs')
    if len(ciphertext) < NONCE_SIZE + TAG_SIZE:
        raise AuthenticationFailure("ciphertext too short")
    nonce, sealed = ciphertext[:NONCE_SIZE], ciphertext[NONCE_SIZE:]
    try:
        return AESGCM(key.key_bytes).decrypt(nonce, bytes(sealed), associated_data or None)
    except InvalidTag as e:
        raise AuthenticationFailure("AEAD tag mismatch") from e


def digest(message):
    charge('h')
    return hashlib.sha256(message).digest()


def sign(private_key, message):
    """Hash-then-sign ECDSA; returns the 64-byte r || s form."""
    h = digest(message)
    der = _load_private_key(private_key).sign(h, ec.ECDSA(Prehashed(hashes.SHA256())))
    charge('sig')
    r, s = decode_dss_signature(der)
    return r.to_bytes(32, 'big') + s.to_bytes(32, 'big')


def verify(public_key, message, signature):
    """True iff `signature` is valid for `message`; never raises."""
    h = digest(message)
    charge('exp')
    if not isinstance(signature, (bytes, bytearray)) or len(signature) != SIGNATURE_SIZE:
        return False
    try:
        key = load_public_key(public_key)
    except InvalidPublicKey:
        return False
    r = int.from_bytes(signature[:32], 'big')
    s = int.from_bytes(signature[32:], 'big')
    if not (0 < r < CURVE_ORDER and 0 < s < CURVE_ORDER):
        return False
    try:
        key.verify(encode_dss_signature(r, s), h, ec.ECDSA(Prehashed(hashes.SHA256())))
        return True
    except InvalidSignature:
        return False
