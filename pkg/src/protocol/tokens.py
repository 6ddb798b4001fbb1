"""
One-time token issuance and verification.

A token is granted at most once: verification runs the checks in a fixed
order (signature, time range, scope, intention, replay) and marks the nonce
used in the same step as the grant.
"""

import logging
import os
import random
from dataclasses import dataclass, field

from config.settings import TOKEN_NONCE_BYTES
from src.crypto.suite import sign, verify
from src.models.token import Denial, DenialReason, Grant, OneTimeToken
from src.protocol.wire import MSG_TOKEN, frame, unframe

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IssuanceRecord:
    device_id: str
    scope: frozenset
    time_range: tuple
    issued_at: float


@dataclass
class TokenLedger:
    issued: dict = field(default_factory=dict)
    used: set = field(default_factory=set)

    def record_issue(self, token, now):
        if token.nonce in self.issued:
            raise ValueError("nonce reused by issuer")
        self.issued[token.nonce] = IssuanceRecord(token.device_id, token.scope, token.time_range, now)

    def mark_used(self, nonce):
        self.used.add(nonce)

    def is_used(self, nonce):
        return nonce in self.used


class NonceSource:
    """Token nonces; seeded sources are reproducible, unseeded ones use os.urandom."""

    def __init__(self, seed=None, size=TOKEN_NONCE_BYTES):
        self.size = size
        self._rng = random.Random(seed) if seed is not None else None

    def __call__(self):
        if self._rng is None:
            return os.urandom(self.size)
        return self._rng.randbytes(self.size)


def issue_token(am, ledger, decision, device_id, now=0, nonce_source=None):
    """Build the token for an allow decision and sign it with the AM key."""
    if not decision.allow:
        raise ValueError("tokens are only issued for allow decisions")
    nonce_source = nonce_source or NonceSource()
    nonce = nonce_source()
    while nonce in ledger.issued:
        nonce = nonce_source()
    token = OneTimeToken(
        device_id=device_id,
        scope=decision.scope,
        time_range=decision.time_range,
        intention=decision.intention,
        nonce=nonce,
        issuer_id=am.domain_id,
    )
    token = token.with_signature(sign(am.keypair.private_key, token.canonical_bytes()))
    ledger.record_issue(token, now)
    return token


def verify_token(ledger, am_public, token, presented_request, now):
    """
    Args:
        ledger: Issuing domain's TokenLedger
        am_public: Issuing AM public key
        token: Presented OneTimeToken
        presented_request: AccessRequest made with the token
        now: Simulated time (ms)

    Returns:
        Grant, or Denial with the first failing check as reason
    """
    if not verify(am_public, token.canonical_bytes(), token.signature):
        return Denial(DenialReason.SIGNATURE, "token signature does not verify")
    if token.nonce not in ledger.issued:
        return Denial(DenialReason.SIGNATURE, "token was not issued by this ledger")
    start, end = token.time_range
    if not start <= now <= end:
        return Denial(DenialReason.EXPIRED, f"t={now} outside [{start}, {end}]")
    if presented_request.resource not in token.scope:
        return Denial(DenialReason.SCOPE, f"{presented_request.resource} not in scope")
    if presented_request.access_intention.strip() != token.intention.strip():
        return Denial(DenialReason.INTENTION, "intention differs from the pre-authorized one")
    if ledger.is_used(token.nonce):
        return Denial(DenialReason.REPLAY, "token already used")
    ledger.mark_used(token.nonce)
    return Grant(token.device_id, presented_request.resource, token.nonce)


def encode_token(token):
    return frame(MSG_TOKEN, token.to_bytes())


def decode_token(data):
    return OneTimeToken.from_bytes(unframe(data, MSG_TOKEN))


def sign_denial(am, denial, device_id):
    """Denial reply for `device_id`, signed by the target AM."""
    unsigned = Denial(denial.reason, denial.detail, device_id, am.domain_id)
    return unsigned.with_signature(sign(am.keypair.private_key, unsigned.canonical_bytes()))


def verify_denial(am_public, denial):
    return verify(am_public, denial.canonical_bytes(), denial.signature)
