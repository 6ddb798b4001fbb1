"""
One network domain's control plane: data storage, AM, CAM, TE, PE and the
PEP entry point `handle_local`, plus the gateway key pair and token ledger
used for cross-domain pre-authorization.
"""

import logging
import random

from config.settings import RESOURCES, TOKEN_TTL_MS, TRUST_THRESHOLD
from src.crypto.suite import NONCE_SIZE, generate_keypair
from src.database.storage import DomainStorage
from src.dfl.mlp import Architecture
from src.exceptions import NotNeighbors
from src.protocol.channel import establish_channel
from src.protocol.preauth import preauthorize
from src.protocol.tokens import NonceSource, TokenLedger
from src.zta.authentication import AuthenticationModule
from src.zta.context import ContextAwareModule
from src.zta.policy import PolicyEngine
from src.zta.trust import TrustEngine, TrustRules

logger = logging.getLogger(__name__)


class Domain:
    def __init__(self, domain_id, rules=None, threshold=TRUST_THRESHOLD, resources=None, ttl_ms=TOKEN_TTL_MS,
                 seed=None, storage=None, architecture=None):
        """
        Args:
            domain_id: Domain identifier (also the AM issuer id)
            rules: TrustRules for the trust engine
            threshold: Policy trust threshold
            resources: {resource: highest permitted access level}
            ttl_ms: Token / decision validity
            seed: Seeds the AM and gateway keys, token nonces and channel nonces
            storage: DomainStorage (a fresh in-memory one when absent)
            architecture: Model architecture for context records
        """
        self.domain_id = domain_id
        self.architecture = architecture or Architecture()
        self.storage = storage or DomainStorage(domain_id)
        self.model = None
        self.peers = {}

        am_seed = None if seed is None else seed * 2
        gateway_seed = None if seed is None else seed * 2 + 1
        self.am = AuthenticationModule(domain_id, self.storage, key_seed=am_seed)
        self.gateway_keys = generate_keypair(gateway_seed)
        self.cam = ContextAwareModule(self.storage, self.architecture.input_dim, self.architecture.classes)
        self.te = TrustEngine(rules or TrustRules(), self.storage, model_source=lambda: self.model)
        self.pe = PolicyEngine(self.te, threshold, resources or RESOURCES, ttl_ms, self.storage,
                               model_source=lambda: self.model)
        self.ledger = TokenLedger()
        self.nonce_source = NonceSource(seed)
        self._channel_rng = random.Random(None if seed is None else f"channel/{seed}")

    def channel_nonce(self):
        return self._channel_rng.randbytes(NONCE_SIZE)

    def attach_model(self, model):
        self.model = model

    def peer_with(self, other):
        """Mutual federation: trust each other's AM as certificate issuer."""
        self.peers[other.domain_id] = other
        other.peers[self.domain_id] = self
        self.am.trust_issuer(other.domain_id, other.am.public_key)
        other.am.trust_issuer(self.domain_id, self.am.public_key)

    def handle_local(self, request, now=0):
        """
        PEP entry point.

        Returns:
            AuthorizationDecision for requests addressed to this domain;
            OneTimeToken or Denial for requests forwarded to a peer.
        """
        if request.target_domain != self.domain_id:
            return self.forward(request, now)
        authenticated = self.am.authenticate(request)
        return self.pe.authorize(request, authenticated, now)

    def forward(self, request, now=0):
        target = self.peers.get(request.target_domain)
        if target is None:
            raise NotNeighbors(f"{self.domain_id} has no channel to {request.target_domain}")
        my_key, _ = establish_channel(self.gateway_keys, target.gateway_keys)
        return preauthorize(self, target, request, my_key, now)
