import logging

from src.crypto.suite import generate_keypair, sign, validate_public_key, verify
from src.exceptions import DuplicateId
from src.models.certificate import Certificate
from src.models.request import AccessRequest

logger = logging.getLogger(__name__)


class AuthenticationModule:
    """
    The domain's AM: issues device certificates and checks them on request.

    Certificates from peer AMs are accepted when their issuer's public key has
    been added with `trust_issuer`.
    """

    def __init__(self, domain_id, storage, keypair=None, key_seed=None):
        """
        Args:
            domain_id: Domain this AM serves (also the certificate issuer id)
            storage: DomainStorage holding issued certificates
            keypair: AM signing key pair (generated when absent)
            key_seed: Optional seed for the generated key pair
        """
        self.domain_id = domain_id
        self.storage = storage
        self.keypair = keypair or generate_keypair(key_seed)
        self.trusted_issuers = {domain_id: self.keypair.public_key}

    @property
    def public_key(self):
        return self.keypair.public_key

    def trust_issuer(self, issuer_id, public_key):
        self.trusted_issuers[issuer_id] = bytes(public_key)

    def register_device(self, device_public_key, device_id):
        """Validate the device key, sign its certificate and store it."""
        if self.storage.is_registered(device_id):
            raise DuplicateId(f"{device_id} already registered in {self.domain_id}")
        validate_public_key(device_public_key)
        payload = Certificate.payload_for(device_id, device_public_key, self.domain_id)
        certificate = Certificate(device_id, bytes(device_public_key), self.domain_id, sign(self.keypair.private_key, payload))
        self.storage.store_certificate(certificate)
        logger.debug("%s registered %s", self.domain_id, device_id)
        return certificate

    def authenticate(self, request):
        """True iff the certificate verifies under a trusted issuer and the device is known to that issuer."""
        certificate = request.certificate
        issuer_key = self.trusted_issuers.get(certificate.issuer_id, b'')
        if not verify(issuer_key, certificate.payload(), certificate.am_signature):
            return False
        if certificate.device_id != request.device_id:
            return False
        if certificate.issuer_id != self.domain_id:
            return True
        stored = self.storage.get_certificate(request.device_id)
        return stored is not None and stored.device_public_key == certificate.device_public_key


def register_device(am, device_public_key, device_id):
    return am.register_device(device_public_key, device_id)


def authenticate(am, request):
    return am.authenticate(request)


class Device:
    """A device holding its own key pair and the certificate its home AM issued."""

    def __init__(self, device_id, key_seed=None):
        self.device_id = device_id
        self.key_seed = key_seed
        self.keypair = None
        self.certificate = None
        self.home_domain = None

    def enroll(self, am):
        """Generate a key pair and register it with `am` (the full registration step)."""
        self.keypair = generate_keypair(self.key_seed)
        self.certificate = am.register_device(self.keypair.public_key, self.device_id)
        self.home_domain = am.domain_id
        return self.certificate

    def make_request(self, target_domain, resource, access_level, access_intention):
        return AccessRequest(
            certificate=self.certificate,
            device_id=self.device_id,
            target_domain=target_domain,
            resource=resource,
            access_level=access_level,
            access_intention=access_intention,
        )
