import logging

from src.models.token import Denial, DenialReason
from src.protocol.channel import open_request, seal_request
from src.protocol.tokens import issue_token, sign_denial

logger = logging.getLogger(__name__)


def process_preauthorization(target, envelope, channel_key, now=0):
    """
    Target side of pre-authorization: open the request, authenticate,
    authorize and, on allow, issue a signed one-time token.

    Raises:
        ChannelFailure: the envelope does not decrypt or decode
    """
    request = open_request(channel_key, envelope)
    if request.target_domain != target.domain_id:
        return sign_denial(target.am, Denial(DenialReason.POLICY, f"request addressed to {request.target_domain}"),
                           request.device_id)
    authenticated = target.am.authenticate(request)
    decision = target.pe.authorize(request, authenticated, now)
    if not decision.allow:
        logger.debug("%s denied %s: %s", target.domain_id, request.device_id, decision.reason)
        return sign_denial(target.am, Denial(DenialReason(decision.reason)), request.device_id)
    return issue_token(target.am, target.ledger, decision, request.device_id, now, target.nonce_source)


def preauthorize(source_domain, target_domain, request, channel_key, now=0):
    """Seal at the source, then run the target's pre-authorization. Returns OneTimeToken or Denial."""
    envelope = seal_request(channel_key, request, nonce=source_domain.channel_nonce())
    logger.debug("%s -> %s: %d byte request", source_domain.domain_id, target_domain.domain_id, len(envelope))
    return process_preauthorization(target_domain, envelope, channel_key, now)
