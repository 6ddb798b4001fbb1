import logging

from config.settings import RESOURCES, TOKEN_TTL_MS, TRUST_THRESHOLD
from src.dfl.inference import predict_context
from src.metrics.counters import charge
from src.models.context import DeviceContextRecord, TrustScore
from src.models.decision import AuthorizationDecision
from src.models.request import AccessLevel

logger = logging.getLogger(__name__)

REASON_AUTHENTICATION = 'authentication'
REASON_TRUST = 'trust'
REASON_POLICY = 'policy'
REASON_GRANTED = 'granted'


class PolicyEngine:
    def __init__(self, trust_engine, threshold=TRUST_THRESHOLD, resources=None, ttl_ms=TOKEN_TTL_MS,
                 storage=None, model_source=None):
        """
        Args:
            trust_engine: TrustEngine consulted by `authorize`
            threshold: Minimum trust value for an allow
            resources: {resource: highest permitted access level}
            ttl_ms: Length of the granted time range
            storage: DomainStorage, fallback context source when no model is attached
            model_source: Callable returning the current model, or None
        """
        self.trust_engine = trust_engine
        self.threshold = threshold
        self.resources = {name: AccessLevel(level) for name, level in (resources or RESOURCES).items()}
        self.ttl_ms = ttl_ms
        self.storage = storage
        self.model_source = model_source or (lambda: None)

    def permits(self, resource, access_level):
        ceiling = self.resources.get(resource)
        return ceiling is not None and AccessLevel(access_level).rank <= ceiling.rank

    def decide(self, request, authenticated, trust, now=0):
        """Pure decision over already-computed inputs; one CP."""
        charge('cp')
        if not authenticated:
            return AuthorizationDecision(False, reason=REASON_AUTHENTICATION)
        if trust.value < self.threshold:
            return AuthorizationDecision(False, reason=REASON_TRUST)
        if not self.permits(request.resource, request.access_level):
            return AuthorizationDecision(False, reason=REASON_POLICY)
        return AuthorizationDecision(
            allow=True,
            scope=frozenset([request.resource]),
            time_range=(int(now), int(now) + int(self.ttl_ms)),
            intention=request.access_intention,
            reason=REASON_GRANTED,
        )

    def lookup_context(self, device_id, now):
        """The device's context: model lookup when a model is attached, else the latest stored record."""
        model = self.model_source()
        if model is not None:
            prediction = predict_context(model, device_id)
            return DeviceContextRecord(device_id, prediction.context_class, prediction.features, float(now))
        if self.storage is not None:
            return self.storage.latest_record(device_id)
        return None

    def authorize(self, request, authenticated, now=0):
        """Context lookup, trust assessment, decision. Unauthenticated requests skip straight to decide."""
        if not authenticated:
            return self.decide(request, False, TrustScore(0.0), now)
        context = self.lookup_context(request.device_id, now)
        trust = self.trust_engine.assess_trust(request, context)
        decision = self.decide(request, True, trust, now)
        logger.debug("%s -> %s (trust %.3f)", request.device_id, decision.reason, trust.value)
        return decision


def decide(pe, request, authenticated, trust, now=0):
    return pe.decide(request, authenticated, trust, now)
