"""
Per-domain worker/coordinator and an in-process federation of them.

One call to DomainTrainer.run_round is one training round for one domain:
take the neighbors' compressed models, F1 scores and class distributions,
weight and aggregate them, adapt the learning rate, train locally, then emit
the domain's own compressed model, F1 and class distribution.
"""

import logging
from collections import deque
from dataclasses import dataclass, asdict

import numpy as np

from config.settings import (
    ALPHA0, ALPHA_MAX, BASE_LEARNING_RATE, BATCH_SIZE, BETA, F1_HISTORY, LAMBDA1, LAMBDA2,
    LOCAL_EPOCHS, ROUNDS, STALE_ROUNDS, TOP_K)
from src.dfl.compression import compress_topk, decompress
from src.dfl.metrics import F1_FORMULAS, class_distribution, kl_divergence, macro_f1
from src.dfl.mlp import Architecture, init_model, local_update, predict
from src.dfl.weighting import (
    NeighborState, aggregate, learning_rate_round, normalize_weights, update_alpha,
    weight_adjustment_factor)
from src.exceptions import EmptyInput

logger = logging.getLogger(__name__)

WEIGHTING_MODES = ('dynamic', 'uniform')
STEP_MODES = ('aggregated', 'local')


@dataclass(frozen=True)
class TrainingHyperparams:
    eta0: float = BASE_LEARNING_RATE
    lambda1: float = LAMBDA1
    lambda2: float = LAMBDA2
    beta: float = BETA
    k_top: int = TOP_K
    batch_size: int = BATCH_SIZE
    rounds: int = ROUNDS
    local_epochs_per_round: int = LOCAL_EPOCHS
    alpha0: float = ALPHA0
    alpha_max: float = ALPHA_MAX
    f1_formula: str = 'standard'
    weighting: str = 'dynamic'
    step_from: str = 'local'
    include_self: bool = True
    stale_rounds: int = STALE_ROUNDS
    f1_history: int = F1_HISTORY

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must be in (0, 1]")
        if self.k_top < 1:
            raise ValueError("k_top must be >= 1")
        if self.batch_size < 1 or self.rounds < 0 or self.local_epochs_per_round < 0:
            raise ValueError("batch_size must be >= 1, rounds and local epochs >= 0")
        if self.f1_formula not in F1_FORMULAS:
            raise ValueError(f"f1_formula must be one of {F1_FORMULAS}")
        if self.weighting not in WEIGHTING_MODES:
            raise ValueError(f"weighting must be one of {WEIGHTING_MODES}")
        if self.step_from not in STEP_MODES:
            raise ValueError(f"step_from must be one of {STEP_MODES}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, json_data):
        return cls(**json_data)


@dataclass(frozen=True)
class RoundMessage:
    """Everything one domain sends its neighbors after a round."""
    sender: str
    round: int
    update: object
    f1: float
    class_distribution: tuple


@dataclass(frozen=True)
class RoundRecord:
    round: int
    domain: str
    f1: float
    test_f1: float
    eta: float
    neighbor: str
    waf: float
    weight: float

    def to_dict(self):
        return asdict(self)


class DomainTrainer:
    def __init__(self, domain_id, X, y, hyperparams=None, architecture=None, seed=0, test_set=None):
        """
        Args:
            domain_id: Owning domain
            X, y: Local dataset (features, labels)
            hyperparams: TrainingHyperparams
            architecture: Architecture of the shared model
            seed: Seeds model initialisation and minibatch order
            test_set: Optional (X, y) held-out set reported as test_f1
        """
        self.domain_id = domain_id
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=int)
        if len(self.X) == 0:
            raise EmptyInput(f"{domain_id} has no local data")
        self.hp = hyperparams or TrainingHyperparams()
        self.architecture = architecture or Architecture()
        self.model = init_model(self.architecture, seed)
        self.initial_model = self.model.copy()
        self.rng = np.random.default_rng(seed)
        self.test_set = test_set
        self.class_distribution = class_distribution(self.y, self.architecture.classes)
        self.f1 = self._local_f1()
        self.neighbors = {}
        self.round = 0
        self.eta = self.hp.eta0
        self.history = []

    def _local_f1(self):
        return macro_f1(predict(self.model, self.X), self.y, formula=self.hp.f1_formula)

    def test_f1(self):
        if self.test_set is None:
            return float('nan')
        X, y = self.test_set
        return macro_f1(predict(self.model, X), y, formula=self.hp.f1_formula)

    def outbound_message(self):
        return RoundMessage(
            sender=self.domain_id,
            round=self.round,
            update=compress_topk(self.model, self.hp.k_top),
            f1=self.f1,
            class_distribution=tuple(float(p) for p in self.class_distribution),
        )

    def _receive(self, messages):
        received = set()
        for message in messages:
            state = self.neighbors.get(message.sender)
            if state is None:
                state = NeighborState(message.sender, alpha=self.hp.alpha0, eta=self.hp.eta0)
                state.f1_history = deque(maxlen=self.hp.f1_history)
                self.neighbors[message.sender] = state
            state.f1 = float(message.f1)
            state.set_distribution(message.class_distribution)
            state.last_update = message.update
            state.stale_rounds = 0
            received.add(message.sender)
        for sender, state in self.neighbors.items():
            if sender not in received:
                state.stale_rounds += 1
        return [
            self.neighbors[sender] for sender in sorted(self.neighbors)
            if self.neighbors[sender].last_update is not None
            and self.neighbors[sender].stale_rounds <= self.hp.stale_rounds
        ]

    def _train(self, aggregated, eta):
        params = aggregated if self.hp.step_from == 'aggregated' else self.model
        grad_at = aggregated
        n = len(self.X)
        for _ in range(self.hp.local_epochs_per_round):
            order = self.rng.permutation(n)
            for start in range(0, n, self.hp.batch_size):
                idx = order[start:start + self.hp.batch_size]
                params = local_update(params, grad_at, eta, (self.X[idx], self.y[idx]))
                grad_at = params
        return params

    def run_round(self, neighbor_messages):
        """
        One training round.

        Args:
            neighbor_messages: RoundMessages received since the previous round

        Returns:
            RoundMessage to send to every neighbor
        """
        self.round += 1
        active = self._receive(neighbor_messages)

        participants = []
        if not active:
            aggregated = self.model
            eta = self.hp.eta0
        else:
            for state in active:
                state.kl = kl_divergence(state.class_distribution, self.class_distribution)
                state.waf = weight_adjustment_factor(state.f1, state.kl, self.hp.lambda1, self.hp.lambda2)
                participants.append((state.domain_id, state.waf, decompress(state.last_update)))
            if self.hp.include_self:
                participants.append(('self', self.hp.lambda1 * self.f1, self.model))
            if self.hp.weighting == 'dynamic':
                weights = normalize_weights([waf for _, waf, _ in participants])
            else:
                weights = np.full(len(participants), 1.0 / len(participants))
            aggregated = aggregate([(w, model) for w, (_, _, model) in zip(weights, participants)])
            for state, w in zip(active, weights):
                state.weight = float(w)
            eta = learning_rate_round(self.hp.eta0, active)

        self.eta = eta
        self.model = self._train(aggregated, eta)
        self.f1 = self._local_f1()

        for state in active:
            if state.stale_rounds == 0:
                state.alpha = update_alpha(state.alpha, state.waf, state.f1, self.hp.beta,
                                           state.trailing_f1(), self.hp.alpha_max)
                state.f1_history.append(state.f1)

        test_f1 = self.test_f1()
        if participants:
            for (label, waf, _), w in zip(participants, weights):
                self.history.append(RoundRecord(self.round, self.domain_id, self.f1, test_f1, eta, label, waf, float(w)))
        else:
            self.history.append(RoundRecord(self.round, self.domain_id, self.f1, test_f1, eta, '-', 0.0, 1.0))
        logger.debug("%s round %d: f1=%.4f test_f1=%.4f eta=%.5f neighbors=%d",
                     self.domain_id, self.round, self.f1, test_f1, eta, len(active))
        return self.outbound_message()


class DflFederation:
    """Lockstep rounds over a static neighbor graph, all in one process."""

    def __init__(self, neighbor_map, datasets, hyperparams=None, architecture=None, seed=0, test_set=None):
        """
        Args:
            neighbor_map: {domain_id: [neighbor ids]}
            datasets: {domain_id: (X, y)}
            hyperparams: TrainingHyperparams shared by every domain
            architecture: Shared model architecture
            seed: Base seed; domain k uses seed + k
            test_set: Optional global held-out (X, y)
        """
        self.neighbor_map = {d: sorted(n) for d, n in neighbor_map.items()}
        self.hp = hyperparams or TrainingHyperparams()
        self.trainers = {}
        for k, domain_id in enumerate(sorted(self.neighbor_map)):
            X, y = datasets[domain_id]
            self.trainers[domain_id] = DomainTrainer(domain_id, X, y, self.hp, architecture, seed + k, test_set)
        self.outbox = {d: t.outbound_message() for d, t in self.trainers.items()}

    @classmethod
    def from_partition(cls, neighbor_map, partition, hyperparams=None, architecture=None, seed=0):
        datasets = {d: partition.arrays(d) for d in neighbor_map}
        return cls(neighbor_map, datasets, hyperparams, architecture, seed, (partition.test_X, partition.test_y))

    def step(self):
        inbound = {
            d: [self.outbox[n] for n in self.neighbor_map[d] if n in self.outbox]
            for d in self.trainers
        }
        self.outbox = {d: self.trainers[d].run_round(inbound[d]) for d in sorted(self.trainers)}

    def run(self, rounds=None):
        rounds = self.hp.rounds if rounds is None else rounds
        for _ in range(rounds):
            self.step()
        logger.info("federation finished %d rounds over %d domains", rounds, len(self.trainers))
        return self

    def history(self):
        rows = []
        for domain_id in sorted(self.trainers):
            rows.extend(self.trainers[domain_id].history)
        return sorted(rows, key=lambda r: (r.round, r.domain))

    def test_f1_by_round(self):
        """{domain: [test_f1 after round 1, 2, ...]}"""
        out = {}
        for domain_id, trainer in self.trainers.items():
            seen = {}
            for record in trainer.history:
                seen.setdefault(record.round, record.test_f1)
            out[domain_id] = [seen[r] for r in sorted(seen)]
        return out
