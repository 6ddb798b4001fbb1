"""
Event queue for the discrete-event simulation.

Events run in (time, insertion order); the clock never moves backwards.
"""

import heapq
import itertools
from dataclasses import dataclass, field
from enum import Enum

from src.exceptions import PastEvent


class EventKind(str, Enum):
    MESSAGE_ARRIVAL = 'message_arrival'
    REQUEST_ISSUED = 'request_issued'
    TOKEN_PRESENTED = 'token_presented'
    ROUND_TICK = 'round_tick'
    REQUEST_COMPLETED = 'request_completed'


@dataclass(order=True)
class SimEvent:
    time_ms: float
    seq: int = field(default=-1)
    kind: EventKind = field(default=EventKind.MESSAGE_ARRIVAL, compare=False)
    payload: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        return {'t': round(self.time_ms, 6), 'seq': self.seq, 'kind': EventKind(self.kind).value,
                **{k: v for k, v in self.payload.items() if not k.startswith('_')}}


class EventQueue:
    def __init__(self):
        self._heap = []
        self._counter = itertools.count()
        self.clock = 0.0
        self.log = []

    def __len__(self):
        return len(self._heap)

    def schedule(self, event):
        if event.time_ms < self.clock:
            raise PastEvent(f"event at {event.time_ms} ms is before the clock ({self.clock} ms)")
        event.seq = next(self._counter)
        heapq.heappush(self._heap, event)
        return event

    def at(self, time_ms, kind, **payload):
        return self.schedule(SimEvent(time_ms, kind=kind, payload=payload))

    def pop(self):
        event = heapq.heappop(self._heap)
        self.clock = event.time_ms
        self.log.append(event.to_dict())
        return event

    def run_until(self, handler=None, until=None):
        """
        Process events in order until the queue is empty or the next event is
        after `until`. Returns the event log.
        """
        while self._heap:
            if until is not None and self._heap[0].time_ms > until:
                self.clock = max(self.clock, until)
                break
            event = self.pop()
            if handler is not None:
                handler(event)
        return self.log
