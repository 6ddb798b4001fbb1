"""
Operation counters for the computation-overhead accounting.

Every crypto primitive and every model inference charges its cost unit at the
call site through `charge`. Counts land on the active `Meter`; a `CounterScope`
snapshots the meter on entry so `diff` returns what was charged inside it.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, fields, asdict

from src.exceptions import UnbalancedScope

OP_NAMES = ('exp', 'h', 'sig', 'i', 'cp', 'm', 'cs')
OP_SYMBOLS = {'exp': 'Exp', 'h': 'H', 'sig': 'Sig', 'i': 'I', 'cp': 'CP', 'm': 'M', 'cs': 'CS'}


@dataclass(frozen=True)
class OpCounters:
    exp: int = 0
    h: int = 0
    sig: int = 0
    i: int = 0
    cp: int = 0
    m: int = 0
    cs: int = 0

    def __add__(self, other):
        return OpCounters(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def __sub__(self, other):
        return OpCounters(**{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)})

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, json_data):
        return cls(**{name: int(json_data.get(name, 0)) for name in OP_NAMES})

    def nonzero(self):
        """Compact form, e.g. {'exp': 3, 'h': 2}."""
        return {k: v for k, v in asdict(self).items() if v}

    def __str__(self):
        parts = [f"{v}{OP_SYMBOLS[k]}" if v != 1 else OP_SYMBOLS[k] for k, v in asdict(self).items() if v]
        return '+'.join(parts) or '0'


class CounterScope:
    def __init__(self, meter, label):
        self.meter = meter
        self.label = label
        self.start = None
        self.end = None

    def __enter__(self):
        self.start = self.meter.total
        self.meter._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        self.meter._close(self)
        return False

    @property
    def open(self):
        return self.start is not None and self.end is None


class Meter:
    """Running totals plus a stack of open scopes."""

    def __init__(self):
        self.total = OpCounters()
        self._stack = []

    def charge(self, op, n=1):
        self.total = self.total + OpCounters(**{op: n})

    def scope(self, label):
        return CounterScope(self, label)

    def _close(self, scope):
        if not self._stack or self._stack[-1] is not scope:
            raise UnbalancedScope(f"scope '{scope.label}' closed out of order")
        self._stack.pop()
        scope.end = self.total

    def diff(self, scope):
        if scope.start is None:
            raise UnbalancedScope(f"scope '{scope.label}' was never entered")
        end = scope.end if scope.end is not None else self.total
        return end - scope.start


_default_meter = Meter()
_active_meter = ContextVar('ztmesh_meter', default=_default_meter)


def active_meter():
    return _active_meter.get()


@contextmanager
def use_meter(meter):
    """Route charges to `meter` for the duration of the block."""
    token = _active_meter.set(meter)
    try:
        yield meter
    finally:
        _active_meter.reset(token)


def charge(op, n=1):
    _active_meter.get().charge(op, n)


def scope_counters(label):
    return _active_meter.get().scope(label)


def diff(scope):
    return scope.meter.diff(scope)
