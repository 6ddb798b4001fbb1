from dataclasses import dataclass, field


@dataclass(frozen=True)
class DeviceContextRecord:
    device_id: str
    context_class: int
    feature_vector: tuple
    timestamp: float

    def __post_init__(self):
        object.__setattr__(self, 'feature_vector', tuple(float(x) for x in self.feature_vector))

    def to_tsv_line(self):
        features = ','.join(repr(x) for x in self.feature_vector)
        return f"{self.device_id}\t{self.context_class}\t{features}\t{self.timestamp!r}\n"

    @classmethod
    def from_tsv_line(cls, line):
        device_id, context_class, features, timestamp = line.rstrip('\n').split('\t')
        return cls(device_id, int(context_class), tuple(float(x) for x in features.split(',')), float(timestamp))


@dataclass(frozen=True)
class TrustScore:
    value: float
    components: dict = field(default_factory=dict)

    def to_dict(self):
        return {'value': self.value, 'components': dict(self.components)}
