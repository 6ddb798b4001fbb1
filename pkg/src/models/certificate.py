from dataclasses import dataclass

from src.utils.framing import pack_fields, unpack_fields

CERT_VERSION = 0x01


@dataclass(frozen=True)
class Certificate:
    device_id: str
    device_public_key: bytes
    issuer_id: str
    am_signature: bytes

    @staticmethod
    def payload_for(device_id, device_public_key, issuer_id):
        """Bytes covered by the AM signature: device_id || public key || issuer."""
        return pack_fields(CERT_VERSION, [device_id, device_public_key, issuer_id])

    def payload(self):
        return self.payload_for(self.device_id, self.device_public_key, self.issuer_id)

    def to_bytes(self):
        return pack_fields(CERT_VERSION, [self.device_id, self.device_public_key, self.issuer_id, self.am_signature])

    @classmethod
    def from_bytes(cls, data):
        _, (device_id, public_key, issuer_id, signature) = unpack_fields(data, CERT_VERSION, 4)
        return cls(device_id.decode('utf-8'), public_key, issuer_id.decode('utf-8'), signature)

    def to_dict(self):
        return {
            'device_id': self.device_id,
            'device_public_key': self.device_public_key.hex(),
            'issuer_id': self.issuer_id,
            'am_signature': self.am_signature.hex(),
        }

    @classmethod
    def from_json(cls, json_data):
        return cls(
            device_id=json_data.get('device_id'),
            device_public_key=bytes.fromhex(json_data.get('device_public_key')),
            issuer_id=json_data.get('issuer_id'),
            am_signature=bytes.fromhex(json_data.get('am_signature')),
        )
