from src.crypto.suite import (
    KeyPair, SharedKey, generate_keypair, derive_shared_key, load_public_key,
    validate_public_key, encrypt, decrypt, sign, verify, digest,
)
