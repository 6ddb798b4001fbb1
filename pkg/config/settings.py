import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_LEVEL = os.getenv('ZTMESH_LOG', 'info')
OUTPUT_DIR = os.getenv('ZTMESH_OUTPUT_DIR', 'output')
STORAGE_URL = os.getenv('ZTMESH_STORAGE_URL', 'sqlite://')

# Network
LINK_LATENCY_MS = 10.0
REQUEST_TIMEOUT_MS = 5000.0
LINK_RATE_KBPS = 0.0            # 0 disables the serialization cost term
ROUND_INTERVAL_MS = 100.0

# Zero trust
TRUST_THRESHOLD = 0.6
TRUST_FLOOR = 0.3
TOKEN_TTL_MS = 5 * 60 * 1000
TOKEN_NONCE_BYTES = 16

# Decentralized federated learning
BASE_LEARNING_RATE = 0.01
BATCH_SIZE = 32
ROUNDS = 100
LOCAL_EPOCHS = 1
TOP_K = 256
LAMBDA1 = 0.7
LAMBDA2 = 0.3
BETA = 0.1
ALPHA0 = 0.01
ALPHA_MAX = 1.0
INPUT_DIM = 16
HIDDEN_DIM = 32
CLASS_COUNT = 4
DIRICHLET_ALPHA = 0.3
STALE_ROUNDS = 3
F1_HISTORY = 5

# Simulated cost per counted operation (ms)
COST_MS = {
    'exp': 1.0,
    'h': 0.05,
    'sig': 1.0,
    'i': 1.5,
    'cp': 0.5,
    'm': 1.0,
    'cs': 0.1,
}

# Trust engine rule table
TRUST_WEIGHTS = {
    'known_device': 1.0,
    'time_window': 1.0,
    'access_level': 1.0,
    'context_anomaly': 3.0,
    'model_confidence': 1.0,
}
ACCESS_LEVEL_RISK = {'read': 1.0, 'write': 0.6, 'admin': 0.2}
TIME_WINDOW_HOURS = (0, 24)
ANOMALOUS_CLASSES = (3,)
CONFIDENCE_TARGET = 0.5

# Resource -> highest permitted access level
RESOURCES = {
    'telemetry': 'read',
    'sensor-data': 'write',
    'firmware': 'admin',
}
