"""Privacy-preserving KPI benchmarking through one untrusted provider.

Players submit additively homomorphic encryptions of their key
performance indicators; the provider computes mean, variance, median,
maximum, best in class and both quartile cut values without ever seeing
a plaintext, and every player checks the published results against
MAC-based integrity hashes.
"""

from .encoding import PlaintextDomain, parse_kpi, quantize
from .engine import (
    BenchmarkResult,
    PlayerResult,
    PlayerState,
    ProviderSession,
    TamperSpec,
)
from .errors import BlindbenchError
from .oracle import OracleReport, compute as oracle_compute
from .simulate import ScenarioConfig, SimulationReport, run_session

__version__ = "0.1.0"

__all__ = [
    "BenchmarkResult",
    "BlindbenchError",
    "OracleReport",
    "PlaintextDomain",
    "PlayerResult",
    "PlayerState",
    "ProviderSession",
    "ScenarioConfig",
    "SimulationReport",
    "TamperSpec",
    "oracle_compute",
    "parse_kpi",
    "quantize",
    "run_session",
    "__version__",
]
