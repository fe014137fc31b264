"""Safe memory reclamation with epoch and token-ring protocols, an
amortized-free policy, concurrent set workloads, and a benchmark harness
with per-thread timeline tracing."""

from .allocators import (SystemAllocator, ThreadCacheAllocator, make_allocator)
from .bench import (BenchConfig, HarnessError, RbfProbeConfig, RbfProbeResult,
                    TrialResult, emit_rbf_csv, emit_results, make_reclaimer,
                    run_benchmark, run_rbf_probe, run_trial)
from .core import (CANARY_KEY, Deallocator, DoubleFreeError, DrainError,
                   GracePeriodOracle, GracePeriodViolation,
                   OperationStateError, Reclaimer, RegistrationError,
                   RetiredObject, SmrError, ThreadHandle, TokenProtocolError,
                   UseAfterFreeError)
from .ebr import DebraReclaimer, LeakyReclaimer, QsbrReclaimer
from .freelist import FreeableList
from .timeline import (EventBuffer, EventKind, NullRecorder, TimelineEvent,
                       TimelineRecorder, filter_threshold, monotonic_ns,
                       parse_manifest, parse_thread_csv)
from .token_ring import (TokenAmortizedReclaimer, TokenNaiveReclaimer,
                         TokenPassFirstReclaimer, TokenPeriodicReclaimer)
from .workloads import ExternalBst, LinkedListSet, make_data_structure

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "CANARY_KEY", "Deallocator", "DebraReclaimer",
    "DoubleFreeError", "DrainError", "EventBuffer", "EventKind",
    "ExternalBst", "FreeableList", "GracePeriodOracle",
    "GracePeriodViolation", "HarnessError", "LeakyReclaimer",
    "LinkedListSet", "NullRecorder", "OperationStateError", "QsbrReclaimer",
    "RbfProbeConfig", "RbfProbeResult", "Reclaimer", "RegistrationError",
    "RetiredObject", "SmrError", "SystemAllocator", "ThreadCacheAllocator",
    "ThreadHandle", "TimelineEvent", "TimelineRecorder",
    "TokenAmortizedReclaimer", "TokenNaiveReclaimer",
    "TokenPassFirstReclaimer", "TokenPeriodicReclaimer",
    "TokenProtocolError", "TrialResult", "UseAfterFreeError",
    "emit_rbf_csv", "emit_results", "filter_threshold", "make_allocator",
    "make_data_structure", "make_reclaimer", "monotonic_ns",
    "parse_manifest", "parse_thread_csv", "run_benchmark", "run_rbf_probe",
    "run_trial",
]
