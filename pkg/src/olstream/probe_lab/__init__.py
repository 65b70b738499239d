"""Cell-probe lab: instrumented memory, information transfer, replay decoding and audits."""

from .memory import (
    READ,
    WRITE,
    ArrayRegion,
    CellMemory,
    CellRegion,
    PlainStore,
    ProbeTrace,
    pack_digits,
    unpack_digits,
)
from .transfer import (
    Encoding,
    ITProfile,
    ReplayError,
    encode_interval,
    information_transfer,
    information_transfer_reference,
    it_profile,
    last_write_ops,
    replay_decode,
)

__all__ = [
    "READ",
    "WRITE",
    "ArrayRegion",
    "AuditReport",
    "CellMemory",
    "CellRegion",
    "Encoding",
    "ITProfile",
    "PlainStore",
    "ProbeTrace",
    "ReplayError",
    "audit",
    "encode_interval",
    "information_transfer",
    "information_transfer_reference",
    "it_profile",
    "last_write_ops",
    "pack_digits",
    "replay_decode",
    "unpack_digits",
]


def __getattr__(name):
    # The audit module imports the engines, which import this package; load it lazily.
    if name in ("audit", "AuditReport", "ENGINE_KINDS"):
        from . import audits

        return getattr(audits, name)
    raise AttributeError(name)
