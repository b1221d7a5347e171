"""Domain-separated hashing to scalars.

All protocol hashes are SHA-512 over a one-byte domain tag followed by the
length-prefixed input items, reduced mod the group order.  Four domains:

* ``H0`` — challenge derivation (programmable random-oracle slot)
* ``H1`` — key-possession / standalone challenge (random-oracle slot)
* ``H2`` — key blinding in possession proofs (target one-wayness suffices)
* ``H3`` — message digestion (target one-wayness suffices)

The tag byte plus a 4-byte big-endian length prefix per item make the
serialization injective over tuples of byte strings: (b"ab", b"c") and
(b"a", b"bc") hash differently, as do same-bytes inputs under different
tags.  Items are either raw ``bytes`` or ``int`` scalars (fixed-width
encoded); group elements must be pre-encoded by the caller, since toy
group elements are also ints and silent coercion would be ambiguous.

``record_hash_inputs()`` captures every hash call made while active —
tests use it to prove the message stays out of precomputation-phase
hashes.
"""

from __future__ import annotations

import hashlib
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator

__all__ = [
    "HashDomain",
    "H0",
    "H1",
    "H2",
    "H3",
    "is_target_one_way",
    "serialize_items",
    "hash_to_scalar",
    "HashCall",
    "record_hash_inputs",
]


class HashDomain(IntEnum):
    CHALLENGE = 0   # H0
    KEY_PROOF = 1   # H1
    KEY_BLIND = 2   # H2
    MESSAGE = 3     # H3


H0 = HashDomain.CHALLENGE
H1 = HashDomain.KEY_PROOF
H2 = HashDomain.KEY_BLIND
H3 = HashDomain.MESSAGE

# Domains whose security analysis needs only target one-wayness; the other
# two are the slots a reduction would program as random oracles.
_TARGET_ONE_WAY = frozenset({HashDomain.KEY_BLIND, HashDomain.MESSAGE})


def is_target_one_way(tag: HashDomain) -> bool:
    return tag in _TARGET_ONE_WAY


# ── serialization ────────────────────────────────────────────────────────────

def _item_bytes(par, item) -> bytes:
    if isinstance(item, bytes):
        return item
    if isinstance(item, int):
        return par.encode_scalar(item)
    raise TypeError(
        f"hash items must be bytes or int scalars, got {type(item).__name__}"
        " (encode group elements with par.encode_element first)"
    )


def serialize_items(par, tag: HashDomain, items: Iterable) -> bytes:
    out = [bytes([tag])]
    for item in items:
        data = _item_bytes(par, item)
        out.append(len(data).to_bytes(4, "big"))
        out.append(data)
    return b"".join(out)


# ── tracing ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class HashCall:
    tag: HashDomain
    items: tuple[bytes, ...]


_trace_lock = threading.Lock()
_trace_sinks: list[list[HashCall]] = []


@contextmanager
def record_hash_inputs() -> Iterator[list[HashCall]]:
    """Capture (tag, item bytes) for every hash call while the context is open.

    Captures calls from all threads, so it also sees hashes made by
    worker threads during parallel phase execution.
    """
    calls: list[HashCall] = []
    with _trace_lock:
        _trace_sinks.append(calls)
    try:
        yield calls
    finally:
        with _trace_lock:
            _trace_sinks.remove(calls)


# ── hashing ──────────────────────────────────────────────────────────────────

def hash_to_scalar(par, tag: HashDomain, items: Iterable) -> int:
    """SHA-512(tag ‖ length-prefixed items) reduced into [0, q)."""
    items = tuple(items)
    payload = serialize_items(par, tag, items)
    if _trace_sinks:
        call = HashCall(tag, tuple(_item_bytes(par, i) for i in items))
        with _trace_lock:
            for sink in _trace_sinks:
                sink.append(call)
    digest = hashlib.sha512(payload).digest()
    return int.from_bytes(digest, "big") % par.q
