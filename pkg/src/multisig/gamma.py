"""Single-signer signatures with a precomputable challenge.

The scheme splits signing so that everything involving the group — the
nonce commitment V = g1^v, the challenge c = H0(V, pk), and the product
v*c — happens before the message exists.  Producing a signature for a
message m is then two scalar operations:

    s = v*c - e*sk  (mod q),   e = H1(m)

and the signature is (c, s).  Verification recovers the commitment as
V = (g1^s * pk^e)^(1/c) and accepts iff H0(V, pk) == c.

Each precomputed nonce is strictly one-time: reusing (v, c) for two
messages leaks the secret key by linear algebra, so ``sign_online``
consumes the nonce and a second use raises NonceReuse.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .errors import BadLength, InternalError, NonceReuse
from .group import Group, OpCounter
from .hashing import H0, H1, hash_to_scalar

__all__ = ["GammaKeyPair", "GammaNonce", "Signature", "keygen", "precompute",
           "sign_online", "verify"]

_MAX_RESAMPLE = 64


@dataclass(frozen=True)
class Signature:
    """A (c, s) scalar pair; also the joint-signature shape downstream."""

    c: int
    s: int

    def to_bytes(self, par: Group) -> bytes:
        return par.encode_scalar(self.c) + par.encode_scalar(self.s)

    @classmethod
    def from_bytes(cls, par: Group, data: bytes) -> "Signature":
        half = par.scalar_len
        if len(data) != 2 * half:
            raise BadLength(f"signature must be {2 * half} bytes, got {len(data)}")
        return cls(par.decode_scalar(data[:half]), par.decode_scalar(data[half:]))


@dataclass(frozen=True)
class GammaKeyPair:
    sk: int
    y: object  # public key g1^sk


@dataclass
class GammaNonce:
    """One precomputed signing token: (v, V, c, v*c).  Single use."""

    v: int
    V: object
    c: int
    vc: int
    used: bool = False
    wall_ns: int = 0


def keygen(par: Group, rng, ops: OpCounter | None = None) -> GammaKeyPair:
    sk = par.random_scalar(rng)
    return GammaKeyPair(sk, par.exp(par.g1, sk, ops=ops))


def precompute(par: Group, key: GammaKeyPair, rng,
               ops: OpCounter | None = None) -> GammaNonce:
    """Offline half of signing: one exponentiation, message not needed.

    Resamples v when the challenge comes out zero (only plausible on toy
    groups) so the verifier's 1/c always exists.
    """
    t0 = time.perf_counter_ns()
    pk = par.encode_element(key.y)
    for _ in range(_MAX_RESAMPLE):
        v = par.random_scalar(rng)
        V = par.exp(par.g1, v, ops=ops)
        c = hash_to_scalar(par, H0, [par.encode_element(V), pk])
        if c != 0:
            return GammaNonce(v, V, c, par.s_mul(v, c),
                              wall_ns=time.perf_counter_ns() - t0)
    raise InternalError("challenge stuck at zero; RNG or backend is broken")


def sign_online(par: Group, key: GammaKeyPair, nonce: GammaNonce,
                m: bytes) -> Signature:
    """Online half: two scalar multiplications, zero group operations."""
    if nonce.used:
        raise NonceReuse("precomputed nonce already consumed")
    nonce.used = True
    e = hash_to_scalar(par, H1, [m])
    s = par.s_sub(nonce.vc, par.s_mul(e, key.sk))
    return Signature(nonce.c, s)


def verify(par: Group, y, m: bytes, sig: Signature,
           ops: OpCounter | None = None) -> bool:
    """Three exponentiations and one multiplication; constant in everything."""
    if not (0 < sig.c < par.q) or not (0 <= sig.s < par.q):
        return False
    e = hash_to_scalar(par, H1, [m])
    base = par.mul(par.exp(par.g1, sig.s, ops=ops), par.exp(y, e, ops=ops), ops=ops)
    V = par.exp(base, par.s_inv(sig.c), ops=ops)
    return hash_to_scalar(par, H0, [par.encode_element(V), par.encode_element(y)]) == sig.c
