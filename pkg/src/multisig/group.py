"""Prime-order group backends with operation counting.

Two interchangeable backends sit behind one ``Group`` interface:

* ``ToyGroup`` — the order-q subgroup of Z_p^* for small primes.  Cheap
  enough to brute-force, which is exactly what the attack demos and the
  exhaustive oracle tests need.
* ``Secp256k1Group`` — the standard 256-bit curve group, pure python
  (Jacobian double-and-add).  Slow by libsecp standards (~1 ms per
  exponentiation) but honest: every benchmark number is produced by the
  same code path the protocols use.

Group elements are opaque to callers: ints for the toy backend, affine
``(x, y)`` tuples (or ``None`` for the identity) on the curve.  Scalars
are plain ints in ``[0, q)`` everywhere.

Every exponentiation and element multiplication bumps ``Group.ops_total``
and, when given, a per-call ``ops=`` counter, so protocol code can meter
cost per signing session while tests meter whole phases.  Counters are
lock-protected, so totals stay exact under opt-in threaded phase
execution too.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field

from .errors import BadLength, InvOfZero, IoError, NonCanonical, NotInGroup

__all__ = [
    "OpCounter",
    "Group",
    "ToyGroup",
    "Secp256k1Group",
    "toy_group",
    "toy_group_for_order",
    "curve_group",
    "group_from_descriptor",
    "derive_rng",
]


# ── operation counting ──────────────────────────────────────────────────────

@dataclass
class OpCounter:
    """Counts group operations (not scalar arithmetic) within one scope."""

    label: str = ""
    exponentiations: int = 0
    multiplications: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock,
                                  repr=False, compare=False)

    def add_exp(self, n: int = 1) -> None:
        with self._lock:
            self.exponentiations += n

    def add_mul(self, n: int = 1) -> None:
        with self._lock:
            self.multiplications += n

    def reset(self) -> None:
        with self._lock:
            self.exponentiations = 0
            self.multiplications = 0

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return (self.exponentiations, self.multiplications)


# ── deterministic randomness ────────────────────────────────────────────────

def derive_rng(seed: int | str, *parts: object) -> random.Random:
    """Independent RNG stream for (seed, *parts).

    String seeding of ``random.Random`` hashes via SHA-512, so streams are
    stable across platforms and python versions, and distinct label tuples
    give unrelated streams.
    """
    return random.Random("|".join(str(p) for p in (seed, *parts)))


# ── shared interface ────────────────────────────────────────────────────────

class Group:
    """A prime-order cyclic group ⟨g1⟩ of order q with fixed-width codecs."""

    group_id: str
    q: int
    g1: object
    identity: object
    element_len: int
    scalar_len: int

    def __init__(self) -> None:
        self.ops_total = OpCounter("total")

    # group operations -------------------------------------------------

    def exp(self, base, e: int, ops: OpCounter | None = None):
        self.ops_total.add_exp()
        if ops is not None:
            ops.add_exp()
        return self._exp(base, e % self.q)

    def mul(self, a, b, ops: OpCounter | None = None):
        self.ops_total.add_mul()
        if ops is not None:
            ops.add_mul()
        return self._mul(a, b)

    def is_element(self, x) -> bool:
        raise NotImplementedError

    def _exp(self, base, e: int):
        raise NotImplementedError

    def _mul(self, a, b):
        raise NotImplementedError

    # scalar field Z_q ---------------------------------------------------

    def s_add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def s_sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def s_mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def s_inv(self, a: int) -> int:
        if a % self.q == 0:
            raise InvOfZero("no inverse of 0 mod q")
        return pow(a, -1, self.q)

    def random_scalar(self, rng: random.Random) -> int:
        """Uniform scalar in [1, q-1] by rejection sampling."""
        bits = self.q.bit_length()
        while True:
            x = rng.getrandbits(bits)
            if 1 <= x <= self.q - 1:
                return x

    # codecs -------------------------------------------------------------

    def encode_scalar(self, s: int) -> bytes:
        return (s % self.q).to_bytes(self.scalar_len, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_len:
            raise BadLength(
                f"scalar must be {self.scalar_len} bytes, got {len(data)}"
            )
        s = int.from_bytes(data, "big")
        if s >= self.q:
            raise NonCanonical(f"scalar {s} >= group order {self.q}")
        return s

    def encode_element(self, x) -> bytes:
        raise NotImplementedError

    def decode_element(self, data: bytes):
        raise NotImplementedError

    # persistence ---------------------------------------------------------

    def descriptor(self) -> dict:
        """JSON-safe description sufficient to reconstruct this group."""
        raise NotImplementedError


# ── toy backend: subgroup of Z_p^* ──────────────────────────────────────────

def _is_prime(n: int) -> bool:
    # trial division; only used on toy-scale moduli (< 2^25 or so)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class ToyGroup(Group):
    """Order-q subgroup of Z_p^* with p = c*q + 1; elements are ints.

    Small enough to enumerate, so discrete logs are breakable on purpose —
    the attack demos refuse to run anywhere else.
    """

    def __init__(self, p: int, q: int, g: int):
        super().__init__()
        if not (_is_prime(p) and _is_prime(q)):
            raise ValueError("p and q must both be prime")
        if (p - 1) % q != 0:
            raise ValueError("q must divide p-1")
        if not (1 < g < p) or pow(g, q, p) != 1 or g == 1:
            raise ValueError("g does not generate an order-q subgroup")
        self.p = p
        self.q = q
        self.g1 = g
        self.identity = 1
        self.element_len = max(2, (p.bit_length() + 7) // 8)
        self.scalar_len = max(2, (q.bit_length() + 7) // 8)
        self.group_id = f"toy:{p}:{q}:{g}"

    def _exp(self, base: int, e: int) -> int:
        return pow(base, e, self.p)

    def _mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def is_element(self, x) -> bool:
        return isinstance(x, int) and 0 < x < self.p and pow(x, self.q, self.p) == 1

    def encode_element(self, x: int) -> bytes:
        return x.to_bytes(self.element_len, "big")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_len:
            raise BadLength(
                f"element must be {self.element_len} bytes, got {len(data)}"
            )
        x = int.from_bytes(data, "big")
        if not (0 < x < self.p):
            raise NonCanonical(f"{x} outside [1, p-1]")
        if pow(x, self.q, self.p) != 1:
            raise NotInGroup(f"{x} is not in the order-{self.q} subgroup")
        return x

    def descriptor(self) -> dict:
        return {"backend": "toy", "p": self.p, "q": self.q, "g": self.g1}


def toy_group(p: int = 23, q: int = 11, g: int = 2) -> ToyGroup:
    """The worked-example group (defaults p=23, q=11, g=2)."""
    return ToyGroup(p, q, g)


def toy_group_for_order(q: int) -> ToyGroup:
    """Build a toy group for a chosen prime order q (intended q <= ~2^20).

    Finds the smallest even c with p = c*q + 1 prime, then a generator of
    the order-q subgroup as h^((p-1)/q).
    """
    if not _is_prime(q):
        raise ValueError(f"q={q} is not prime")
    if q.bit_length() > 25:
        raise ValueError("toy groups are for toy-sized q (<= ~2^25)")
    c = 2
    while not _is_prime(c * q + 1):
        c += 2
    p = c * q + 1
    for h in range(2, p):
        g = pow(h, (p - 1) // q, p)
        if g != 1:
            return ToyGroup(p, q, g)
    raise ValueError("no generator found")  # pragma: no cover


# ── secp256k1 backend ───────────────────────────────────────────────────────

_P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
_GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

# Jacobian coordinates (X, Y, Z) ~ (X/Z^2, Y/Z^3); Z=0 is the identity.
_JAC_ID = (1, 1, 0)


def _jac_double(pt):
    X1, Y1, Z1 = pt
    if Z1 == 0 or Y1 == 0:
        return _JAC_ID
    A = (Y1 * Y1) % _P
    B = (4 * X1 * A) % _P
    C = (8 * A * A) % _P
    D = (3 * X1 * X1) % _P  # a = 0 on secp256k1
    X3 = (D * D - 2 * B) % _P
    Y3 = (D * (B - X3) - C) % _P
    Z3 = (2 * Y1 * Z1) % _P
    return (X3, Y3, Z3)


def _jac_add(p1, p2):
    X1, Y1, Z1 = p1
    X2, Y2, Z2 = p2
    if Z1 == 0:
        return p2
    if Z2 == 0:
        return p1
    Z1Z1 = (Z1 * Z1) % _P
    Z2Z2 = (Z2 * Z2) % _P
    U1 = (X1 * Z2Z2) % _P
    U2 = (X2 * Z1Z1) % _P
    S1 = (Y1 * Z2 * Z2Z2) % _P
    S2 = (Y2 * Z1 * Z1Z1) % _P
    if U1 == U2:
        if S1 != S2:
            return _JAC_ID
        return _jac_double(p1)
    H = (U2 - U1) % _P
    R = (S2 - S1) % _P
    HH = (H * H) % _P
    HHH = (H * HH) % _P
    V = (U1 * HH) % _P
    X3 = (R * R - HHH - 2 * V) % _P
    Y3 = (R * (V - X3) - S1 * HHH) % _P
    Z3 = (H * Z1 * Z2) % _P
    return (X3, Y3, Z3)


def _jac_to_affine(pt):
    X, Y, Z = pt
    if Z == 0:
        return None
    zi = pow(Z, -1, _P)
    zi2 = (zi * zi) % _P
    return ((X * zi2) % _P, (Y * zi2 * zi) % _P)


class Secp256k1Group(Group):
    """secp256k1 over affine tuples; identity is ``None``.

    Encoding is 33-byte compressed SEC1 (02/03 prefix + big-endian x);
    the identity, which SEC1 has no compressed form for, is 33 zero bytes.
    """

    def __init__(self) -> None:
        super().__init__()
        self.q = _N
        self.g1 = (_GX, _GY)
        self.identity = None
        self.element_len = 33
        self.scalar_len = 32
        self.group_id = "secp256k1"

    def _exp(self, base, e: int):
        if base is None or e == 0:
            return None
        acc = _JAC_ID
        jb = (base[0], base[1], 1)
        for bit in bin(e)[2:]:
            acc = _jac_double(acc)
            if bit == "1":
                acc = _jac_add(acc, jb)
        return _jac_to_affine(acc)

    def _mul(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        x1, y1 = a
        x2, y2 = b
        if x1 == x2:
            if (y1 + y2) % _P == 0:
                return None
            lam = (3 * x1 * x1) * pow(2 * y1, -1, _P) % _P
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, _P) % _P
        x3 = (lam * lam - x1 - x2) % _P
        y3 = (lam * (x1 - x3) - y1) % _P
        return (x3, y3)

    def is_element(self, x) -> bool:
        if x is None:
            return True
        if not (isinstance(x, tuple) and len(x) == 2):
            return False
        px, py = x
        return (
            0 <= px < _P
            and 0 <= py < _P
            and (py * py - (px * px * px + 7)) % _P == 0
        )

    def encode_element(self, x) -> bytes:
        if x is None:
            return b"\x00" * 33
        px, py = x
        prefix = b"\x03" if py & 1 else b"\x02"
        return prefix + px.to_bytes(32, "big")

    def decode_element(self, data: bytes):
        if len(data) != 33:
            raise BadLength(f"element must be 33 bytes, got {len(data)}")
        if data == b"\x00" * 33:
            return None
        prefix = data[0]
        if prefix not in (2, 3):
            raise NonCanonical(f"bad compression prefix {prefix:#04x}")
        px = int.from_bytes(data[1:], "big")
        if px >= _P:
            raise NonCanonical(f"x-coordinate {px} >= field prime")
        y2 = (px * px * px + 7) % _P
        py = pow(y2, (_P + 1) // 4, _P)
        if (py * py) % _P != y2:
            raise NotInGroup(f"x-coordinate {px} is not on the curve")
        if (py & 1) != (prefix & 1):
            py = _P - py
        return (px, py)

    def descriptor(self) -> dict:
        return {"backend": "secp256k1"}


def curve_group() -> Secp256k1Group:
    return Secp256k1Group()


def group_from_descriptor(desc: dict) -> Group:
    """Rebuild a group from ``Group.descriptor()`` output (e.g. a key file)."""
    try:
        backend = desc["backend"]
        if backend == "toy":
            return ToyGroup(desc["p"], desc["q"], desc["g"])
        if backend == "secp256k1":
            return Secp256k1Group()
    except (KeyError, TypeError, ValueError) as exc:
        raise IoError(f"bad group descriptor: {exc}") from exc
    raise IoError(f"unknown backend {backend!r}")
