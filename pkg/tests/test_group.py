import random

import pytest

from multisig.errors import BadLength, InvOfZero, IoError, NonCanonical, NotInGroup
from multisig.group import (
    OpCounter,
    derive_rng,
    group_from_descriptor,
    toy_group,
    toy_group_for_order,
)

# ── toy backend: worked examples ─────────────────────────────────────────────

def test_toy_defaults(toy):
    assert (toy.p, toy.q, toy.g1) == (23, 11, 2)
    assert toy.identity == 1
    assert toy.exp(toy.g1, 3) == 8
    assert toy.exp(toy.g1, 0) == 1
    assert toy.exp(toy.g1, 11) == 1          # generator order
    assert toy.mul(4, 8) == 9
    assert toy.mul(9, toy.identity) == 9
    assert toy.s_inv(3) == 4                 # 3*4 = 12 = 1 mod 11


def test_scalar_codec_fixed_width(toy):
    assert toy.scalar_len == 2
    assert toy.encode_scalar(5) == bytes.fromhex("0005")
    assert toy.decode_scalar(bytes.fromhex("0005")) == 5
    with pytest.raises(BadLength):
        toy.decode_scalar(b"\x05")
    with pytest.raises(NonCanonical):
        toy.decode_scalar(bytes.fromhex("000b"))  # 11 >= q


def test_element_codec_rejects_non_members(toy):
    # 5 is in Z_23^* but not in the order-11 subgroup
    with pytest.raises(NotInGroup):
        toy.decode_element(bytes.fromhex("0005"))
    with pytest.raises(NonCanonical):
        toy.decode_element(bytes.fromhex("0000"))
    with pytest.raises(NonCanonical):
        toy.decode_element((23).to_bytes(2, "big"))
    with pytest.raises(BadLength):
        toy.decode_element(b"\x08")
    # round trip over the whole subgroup
    members = sorted(pow(toy.g1, k, toy.p) for k in range(toy.q))
    assert len(set(members)) == 11
    for x in members:
        assert toy.decode_element(toy.encode_element(x)) == x


def test_scalar_field_ops(toy):
    assert toy.s_add(7, 8) == 4
    assert toy.s_sub(3, 7) == 7
    assert toy.s_mul(7, 8) == 1
    assert toy.s_inv(3) == 4
    for c in range(1, toy.q):
        assert toy.s_mul(toy.s_inv(c), c) == 1
        assert toy.s_sub(c, c) == 0
    with pytest.raises(InvOfZero):
        toy.s_inv(0)
    with pytest.raises(InvOfZero):
        toy.s_inv(11)


def test_exp_tower_law_exhaustive(toy):
    # (a^s)^t == a^(s*t mod q), checked over every (a, s, t) in the toy group
    for k in range(toy.q):
        a = pow(toy.g1, k, toy.p)
        for s in range(toy.q):
            a_s = toy.exp(a, s)
            for t in range(toy.q):
                assert toy.exp(a_s, t) == toy.exp(a, (s * t) % toy.q)


def test_mul_identity_and_commutativity(toy):
    rng = random.Random(7)
    for _ in range(50):
        x = pow(toy.g1, rng.randrange(toy.q), toy.p)
        y = pow(toy.g1, rng.randrange(toy.q), toy.p)
        assert toy.mul(x, toy.identity) == x
        assert toy.mul(x, y) == toy.mul(y, x)


def test_exp_matches_naive_square_and_multiply(toy):
    # oracle: independent left-to-right square-and-multiply
    def naive(base, e):
        acc = 1
        for bit in bin(e % toy.q)[2:]:
            acc = acc * acc % toy.p
            if bit == "1":
                acc = acc * base % toy.p
        return acc

    rng = random.Random(1234)
    for _ in range(1000):
        x = pow(toy.g1, rng.randrange(toy.q), toy.p)
        e = rng.randrange(0, 3 * toy.q)
        assert toy.exp(x, e) == naive(x, e)


def test_random_scalar_range_and_rough_uniformity(toy):
    rng = derive_rng(99, "uniform")
    counts = [0] * toy.q
    n = 11_000
    for _ in range(n):
        s = toy.random_scalar(rng)
        assert 1 <= s <= toy.q - 1
        counts[s] += 1
    assert counts[0] == 0
    # chi-square against uniform over [1, 10]; 9 dof, 27.9 is p ~ 0.001
    expected = n / (toy.q - 1)
    chi2 = sum((c - expected) ** 2 / expected for c in counts[1:])
    assert chi2 < 27.9


def test_derive_rng_streams_are_stable_and_independent():
    a = derive_rng(7, "v", 0, 3).getrandbits(64)
    assert a == derive_rng(7, "v", 0, 3).getrandbits(64)
    assert a != derive_rng(7, "v", 0, 4).getrandbits(64)
    assert a != derive_rng(7, "key", 0, 3).getrandbits(64)


def test_op_counters(toy):
    ops = OpCounter("test")
    before = toy.ops_total.snapshot()
    toy.exp(toy.g1, 5, ops=ops)
    toy.mul(2, 4, ops=ops)
    toy.exp(toy.g1, 7)
    assert ops.snapshot() == (1, 1)
    after = toy.ops_total.snapshot()
    assert after[0] - before[0] == 2
    assert after[1] - before[1] == 1
    ops.reset()
    assert ops.snapshot() == (0, 0)


def test_toy_group_for_order():
    g = toy_group_for_order(65521)
    assert (g.p - 1) % g.q == 0
    assert pow(g.g1, g.q, g.p) == 1
    assert g.g1 != 1
    assert g.scalar_len == 2
    with pytest.raises(ValueError):
        toy_group_for_order(65520)                    # not prime
    with pytest.raises(ValueError):
        toy_group(p=24, q=11, g=2)


def test_descriptor_round_trip(toy, curve):
    for par in (toy, curve):
        rebuilt = group_from_descriptor(par.descriptor())
        assert rebuilt.group_id == par.group_id
        assert rebuilt.q == par.q
    with pytest.raises(IoError):
        group_from_descriptor({"backend": "nope"})
    with pytest.raises(IoError):
        group_from_descriptor({"backend": "toy", "p": 23})


# ── curve backend ────────────────────────────────────────────────────────────

def test_curve_constants_and_generator(curve):
    assert curve.scalar_len == 32
    assert curve.element_len == 33
    assert curve.encode_element(curve.g1).hex() == (
        "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
    )
    # 2G, a standard test vector
    assert curve.exp(curve.g1, 2)[0] == int(
        "c6047f9441ed7d6d3045406e95c07cd85c778e4b8cef3ca7abac09b95c709ee5", 16
    )


def test_curve_group_law(curve):
    g = curve.g1
    assert curve.mul(g, g) == curve.exp(g, 2)
    assert curve.mul(curve.exp(g, 3), curve.exp(g, 4)) == curve.exp(g, 7)
    assert curve.exp(g, curve.q) is None                   # full order
    assert curve.exp(g, 0) is None
    assert curve.mul(g, curve.identity) == g
    # inverse element: x * x^(q-1) = identity
    x = curve.exp(g, 123456789)
    assert curve.mul(x, curve.exp(x, curve.q - 1)) is None


def test_curve_exp_matches_naive_addition_chain(curve):
    rng = random.Random(7)
    for _ in range(8):
        e = rng.randrange(1, 500)
        acc = None
        for _ in range(e):
            acc = curve.mul(acc, curve.g1) if acc else curve.g1
        assert curve.exp(curve.g1, e) == acc


def test_curve_codec(curve):
    for e in (1, 2, 3, 0xDEADBEEF, curve.q - 1):
        x = curve.exp(curve.g1, e)
        assert curve.decode_element(curve.encode_element(x)) == x
    assert curve.encode_element(None) == b"\x00" * 33
    assert curve.decode_element(b"\x00" * 33) is None
    with pytest.raises(BadLength):
        curve.decode_element(b"\x02" + b"\x00" * 30)
    with pytest.raises(NonCanonical):
        curve.decode_element(b"\x05" + b"\x11" * 32)
    # x = 5 is not on secp256k1
    with pytest.raises(NotInGroup):
        curve.decode_element(b"\x02" + (5).to_bytes(32, "big"))
