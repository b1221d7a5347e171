import hashlib
import random

import pytest

from multisig.hashing import (
    H0,
    H1,
    H2,
    H3,
    HashDomain,
    hash_to_scalar,
    is_target_one_way,
    record_hash_inputs,
    serialize_items,
)


def test_frozen_vectors_toy(toy, golden):
    for vec in golden["hash_toy"]:
        items = [bytes.fromhex(h) for h in vec["items_hex"]]
        assert hash_to_scalar(toy, HashDomain(vec["tag"]), items) == vec["value"]


def test_frozen_vectors_curve(curve, golden):
    for vec in golden["hash_curve"]:
        items = [bytes.fromhex(h) for h in vec["items_hex"]]
        got = hash_to_scalar(curve, HashDomain(vec["tag"]), items)
        assert got == int(vec["value_hex"], 16)


def test_matches_direct_sha512(toy):
    # independent recomputation of the whole construction
    payload = bytes([0]) + len(b"ab").to_bytes(4, "big") + b"ab" \
        + len(b"c").to_bytes(4, "big") + b"c"
    want = int.from_bytes(hashlib.sha512(payload).digest(), "big") % toy.q
    assert hash_to_scalar(toy, H0, [b"ab", b"c"]) == want


def test_domain_tags_separate(toy):
    values = {tag: hash_to_scalar(toy, tag, [b"same input"]) for tag in HashDomain}
    serial = {tag: serialize_items(toy, tag, [b"same input"]) for tag in HashDomain}
    assert len(set(serial.values())) == 4
    assert serial[H0][0] == 0 and serial[H3][0] == 3
    assert len(values) == 4  # all computed; collisions possible mod 11 but tags differ


def test_domain_tags_never_collide_at_curve_order(curve):
    # mod-11 tag collisions are expected; mod ~2^256 they would be a bug
    rng = random.Random(5)
    for _ in range(1000):
        data = rng.randbytes(rng.randrange(0, 40))
        outs = {hash_to_scalar(curve, tag, [data]) for tag in HashDomain}
        assert len(outs) == 4


def test_item_boundaries_matter(toy):
    assert serialize_items(toy, H0, [b"ab", b"c"]) != serialize_items(toy, H0, [b"a", b"bc"])
    assert serialize_items(toy, H0, [b"abc"]) != serialize_items(toy, H0, [b"ab", b"c"])
    assert serialize_items(toy, H0, [b""]) != serialize_items(toy, H0, [])


def test_int_items_encode_as_fixed_width_scalars(toy):
    assert hash_to_scalar(toy, H0, [5]) == hash_to_scalar(toy, H0, [bytes.fromhex("0005")])
    with pytest.raises(TypeError):
        hash_to_scalar(toy, H0, [3.14])


def test_output_range(toy, curve):
    rng = random.Random(0)
    for par in (toy, curve):
        for _ in range(1000):
            data = rng.randbytes(rng.randrange(0, 40))
            assert 0 <= hash_to_scalar(par, H1, [data]) < par.q


def test_one_wayness_roles():
    assert is_target_one_way(H2)
    assert is_target_one_way(H3)
    assert not is_target_one_way(H0)
    assert not is_target_one_way(H1)


def test_record_hash_inputs(toy):
    with record_hash_inputs() as calls:
        hash_to_scalar(toy, H0, [b"seen", 3])
        hash_to_scalar(toy, H3, [b"message bytes"])
    assert len(calls) == 2
    assert calls[0].tag == H0
    assert calls[0].items == (b"seen", toy.encode_scalar(3))
    assert calls[1].items == (b"message bytes",)
    # sink detaches on exit
    hash_to_scalar(toy, H0, [b"after"])
    assert len(calls) == 2
