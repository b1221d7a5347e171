"""Concrete attacks that motivate the scheme's two defenses.

Both attacks run only on the toy backend (``BackendRefused`` otherwise):
they are demonstrations meant to be watched, and refusing the curve keeps
anyone from mistaking them for tooling against real keys.

Rogue-key aggregation
    A signer who registers y_A = g1^sk_A * (prod of honest keys)^-1 makes
    the naive aggregate collapse to g1^sk_A, after which it can produce a
    "multi"-signature for the whole group alone.  The possession proof is
    the countermeasure: the adversary knows sk_A but not the discrete log
    of y_A itself, so every proof it can construct fails verification.

k-list challenge forgery
    The baseline's challenge c = H0(V~, m) is a random oracle, but a
    leader running ell = k-1 honest signing sessions concurrently can grind
    per-session challenge candidates (by varying its own commitment share)
    and forged-message candidates, then use a generalized-birthday solver
    to pick one from each list with sum(c_j) == c* mod q.  Closing the
    sessions with the chosen c_j and adding c* * sk_A yields a signature on
    a message nobody signed.  Honest nodes verify everything the protocol
    tells them to — the transcripts they see are individually well-formed.

    The same machinery pointed at the reordered scheme falls apart: the
    solver still finds sum(c_j) == c*, but responses scale the nonce by the
    challenge (v*c - e*sk), so summed responses do not assemble into
    anything the verifier accepts, and e = H3(m) re-binds the message
    independently of c.  The run is kept as a negative control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BackendRefused, KSumNotFound
from .group import Group, ToyGroup, derive_rng
from .hashing import H0, H1, H2, H3, hash_to_scalar
from .schemes import (
    AggregateKey,
    KeyProof,
    PublicKey,
    Signature,
    _baseline_response,
    _challenge,
    _commit,
    _gamma_response,
    _make_sessions,
    _announce,
    _respond,
    bare_keygen,
    cosi_verify,
    derive_keys,
    key_aggregate,
    key_verify,
    verify,
)
from .tree import build_tree, min_branching

__all__ = [
    "require_toy",
    "RogueKeyReport",
    "rogue_key_attack",
    "KSumInstance",
    "default_list_size",
    "random_instance",
    "plant_solution",
    "solve",
    "KSumAttackReport",
    "ksum_forgery_attack",
]


def require_toy(par: Group) -> None:
    if not isinstance(par, ToyGroup):
        raise BackendRefused(
            "attack demonstrations only run on the brute-forceable toy backend"
        )


# ── rogue-key aggregation ────────────────────────────────────────────────────

@dataclass(frozen=True)
class RogueKeyReport:
    rogue_y: object
    aggregate: AggregateKey
    message: bytes
    signature: Signature
    baseline_accepts: bool
    proof_attempts: int
    proofs_accepted: int

    def to_json_dict(self, par: Group) -> dict:
        return {
            "attack": "rogue-key",
            "params": {
                "q": par.q,
                "rogue_y": par.encode_element(self.rogue_y).hex(),
                "aggregate": par.encode_element(self.aggregate.X).hex(),
                "message": self.message.hex(),
            },
            "attempts": self.proof_attempts,
            "successes": self.proofs_accepted,
            "baseline_accepts_forgery": self.baseline_accepts,
            "example_forgery_hex": self.signature.to_bytes(par).hex(),
        }


def rogue_key_attack(par: Group, honest_keys, message: bytes, *, seed=0,
                     adversary_sk: int | None = None,
                     proof_attempts: int = 100) -> RogueKeyReport:
    """Cancel the honest keys out of the aggregate, then sign alone.

    Also tries ``proof_attempts`` times to fabricate a possession proof for
    the rogue key using the only scalar the adversary knows (sk_A, which is
    *not* the rogue key's discrete log) plus fresh randomness — the count
    of accepted proofs is the point of the report.
    """
    require_toy(par)
    honest_keys = list(honest_keys)
    rng = derive_rng(seed, "rogue")
    sk_a = adversary_sk if adversary_sk is not None else par.random_scalar(rng)
    prod = key_aggregate(par, honest_keys).X
    # prod^(q-1) == prod^-1 in a group of prime order q
    y_a = par.mul(par.exp(par.g1, sk_a), par.exp(prod, par.q - 1))
    X = par.mul(y_a, prod)
    assert X == par.exp(par.g1, sk_a), "aggregate failed to collapse"

    c = 0
    v = 0
    while c == 0:
        v = par.random_scalar(rng)
        V = par.exp(par.g1, v)
        c = hash_to_scalar(par, H0, [par.encode_element(V), message])
    sig = Signature(c, par.s_add(v, par.s_mul(c, sk_a)))
    baseline_accepts = cosi_verify(par, X, message, sig)

    g1b = par.encode_element(par.g1)
    b = hash_to_scalar(par, H2, [par.encode_element(y_a)])
    accepted = 0
    for _ in range(proof_attempts):
        r = par.random_scalar(rng)
        a = hash_to_scalar(
            par, H1, [g1b, par.encode_element(par.exp(par.g1, r))]
        )
        d = par.s_sub(par.s_mul(r, a), par.s_mul(b, sk_a))
        if key_verify(par, PublicKey(y_a, KeyProof(a, d))):
            accepted += 1

    return RogueKeyReport(
        rogue_y=y_a,
        aggregate=AggregateKey(X, len(honest_keys) + 1),
        message=message,
        signature=sig,
        baseline_accepts=baseline_accepts,
        proof_attempts=proof_attempts,
        proofs_accepted=accepted,
    )


# ── generalized birthday (k-list) solver ─────────────────────────────────────

@dataclass(frozen=True)
class KSumInstance:
    """k lists of residues mod q; goal: one index per list, sum == 0 mod q."""

    q: int
    lists: tuple

    @property
    def k(self) -> int:
        return len(self.lists)


def default_list_size(q: int) -> int:
    return 4 * math.ceil(q ** (1.0 / 3.0))


def random_instance(q: int, k: int, size: int | None = None, *,
                    seed=0) -> KSumInstance:
    size = size or default_list_size(q)
    rng = derive_rng(seed, "ksum-instance")
    return KSumInstance(
        q, tuple(tuple(rng.randrange(q) for _ in range(size)) for _ in range(k))
    )


def plant_solution(instance: KSumInstance, *, seed=0):
    """Overwrite one slot per list so a zero-sum tuple certainly exists.

    Planted values cancel pairwise (x, q-x), so they survive the solver's
    near-zero filtering at every level.  Returns (new instance, indices).
    """
    rng = derive_rng(seed, "ksum-plant")
    q = instance.q
    lists = [list(lst) for lst in instance.lists]
    idx = tuple(rng.randrange(len(lst)) for lst in lists)
    for j in range(0, len(lists), 2):
        x = rng.randrange(1, q)
        lists[j][idx[j]] = x
        lists[j + 1][idx[j + 1]] = (q - x) % q
    return KSumInstance(q, tuple(tuple(lst) for lst in lists)), idx


def _filtered_join(q: int, left, right, bound: int):
    out = []
    for v1, i1 in left:
        for v2, i2 in right:
            s = (v1 + v2) % q
            if s <= bound or s >= q - bound:
                out.append((s, i1 + i2))
    return out


def solve(instance: KSumInstance):
    """Wagner-style tree join: filter pair sums into shrinking windows
    around 0 mod q, then demand an exact zero at the top.  Returns one
    index per list; raises KSumNotFound when the joins run dry.
    """
    q, k = instance.q, instance.k
    if k < 2 or k & (k - 1):
        raise ValueError("number of lists must be a power of two >= 2")
    if any(not lst for lst in instance.lists):
        raise KSumNotFound("empty input list")
    s_l = max(len(lst) for lst in instance.lists)
    layers = [
        [(v % q, (i,)) for i, v in enumerate(lst)] for lst in instance.lists
    ]
    height = k.bit_length() - 1
    for h in range(1, height):
        bound = max(1, q // (2 * s_l ** h))
        layers = [
            _filtered_join(q, layers[t], layers[t + 1], bound)
            for t in range(0, len(layers), 2)
        ]
        if any(not layer for layer in layers):
            raise KSumNotFound(f"level-{h} join produced an empty list")
    left, right = layers
    lookup: dict = {}
    for v, idx in right:
        lookup.setdefault(v, idx)
    for v, idx in left:
        other = lookup.get((q - v) % q)
        if other is not None:
            found = idx + other
            total = sum(instance.lists[j][found[j]] for j in range(k)) % q
            assert total == 0, "solver produced a non-solution"
            return found
    raise KSumNotFound("no zero-sum tuple at the top join")


# ── k-list forgery against concurrent sessions ───────────────────────────────

@dataclass
class KSumAttackReport:
    target: str
    q: int
    k: int
    list_size: int
    n_honest: int
    attempts: int
    successes: int
    forged_message: bytes | None
    forgery: Signature | None
    aggregate: object | None

    def to_json_dict(self, par: Group) -> dict:
        params = {
            "target": self.target,
            "q": self.q,
            "k": self.k,
            "list_size": self.list_size,
            "n_honest": self.n_honest,
        }
        if self.forged_message is not None:
            params["forged_message"] = self.forged_message.hex()
        if self.aggregate is not None:
            params["aggregate"] = par.encode_element(self.aggregate).hex()
        return {
            "attack": "ksum",
            "params": params,
            "attempts": self.attempts,
            "successes": self.successes,
            "example_forgery_hex": (
                self.forgery.to_bytes(par).hex() if self.forgery else None
            ),
        }


def _grind_session_list(par, rng, V_sess, extra, s_l, baseline: bool, message):
    """Challenge candidates the leader can induce for one open session by
    varying its own commitment share r: announced aggregate = g1^r * V_sess."""
    vals, rand = [], []
    while len(vals) < s_l:
        r = par.random_scalar(rng)
        v_ann = par.mul(par.exp(par.g1, r), V_sess)
        if baseline:
            c = hash_to_scalar(par, H0, [par.encode_element(v_ann), message])
        else:
            c = hash_to_scalar(
                par, H0, [par.encode_element(par.g1),
                          par.encode_element(v_ann), extra]
            )
        if c == 0:
            continue
        vals.append(c)
        rand.append(r)
    return vals, rand


def _grind_target_list(par, V_bar, extra, s_l, baseline: bool, forged_prefix):
    """Forged-message candidates: target challenges c* = H0(...) negated so
    the solver's zero-sum means sum(c_j) == c* mod q."""
    vals, msgs = [], []
    u = 0
    while len(vals) < s_l:
        m_star = forged_prefix + b"#" + str(u).encode()
        u += 1
        if baseline:
            c = hash_to_scalar(par, H0, [par.encode_element(V_bar), m_star])
        else:
            c = hash_to_scalar(
                par, H0, [par.encode_element(par.g1),
                          par.encode_element(V_bar), extra]
            )
        if c == 0:
            continue
        vals.append((par.q - c) % par.q)
        msgs.append(m_star)
    return vals, msgs


def ksum_forgery_attack(par: Group, *, target: str = "cosi", k: int = 4,
                        n_honest: int = 3, list_size: int | None = None,
                        retries: int = 8, seed=0,
                        message: bytes = b"pay the usual 1",
                        forged_prefix: bytes = b"pay the attacker everything",
                        ) -> KSumAttackReport:
    """Run the concurrent-session forgery end to end against honest signers.

    ``target="cosi"`` forges (expected to succeed within a few retries);
    ``target="agms"`` runs the identical pipeline against the reordered
    scheme as a negative control (the solver succeeds, the forgery never
    verifies).  Honest signers execute the real phase handlers — nothing
    on their side is mocked.
    """
    require_toy(par)
    if target not in ("cosi", "agms"):
        raise ValueError(f"unknown target {target!r}")
    if k < 2 or k & (k - 1):
        raise ValueError("k must be a power of two >= 2")
    baseline = target == "cosi"
    s_l = list_size or default_list_size(par.q)
    ell = k - 1
    htree = build_tree(n_honest, min_branching(n_honest), 3)
    if baseline:
        hkeys = [
            bare_keygen(par, derive_rng(seed, "honest-key", i))
            for i in range(n_honest)
        ]
    else:
        hkeys = derive_keys(par, n_honest, f"{seed}|honest")
    x_h = key_aggregate(par, hkeys).X
    adv = bare_keygen(par, derive_rng(seed, "adv"))
    x_forge = par.mul(x_h, adv.y)
    x_forge_b = par.encode_element(x_forge)

    attempts = 0
    successes = 0
    example: Signature | None = None
    example_m: bytes | None = None

    for t in range(retries):
        attempts += 1
        # open ell concurrent sessions; honest nodes commit first
        session_states = []
        v_sess = []
        for j in range(ell):
            sessions = _make_sessions(
                par, target, htree, hkeys, f"{seed}|t{t}|s{j}", 0
            )
            _announce(htree, sessions, message, None)
            v_agg, _, _ = _commit(
                par, htree, sessions, aggregate_keys=not baseline, schedule=None
            )
            session_states.append(sessions)
            v_sess.append(v_agg)
        v_bar = v_sess[0]
        for v in v_sess[1:]:
            v_bar = par.mul(v_bar, v)

        grind_rng = derive_rng(seed, "grind", t)
        lists, rand_meta = [], []
        for j in range(ell):
            vals, rand = _grind_session_list(
                par, grind_rng, v_sess[j], x_forge_b, s_l, baseline, message
            )
            lists.append(tuple(vals))
            rand_meta.append(rand)
        targets, msgs = _grind_target_list(
            par, v_bar, x_forge_b, s_l, baseline, forged_prefix
        )
        lists.append(tuple(targets))

        try:
            idx = solve(KSumInstance(par.q, tuple(lists)))
        except KSumNotFound:
            continue

        # close each session with the solver's challenge; collect responses
        s_total = 0
        for j in range(ell):
            c_j = lists[j][idx[j]]
            if baseline:
                v_ann = par.mul(
                    par.exp(par.g1, rand_meta[j][idx[j]]), v_sess[j]
                )
                payload = par.encode_scalar(c_j) + par.encode_element(v_ann)
                _challenge(par, htree, session_states[j], payload,
                           precompute_vc=False, check_baseline=True,
                           schedule=None)
                s_j, _ = _respond(par, htree, session_states[j],
                                  lambda s: _baseline_response(par, s), None)
            else:
                _challenge(par, htree, session_states[j],
                           par.encode_scalar(c_j), precompute_vc=True,
                           check_baseline=False, schedule=None)
                s_j, _ = _respond(par, htree, session_states[j],
                                  lambda s: _gamma_response(par, s), None)
            s_total = par.s_add(s_total, s_j)

        u_k = idx[-1]
        m_star = msgs[u_k]
        c_star = (par.q - lists[-1][u_k]) % par.q
        if baseline:
            s_star = par.s_add(s_total, par.s_mul(c_star, adv.sk))
            sig = Signature(c_star, s_star)
            ok = cosi_verify(par, x_forge, m_star, sig)
        else:
            e_star = hash_to_scalar(par, H3, [m_star])
            s_star = par.s_sub(s_total, par.s_mul(e_star, adv.sk))
            sig = Signature(c_star, s_star)
            ok = verify(par, x_forge, m_star, sig)
        if ok:
            successes += 1
            if example is None:
                example, example_m = sig, m_star
            break

    return KSumAttackReport(
        target=target,
        q=par.q,
        k=k,
        list_size=s_l,
        n_honest=n_honest,
        attempts=attempts,
        successes=successes,
        forged_message=example_m,
        forgery=example,
        aggregate=x_forge,
    )
