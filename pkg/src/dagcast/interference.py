"""Link activation sets and max-weight activation selection.

An activation is a binary vector over edge indexes saying which links
transmit in a slot.  Under the primary interference model two links
conflict when they share an endpoint (direction ignored), so feasible
activations are matchings of the underlying undirected multigraph.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class TooManyActivations(Exception):
    pass


class InvalidExplicitVector(Exception):
    pass


class EmptyActivationSet(Exception):
    pass


MODELS = ("none", "primary", "explicit")

DEFAULT_ACTIVATION_CAP = 50000


@dataclass(frozen=True)
class ActivationVector:
    """A feasible activation, validated against its set at construction."""

    bits: tuple

    @property
    def edges(self):
        return tuple(k for k, b in enumerate(self.bits) if b)

    def __iter__(self):
        return iter(self.bits)


def _enumerate_matchings(net, cap):
    """All matchings of the underlying undirected multigraph, lex ascending.

    Branching skip-first on each edge index yields lexicographic order over
    the binary vectors directly, with the all-zero vector first.
    """
    E = len(net.edges)
    endpoints = [(e.tail, e.head) for e in net.edges]
    out = []
    picked = []
    used = set()

    def rec(k):
        if k == E:
            if len(out) >= cap:
                raise TooManyActivations(
                    "more than %d feasible activations" % cap
                )
            bits = [0] * E
            for i in picked:
                bits[i] = 1
            out.append(tuple(bits))
            return
        rec(k + 1)
        a, b = endpoints[k]
        if a not in used and b not in used:
            used.add(a)
            used.add(b)
            picked.append(k)
            rec(k + 1)
            picked.pop()
            used.discard(a)
            used.discard(b)

    rec(0)
    return out


class ActivationSet:
    """The set S of feasible activations for a network.

    For model 'none' the set is implicit (every binary vector is feasible)
    and nothing is materialized.  For 'primary' and 'explicit' the vectors
    are materialized in lexicographic order; index 0 is the all-zero vector.
    """

    def __init__(self, net, model, vectors=None, cap=DEFAULT_ACTIVATION_CAP):
        if model not in MODELS:
            raise ValueError("unknown interference model %r" % (model,))
        self.net = net
        self.model = model
        E = len(net.edges)
        if model == "none":
            self.vectors = None
            self._index = None
        elif model == "primary":
            self.vectors = _enumerate_matchings(net, cap)
            self._index = {v: i for i, v in enumerate(self.vectors)}
        else:
            if vectors is None:
                raise ValueError("explicit model requires an activation list")
            seen = set()
            vecs = []
            for v in vectors:
                bits = tuple(int(b) for b in v)
                if len(bits) != E or any(b not in (0, 1) for b in bits):
                    raise InvalidExplicitVector(
                        "activation %r is not a binary vector of length %d" % (v, E)
                    )
                if bits not in seen:
                    seen.add(bits)
                    vecs.append(bits)
            zero = (0,) * E
            if zero not in seen:
                vecs.append(zero)
            vecs.sort()
            if len(vecs) > cap:
                raise TooManyActivations("more than %d activations listed" % cap)
            self.vectors = tuple(vecs)
            self._index = {v: i for i, v in enumerate(self.vectors)}

    @property
    def n_edges(self):
        return len(self.net.edges)

    def __len__(self):
        if self.vectors is None:
            return 2 ** self.n_edges
        return len(self.vectors)

    def contains(self, bits):
        bits = tuple(int(b) for b in bits)
        if len(bits) != self.n_edges or any(b not in (0, 1) for b in bits):
            return False
        if self.vectors is None:
            return True
        return bits in self._index

    def vector(self, bits):
        """Construct a membership-checked ActivationVector."""
        if not self.contains(bits):
            raise ValueError("activation %r not in the feasible set" % (bits,))
        return ActivationVector(bits=tuple(int(b) for b in bits))

    def matrix(self):
        """Materialized vectors as an int8 array, one row per activation."""
        if self.vectors is None:
            raise EmptyActivationSet("model 'none' has no materialized vectors")
        return np.array(self.vectors, dtype=np.int8)

    def edge_lists(self):
        """CSR layout of the materialized vectors: (flat edge indexes, offsets)."""
        if self.vectors is None:
            raise EmptyActivationSet("model 'none' has no materialized vectors")
        flat = []
        off = [0]
        for v in self.vectors:
            flat.extend(k for k, b in enumerate(v) if b)
            off.append(len(flat))
        return np.array(flat, dtype=np.int64), np.array(off, dtype=np.int64)


def build_activation_set(net, model, vectors=None, cap=DEFAULT_ACTIVATION_CAP):
    return ActivationSet(net, model, vectors=vectors, cap=cap)


def max_weight_activation(S, weights):
    """The feasible activation maximizing total weight.

    `weights` are per-edge nonnegative values (ints, Fractions or floats).
    Ties are broken toward the lexicographically smallest activation vector.
    For model 'none' the maximizer turns on exactly the edges with positive
    weight.
    """
    E = S.n_edges
    if len(weights) != E:
        raise ValueError("expected %d weights, got %d" % (E, len(weights)))
    weights = list(weights)
    for w in weights:
        if w < 0:
            raise ValueError("negative weight %s" % (w,))
    if S.vectors is None:
        bits = tuple(1 if w > 0 else 0 for w in weights)
        value = sum(w for w in weights if w > 0)
        return ActivationVector(bits=bits), value
    best_bits = None
    best_val = None
    for v in S.vectors:
        val = sum(w for w, b in zip(weights, v) if b)
        if best_val is None or val > best_val:
            best_val = val
            best_bits = v
    return ActivationVector(bits=best_bits), best_val


def activation_value(bits, weights):
    return sum(w for w, b in zip(weights, bits) if b)
