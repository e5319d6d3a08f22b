"""Capacity LP: frozen rates for the built-in networks plus certificates.

The headline rates are cross-checked two independent ways: the exact
reports must certify themselves (no cut below lambda, binding cut exists,
beta consistent with the mixture), and the largest instance is re-solved
in floating point with scipy's LP as an out-of-band oracle.
"""

from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linprog

from dagcast import (
    Arborescence,
    InvalidTree,
    NotDag,
    NotUnitCapacity,
    best_tree_subsets,
    build_activation_set,
    builtin,
    compute_capacity,
    compute_tree_capacity,
    cut_value,
    disjoint_tree_count,
    enumerate_arborescences,
    enumerate_proper_cuts,
    frac_str,
    make_cut,
    max_disjoint_trees_bruteforce,
    receiver_cuts,
)
from tests.conftest import random_dag


@pytest.fixture(scope="module")
def k4():
    sc = builtin("k4_unit")
    return sc.net, build_activation_set(sc.net, "primary")


@pytest.fixture(scope="module")
def fig5():
    sc = builtin("fig5")
    return sc, build_activation_set(sc.net, "primary")


@pytest.fixture(scope="module")
def dag10():
    sc = builtin("dag10")
    return sc.net, build_activation_set(sc.net, "primary")


def check_certificate(net, report, cut_family):
    mass = sum(p for _, p in report.mixture)
    assert mass == 1
    beta = [F(0)] * len(net.edges)
    for bits, p in report.mixture:
        for k, b in enumerate(bits):
            if b:
                beta[k] += p
    assert tuple(beta) == tuple(report.beta)
    values = [cut_value(net, report.beta, c) for c in cut_family]
    assert min(values) == report.lam
    assert report.binding_cuts


class TestBuiltinRates:
    def test_k4_capacity_one_half(self, k4):
        net, S = k4
        r = compute_capacity(net, S)
        assert r.lam == F(1, 2)
        check_certificate(net, r, receiver_cuts(net))

    def test_k4_optimal_mixture_uses_perfect_matchings(self, k4):
        net, S = k4
        r = compute_capacity(net, S)
        supports = sorted(bits for bits, p in r.mixture if p)
        assert supports == [(0, 0, 1, 1, 0, 0), (1, 0, 0, 0, 0, 1)]
        assert all(p == F(1, 2) for _, p in r.mixture)

    def test_fig5_capacity_one(self, fig5):
        sc, S = fig5
        r = compute_capacity(sc.net, S)
        assert r.lam == 1
        check_certificate(sc.net, r, receiver_cuts(sc.net))

    def test_cycle4_capacity_two(self):
        sc = builtin("cycle4")
        S = build_activation_set(sc.net, "none")
        r = compute_capacity(sc.net, S, method="all-cuts")
        assert r.lam == 2
        assert len(r.binding_cuts) == 3
        check_certificate(sc.net, r, enumerate_proper_cuts(sc.net))

    def test_cycle4_capacity_equals_disjoint_packing(self):
        net = builtin("cycle4").net
        S = build_activation_set(net, "none")
        assert compute_capacity(net, S, method="all-cuts").lam == (
            max_disjoint_trees_bruteforce(net)
        )

    def test_dag10_capacity_exact(self, dag10):
        net, S = dag10
        r = compute_capacity(net, S)
        assert r.lam == F(12517, 3790)
        assert len(r.binding_cuts) == 9
        check_certificate(net, r, receiver_cuts(net))

    def test_dag10_capacity_against_float_lp(self, dag10):
        # rebuild the same LP in floats with scipy as an independent solver
        net, S = dag10
        M = S.matrix().astype(float)
        caps = np.array([float(e.capacity) for e in net.edges])
        L = M.shape[0]
        A_ub, b_ub = [], []
        for cut in receiver_cuts(net):
            sel = np.zeros(len(net.edges))
            sel[list(cut.edge_indexes)] = 1.0
            row = np.zeros(1 + L)
            row[0] = 1.0
            row[1:] = -(M * (caps * sel)).sum(axis=1)
            A_ub.append(row)
            b_ub.append(0.0)
        row = np.zeros(1 + L)
        row[1:] = 1.0
        A_ub.append(row)
        b_ub.append(1.0)
        obj = np.zeros(1 + L)
        obj[0] = -1.0
        res = linprog(
            obj,
            A_ub=np.array(A_ub),
            b_ub=np.array(b_ub),
            bounds=[(0, None)] * (1 + L),
            method="highs",
        )
        assert res.status == 0
        assert abs(-res.fun - float(F(12517, 3790))) < 1e-9


class TestMethods:
    def test_node_cuts_equal_all_cuts_on_builtins(self, k4, fig5):
        for net, S in (k4, (fig5[0].net, fig5[1])):
            a = compute_capacity(net, S, method="node-cuts")
            b = compute_capacity(net, S, method="all-cuts")
            assert a.lam == b.lam

    def test_node_cuts_equal_all_cuts_on_random_dags(self, rng):
        for _ in range(20):
            net = random_dag(rng, max_nodes=6, max_extra=3)
            S = build_activation_set(net, "primary")
            a = compute_capacity(net, S, method="node-cuts")
            b = compute_capacity(net, S, method="all-cuts")
            assert a.lam == b.lam

    def test_unknown_method_rejected(self, k4):
        net, S = k4
        with pytest.raises(ValueError):
            compute_capacity(net, S, method="bogus")

    def test_single_node_rejected(self):
        from dagcast import network

        net = network(("r",), [])
        S = build_activation_set(net, "none")
        with pytest.raises(ValueError):
            compute_capacity(net, S)


class TestTreeRestricted:
    def test_fig5_single_tree_values(self, fig5):
        sc, S = fig5
        trees, _ = enumerate_arborescences(sc.net)
        got = [compute_tree_capacity(sc.net, S, [t]).lam for t in trees]
        assert got == [F(3, 7), F(3, 4), F(1, 2), F(3, 4), F(6, 11), F(2, 3)]

    def test_fig5_declared_tree_values(self, fig5):
        sc, S = fig5
        singles = [compute_tree_capacity(sc.net, S, [t]).lam for t in sc.trees]
        assert singles == [F(3, 4), F(2, 3), F(3, 4)]

    def test_fig5_declared_pair_and_triple(self, fig5):
        sc, S = fig5
        pair = compute_tree_capacity(sc.net, S, sc.trees[:2])
        assert pair.lam == F(6, 7)
        assert sum(pair.tree_rates) == pair.lam
        full = compute_tree_capacity(sc.net, S, sc.trees)
        assert full.lam == 1

    def test_fig5_best_subsets_over_all_trees(self, fig5):
        # over the full enumeration a pair already reaches the capacity:
        # the two trees routing through b together pump a full packet per slot
        sc, S = fig5
        trees, _ = enumerate_arborescences(sc.net)
        got = best_tree_subsets(sc.net, S, trees, 3)
        assert got[1][0] == F(3, 4)
        assert got[2] == (F(1, 1), (3, 5))
        assert got[3][0] == F(1, 1)

    def test_tree_rates_sum_to_total(self, fig5):
        sc, S = fig5
        r = compute_tree_capacity(sc.net, S, sc.trees)
        assert sum(r.tree_rates) == r.lam
        assert r.method == "tree-restricted"

    def test_invalid_tree_rejected(self, fig5):
        sc, S = fig5
        with pytest.raises(InvalidTree):
            compute_tree_capacity(sc.net, S, [Arborescence(edge_indexes=(0, 1, 2, 3))])
        with pytest.raises(InvalidTree):
            compute_tree_capacity(sc.net, S, [])

    def test_plain_tuples_accepted(self, fig5):
        sc, S = fig5
        assert compute_tree_capacity(sc.net, S, [(0, 1, 4)]).lam == F(3, 4)

    def test_disjoint_trees_without_interference(self):
        # two edge-disjoint spanning trees, every edge always on: rate 2
        net = builtin("cycle4").net
        S = build_activation_set(net, "none")
        r = compute_tree_capacity(
            net,
            S,
            [Arborescence(edge_indexes=(0, 3, 4)), Arborescence(edge_indexes=(1, 2, 5))],
        )
        assert r.lam == 2
        assert r.tree_rates == (F(1), F(1))

    def test_tree_value_never_exceeds_capacity(self, fig5, rng):
        sc, S = fig5
        full = compute_capacity(sc.net, S).lam
        trees, _ = enumerate_arborescences(sc.net)
        for t in trees:
            assert compute_tree_capacity(sc.net, S, [t]).lam <= full


class TestHelpers:
    def test_cut_value(self, k4):
        net, S = k4
        r = compute_capacity(net, S)
        cut = make_cut(net, [0, 2, 3])
        assert cut_value(net, r.beta, cut) == F(1, 2)

    def test_cut_value_length_check(self, k4):
        net, _ = k4
        with pytest.raises(ValueError):
            cut_value(net, (F(1),), make_cut(net, [0]))

    def test_frac_str(self):
        assert frac_str(F(6, 7)) == "6/7"
        assert frac_str(F(2)) == "2/1"
        assert frac_str(0) == "0/1"

    def test_disjoint_tree_count_goldens(self):
        assert disjoint_tree_count(builtin("k4_unit").net) == 1
        with pytest.raises(NotDag):
            disjoint_tree_count(builtin("cycle4").net)
        with pytest.raises(NotUnitCapacity):
            disjoint_tree_count(builtin("dag10").net)

    def test_to_json_dict_shape(self, k4):
        net, S = k4
        d = compute_capacity(net, S).to_json_dict(net)
        assert d["lambda"] == "1/2"
        assert len(d["beta"]) == 6
        assert d["method"] == "node-cuts"
        assert all(isinstance(c, list) for c in d["binding_cuts"])
