import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_groups, brute_force_matrices
from pemsignal.errors import EmptyMatrix
from pemsignal.featmat import (EventUniverse, FeatureMatrix, WindowConfig, build_feature_matrices,
                               build_universe, column_counts, dump_matrix, group_bounds,
                               group_matrix)
from pemsignal.ingest import EventRecord
from pemsignal.readcode import parse_readcode

import scipy.sparse as sp


def ev(pid, code, day):
    return EventRecord(pid, parse_readcode(code), day)


def test_universe_modes():
    events = [ev("P1", "N245.16", 1), ev("P1", "N245111", 2), ev("P2", "C34.00", 3)]
    assert build_universe(events, "level13").keys == ("C34..00", "N24..00")
    assert build_universe(events, "level15").keys == ("C34..00", "N245.16", "N245111")
    assert len(build_universe([], "level15")) == 0


def test_universe_index_is_inverse():
    u = EventUniverse(("b", "a", "c", "a"))
    assert u.keys == ("a", "b", "c")
    assert all(u.keys[i] == k for k, i in u.index.items())


@pytest.mark.parametrize("day, a, b", [
    (80, 1, 0),
    (100, 0, 0),
    (40, 1, 0),
    (39, 0, 0),
    (160, 0, 1),
    (161, 0, 0),
    (101, 0, 1),
    (99, 1, 0),
])
def test_window_membership(day, a, b):
    u = build_universe([ev("P1", "N24", day)])
    A, B = build_feature_matrices({"P1": 100}, [ev("P1", "N24", day)], u, WindowConfig(60))
    assert A.to_dense()[0, 0] == a
    assert B.to_dense()[0, 0] == b


def test_boundaries_both_windows():
    events = [ev("P1", "N24", 40), ev("P1", "N24", 160)]
    u = build_universe(events)
    A, B = build_feature_matrices({"P1": 100}, events, u, WindowConfig(60))
    oa, ob = brute_force_matrices({"P1": 100}, events, u.keys, "level15", 60)
    assert A.to_dense().tolist() == oa.tolist() == [[1]]
    assert B.to_dense().tolist() == ob.tolist() == [[1]]


def test_unexposed_and_unmatched_events():
    events = [ev("P1", "N24", 90), ev("P9", "N24", 90), ev("P1", "C34", 110)]
    u = build_universe(events[:1])
    A, B = build_feature_matrices({"P1": 100}, events, u)
    assert A.shape == (1, 1)
    assert A.to_dense().sum() == 1 and B.to_dense().sum() == 0
    assert A.unmatched == 1


def test_rows_sorted_by_patient_id():
    index = {"P3": 100, "P1": 100, "P2": 100}
    events = [ev("P3", "N24", 90)]
    A, _ = build_feature_matrices(index, events, build_universe(events))
    assert A.patients == ("P1", "P2", "P3")
    assert A.to_dense()[:, 0].tolist() == [0, 0, 1]


def test_level13_matrix_merges_children():
    events = [ev("P1", "N245.16", 90), ev("P1", "N245111", 95), ev("P1", "N24..00", 110)]
    u = build_universe(events, "level13")
    A, B = build_feature_matrices({"P1": 100}, events, u)
    assert u.keys == ("N24..00",)
    assert A.to_dense().tolist() == [[1]] and B.to_dense().tolist() == [[1]]


def test_empty_index():
    with pytest.raises(EmptyMatrix):
        build_feature_matrices({}, [], EventUniverse(()))


def _fm(dense):
    n, m = dense.shape
    u = EventUniverse(tuple(f"E{j:04d}" for j in range(m)))
    return FeatureMatrix("A", tuple(f"P{i:05d}" for i in range(n)), u,
                         sp.csr_matrix(dense.astype(np.uint8)))


@pytest.mark.parametrize("rows, size, expected", [
    (10875, 100, [100] * 107 + [175]),
    (250, 100, [100, 150]),
    (1, 100, [1]),
    (99, 100, [99]),
    (200, 100, [100, 100]),
])
def test_group_sizes(rows, size, expected):
    sizes = [hi - lo for lo, hi in group_bounds(rows, size)]
    assert sizes == expected


def test_group_single_patient_is_identity():
    dense = np.array([[1, 0, 1]])
    g = group_matrix(_fm(dense), 100)
    assert g.counts.tolist() == [[1, 0, 1]]
    assert g.group_sizes == (1,)
    assert g.role == "X"


def test_group_empty():
    with pytest.raises(EmptyMatrix):
        group_matrix(_fm(np.zeros((0, 3), dtype=int)), 100)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.integers(1, 6), st.integers(1, 25), st.integers(0, 2**32 - 1))
def test_grouping_conservation(n, m, size, seed):
    dense = np.random.default_rng(seed).integers(0, 2, size=(n, m))
    fm = _fm(dense)
    g = group_matrix(fm, size)
    assert g.counts.tolist() == brute_force_groups(dense, size).tolist()
    assert g.counts.sum(axis=0).tolist() == [c for _, c in column_counts(fm)]
    assert (g.counts <= np.array(g.group_sizes)[:, None]).all()


def test_column_counts():
    fm = _fm(np.array([[1, 0], [1, 1], [0, 0]]))
    assert column_counts(fm) == [("E0000", 2), ("E0001", 1)]
    empty = _fm(np.zeros((2, 2), dtype=int))
    assert [c for _, c in column_counts(empty)] == [0, 0]


CODES = ["N245.16", "N245111", "N24..00", "C34.00", "C10F.00", "B33..11", "F4C0.00"]


def random_cohort(rnd, n_patients, n_events, anchor_span=30):
    index = {f"P{i:03d}": 100 + rnd.randrange(anchor_span) for i in range(n_patients)}
    pids = list(index) + ["X999"]
    events = [ev(rnd.choice(pids), rnd.choice(CODES), rnd.randrange(0, 230))
              for _ in range(n_events)]
    return index, events


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("mode", ["level15", "level13"])
def test_matrices_match_brute_force(seed, mode):
    rnd = random.Random(seed)
    index, events = random_cohort(rnd, rnd.randint(1, 50), rnd.randint(0, 300))
    u = build_universe(events, mode)
    A, B = build_feature_matrices(index, events, u, WindowConfig(60))
    oa, ob = brute_force_matrices(index, events, u.keys, mode, 60)
    assert A.to_dense().tolist() == oa.tolist()
    assert B.to_dense().tolist() == ob.tolist()


def test_invariants_on_random_cohort():
    rnd = random.Random(42)
    index, events = random_cohort(rnd, 40, 400)
    u = build_universe(events)
    A, B = build_feature_matrices(index, events, u)
    # duplicates and reordering change nothing
    A2, B2 = build_feature_matrices(index, rnd.sample(events + events[:50], len(events) + 50), u)
    assert (A.to_dense() == A2.to_dense()).all() and (B.to_dense() == B2.to_dense()).all()
    assert set(np.unique(A.to_dense())) <= {0, 1}
    # a single record never lands in both windows
    for e in events:
        A1, B1 = build_feature_matrices(index, [e], u)
        assert A1.to_dense().sum() + B1.to_dense().sum() <= 1


def test_dump_matrix(tmp_path):
    fm = _fm(np.array([[1, 0], [0, 1]]))
    dump_matrix(fm, tmp_path / "a.tsv")
    dump_matrix(group_matrix(fm, 1), tmp_path / "x.tsv")
    assert (tmp_path / "a.tsv").read_text() == "E0000\tE0001\n1\t0\n0\t1\n"
    assert (tmp_path / "x.tsv").read_text() == "E0000\tE0001\n1\t0\n0\t1\n"
