from collections import Counter
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpir.cpir import (
    ClassicalRecordSet,
    SubsetQuery,
    complement_query,
    decode_outcome,
    encode_outcomes,
    pir_retrieve,
    retrieve,
    xor_answer,
)
from qpir.errors import DimensionMismatchError, IndexRangeError, QPIRError
from qpir.ledger import QuerySent, ResourceLedger


def records_of(rng, F, L):
    return ClassicalRecordSet(tuple(tuple(int(b) for b in rng.integers(0, 2, L)) for _ in range(F)))


def test_complement_examples():
    assert complement_query(SubsetQuery((1, 0, 1)), 2).bits == (1, 1, 1)
    assert complement_query(SubsetQuery((0, 0, 0)), 1).bits == (1, 0, 0)


def test_complement_range():
    with pytest.raises(IndexRangeError):
        complement_query(SubsetQuery((0, 1)), 3)
    with pytest.raises(IndexRangeError):
        complement_query(SubsetQuery((0, 1)), 0)


@pytest.mark.parametrize("F", [1, 3, 6])
def test_complement_marginal_uniform(F):
    for k in range(1, F + 1):
        counts = Counter(complement_query(SubsetQuery.from_int(v, F), k).bits for v in range(2**F))
        assert len(counts) == 2**F and set(counts.values()) == {1}


def test_xor_answer_examples():
    rs = ClassicalRecordSet(((1, 0, 1), (0, 1, 1)))
    assert xor_answer(rs, SubsetQuery((0, 1))) == (0, 1, 1)
    assert xor_answer(rs, SubsetQuery((0, 0))) == (0, 0, 0)
    with pytest.raises(DimensionMismatchError):
        xor_answer(rs, SubsetQuery((1, 0, 0)))


def test_record_validation():
    with pytest.raises(DimensionMismatchError):
        ClassicalRecordSet(((1, 0), (1,)))
    with pytest.raises(QPIRError):
        ClassicalRecordSet(())


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 8))
def test_xor_cancellation(seed, F, L):
    rng = np.random.default_rng(seed)
    rs = records_of(rng, F, L)
    q = SubsetQuery(tuple(rng.integers(0, 2, F)))
    for k in range(1, F + 1):
        a = xor_answer(rs, q)
        b = xor_answer(rs, complement_query(q, k))
        assert tuple(x ^ y for x, y in zip(a, b)) == rs.records[k - 1]


def test_trivial_download():
    rs = records_of(np.random.default_rng(0), 5, 4)
    rec, led = pir_retrieve("trivial", rs, 3)
    assert rec == rs.records[2]
    assert (led.classical_bits_up, led.classical_bits_down) == (0, 20)


def test_xor_exhaustive_small():
    rs = records_of(np.random.default_rng(1), 4, 4)
    for k in range(1, 5):
        for v in range(16):
            bits = SubsetQuery.from_int(v, 4).bits
            rec, events = retrieve("xor2", rs, k, None, query_bits=bits)
            assert rec == rs.records[k - 1]
            led = ResourceLedger.from_events(events)
            assert (led.classical_bits_up, led.classical_bits_down) == (8, 8)


@pytest.mark.parametrize("F", [2, 5, 10])
def test_xor_correct_for_all_queries(F):
    rng = np.random.default_rng(F)
    rs = records_of(rng, F, 8)
    for k in (1, F):
        for v in range(2**F):
            assert retrieve("xor2", rs, k, None, query_bits=SubsetQuery.from_int(v, F).bits)[0] == rs.records[k - 1]


def test_single_record():
    rs = ClassicalRecordSet(((1, 1, 0),))
    for scheme in ("trivial", "xor2"):
        assert pir_retrieve(scheme, rs, 1, np.random.default_rng(0))[0] == (1, 1, 0)


def test_xor_server_views_uniform_for_every_k():
    F = 4
    rs = records_of(np.random.default_rng(2), F, 2)
    views = {}
    for k in range(1, F + 1):
        per = {"server1": Counter(), "server2": Counter()}
        for v in range(2**F):
            _, events = retrieve("xor2", rs, k, None, query_bits=SubsetQuery.from_int(v, F).bits)
            for e in events:
                if isinstance(e, QuerySent):
                    per[e.server][e.bits] += 1
        views[k] = per
    for k in views:
        for s in ("server1", "server2"):
            assert views[k][s] == views[1][s]
            assert set(views[k][s].values()) == {1} and len(views[k][s]) == 2**F


def test_unknown_scheme_and_index():
    rs = records_of(np.random.default_rng(3), 2, 2)
    with pytest.raises(QPIRError):
        pir_retrieve("pigeon", rs, 1)
    with pytest.raises(IndexRangeError):
        pir_retrieve("trivial", rs, 3)


def test_ledger_additivity():
    rs = records_of(np.random.default_rng(4), 3, 4)
    total = ResourceLedger()
    for k in (1, 2, 3):
        total = total + pir_retrieve("xor2", rs, k, np.random.default_rng(k))[1]
    assert (total.classical_bits_up, total.classical_bits_down) == (18, 24)


def test_outcome_encoding_round_trip():
    dims = (2, 3, 5)
    for outs in product(*[[(a, b) for a in range(d) for b in range(d)] for d in dims]):
        rs = encode_outcomes(outs, dims)
        assert rs.length == 6
        assert tuple(decode_outcome(r) for r in rs.records) == outs
    with pytest.raises(IndexRangeError):
        encode_outcomes([(2, 0)], [2])
