import numpy as np
import pytest
from hypothesis import given, strategies as st

from critfpp.rng import RngStream, random_bits, stream_for, stream_id_for


def test_stream_is_reproducible():
    a = RngStream(5, 9).generator().random(10)
    b = RngStream(5, 9).generator().random(10)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = random_bits(RngStream(5, 9).generator(), 256)
    b = random_bits(RngStream(5, 10).generator(), 256)
    assert not np.array_equal(a, b)


@given(st.text(max_size=20), st.integers(0, 10**6))
def test_stream_id_is_stable_64_bit(e, r):
    sid = stream_id_for(e, r)
    assert sid == stream_id_for(e, r)
    assert 0 <= sid < 2**64


def test_stream_ids_separate_experiments_and_replicas():
    ids = {stream_id_for(e, r) for e in ("a", "b", "cn_scaling:8") for r in range(1000)}
    assert len(ids) == 3000


@given(st.integers(0, 200))
def test_random_bits_length_and_values(n):
    bits = random_bits(np.random.default_rng(1), n)
    assert bits.shape == (n,) and bits.dtype == np.uint8
    assert set(np.unique(bits)) <= {0, 1}


def test_random_bits_little_endian_byte_order():
    raw = np.random.default_rng(3).bytes(2)
    bits = random_bits(np.random.default_rng(3), 16)
    expect = [(raw[k // 8] >> (k % 8)) & 1 for k in range(16)]
    assert bits.tolist() == expect


def test_bad_seed_rejected():
    with pytest.raises(ValueError):
        RngStream(-1, 0)
    assert stream_for(-1, "x", 0).seed == 2**64 - 1
