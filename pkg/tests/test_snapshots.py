import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from podprom.errors import (
    BadMagicError,
    DimensionError,
    MissingFileError,
    NonPositiveWeightError,
    TruncatedPayloadError,
)
from podprom.snapshots import (
    MAGIC,
    FieldBlock,
    Quadrature,
    SnapshotSet,
    read_header,
    read_matrix_csv,
    read_snapshots,
    weighted_inner,
    write_matrix_csv,
    write_snapshots,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_weighted_inner_examples():
    ones = np.ones(4)
    assert weighted_inner(ones, ones, Quadrature(np.ones(4))) == 4.0
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert weighted_inner(e1, e2, Quadrature(np.array([0.3, 2.0, 5.0]))) == 0.0
    a = np.array([1.0, 2.0])
    assert weighted_inner(a, a, Quadrature(np.array([0.5, 0.25]))) == 1.5


def test_weighted_inner_length_mismatch():
    with pytest.raises(DimensionError):
        weighted_inner(np.ones(3), np.ones(4), Quadrature(np.ones(3)))


@settings(max_examples=200, deadline=None)
@given(
    hnp.arrays(np.float64, 6, elements=st.floats(-1e100, 1e100)),
    hnp.arrays(np.float64, 6, elements=st.floats(-1e100, 1e100)),
    hnp.arrays(np.float64, 6, elements=st.floats(1e-3, 1e3)),
)
def test_weighted_inner_symmetric_and_nonnegative(a, b, w):
    q = Quadrature(w)
    assert weighted_inner(a, b, q) == weighted_inner(b, a, q)
    self_ip = weighted_inner(a, a, q)
    assert self_ip >= 0
    if self_ip == 0:
        assert not np.any(a * a * w)  # only zero (or underflowing) entries


def test_quadrature_rejects_nonpositive():
    with pytest.raises(ValueError):
        Quadrature(np.array([1.0, 0.0]))
    q = Quadrature(np.array([2.0, 3.0, 1e-8]))
    np.testing.assert_allclose(q.sqrt_weights**2, q.weights, rtol=1e-14)


def test_snapshot_set_invariants():
    with pytest.raises(DimensionError):
        SnapshotSet(np.zeros((4, 2)), 1.0, 0.1, field_layout=(FieldBlock("u", 1, 3),))
    with pytest.raises(DimensionError):
        SnapshotSet.from_times(np.zeros((2, 3)), 1.0, [0.0, 0.1, 0.25])
    s = SnapshotSet.from_times(np.zeros((2, 3)), 1.0, [1.0, 1.5, 2.0])
    assert s.dt_snap == 0.5 and s.t0 == 1.0
    np.testing.assert_array_equal(s.times, [1.0, 1.5, 2.0])


def test_two_field_layout():
    layout = (FieldBlock("u", 2, 3), FieldBlock("p", 1, 3))
    s = SnapshotSet(np.arange(18.0).reshape(9, 2), 5.0, 0.1, field_layout=layout)
    np.testing.assert_array_equal(s.field("p"), np.arange(12.0, 18.0).reshape(3, 2))


def _roundtrip(tmp_path, data, weights, **kw):
    s = SnapshotSet(data, kw.get("parameter", 1.5), kw.get("dt", 0.1), kw.get("t0", 0.3))
    w = None if weights is None else Quadrature(weights)
    path = tmp_path / "x.psnap"
    write_snapshots(s, w, path)
    return s, w, read_snapshots(path)


def test_roundtrip_small(tmp_path, rng):
    s, w, (s2, w2) = _roundtrip(tmp_path, rng.standard_normal((4, 3)), rng.uniform(0.1, 1, 4))
    assert s2.data.tobytes() == s.data.tobytes()
    assert w2.weights.tobytes() == w.weights.tobytes()
    assert (s2.parameter, s2.dt_snap, s2.t0, s2.field_layout) == (s.parameter, s.dt_snap, s.t0, s.field_layout)


def test_header_only_read(tmp_path, rng):
    path = tmp_path / "big.psnap"
    write_snapshots(SnapshotSet(rng.standard_normal((50, 7)), 130.0, 0.1), None, path)
    head = read_header(path)
    assert (head["n_dof"], head["n_snap"], head["parameter"]) == (50, 7, 130.0)


def test_layout_on_disk(tmp_path):
    path = tmp_path / "x.psnap"
    data = np.array([[1.0, 2.0], [3.0, 4.0]])
    write_snapshots(SnapshotSet(data, 1.0, 0.1), Quadrature(np.array([0.5, 0.25])), path)
    raw = path.read_bytes()
    assert raw[:8] == b"PSNAP\0v1" == MAGIC
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = raw[12 : 12 + hlen].decode()
    assert "field_layout=u:1:2\n" in header and "has_weights=1\n" in header
    payload = np.frombuffer(raw[12 + hlen :], dtype="<f8")
    np.testing.assert_array_equal(payload, [1.0, 3.0, 2.0, 4.0, 0.5, 0.25])  # column-major, then weights


def test_format_errors(tmp_path, rng):
    with pytest.raises(MissingFileError):
        read_snapshots(tmp_path / "absent.psnap")
    path = tmp_path / "x.psnap"
    write_snapshots(SnapshotSet(rng.standard_normal((4, 3)), 1.0, 0.1), Quadrature(np.ones(4)), path)
    raw = path.read_bytes()

    bad = tmp_path / "magic.psnap"
    bad.write_bytes(raw[:5] + b"X" + raw[6:])
    with pytest.raises(BadMagicError) as info:
        read_snapshots(bad)
    assert info.value.offset == 5 and "offset 5" in str(info.value)

    short = tmp_path / "short.psnap"
    short.write_bytes(raw[:-40])
    with pytest.raises(TruncatedPayloadError):
        read_snapshots(short)

    neg = tmp_path / "neg.psnap"
    neg.write_bytes(raw[:-8] + struct.pack("<d", -1.0))
    with pytest.raises(NonPositiveWeightError):
        read_snapshots(neg)


@settings(max_examples=60, deadline=None)
@given(
    hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6), elements=finite),
    finite,
    st.floats(1e-6, 1e6),
    finite,
)
def test_roundtrip_bit_exact_property(tmp_path_factory, data, parameter, dt, t0):
    tmp = tmp_path_factory.mktemp("rt")
    s = SnapshotSet(data, parameter, dt, t0)
    write_snapshots(s, None, tmp / "p.psnap")
    s2, w2 = read_snapshots(tmp / "p.psnap")
    assert w2 is None
    assert s2.data.tobytes() == s.data.tobytes()
    assert s2.parameter == s.parameter and s2.dt_snap == s.dt_snap and s2.t0 == s.t0


def test_matrix_csv_roundtrip(tmp_path, rng):
    m = rng.standard_normal((3, 4)) * 10.0 ** rng.integers(-300, 300, (3, 4))
    write_matrix_csv(tmp_path / "m.csv", m)
    assert (tmp_path / "m.csv").read_bytes().count(b"\r\n") == 3
    np.testing.assert_array_equal(read_matrix_csv(tmp_path / "m.csv"), m)
