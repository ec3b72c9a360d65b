import logging
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from podprom.errors import CatalogError, ConfigError, WeightError
from podprom.plan import (
    CaseCatalog,
    interval_catalog,
    lagrange_weights,
    read_manifest,
    select_neighbors,
    select_reference,
    write_manifest,
)


def fraction_weights(params, target):
    """Exact rational Lagrange weights (independent oracle)."""
    g = [Fraction(p) for p in params]
    t = Fraction(target)
    out = []
    for j, gj in enumerate(g):
        v = Fraction(1)
        for m, gm in enumerate(g):
            if m != j:
                v *= (t - gm) / (gj - gm)
        out.append(v)
    return out


def _cat(params, target, n, **kw):
    return CaseCatalog(tuple((p, f"case{p}") for p in params), target, n, **kw)


def _chosen(cat):
    return [cat.parameters[i] for i in select_neighbors(cat)]


@pytest.mark.parametrize(
    "params,n,expected",
    [
        ([100, 120, 140, 160], 2, [120, 140]),
        ([100, 120, 140, 160], 4, [100, 120, 140, 160]),
        ([80, 100, 120, 140, 160], 5, [80, 100, 120, 140, 160]),
    ],
)
def test_neighbor_sets(params, n, expected):
    assert _chosen(_cat(params, 130, n)) == expected


def test_neighbors_on_full_grid():
    from podprom.fom import REYNOLDS_GRID

    cat = _cat(REYNOLDS_GRID, 130, 2)
    assert _chosen(cat) == [125, 135]  # 130 itself is excluded
    assert _chosen(_cat(REYNOLDS_GRID, 130, 3, include_exact=True)) == [125, 130, 135]
    assert _chosen(interval_catalog(cat, 20)) == [120, 140]
    assert _chosen(interval_catalog(_cat(REYNOLDS_GRID, 130, 4), 30)) == [85, 115, 145, 175]
    assert _chosen(interval_catalog(_cat(REYNOLDS_GRID, 130, 5), 20)) == [80, 100, 120, 140, 160]


def test_tie_break_toward_smaller():
    assert _chosen(_cat([100, 125, 135, 160], 130, 3)) == [100, 125, 135]


@pytest.mark.parametrize(
    "params,expected",
    [([120, 140], 120), ([100, 120, 140, 160], 120), ([125, 135], 125)],
)
def test_reference(params, expected):
    cat = _cat(params, 130, len(params))
    assert cat.parameters[select_reference(select_neighbors(cat), cat)] == expected


def test_catalog_validation(caplog):
    with pytest.raises(CatalogError):
        _cat([1, 1, 2], 1.5, 2)
    with pytest.raises(CatalogError):
        _cat([1, 2], 1.5, 3)
    with pytest.raises(CatalogError):
        _cat([1, 2], 5.0, 2)
    with caplog.at_level(logging.WARNING):
        _cat([1, 2], 5.0, 2, allow_extrapolation=True)
    assert "extrapolating" in caplog.text
    with pytest.raises(CatalogError):
        select_neighbors(_cat([1, 2, 3], 2, 3))  # only two eligible
    with pytest.raises(CatalogError):
        interval_catalog(_cat([100, 120, 140, 160], 130, 4), 40)


def test_lagrange_examples():
    np.testing.assert_array_equal(lagrange_weights([120, 140], 130), [0.5, 0.5])
    w = lagrange_weights([100, 120, 140, 160], 130)
    oracle = fraction_weights([100, 120, 140, 160], 130)
    assert oracle == [Fraction(-1, 16), Fraction(9, 16), Fraction(9, 16), Fraction(-1, 16)]
    assert [Fraction(x) for x in w] == oracle
    for k, g in enumerate([80, 100, 120, 140, 160]):
        np.testing.assert_array_equal(lagrange_weights([80, 100, 120, 140, 160], g), np.eye(5)[k])
    with pytest.raises(WeightError):
        lagrange_weights([1.0, 2.0, 1.0], 1.5)


nodes = st.lists(st.integers(-400, 400), min_size=2, max_size=6, unique=True).map(lambda v: sorted(x / 4 for x in v))


@settings(max_examples=200, deadline=None)
@given(nodes, st.floats(0, 1))
def test_lagrange_properties(params, frac):
    target = params[0] + frac * (params[-1] - params[0])
    w = lagrange_weights(params, target)
    assert abs(w.sum() - 1) <= 1e-12
    assert abs(w @ np.array(params) - target) <= 1e-10 * max(1.0, abs(target))
    oracle = np.array([float(x) for x in fraction_weights(params, target)])
    np.testing.assert_allclose(w, oracle, rtol=1e-12, atol=1e-12)
    for k, g in enumerate(params):
        assert np.max(np.abs(lagrange_weights(params, g) - np.eye(len(params))[k])) <= 1e-14


def test_manifest_roundtrip(tmp_path):
    (tmp_path / "sub").mkdir()
    entries = [(120.0, str(tmp_path / "sub" / "a.psnap")), (140.0, "/abs/b.psnap")]
    write_manifest(tmp_path / "cat.tsv", entries)
    assert read_manifest(tmp_path / "cat.tsv") == entries
    (tmp_path / "bad.tsv").write_text("120 a.psnap\n")
    with pytest.raises(ConfigError):
        read_manifest(tmp_path / "bad.tsv")
    (tmp_path / "c.tsv").write_text("# header\n\n130\tx.psnap  # note\n")
    assert read_manifest(tmp_path / "c.tsv") == [(130.0, str(tmp_path / "x.psnap"))]
