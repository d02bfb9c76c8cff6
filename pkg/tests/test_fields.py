"""Field container semantics, window moves, and the text serialization."""

import numpy as np
import pytest

from choquard import (
    BALL,
    Field,
    InputError,
    align_windows,
    ball,
    get_window,
    load_field,
    save_field,
)


def test_constructor_validates_shape_and_finiteness():
    w = get_window(2, 2)
    with pytest.raises(InputError):
        Field(w, np.zeros(w.count - 1))
    bad = np.zeros(w.count)
    bad[3] = np.nan
    with pytest.raises(InputError):
        Field(w, bad)


def test_delta_and_from_sites():
    w = get_window(2, 3)
    d = Field.delta(w)
    assert d.values.sum() == 1.0
    assert d.values[w.index_of((0, 0))] == 1.0
    e = Field.delta(w, (1, -2))
    assert e.values[w.index_of((1, -2))] == 1.0
    f = Field.from_sites(w, {(0, 0): 2.0, (1, 1): -0.5})
    assert f.values[w.index_of((1, 1))] == -0.5
    with pytest.raises(InputError):
        Field.from_sites(w, {(9, 9): 1.0})


def test_arithmetic_and_window_mismatch():
    w = get_window(2, 2)
    u = Field.delta(w)
    v = Field.delta(w, (1, 0))
    s = u + v - 0.5 * u
    assert s.values[w.index_of((0, 0))] == 0.5
    assert (-u).values[w.index_of((0, 0))] == -1.0
    other = Field.delta(get_window(2, 3))
    with pytest.raises(InputError):
        _ = u + other


def test_embed_restrict_round_trip():
    small = get_window(2, 2)
    big = get_window(2, 5)
    u = Field.from_sites(small, {(1, -2): 3.5, (0, 0): -1.0})
    lifted = u.embed(big)
    assert lifted.values[big.index_of((1, -2))] == 3.5
    back = lifted.restrict(small)
    assert np.array_equal(back.values, u.values)
    with pytest.raises(InputError):
        u.embed(get_window(2, 1))
    with pytest.raises(InputError):
        u.restrict(big)


def test_support_and_radius():
    w = get_window(2, 4)
    u = Field.from_sites(w, {(2, -3): 1.0, (0, 1): 2.0})
    assert set(u.support()) == {(2, -3), (0, 1)}
    assert u.support_radius() == 3
    assert Field.zero(w).support_radius() == 0
    assert u.is_supported_in(ball((0, 0), 5))
    assert not u.is_supported_in(ball((0, 0), 1))


def test_translated_moves_support():
    w = get_window(2, 4)
    u = Field.from_sites(w, {(0, 0): 1.0, (1, 0): 2.0})
    moved = u.translated((2, -1))
    assert moved.values[w.index_of((2, -1))] == 1.0
    assert moved.values[w.index_of((3, -1))] == 2.0
    assert moved.values.sum() == u.values.sum()
    with pytest.raises(InputError):
        u.translated((4, 0))
    with pytest.raises(InputError):
        u.translated((1, 2, 3))


def test_align_windows_embeds_smaller():
    u = Field.delta(get_window(2, 2))
    v = Field.delta(get_window(2, 4), (3, 3))
    ua, va = align_windows(u, v)
    assert ua.window == va.window == get_window(2, 4)
    assert ua.values[ua.window.index_of((0, 0))] == 1.0
    w = Field.delta(get_window(2, 3, BALL))
    ub, wb = align_windows(u, w)
    assert ub.window.shape == "box"


def test_save_load_round_trip_is_bit_exact(tmp_path):
    w = get_window(2, 3, BALL)
    rng = np.random.default_rng(5)
    values = np.where(rng.random(w.count) < 0.5, rng.standard_normal(w.count) * 1e-7, 0.0)
    u = Field(w, values)
    path = tmp_path / "field.txt"
    save_field(u, path)
    v = load_field(path)
    assert v.window == w
    assert np.array_equal(v.values, u.values)


def test_load_rejects_bad_files(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("something else\n")
    with pytest.raises(InputError):
        load_field(path)
    good = tmp_path / "short.txt"
    w = get_window(2, 2)
    save_field(Field.delta(w), good)
    text = good.read_text().splitlines()
    text[4] = "support 2"
    good.write_text("\n".join(text) + "\n")
    with pytest.raises(InputError):
        load_field(good)
