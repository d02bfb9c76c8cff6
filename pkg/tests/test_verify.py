"""Property suites: reference-scale passes, guard rails, and reproducibility."""

import dataclasses

import pytest

import choquard as c
from choquard import InputError
from choquard.verify import SUITE_NAMES, run_suites


def test_all_suites_pass_at_reference_scale(desk_prob):
    results = run_suites(SUITE_NAMES, desk_prob, seed=0)
    assert tuple(r.name for r in results) == SUITE_NAMES
    for res in results:
        assert res.passed, f"{res.name}: {res.details}"
        assert res.details


def test_suites_are_reproducible(small_prob):
    first = run_suites(("ops", "hls", "nehari"), small_prob, seed=3)
    second = run_suites(("ops", "hls", "nehari"), small_prob, seed=3)
    for a, b in zip(first, second):
        assert a.details == b.details and a.passed == b.passed


def test_unknown_suite_name_rejected(small_prob):
    with pytest.raises(InputError, match="unknown suites"):
        run_suites(("ops", "spectral"), small_prob)


def test_green_suite_guards(small_prob, small_window):
    (res,) = run_suites(("green",), small_prob)
    assert not res.passed
    assert "radius >= 14" in res.details["error"]
    riesz = c.build_kernel_table("riesz", 1.0, small_window)
    riesz_prob = dataclasses.replace(small_prob, kernel=riesz)
    (res,) = run_suites(("green",), riesz_prob)
    assert not res.passed
    assert "subordination" in res.details["error"]


def test_brezislieb_suite_guard(small_prob):
    (res,) = run_suites(("brezislieb",), small_prob)
    assert not res.passed
    assert "radius >= 12" in res.details["error"]
