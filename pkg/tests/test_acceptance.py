"""Acceptance gate: one test per criterion, each printing its pass line.

Criterion 2 (the contraction bound) runs last so its cumulative monitor
has seen every solve the suite issued; any violation beyond the numeric
slack would additionally have raised inside the offending criterion.
"""

import pytest

from semidamp import acceptance as acc


def _check(result):
    print()
    print(result.line())
    assert result.passed, result.line()


def test_criterion_01_quadratic_estimate():
    _check(acc.criterion_01_quadratic_estimate())


def test_criterion_03_nontrapping_scaling():
    _check(acc.criterion_03_nontrapping_scaling())


def test_criterion_04_damped_trapping():
    _check(acc.criterion_04_damped_trapping())


def test_criterion_05_necessity():
    _check(acc.criterion_05_necessity())


def test_criterion_06_limiting_absorption():
    _check(acc.criterion_06_limiting_absorption())


def test_criterion_07_egorov():
    _check(acc.criterion_07_egorov())


def test_criterion_08_dilation():
    _check(acc.criterion_08_dilation())


def test_criterion_09_smoothing():
    _check(acc.criterion_09_smoothing())


def test_criterion_10_besov():
    _check(acc.criterion_10_besov())


def test_criterion_11_flow():
    _check(acc.criterion_11_flow())


def test_criterion_02_resolvent_bound_last():
    _check(acc.criterion_02_resolvent_bound())
