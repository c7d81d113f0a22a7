"""Closed-form integrals against published minimal-basis reference values.

The two-center numbers are the standard zeta = 1.24 hydrogen-pair table
at R = 1.4 Bohr, quoted to four decimals, so comparisons use 1e-4.
"""

import numpy as np
import pytest

from hamgen_chem.basis import shell
from hamgen_chem.integrals import (
    boys0,
    kinetic,
    nuclear_attraction,
    overlap,
    repulsion,
)

A = np.zeros(3)
B = np.array([0.0, 0.0, 1.4])


@pytest.fixture()
def pair():
    return shell("H", A), shell("H", B)


def test_boys_zero_limit():
    assert boys0(0.0) == 1.0
    # series and closed form agree through the switch
    assert abs(boys0(1e-13) - (1.0 - 1e-13 / 3.0)) < 1e-15
    assert abs(boys0(1e-11) - (1.0 - 1e-11 / 3.0)) < 1e-12


def test_boys_closed_form():
    from math import erf, pi, sqrt

    assert boys0(1.0) == pytest.approx(0.5 * sqrt(pi) * erf(1.0), abs=1e-15)
    grid = np.linspace(0.0, 30.0, 301)
    values = boys0(grid)
    assert values.shape == grid.shape
    assert np.all(np.diff(values) < 0.0)


def test_contracted_self_overlap_is_unit(pair):
    a, b = pair
    assert overlap(a, a) == pytest.approx(1.0, abs=1e-14)
    assert overlap(b, b) == pytest.approx(1.0, abs=1e-14)


def test_two_center_reference_values(pair):
    a, b = pair
    assert overlap(a, b) == pytest.approx(0.6593, abs=1e-4)
    assert kinetic(a, a) == pytest.approx(0.7600, abs=1e-4)
    assert kinetic(a, b) == pytest.approx(0.2365, abs=1e-4)
    assert nuclear_attraction(a, a, A, 1) == pytest.approx(-1.2266, abs=1e-4)
    assert nuclear_attraction(a, a, B, 1) == pytest.approx(-0.6538, abs=1e-4)
    assert nuclear_attraction(a, b, A, 1) == pytest.approx(-0.5974, abs=1e-4)


def test_repulsion_reference_values(pair):
    a, b = pair
    assert repulsion(a, a, a, a) == pytest.approx(0.7746, abs=1e-4)
    assert repulsion(a, a, b, b) == pytest.approx(0.5697, abs=1e-4)
    assert repulsion(a, b, a, b) == pytest.approx(0.2970, abs=1e-4)


def test_repulsion_eightfold_symmetry():
    a = shell("H", A)
    b = shell("H", B)
    c = shell("H", [0.0, 0.9, 0.4])
    d = shell("H", [0.6, 0.0, 2.0])
    reference = repulsion(a, b, c, d)
    for other in (
        repulsion(b, a, c, d),
        repulsion(a, b, d, c),
        repulsion(b, a, d, c),
        repulsion(c, d, a, b),
        repulsion(d, c, a, b),
        repulsion(c, d, b, a),
        repulsion(d, c, b, a),
    ):
        assert other == pytest.approx(reference, abs=1e-14)


def test_unknown_element_rejected():
    with pytest.raises(ValueError, match="no basis data"):
        shell("He", A)
