import math

import numpy as np
import pytest
from scipy.special import jn_zeros, jv

from magdisk.assembly import assemble
from magdisk.model import ConstantField, PolynomialField, PowerLawBoundaryField
from magdisk.oracles import (
    BESSEL,
    OracleError,
    bessel_dirichlet_spectrum,
    bessel_j,
    bessel_sorted_spectrum,
    bessel_zeros,
    brute_quadrature,
    cartesian_2d_operator,
    cartesian_2d_spectrum,
    landau_limit_check,
    lowest_hermitian_eigenvalues,
    mcmahon_estimate,
)

from conftest import make_scenario


def test_bessel_values_against_scipy():
    xs = np.concatenate([np.linspace(1e-3, 2.0, 40), np.linspace(2.0, 60.0, 200)])
    for m in range(0, 15):
        ours = np.array([bessel_j(m, x) for x in xs])
        np.testing.assert_allclose(ours, jv(m, xs), atol=2e-15, rtol=0)
    assert bessel_j(0, 0.0) == 1.0 and bessel_j(3, 0.0) == 0.0


def test_first_zeros():
    assert bessel_zeros(0, 1)[0] == pytest.approx(2.404825557695773, abs=1e-12)
    assert bessel_zeros(1, 1)[0] == pytest.approx(3.831705970207512, abs=1e-12)


@pytest.mark.parametrize("m", [0, 1, 2, 5, 10, 25])
def test_zeros_against_scipy(m):
    np.testing.assert_allclose(bessel_zeros(m, 6), jn_zeros(m, 6), atol=1e-12, rtol=0)


def test_mcmahon_is_close_for_large_k():
    assert mcmahon_estimate(0, 10) == pytest.approx(jn_zeros(0, 10)[-1], abs=1e-6)


def test_zeros_interlace():
    z = [bessel_zeros(m, 5) for m in range(8)]
    for m in range(7):
        for k in range(4):
            assert z[m][k] < z[m + 1][k] < z[m][k + 1]


def test_dirichlet_spectrum_scaling():
    one = bessel_dirichlet_spectrum(1.0, 3, 3)
    two = bessel_dirichlet_spectrum(2.0, 3, 3)
    assert one.method == BESSEL and one.error_estimate > 0
    np.testing.assert_allclose(two.values, one.values / 4, rtol=1e-15)
    with pytest.raises(ValueError):
        bessel_dirichlet_spectrum(1.0, -1, 2)


def test_sorted_spectrum_multiplicities():
    levels = bessel_sorted_spectrum(1.0, 31.0)
    assert [(m, k) for _, m, k in levels] == [(0, 1), (-1, 1), (1, 1), (-2, 1), (2, 1), (0, 2)]


def test_landau_reference():
    res = landau_limit_check(16.0, 2.0)
    assert res.values[0] == 16.0 and res.error_estimate > 0
    assert res.parameters["upper"] <= 16.0 * 1.01
    with pytest.raises(ValueError):
        landau_limit_check(0.0, 2.0)
    with pytest.raises(ValueError, match="≥ 6"):
        landau_limit_check(1.0, 1.0)


def test_constant_field_ground_state_above_landau_level():
    sc = make_scenario(ConstantField(9.0), r0=2.0, N=1500)
    sp = assemble(sc, 12.0)
    assert sp.eigenvalues[0] >= 9.0 - 2 * sp.errors[0] - 1e-9


def test_peierls_matrix_hermitian_exactly():
    H, _ = cartesian_2d_operator(make_scenario(PolynomialField((1.0, 3.0))), 40)
    diff = H - H.conj().T
    assert diff.count_nonzero() == 0 or np.max(np.abs(diff.data)) == 0.0


def test_peierls_zero_field_reduces_to_real_laplacian():
    H, info = cartesian_2d_operator(make_scenario(), 40)
    assert np.all(H.data.imag == 0.0)
    h = info["h"]
    assert set(np.unique(H.data.real)) <= {-1 / h**2, 4 / h**2}


def test_cartesian_free_disk_ground_state():
    res = cartesian_2d_spectrum(make_scenario(), 1, 100)
    assert abs(res.values[0] / 2.404825557695773**2 - 1) < 0.02


def test_cartesian_gauge_shift_invariance():
    sc = make_scenario(ConstantField(5.0))
    a = cartesian_2d_spectrum(sc, 3, 60).values
    b = cartesian_2d_spectrum(sc, 3, 60, gauge_shift=0.8).values
    assert np.max(np.abs(b / a - 1)) < 1e-8


def test_cartesian_matches_channels_for_constant_field():
    sc = make_scenario(ConstantField(5.0), N=1000)
    ours = assemble(sc, 25.0).eigenvalues[:4]
    grid = cartesian_2d_spectrum(sc, 4, 100).values
    np.testing.assert_allclose(grid, ours, rtol=0.03)


def test_cartesian_preconditions():
    with pytest.raises(ValueError):
        cartesian_2d_operator(make_scenario(), 400)
    with pytest.raises(ValueError):
        cartesian_2d_operator(make_scenario(PowerLawBoundaryField(1.0, 1.0, 0.5, 1.0)), 40)


def test_inverse_iteration_failure_reports_history():
    H, _ = cartesian_2d_operator(make_scenario(), 30)
    with pytest.raises(OracleError) as info:
        lowest_hermitian_eigenvalues(H, 3, -1.0, max_iter=2, rtol=1e-16)
    assert len(info.value.history) == 2


def test_brute_quadrature_examples():
    assert brute_quadrature(lambda r: r, 0.0, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert brute_quadrature(lambda r: np.maximum(-0.25 / r**2, 0.0), 0.0, 1.0) == 0.0
    assert brute_quadrature(np.sin, 0.0, math.pi, 10**5) == pytest.approx(2.0, rel=1e-9)
