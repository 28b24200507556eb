import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fockskin.errors import StructureError
from fockskin.lattice import (
    OBC,
    PBC,
    Boundary,
    ChainSpec,
    OscillatorParams,
    annihilation_operator,
    block_decompose,
    build_chain_matrix,
    build_liouvillian,
    hopping,
    interior_chain_block,
    liouvillian_from_operators,
    onsite,
)

P = OscillatorParams()


def spec(nu=0, dim=5, bc=OBC):
    return ChainSpec(P, nu, dim, bc)


@pytest.mark.parametrize(
    "nu, j, expected",
    [(0, 0, 0), (1, 2, 1 - 0.25j), (-1, 0, -1 - 0.05j)],
)
def test_onsite_values(nu, j, expected):
    assert onsite(spec(nu), j) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "nu, j, expected",
    [(0, 0, 0.1j), (0, 4, 0.5j), (2, 1, 0.1j * math.sqrt(8))],
)
def test_hopping_values(nu, j, expected):
    assert hopping(spec(nu), j) == pytest.approx(expected, abs=1e-15)


def test_negative_site_rejected():
    with pytest.raises(ValueError):
        onsite(spec(), -1)
    with pytest.raises(ValueError):
        hopping(spec(), -1)


def test_params_and_spec_validation():
    with pytest.raises(ValueError):
        OscillatorParams(kappa=0.0)
    with pytest.raises(ValueError):
        ChainSpec(P, 0, 0)
    with pytest.raises(ValueError):
        Boundary("xbc")
    with pytest.raises(ValueError):
        Boundary("pbc", 1.0)
    assert spec(dim=7).n_sites == 8


def test_two_site_periodic_matrix():
    mat = build_chain_matrix(spec(0, 1, PBC))
    np.testing.assert_allclose(mat, [[0, 0.1j], [0.2j, -0.1j]], atol=1e-16)
    # roots of E^2 + i kappa E + 2 kappa^2
    vals = np.sort_complex(np.linalg.eigvals(mat))
    np.testing.assert_allclose(vals, np.sort_complex([0.1j, -0.2j]), atol=1e-14)


def test_two_site_open_matrix_is_triangular():
    mat = build_chain_matrix(spec(0, 1, OBC))
    assert mat[1, 0] == 0
    np.testing.assert_allclose(np.diag(mat), [0, -0.1j])


def test_twist_zero_equals_pbc_and_wrap_phase():
    np.testing.assert_array_equal(
        build_chain_matrix(spec(1, 6, Boundary.twisted(0.0))), build_chain_matrix(spec(1, 6, PBC))
    )
    theta = 0.7
    mat = build_chain_matrix(spec(0, 3, Boundary.twisted(theta)))
    assert mat[3, 0] == pytest.approx(np.exp(-1j * theta) * 0.4j)
    assert Boundary.twisted(2 * math.pi + 0.5).theta == pytest.approx(0.5)


@pytest.mark.parametrize("text, kind", [("obc", "obc"), ("PBC", "pbc"), ("tbc=1.5", "tbc")])
def test_boundary_parse(text, kind):
    assert Boundary.parse(text).kind == kind


def test_liouvillian_two_level_blocks():
    L = build_liouvillian(P, 1)
    blocks = block_decompose(L, 1)
    assert {nu: b.shape[0] for nu, b in blocks.items()} == {-1: 1, 0: 2, 1: 1}
    np.testing.assert_allclose(blocks[0], [[0, 0.1j], [0, -0.1j]], atol=1e-16)
    np.testing.assert_allclose(blocks[1], [[1 - 0.05j]], atol=1e-16)


def _dissipator_oracle(params, M):
    """Apply the master equation to every matrix unit |m><n| directly."""
    a = annihilation_operator(M)
    ad = a.T
    H = params.omega * (ad @ a + 0.5 * np.eye(M + 1))
    size = (M + 1) ** 2
    out = np.zeros((size, size), dtype=complex)
    for col in range(size):
        rho = np.zeros((M + 1, M + 1), dtype=complex)
        rho[divmod(col, M + 1)] = 1
        # i d rho/dt
        drho = H @ rho - rho @ H + 0.5j * params.kappa * (2 * a @ rho @ ad - ad @ a @ rho - rho @ ad @ a)
        out[:, col] = drho.reshape(-1)
    return out


@pytest.mark.parametrize("M", [1, 3, 6])
def test_liouvillian_matches_direct_superoperator(M):
    np.testing.assert_allclose(build_liouvillian(P, M), _dissipator_oracle(P, M), atol=1e-14)


def test_global_energy_shift_cancels():
    a = annihilation_operator(4)
    H = a.T @ a
    L1 = liouvillian_from_operators(H, a, 0.1)
    L2 = liouvillian_from_operators(H + 3.0 * np.eye(5), a, 0.1)
    np.testing.assert_allclose(L1, L2, atol=1e-14)


@pytest.mark.parametrize("M", [5, 8])
def test_blocks_equal_interior_chains_exactly(M):
    blocks = block_decompose(build_liouvillian(P, M), M)
    for nu, block in blocks.items():
        np.testing.assert_array_equal(block, interior_chain_block(P, nu, M))
    np.testing.assert_array_equal(blocks[0], build_chain_matrix(spec(0, M, OBC)))


def test_blocks_match_chains_for_generic_parameters():
    # omega*(m+1/2) - omega*(n+1/2) and nu*omega may differ in the last bit
    params = OscillatorParams(0.7, 0.13)
    blocks = block_decompose(build_liouvillian(params, 8), 8)
    for nu, block in blocks.items():
        np.testing.assert_allclose(block, interior_chain_block(params, nu, 8), rtol=1e-15, atol=0)
    np.testing.assert_array_equal(blocks[0], build_chain_matrix(ChainSpec(params, 0, 8, OBC)))


def test_block_decompose_detects_coupling():
    L = build_liouvillian(P, 3)
    L[0, 1] = 1e-12
    with pytest.raises(StructureError, match="Frobenius"):
        block_decompose(L, 3)


def test_zero_damping_limit_has_empty_population_block():
    # kappa must stay positive; a tiny value shows the nu = 0 block is pure dissipation
    tiny = OscillatorParams(kappa=1e-300)
    blocks = block_decompose(build_liouvillian(tiny, 4), 4)
    assert np.max(np.abs(blocks[0])) < 1e-290


@given(
    nu=st.integers(-6, 6),
    dim=st.integers(1, 40),
    omega=st.floats(-3, 3),
    kappa=st.floats(1e-3, 5),
)
def test_open_chain_upper_bidiagonal_with_diagonal_spectrum(nu, dim, omega, kappa):
    mat = build_chain_matrix(ChainSpec(OscillatorParams(omega, kappa), nu, dim, OBC))
    assert np.all(np.tril(mat, -1) == 0)
    assert np.all(np.triu(mat, 2) == 0)
    j = np.arange(dim + 1)
    np.testing.assert_allclose(np.diag(mat), nu * omega - 1j * kappa * (2 * j + abs(nu)) / 2)


@given(nu=st.integers(-5, 5), dim=st.integers(1, 30), theta=st.floats(-20, 20))
def test_twist_only_touches_wrap(nu, dim, theta):
    a = build_chain_matrix(spec(nu, dim, PBC))
    b = build_chain_matrix(spec(nu, dim, Boundary.twisted(theta)))
    mask = np.ones_like(a, dtype=bool)
    mask[dim, 0] = False
    np.testing.assert_array_equal(a[mask], b[mask])
    assert abs(b[dim, 0]) == pytest.approx(abs(a[dim, 0]))


@given(M=st.integers(1, 7), omega=st.floats(-2, 2), kappa=st.floats(1e-2, 2))
def test_grading_is_exact(M, omega, kappa):
    blocks = block_decompose(build_liouvillian(OscillatorParams(omega, kappa), M), M)
    assert sum(b.shape[0] for b in blocks.values()) == (M + 1) ** 2
