import numpy as np
import pytest

from rispower.tiles import (TileBasis, TileState, build_gc_quadratics,
                            composite_profile, decode_index, design_basis,
                            effective_channel, effective_channel_projected,
                            effective_channels, effective_channels_projected,
                            encode_index, project_unit_circle, stack_cascaded)

from .conftest import complex_randn, random_channel_set
from .oracles import (naive_cascaded_rows, naive_effective_channel,
                      naive_projected_channel)


def test_index_bijection():
    n_users = 5
    seen = set()
    for k in range(7):
        for m in range(n_users):
            r = encode_index(k, m, n_users)
            assert decode_index(r, n_users) == (k, m)
            seen.add(r)
    assert seen == set(range(7 * n_users))


class TestDesignBasis:
    def test_single_element_phase_arithmetic(self, rng):
        cs = random_channel_set(rng, n_users=1, m=1, k=1, p=1)
        cs = type(cs)(
            direct=cs.direct,
            bs_to_ris=cs.bs_to_ris,
            ris_to_ue=np.array([[np.exp(1j * np.pi / 3)]]),
            los_bs_center=np.array([np.exp(1j * np.pi / 6)]),
            n_tiles=1, ue_positions=cs.ue_positions,
            direct_models=cs.direct_models)
        basis = design_basis(cs)
        assert np.allclose(basis.basis[0, 0, 0], np.exp(-1j * np.pi / 2))

    def test_unit_modulus(self, rng):
        basis = design_basis(random_channel_set(rng))
        assert np.allclose(np.abs(basis.basis), 1.0)

    def test_coherent_sum(self, rng):
        cs = random_channel_set(rng, n_users=2, m=3, k=2, p=5)
        basis = design_basis(cs)
        t = cs.tile_to_ue
        los = cs.los_to_bs_center
        for k in range(2):
            for m in range(2):
                val = np.sum(t[m, k] * basis.basis[k, m] * los[k])
                assert np.isclose(abs(val), np.sum(np.abs(t[m, k])), rtol=1e-12)

    def test_beats_random_search(self, rng):
        cs = random_channel_set(rng, n_users=1, m=2, k=1, p=4)
        basis = design_basis(cs)
        t = cs.tile_to_ue[0, 0]
        los = cs.los_to_bs_center[0]
        best = abs(np.sum(t * basis.basis[0, 0] * los)) ** 2
        for _ in range(10_000):
            b = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
            assert abs(np.sum(t * b * los)) ** 2 <= best * (1 + 1e-12)

    def test_single_phase_perturbation_never_helps(self, rng):
        cs = random_channel_set(rng, n_users=2, m=2, k=2, p=6)
        basis = design_basis(cs)
        t = cs.tile_to_ue
        los = cs.los_to_bs_center
        for _ in range(200):
            k = rng.integers(2)
            m = rng.integers(2)
            p = rng.integers(6)
            b = basis.basis[k, m].copy()
            base_val = abs(np.sum(t[m, k] * b * los[k])) ** 2
            b[p] = np.exp(1j * rng.uniform(0, 2 * np.pi))
            assert abs(np.sum(t[m, k] * b * los[k])) ** 2 <= base_val * (1 + 1e-12)


class TestStackCascaded:
    def test_identity_cascade(self):
        # every channel equal to one, single element per tile
        n_users, m, k = 2, 3, 2
        cs = random_channel_set(np.random.default_rng(0), n_users, m, k, p=1)
        cs = type(cs)(
            direct=cs.direct, bs_to_ris=np.ones((k, m), complex),
            ris_to_ue=np.ones((n_users, k), complex),
            los_bs_center=np.ones(k, complex), n_tiles=k,
            ue_positions=cs.ue_positions, direct_models=cs.direct_models)
        basis = TileBasis(basis=np.ones((k, n_users, 1), complex))
        stacked = stack_cascaded(cs, basis)
        for i in range(n_users):
            for kk in range(k):
                for mm in range(n_users):
                    assert np.allclose(stacked[i, kk * n_users + mm],
                                       cs.bs_to_tile[kk, 0])

    def test_smallest_case(self, rng):
        cs = random_channel_set(rng, n_users=1, m=3, k=1, p=1)
        basis = design_basis(cs)
        stacked = stack_cascaded(cs, basis)
        assert stacked.shape == (1, 1, 3)
        expected = cs.tile_to_ue[0, 0, 0] * basis.basis[0, 0, 0] * cs.bs_to_tile[0, 0]
        assert np.allclose(stacked[0, 0], expected)

    def test_matches_naive_loop(self, rng):
        cs = random_channel_set(rng, n_users=2, m=2, k=2, p=3)
        basis = design_basis(cs)
        stacked = stack_cascaded(cs, basis)
        naive = naive_cascaded_rows(cs, basis)
        assert np.max(np.abs(stacked - naive)) < 1e-14


class TestGcQuadratics:
    def test_single_user_block_is_element_count(self, rng):
        cs = random_channel_set(rng, n_users=1, m=2, k=2, p=5)
        gc = build_gc_quadratics(design_basis(cs))
        assert np.allclose(gc.blocks[:, 0, 0], 5.0)

    def test_one_hot_value_is_element_count(self, rng):
        cs = random_channel_set(rng, n_users=3, m=2, k=2, p=4)
        gc = build_gc_quadratics(design_basis(cs))
        alpha = np.zeros(6, complex)
        alpha[encode_index(1, 2, 3)] = 1.0
        vals = gc.values(alpha)
        assert np.isclose(vals[1], 4.0)
        assert np.isclose(vals[0], 0.0)

    def test_matches_direct_norm(self, rng):
        cs = random_channel_set(rng, n_users=3, m=2, k=3, p=4)
        basis = design_basis(cs)
        gc = build_gc_quadratics(basis)
        for _ in range(20):
            alpha = complex_randn(rng, 9)
            composite = composite_profile(alpha, basis)
            expected = np.sum(np.abs(composite) ** 2, axis=1)
            assert np.allclose(gc.values(alpha), expected, rtol=1e-12)

    def test_blocks_hermitian_psd(self, rng):
        gc = build_gc_quadratics(design_basis(random_channel_set(rng)))
        for block in gc.blocks:
            assert np.allclose(block, block.conj().T)
            assert np.min(np.linalg.eigvalsh(block)) > -1e-10

    def test_dense_matches_blocks(self, rng):
        gc = build_gc_quadratics(design_basis(random_channel_set(rng)))
        alpha = complex_randn(rng, gc.dim)
        for k in range(gc.n_tiles):
            dense_val = np.real(alpha @ gc.dense_k(k) @ alpha.conj())
            assert np.isclose(dense_val, gc.values(alpha)[k])
        mu = rng.uniform(0, 1, gc.n_tiles)
        weighted = gc.weighted_dense(mu)
        expected = sum(mu[k] * gc.dense_k(k) for k in range(gc.n_tiles))
        assert np.allclose(weighted, expected)
        rows = gc.block_mult(alpha)
        for k in range(gc.n_tiles):
            assert np.allclose(rows[k], alpha @ gc.dense_k(k))


class TestEffectiveChannel:
    def test_zero_alpha(self, rng):
        cs = random_channel_set(rng)
        basis = design_basis(cs)
        cascaded = stack_cascaded(cs, basis)
        eff = effective_channels(np.zeros(cascaded.shape[1], complex), cs, cascaded)
        assert np.array_equal(eff, cs.direct)

    def test_one_hot(self, rng):
        cs = random_channel_set(rng, n_users=2, m=3, k=2, p=3)
        basis = design_basis(cs)
        cascaded = stack_cascaded(cs, basis)
        alpha = np.zeros(4, complex)
        alpha[encode_index(1, 0, 2)] = 1.0
        eff = effective_channel(0, alpha, cs, cascaded)
        assert np.allclose(eff, cs.direct[0] + cascaded[0, encode_index(1, 0, 2)])

    def test_matches_triple_sum(self, rng):
        cs = random_channel_set(rng, n_users=2, m=2, k=2, p=3)
        basis = design_basis(cs)
        cascaded = stack_cascaded(cs, basis)
        alpha = complex_randn(rng, 4)
        for i in range(2):
            naive = naive_effective_channel(i, alpha, cs, basis)
            assert np.max(np.abs(effective_channel(i, alpha, cs, cascaded) - naive)) < 1e-13


class TestProjection:
    def test_magnitude_stripped(self, rng):
        cs = random_channel_set(rng, n_users=2, m=2, k=1, p=1)
        basis = TileBasis(basis=np.ones((1, 2, 1), complex))
        alpha = np.array([1.0 + 1j, 1.0], complex)  # composite 2 + 1j... not unit
        state = project_unit_circle(TileState(alpha=alpha), basis)
        composite = composite_profile(alpha, basis)
        assert np.allclose(state.projected_b,
                           np.exp(1j * np.angle(composite)))
        assert np.allclose(np.abs(state.projected_b), 1.0)

    def test_specific_magnitude_strip(self):
        basis = TileBasis(basis=np.ones((1, 1, 1), complex))
        alpha = np.array([2.0 * np.exp(1j * np.pi / 4)])
        state = project_unit_circle(TileState(alpha=alpha), basis)
        assert np.allclose(state.projected_b[0, 0], np.exp(1j * np.pi / 4))

    def test_idempotent(self, rng):
        cs = random_channel_set(rng)
        basis = design_basis(cs)
        alpha = complex_randn(rng, basis.n_tiles * basis.n_users)
        once = project_unit_circle(TileState(alpha=alpha), basis)
        twice = project_unit_circle(once, basis)
        assert np.array_equal(once.projected_b, twice.projected_b)

    def test_zero_entry_counts_warning(self):
        basis = TileBasis(basis=np.array([[[1.0], [-1.0]]], complex))
        alpha = np.array([1.0, 1.0], complex)  # composite exactly zero
        state = project_unit_circle(TileState(alpha=alpha), basis)
        assert state.zero_phase_count == 1
        assert state.projected_b[0, 0] == 1.0  # phase 0 substitute

    def test_coefficients_retained(self, rng):
        cs = random_channel_set(rng)
        basis = design_basis(cs)
        alpha = complex_randn(rng, basis.n_tiles * basis.n_users)
        state = project_unit_circle(TileState(alpha=alpha), basis)
        assert np.array_equal(state.alpha, alpha)
        assert state.use_projected


class TestProjectedChannel:
    def test_requires_projection(self, rng):
        cs = random_channel_set(rng)
        with pytest.raises(ValueError, match="projection"):
            effective_channels_projected(TileState(alpha=np.zeros(9, complex)), cs)

    def test_consistency_with_unit_composite(self, rng):
        # a one-hot alpha yields a composite that is already unit-modulus, so
        # projection changes nothing and both channel paths agree
        cs = random_channel_set(rng, n_users=2, m=3, k=2, p=4)
        basis = design_basis(cs)
        cascaded = stack_cascaded(cs, basis)
        alpha = np.zeros(4, complex)
        alpha[encode_index(0, 1, 2)] = 1.0
        alpha[encode_index(1, 0, 2)] = 1.0
        state = project_unit_circle(TileState(alpha=alpha), basis)
        eff_proj = effective_channels_projected(state, cs)
        eff_alpha = effective_channels(alpha, cs, cascaded)
        assert np.max(np.abs(eff_proj - eff_alpha)) < 1e-13

    def test_scalar_tile(self, rng):
        cs = random_channel_set(rng, n_users=1, m=2, k=1, p=1)
        basis = design_basis(cs)
        state = project_unit_circle(
            TileState(alpha=complex_randn(rng, 1)), basis)
        expected = (cs.direct[0]
                    + cs.tile_to_ue[0, 0, 0] * state.projected_b[0, 0]
                    * cs.bs_to_tile[0, 0])
        assert np.allclose(effective_channel_projected(0, state, cs), expected)

    def test_matches_per_element_loop(self, rng):
        cs = random_channel_set(rng, n_users=2, m=2, k=2, p=3)
        basis = design_basis(cs)
        state = project_unit_circle(
            TileState(alpha=complex_randn(rng, 4)), basis)
        for i in range(2):
            naive = naive_projected_channel(i, state, cs)
            assert np.max(np.abs(
                effective_channel_projected(i, state, cs) - naive)) < 1e-13
