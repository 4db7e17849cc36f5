import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ordergame.game import Perm3, all_orders
from ordergame.quantum import (
    BASIS_OF_STATE,
    KET,
    ORDER_TO_BASIS_STATE,
    InvalidExcitation,
    NotOrthogonal,
    UnitaryChannel,
    bloch_coordinates,
    dicke,
    discrimination_program,
    entangled_output_states,
    factor_permutation_operator,
    haar_qubit_unitary,
    output_gram,
    pair_trace_values,
    perfect_discrimination_state,
    perfect_state_root,
    quantum_memoryless_optimum,
    routing_matrix,
    routing_pair_products,
    sampled_discrimination_values,
    swap_unitary,
    symmetric_projector,
    unbiased_basis_channels,
    unbiased_order_states,
    verify_perfect_discrimination,
)
from ordergame.solver import solve
from ordergame.tensor import (
    ENTANGLED_LAYOUT,
    SHARED,
    LabeledOperator,
    NotPSD,
    Vec,
    eig_hermitian,
    permute_to_layout,
)


class TestChannels:
    def test_unitarity(self):
        for chan in unbiased_basis_channels():
            u = np.asarray(chan.kraus, dtype=complex)
            assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-12

    def test_first_channel_sends_zero_to_minus(self):
        a, _, _ = unbiased_basis_channels()
        out = a.apply(KET["0"])
        overlap = abs(np.vdot(KET["-"], out))
        assert abs(overlap - 1.0) <= 1e-12

    def test_third_channel_zero_diagonal(self):
        _, _, c = unbiased_basis_channels()
        assert c.kraus[0, 0] == 0 and c.kraus[1, 1] == 0

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            UnitaryChannel(np.array([[1.0, 0.0], [0.0, 2.0]]), (SHARED,))


class TestOrderStates:
    def test_matches_reference_up_to_phase(self):
        states = unbiased_order_states()
        for pi, vec in states.items():
            target = KET[ORDER_TO_BASIS_STATE[pi.name]]
            overlap = abs(np.vdot(target, vec.data))
            assert abs(overlap - 1.0) <= 1e-12

    def test_mutually_unbiased(self):
        states = unbiased_order_states()
        for pi1, pi2 in itertools.combinations(all_orders(), 2):
            b1 = BASIS_OF_STATE[ORDER_TO_BASIS_STATE[pi1.name]]
            b2 = BASIS_OF_STATE[ORDER_TO_BASIS_STATE[pi2.name]]
            overlap = abs(np.vdot(states[pi1].data, states[pi2].data))
            if b1 == b2:
                # same basis: orthogonal partners or the same ray
                assert min(overlap, abs(overlap - 1.0)) <= 1e-12
            else:
                assert abs(overlap - 1.0 / math.sqrt(2)) <= 1e-12

    def test_bloch_coordinates(self):
        assert np.allclose(bloch_coordinates(Vec((SHARED,), KET["+"])), (1, 0, 0))
        assert np.allclose(bloch_coordinates(Vec((SHARED,), KET["-i"])), (0, -1, 0))


class TestDiscrimination:
    def test_mub_states_reach_one_third(self):
        result = quantum_memoryless_optimum(unbiased_order_states())
        assert abs(result.probability_float - 1.0 / 3.0) <= 1e-6

    def test_six_identical_states_give_one_sixth(self):
        states = {pi: Vec((SHARED,), KET["0"]) for pi in all_orders()}
        report = solve(discrimination_program(states))
        assert abs(report.objective_value - 1.0 / 6.0) <= 1e-6

    def test_orthogonal_pair_perfectly_distinguished(self):
        # three orders land on |0>, three on |1>: optimum is 2/6
        states = {}
        for i, pi in enumerate(all_orders()):
            states[pi] = Vec((SHARED,), KET["0"] if i < 3 else KET["1"])
        report = solve(discrimination_program(states))
        assert abs(report.objective_value - 2.0 / 6.0) <= 1e-6

    def test_sampled_triples_respect_bound(self):
        scan = sampled_discrimination_values(n_samples=100, seed=7)
        assert scan.max_value <= 1.0 / 3.0 + 1e-6
        assert scan.max_primal_residual <= 1e-5

    def test_haar_sampler_unitary(self):
        rng = np.random.default_rng(3)
        u = haar_qubit_unitary(rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-12


class TestSwapRouting:
    def test_swap_involution(self):
        u = np.asarray(swap_unitary().kraus)
        assert np.array_equal(u @ u, np.eye(4, dtype=int))

    def test_swap_action(self):
        u = np.asarray(swap_unitary().kraus)
        ket01 = np.zeros(4)
        ket01[1] = 1.0  # |0,1>
        assert np.argmax(u @ ket01) == 2  # |1,0>

    def test_swap_real_symmetric(self):
        u = np.asarray(swap_unitary().kraus)
        assert np.array_equal(u, u.T)

    def test_routing_is_composition_of_swaps(self):
        # first mover's swap is applied first
        swaps = {}
        for party, pos in (("A", 3), ("B", 2), ("C", 1)):
            mat = np.zeros((16, 16), dtype=int)
            for j in range(16):
                bx = (j >> pos) & 1
                bs = j & 1
                jj = (j & ~((1 << pos) | 1)) | (bs << pos) | bx
                mat[jj, j] = 1
            swaps[party] = mat
        pi = Perm3(("A", "B", "C"))
        want = swaps["C"] @ swaps["B"] @ swaps["A"]
        got = np.asarray(routing_matrix(pi).op.to_float().data).real.astype(int)
        assert np.array_equal(got, want)

    def test_zero_one_orthogonal(self):
        for pi in all_orders():
            m = routing_matrix(pi).op
            dense = np.asarray(m.to_float().data).real.astype(int)
            assert set(np.unique(dense)) <= {0, 1}
            assert np.array_equal(dense.sum(axis=0), np.ones(16, dtype=int))
            assert np.array_equal(dense.sum(axis=1), np.ones(16, dtype=int))
            assert np.array_equal(dense.T @ dense, np.eye(16, dtype=int))

    def test_pair_traces_exactly_four(self):
        for (pp, p), op in routing_pair_products().items():
            assert op.trace() == 4

    def test_self_pair_trace_sixteen(self):
        for pi in all_orders():
            m = routing_matrix(pi).op
            assert (m.adjoint() @ m).trace() == 16

    def test_pair_products_are_factor_permutations(self):
        perms = {
            tuple(p): factor_permutation_operator(p).data
            for p in itertools.permutations(range(4))
        }
        for op in routing_pair_products().values():
            assert any(np.array_equal(op.data, mat) for mat in perms.values())


class TestDicke:
    def test_four_one_is_w_state(self):
        d = dicke(4, 1)
        amps = np.asarray(d.vec.data, dtype=complex)
        support = np.nonzero(np.abs(amps) > 1e-14)[0]
        assert sorted(support) == [1, 2, 4, 8]
        assert np.allclose(amps[support], 0.5)

    def test_four_two_has_six_strings(self):
        d = dicke(4, 2)
        amps = np.asarray(d.vec.data, dtype=complex)
        support = np.nonzero(np.abs(amps) > 1e-14)[0]
        assert len(support) == 6
        assert all(bin(i).count("1") == 2 for i in support)
        assert np.allclose(amps[support], 1.0 / math.sqrt(6))
        assert d.amplitude_squared == Fraction(1, 6)

    def test_four_zero_is_vacuum(self):
        amps = np.asarray(dicke(4, 0).vec.data, dtype=complex)
        assert np.argmax(np.abs(amps)) == 0
        assert abs(amps[0] - 1) <= 1e-14

    def test_unit_norm(self):
        for k in range(5):
            assert abs(dicke(4, k).vec.norm() - 1.0) <= 1e-12

    def test_invalid_excitation(self):
        with pytest.raises(InvalidExcitation):
            dicke(4, 5)
        with pytest.raises(InvalidExcitation):
            dicke(4, -1)

    def test_exact_projector_matches_vector(self):
        d = dicke(4, 2)
        exact = np.asarray(d.projector_exact().to_float().data)
        outer = d.vec.projector().data
        assert np.max(np.abs(exact - outer)) <= 1e-12


class TestSymmetricProjector:
    def test_is_projector_exact(self):
        p = symmetric_projector()
        assert (p @ p).allclose(p)
        assert p.trace() == 5

    def test_pointwise_invariant_under_factor_permutations(self):
        p = symmetric_projector()
        for positions in itertools.permutations(range(4)):
            r = factor_permutation_operator(positions)
            assert (r @ p).allclose(p)

    def test_pair_products_fix_it(self):
        p = symmetric_projector()
        for op in routing_pair_products().values():
            assert (op @ p).trace() == 5


class TestSharedState:
    def test_trace_exactly_one(self):
        assert perfect_discrimination_state().trace() == 1

    def test_exact_psd(self):
        assert perfect_discrimination_state().is_psd()

    def test_eigenvalue_identities_exact(self):
        state = perfect_discrimination_state()
        p = symmetric_projector()
        eye = LabeledOperator.identity(ENTANGLED_LAYOUT, exact=True)
        comp = eye - p
        assert (state @ p).allclose(p.scale(Fraction(1, 60)))
        assert (state @ comp).allclose(comp.scale(Fraction(1, 12)))

    def test_float_spectrum_multiplicities(self):
        w, _ = eig_hermitian(perfect_discrimination_state())
        assert np.sum(np.abs(w - 1.0 / 60.0) < 1e-12) == 5
        assert np.sum(np.abs(w - 1.0 / 12.0) < 1e-12) == 11

    def test_trace_identity_for_every_pair(self):
        # tr(pair . state) = tr(pair)/12 - 1/3 for factor-permutation pairs
        state = perfect_discrimination_state()
        values = pair_trace_values(state)
        pairs = routing_pair_products()
        for key, val in values.items():
            expected = Fraction(pairs[key].trace(), 12) - Fraction(1, 3)
            assert val == expected == 0

    def test_commutes_with_all_24_factor_permutations(self):
        state = perfect_discrimination_state()
        for positions in itertools.permutations(range(4)):
            r = factor_permutation_operator(positions)
            assert (r @ state).allclose(state @ r)

    def test_binding_invariance(self):
        # rebinding the four wires in any order leaves the matrix unchanged
        state = perfect_discrimination_state()
        for positions in itertools.permutations(range(4)):
            target = tuple(ENTANGLED_LAYOUT[i] for i in positions)
            moved = permute_to_layout(state, target)
            assert np.all(moved.data == state.data)


class TestVerification:
    def test_exact_state_passes(self):
        result = verify_perfect_discrimination(perfect_discrimination_state())
        assert result.probability == Fraction(1)
        assert result.certificate["pair_traces_checked"] == 30
        assert result.certificate["exact"]

    def test_maximally_mixed_fails_with_quarter(self):
        mixed = LabeledOperator(
            ENTANGLED_LAYOUT, np.eye(16, dtype=complex) / 16.0
        )
        with pytest.raises(NotOrthogonal) as info:
            verify_perfect_discrimination(mixed)
        assert abs(info.value.value - 0.25) <= 1e-12

    def test_exact_mixed_fails(self):
        data = np.zeros((16, 16), dtype=object)
        data[...] = 0
        for i in range(16):
            data[i, i] = Fraction(1, 16)
        with pytest.raises(NotOrthogonal) as info:
            verify_perfect_discrimination(LabeledOperator(ENTANGLED_LAYOUT, data))
        assert info.value.value == Fraction(1, 4)

    def test_rejects_non_psd(self):
        bad = LabeledOperator(ENTANGLED_LAYOUT, -np.eye(16, dtype=complex) / 16.0)
        with pytest.raises(NotPSD):
            verify_perfect_discrimination(bad)


class TestOutputs:
    def test_unit_norm(self):
        outputs = entangled_output_states(perfect_discrimination_state())
        for vec in outputs.values():
            assert abs(vec.norm() - 1.0) <= 1e-12

    def test_exact_gram_is_identity(self):
        gram = output_gram(perfect_discrimination_state())
        for i in range(6):
            for j in range(6):
                assert gram[i, j] == (1 if i == j else 0)

    def test_float_gram_matches(self):
        gram = output_gram(perfect_discrimination_state().to_float())
        assert np.max(np.abs(gram - np.eye(6))) <= 1e-10

    def test_mixed_state_gram_off_diagonals(self):
        mixed = LabeledOperator(ENTANGLED_LAYOUT, np.eye(16, dtype=complex) / 16.0)
        gram = output_gram(mixed)
        off = gram[~np.eye(6, dtype=bool)]
        assert np.max(np.abs(off - 0.25)) <= 1e-10

    def test_analytic_state_feasible_for_assembled_program(self):
        # plugging the closed-form state into the feasibility program's
        # equalities gives zero residual and objective value one
        from ordergame.solver import shared_state_program, svec

        pair_ops = {
            (pp.name, p.name): np.asarray(routing_matrix(pp).op.to_float().data).conj().T
            @ np.asarray(routing_matrix(p).op.to_float().data)
            for pp in all_orders()
            for p in all_orders()
            if pp != p
        }
        program = shared_state_program(pair_ops)
        state = np.asarray(perfect_discrimination_state().to_float().data)
        x = np.concatenate([svec(state), [0.0]])  # zero slack: trace is 1
        residual = program.dense_matrix() @ x - program.b
        assert np.max(np.abs(residual)) <= 1e-12
        assert abs(program.objective @ x - 1.0) <= 1e-12

    def test_root_squares_back_to_state(self):
        root = perfect_state_root()
        sq = root.to_float()
        target = np.asarray(perfect_discrimination_state().to_float().data)
        assert np.max(np.abs(sq @ sq - target)) <= 1e-12
