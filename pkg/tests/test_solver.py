import numpy as np
import pytest

from ordergame.solver import (
    ConicProblem,
    HermitianPSD,
    NonnegOrthant,
    ProblemMalformed,
    SolveSettings,
    dump_tableau,
    parse_tableau,
    project_cone,
    solve,
    solve_same_constraints,
    solve_shared_state_feasibility,
    svec,
    unsvec,
)


def rand_hermitian(rng, side):
    m = rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))
    return (m + m.conj().T) / 2


def psd_projection_oracle(h):
    """Spectral projection computed without eigh: P = (H + sqrt(H^2)) / 2,
    with the square root from the Denman-Beavers iteration."""
    h2 = h @ h.conj().T
    y = h2
    z = np.eye(h.shape[0], dtype=complex)
    for _ in range(100):
        y_next = 0.5 * (y + np.linalg.inv(z))
        z_next = 0.5 * (z + np.linalg.inv(y))
        if np.max(np.abs(y_next - y)) < 1e-14:
            y = y_next
            break
        y, z = y_next, z_next
    return (h + y) / 2


class TestSvec:
    def test_round_trip(self):
        rng = np.random.default_rng(5)
        h = rand_hermitian(rng, 5)
        assert np.allclose(unsvec(svec(h), 5), h)

    def test_inner_product_preserved(self):
        rng = np.random.default_rng(6)
        a = rand_hermitian(rng, 4)
        b = rand_hermitian(rng, 4)
        assert np.isclose(svec(a) @ svec(b), np.trace(a @ b).real)

    def test_norm_preserved(self):
        rng = np.random.default_rng(7)
        a = rand_hermitian(rng, 6)
        assert np.isclose(np.linalg.norm(svec(a)), np.linalg.norm(a))


class TestProjectCone:
    def test_psd_input_unchanged(self):
        rng = np.random.default_rng(8)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        psd = m @ m.conj().T
        x = svec(psd)
        assert np.max(np.abs(project_cone(x, [HermitianPSD(4)]) - x)) <= 1e-10

    def test_diag_clamp(self):
        x = svec(np.diag([1.0, -1.0]).astype(complex))
        out = unsvec(project_cone(x, [HermitianPSD(2)]), 2)
        assert np.allclose(out, np.diag([1.0, 0.0]))

    def test_orthant(self):
        out = project_cone(np.array([1.0, -2.0, 3.0]), [NonnegOrthant(3)])
        assert np.allclose(out, [1.0, 0.0, 3.0])

    def test_against_iteration_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            h = rand_hermitian(rng, 5)
            got = unsvec(project_cone(svec(h), [HermitianPSD(5)]), 5)
            want = psd_projection_oracle(h)
            assert np.max(np.abs(got - want)) <= 1e-9

    def test_idempotent_and_nonexpansive_1000_samples(self):
        rng = np.random.default_rng(10)
        blocks = [NonnegOrthant(3), HermitianPSD(4), HermitianPSD(2)]
        dim = 3 + 16 + 4
        for _ in range(1000):
            x = rng.normal(size=dim) * 3
            y = rng.normal(size=dim) * 3
            px = project_cone(x, blocks)
            py = project_cone(y, blocks)
            assert np.max(np.abs(project_cone(px, blocks) - px)) <= 1e-12
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ProblemMalformed):
            project_cone(np.zeros(3), [HermitianPSD(2)])


def trivial_lp():
    return ConicProblem(
        blocks=[NonnegOrthant(1)],
        objective=np.array([1.0]),
        a_rows=[0],
        a_cols=[0],
        a_vals=[1.0],
        b=[1.0],
    )


def small_sdp():
    """max tr(rho) s.t. tr(Z rho) = 0, tr(rho) <= 1: optimum 1 at rho = I/2."""
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    rows, cols, vals, rhs = [], [], [], []
    for j in np.nonzero(svec(z))[0]:
        rows.append(0)
        cols.append(int(j))
        vals.append(svec(z)[j])
    rhs.append(0.0)
    for j in np.nonzero(svec(eye))[0]:
        rows.append(1)
        cols.append(int(j))
        vals.append(svec(eye)[j])
    rows.append(1)
    cols.append(4)
    vals.append(1.0)
    rhs.append(1.0)
    return ConicProblem(
        blocks=[HermitianPSD(2), NonnegOrthant(1)],
        objective=np.concatenate([svec(eye), [0.0]]),
        a_rows=rows,
        a_cols=cols,
        a_vals=vals,
        b=rhs,
    )


class TestSolve:
    def test_trivial_lp(self):
        report = solve(trivial_lp())
        assert report.status == "optimal"
        assert abs(report.objective_value - 1.0) <= 1e-7
        assert report.primal_residual <= 1e-8
        assert report.dual_residual <= 1e-8

    def test_small_sdp(self):
        report = solve(small_sdp())
        assert report.status == "optimal"
        assert abs(report.objective_value - 1.0) <= 1e-6
        rho = unsvec(report.solution[:4], 2)
        # the optimal face is the segment of trace-1 states with tr(Z rho)=0;
        # the solver lands on the analytic center I/2 for this seedless start
        assert abs(np.trace(rho).real - 1.0) <= 1e-6
        assert abs(np.trace(z_mat() @ rho)) <= 1e-7

    def test_determinism_bit_identical(self):
        r1 = solve(small_sdp())
        r2 = solve(small_sdp())
        assert r1.iterations == r2.iterations
        assert r1.objective_value == r2.objective_value
        assert np.array_equal(r1.solution, r2.solution)

    def test_max_iters_status(self):
        report = solve(trivial_lp(), SolveSettings(tolerance=1e-16, max_iters=5))
        assert report.status in ("max_iters", "infeasible_suspected")
        assert report.iterations == 5

    def test_malformed(self):
        with pytest.raises(ProblemMalformed):
            ConicProblem(
                blocks=[NonnegOrthant(1)],
                objective=np.array([1.0, 2.0]),
                a_rows=[0],
                a_cols=[0],
                a_vals=[1.0],
                b=[1.0],
            )
        with pytest.raises(ProblemMalformed):
            ConicProblem(
                blocks=[NonnegOrthant(1)],
                objective=np.array([1.0]),
                a_rows=[0],
                a_cols=[5],
                a_vals=[1.0],
                b=[1.0],
            )

    def test_batched_matches_single(self):
        problem = small_sdp()
        objectives = np.stack([problem.objective, 0.5 * problem.objective])
        reports = solve_same_constraints(problem, objectives)
        single = solve(problem)
        assert abs(reports[0].objective_value - single.objective_value) <= 1e-9
        assert abs(reports[1].objective_value - 0.5 * single.objective_value) <= 1e-9


def z_mat():
    return np.diag([1.0, -1.0]).astype(complex)


class TestSharedStateFeasibility:
    def test_two_level_toy(self):
        # annihilate the X flip: any diagonal state works; optimum trace 1
        flip = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        from ordergame.tensor import Space

        state, report = solve_shared_state_feasibility(
            {("p", "q"): flip}, layout=(Space("Q0", 2),)
        )
        assert report.status == "optimal"
        assert abs(report.objective_value - 1.0) <= 1e-6
        assert abs(np.trace(flip @ state.data)) <= 1e-8
        assert np.linalg.eigvalsh(state.data)[0] >= -1e-10

    def test_rejects_bad_shape(self):
        with pytest.raises(ProblemMalformed):
            from ordergame.tensor import Space

            solve_shared_state_feasibility(
                {("p", "q"): np.eye(3)}, layout=(Space("Q0", 2),)
            )


class TestTableau:
    def test_round_trip(self):
        problem = small_sdp()
        text = dump_tableau(problem)
        back = parse_tableau(text)
        assert back.blocks == problem.blocks
        assert np.array_equal(back.objective, problem.objective)
        assert np.array_equal(back.dense_matrix(), problem.dense_matrix())
        assert np.array_equal(back.b, problem.b)

    def test_parsed_problem_solves_identically(self):
        problem = small_sdp()
        back = parse_tableau(dump_tableau(problem))
        assert solve(back).objective_value == solve(problem).objective_value

    def test_rejects_garbage(self):
        with pytest.raises(ProblemMalformed):
            parse_tableau("bogus\n")
