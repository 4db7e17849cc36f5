"""Non-signaling network scenario: wiring operators and the classical program.

Each hidden order corresponds to a rank-one wiring operator on the eight
network wires (the input wire, each party's in/out pair, the final wire)
built from unnormalized maximally entangled projectors across consecutive
wire pairs.  A classical strategy is a diagonal network operator per guess;
contracting it with the wiring operator of the true order gives the guess
probability.  The optimum over all non-signaling classical strategies is a
linear program because the dephasing constraint collapses every PSD block
to its diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .classical import MemoryBitStrategy, losr_canonical_witness, run_losr
from .game import Perm3, ScenarioResult, all_orders, optimal_decoder
from .solver import (
    ConicProblem,
    NonnegOrthant,
    SolveReport,
    SolveSettings,
    SolverFailed,
    solve,
)
from .tensor import (
    NETWORK_LAYOUT,
    A_IN,
    A_OUT,
    B_IN,
    B_OUT,
    C_IN,
    C_OUT,
    S_FINAL,
    S_PREP,
    LabeledOperator,
    LayoutMismatch,
    Space,
    kron,
    permute_to_layout,
    vectorize,
)

IN_WIRE = {"A": A_IN, "B": B_IN, "C": C_IN}
OUT_WIRE = {"A": A_OUT, "B": B_OUT, "C": C_OUT}

_POS = {space: i for i, space in enumerate(NETWORK_LAYOUT)}
_SIDE = 256
_N_BLOCKS = 6
_TOTAL_TRACE = 16.0


def max_entangled_projector(left: Space, right: Space) -> LabeledOperator:
    """Unnormalized projector sum_ij |ii><jj| across a wire pair (exact 0/1)."""
    ket = vectorize(np.eye(left.dim), (left,), (right,))
    data = np.outer(ket.data, ket.data.conj()).real
    exact = np.zeros(data.shape, dtype=object)
    exact[...] = 0
    for i, j in zip(*np.nonzero(data)):
        exact[i, j] = 1
    return LabeledOperator((left, right), exact)


@dataclass(frozen=True)
class OrderProcess:
    """Wiring operator of one hidden order on the canonical network layout."""

    pi: Perm3
    op: LabeledOperator


def order_process(pi: Perm3) -> OrderProcess:
    """Chain the four wire pairs of the order and align to the canonical layout."""
    first, second, third = pi.order
    pairs = [
        (S_PREP, IN_WIRE[first]),
        (OUT_WIRE[first], IN_WIRE[second]),
        (OUT_WIRE[second], IN_WIRE[third]),
        (OUT_WIRE[third], S_FINAL),
    ]
    op = None
    for left, right in pairs:
        factor = max_entangled_projector(left, right)
        op = factor if op is None else kron(op, factor)
    op = permute_to_layout(op, NETWORK_LAYOUT)
    # the contraction below uses plain products, which needs entrywise
    # symmetry; it holds because every factor is real 0/1
    assert np.all(op.data == op.data.T)
    return OrderProcess(pi=pi, op=op)


@dataclass(frozen=True)
class NetworkBlock:
    """One guess block of a strategy: a Hermitian operator on the network wires."""

    pi: Perm3
    op: LabeledOperator


def link_probability(block: NetworkBlock, process: OrderProcess) -> float:
    """Contract a strategy block with a wiring operator: trace of their product."""
    op = block.op
    if set(op.layout) != set(NETWORK_LAYOUT):
        raise LayoutMismatch("network block must live on the eight network wires")
    op = permute_to_layout(op, NETWORK_LAYOUT)
    lhs = np.asarray(op.to_float().data)
    rhs = np.asarray(process.op.to_float().data)
    return float(np.real(np.trace(lhs @ rhs)))


def wiring_diagonal(pi: Perm3) -> np.ndarray:
    """Diagonal of the order's wiring operator in the computational basis."""
    return np.real(np.diag(order_process(pi).op.to_float().data)).copy()


# ---------------------------------------------------------------------------
# the classical non-signaling program
# ---------------------------------------------------------------------------


def _bit_index(bits: dict[Space, int]) -> int:
    v = 0
    for space, pos in _POS.items():
        v |= bits.get(space, 0) << (7 - pos)
    return v


def constraint_rows() -> tuple[np.ndarray, np.ndarray]:
    """Equality rows acting on the summed diagonal of the six guess blocks.

    Returns (rows, rhs) with rows of shape (449, 256): 256 final-wire
    marginal rows, 64 per party, and one total-trace row.  All coefficients
    are dyadic, so the float rows convert losslessly to exact rationals.
    """
    rows = []
    rhs = []
    # final wire: the summed block must be uniform on S_F given the rest
    for v in range(_SIDE):
        row = np.zeros(_SIDE)
        row[v] += 1.0
        for bit in (0, 1):
            row[(v & ~1) | bit] -= 0.5
        rows.append(row)
        rhs.append(0.0)
    # each party: after dropping S_F and the party's out wire, the marginal
    # must be uniform on the party's in wire
    for party in ("A", "B", "C"):
        pos_in = _POS[IN_WIRE[party]]
        pos_out = _POS[OUT_WIRE[party]]
        summed = (pos_out, _POS[S_FINAL])
        kept = [p for p in range(8) if p not in summed]
        for uval in range(64):
            row = np.zeros(_SIDE)
            base = 0
            for i, p in enumerate(kept):
                base |= ((uval >> (5 - i)) & 1) << (7 - p)
            for out_bit in (0, 1):
                for fin_bit in (0, 1):
                    v = base | (out_bit << (7 - pos_out)) | fin_bit
                    row[v] += 1.0
            for in_bit in (0, 1):
                stripped = base & ~(1 << (7 - pos_in))
                for out_bit in (0, 1):
                    for fin_bit in (0, 1):
                        v = (
                            stripped
                            | (in_bit << (7 - pos_in))
                            | (out_bit << (7 - pos_out))
                            | fin_bit
                        )
                        row[v] -= 0.5
            rows.append(row)
            rhs.append(0.0)
    rows.append(np.ones(_SIDE))
    rhs.append(_TOTAL_TRACE)
    return np.array(rows), np.array(rhs)


def objective_diagonals() -> np.ndarray:
    """Per-order wiring diagonals stacked as a (6, 256) array."""
    return np.array([wiring_diagonal(pi) for pi in all_orders()])


def nonsignaling_program() -> ConicProblem:
    """The non-signaling optimum as an LP over six diagonal guess blocks."""
    rows, rhs = constraint_rows()
    n_rows = rows.shape[0]
    a_rows, a_cols, a_vals = [], [], []
    for r in range(n_rows):
        nz = np.nonzero(rows[r])[0]
        for k in range(_N_BLOCKS):
            a_rows.extend([r] * len(nz))
            a_cols.extend((k * _SIDE + nz).tolist())
            a_vals.extend(rows[r][nz].tolist())
    objective = objective_diagonals().reshape(-1) / 6.0
    return ConicProblem(
        blocks=[NonnegOrthant(_SIDE) for _ in range(_N_BLOCKS)],
        objective=objective,
        a_rows=np.array(a_rows),
        a_cols=np.array(a_cols),
        a_vals=np.array(a_vals),
        b=rhs,
    )


def solve_nonsignaling(settings: SolveSettings | None = None) -> ScenarioResult:
    """Solve the non-signaling LP and package the certificate."""
    settings = settings or SolveSettings()
    report = solve(nonsignaling_program(), settings)
    if report.status != "optimal":
        raise SolverFailed(
            f"non-signaling solve ended with status {report.status}", report
        )
    if report.objective_value > 1.0 + 10 * settings.tolerance:
        raise SolverFailed("probability objective exceeds 1", report)
    return ScenarioResult(
        scenario="nonsignaling",
        probability=report.objective_value,
        strategy="six diagonal guess blocks optimized over all non-signaling "
        "classical strategies",
        certificate={"solver": report.jsonable(), "min_entry": float(report.solution.min())},
    )


def solution_blocks(report: SolveReport) -> dict[Perm3, np.ndarray]:
    """Split a solver solution vector into per-order diagonal blocks."""
    return {
        pi: report.solution[k * _SIDE : (k + 1) * _SIDE]
        for k, pi in enumerate(all_orders())
    }


# ---------------------------------------------------------------------------
# exact embedding of the memory-strategy witness as a feasible point
# ---------------------------------------------------------------------------


def strategy_network_blocks(
    a: MemoryBitStrategy | None = None,
    b: MemoryBitStrategy | None = None,
    c: MemoryBitStrategy | None = None,
) -> dict[Perm3, np.ndarray]:
    """Deterministic memory strategy as six exact diagonal guess blocks.

    The blocks encode: prepare 0 on the input wire, forward each party's
    map on its out wire, and decode the guess from the final bit together
    with the three received bits (read off the in wires).
    """
    if a is None:
        a, b, c = losr_canonical_witness()
    strategies = {"A": a, "B": b, "C": c}
    outcomes = {pi: run_losr(pi, a, b, c, 0).as_tuple() for pi in all_orders()}
    decode = optimal_decoder(outcomes)
    # tuples no wiring produces still need a guess, or the measurement is
    # not a complete network; they carry no objective weight
    fallback = all_orders()[0]
    blocks = {}
    for guess in all_orders():
        diag = np.zeros(_SIDE, dtype=object)
        diag[...] = 0
        for v in range(_SIDE):
            bits = {space: (v >> (7 - p)) & 1 for space, p in _POS.items()}
            if bits[S_PREP] != 0:
                continue
            if any(
                bits[OUT_WIRE[p]] != strategies[p].forward(bits[IN_WIRE[p]])
                for p in ("A", "B", "C")
            ):
                continue
            observed = (bits[S_FINAL], bits[A_IN], bits[B_IN], bits[C_IN])
            if decode.get(observed, fallback) == guess:
                diag[v] = 1
        blocks[guess] = diag
    return blocks


def witness_feasibility(blocks: Mapping[Perm3, np.ndarray]) -> dict:
    """Exact feasibility and objective of diagonal guess blocks.

    All constraint coefficients are dyadic, so the check runs entirely in
    rational arithmetic; the objective uses the exact wiring diagonals.
    """
    rows, rhs = constraint_rows()
    summed = np.zeros(_SIDE, dtype=object)
    summed[...] = 0
    for diag in blocks.values():
        summed = summed + np.asarray(diag, dtype=object)
    max_violation = Fraction(0)
    for r in range(rows.shape[0]):
        lhs = sum(
            Fraction(rows[r, v]) * summed[v] for v in np.nonzero(rows[r])[0]
        )
        violation = abs(lhs - Fraction(rhs[r]))
        max_violation = max(max_violation, violation)
    objective = Fraction(0)
    for k, pi in enumerate(all_orders()):
        diag_w = order_process(pi).op.data.diagonal()
        objective += sum(
            Fraction(diag_w[v]) * Fraction(blocks[pi][v]) for v in range(_SIDE)
        )
    objective = objective / 6
    return {"feasible": max_violation == 0, "max_violation": max_violation, "objective": objective}


# ---------------------------------------------------------------------------
# debug mode: the same program over full PSD blocks
# ---------------------------------------------------------------------------


def solve_nonsignaling_psd_debug(
    tolerance: float = 1e-6, max_iters: int = 150
) -> SolveReport:
    """Run the program with full 256x256 PSD blocks and dephasing equalities.

    The affine step zeroes every off-diagonal entry (the dephasing
    constraint) and projects the diagonals onto the marginal equalities;
    the cone step eigendecomposes the full Hermitian blocks.  Intended as a
    cross-check against the diagonal LP at matching small budgets.
    """
    rows, rhs = constraint_rows()
    a_lp = np.zeros((rows.shape[0], _N_BLOCKS * _SIDE))
    for k in range(_N_BLOCKS):
        a_lp[:, k * _SIDE : (k + 1) * _SIDE] = rows
    gram_inv = np.linalg.pinv(a_lp @ a_lp.T, hermitian=True)
    c_diag = objective_diagonals() / 6.0

    shape = (_N_BLOCKS, _SIDE, _SIDE)
    x = np.zeros(shape, dtype=complex)
    z = np.zeros(shape, dtype=complex)
    u = np.zeros(shape, dtype=complex)
    shift = np.zeros(shape, dtype=complex)
    for k in range(_N_BLOCKS):
        np.fill_diagonal(shift[k], c_diag[k])

    def affine_project(mats: np.ndarray) -> np.ndarray:
        diag = np.diagonal(mats, axis1=1, axis2=2).real.reshape(-1)
        resid = a_lp @ diag - rhs
        diag = diag - a_lp.T @ (gram_inv @ resid)
        out = np.zeros(shape, dtype=complex)
        for k in range(_N_BLOCKS):
            np.fill_diagonal(out[k], diag[k * _SIDE : (k + 1) * _SIDE])
        return out

    primal = dual = np.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        x = affine_project(z - u + shift)
        xh = 1.5 * x - 0.5 * z
        v = xh + u
        w, vec = np.linalg.eigh(v)
        np.maximum(w, 0.0, out=w)
        z_new = (vec * w[:, None, :]) @ vec.conj().transpose(0, 2, 1)
        u = u + xh - z_new
        dual = float(np.max(np.abs(z_new - z)))
        z = z_new
        z_diag = np.diagonal(z, axis1=1, axis2=2).real.reshape(-1)
        primal = float(
            max(np.max(np.abs(x - z)), np.max(np.abs(a_lp @ z_diag - rhs)))
        )
        if primal <= tolerance and dual <= tolerance:
            break
    z_diag = np.diagonal(z, axis1=1, axis2=2).real.reshape(-1)
    objective = float(c_diag.reshape(-1) @ z_diag)
    status = "optimal" if (primal <= tolerance and dual <= tolerance) else "max_iters"
    return SolveReport(
        status=status,
        objective_value=objective,
        primal_residual=primal,
        dual_residual=dual,
        iterations=iters,
        solution=z_diag,
    )
