"""Deterministic first-order solver for small cone programs.

Problems have the shape

    maximize    c . x
    subject to  A x = b,    x in K,

where K is a product of nonnegative-orthant blocks and Hermitian-PSD blocks.
PSD blocks are carried inside the real variable vector through an isometric
"svec" encoding (diagonal first, then sqrt(2)-scaled real/imaginary parts of
the upper triangle), so trace inner products and Euclidean norms transfer
exactly.

The algorithm is plain ADMM on the consensus splitting between the affine
set {Ax = b} and the cone, with fixed penalty 1.0 and over-relaxation 1.5.
No adaptive scaling, no randomized initialization: a solve is a pure
function of the problem and the settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .tensor import ENTANGLED_LAYOUT, LabeledOperator, Space

_SQRT2 = math.sqrt(2.0)


class ProblemMalformed(ValueError):
    """Structurally inconsistent cone program."""


class SolverFailed(RuntimeError):
    """A solve did not reach the requested tolerance."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class NonnegOrthant:
    n: int

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class HermitianPSD:
    side: int

    @property
    def dim(self) -> int:
        return self.side * self.side


Cone = NonnegOrthant | HermitianPSD


@dataclass
class ConicProblem:
    """Cone blocks, a linear objective to maximize, and affine equalities.

    The equality map is stored as coordinate triplets (rows, cols, vals);
    the dense form is built on demand since all programs here are small.
    """

    blocks: list[Cone]
    objective: np.ndarray
    a_rows: np.ndarray
    a_cols: np.ndarray
    a_vals: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.a_rows = np.asarray(self.a_rows, dtype=int)
        self.a_cols = np.asarray(self.a_cols, dtype=int)
        self.a_vals = np.asarray(self.a_vals, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        n = self.dim
        if self.objective.shape != (n,):
            raise ProblemMalformed(f"objective has shape {self.objective.shape}, expected ({n},)")
        if not (self.a_rows.shape == self.a_cols.shape == self.a_vals.shape):
            raise ProblemMalformed("triplet arrays must have identical shapes")
        if self.a_rows.size and (self.a_rows.min() < 0 or self.a_rows.max() >= self.b.shape[0]):
            raise ProblemMalformed("triplet row index out of range")
        if self.a_cols.size and (self.a_cols.min() < 0 or self.a_cols.max() >= n):
            raise ProblemMalformed("triplet column index out of range")
        if not np.all(np.isfinite(self.b)) or not np.all(np.isfinite(self.a_vals)):
            raise ProblemMalformed("non-finite constraint data")
        if not np.all(np.isfinite(self.objective)):
            raise ProblemMalformed("non-finite objective")

    @property
    def dim(self) -> int:
        return sum(block.dim for block in self.blocks)

    @property
    def n_eq(self) -> int:
        return self.b.shape[0]

    def dense_matrix(self) -> np.ndarray:
        a = np.zeros((self.n_eq, self.dim))
        np.add.at(a, (self.a_rows, self.a_cols), self.a_vals)
        return a

    def block_slices(self) -> list[slice]:
        out, at = [], 0
        for block in self.blocks:
            out.append(slice(at, at + block.dim))
            at += block.dim
        return out


@dataclass
class SolveSettings:
    tolerance: float = 1e-8
    max_iters: int = 200_000
    rho: float = 1.0
    over_relaxation: float = 1.5


@dataclass
class SolveReport:
    status: str  # "optimal" | "max_iters" | "infeasible_suspected"
    objective_value: float
    primal_residual: float
    dual_residual: float
    iterations: int
    solution: np.ndarray

    def jsonable(self) -> dict:
        return {
            "status": self.status,
            "objective_value": self.objective_value,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
        }


# ---------------------------------------------------------------------------
# svec encoding of Hermitian matrices
# ---------------------------------------------------------------------------


def svec(h: np.ndarray) -> np.ndarray:
    """Isometric real encoding of Hermitian matrices (batched over leading axes)."""
    h = np.asarray(h, dtype=complex)
    s = h.shape[-1]
    lead = h.shape[:-2]
    out = np.empty(lead + (s * s,))
    idx = np.arange(s)
    out[..., :s] = h[..., idx, idx].real
    iu, ju = np.triu_indices(s, 1)
    out[..., s::2] = _SQRT2 * h[..., iu, ju].real
    out[..., s + 1 :: 2] = _SQRT2 * h[..., iu, ju].imag
    return out


def unsvec(v: np.ndarray, side: int) -> np.ndarray:
    """Inverse of :func:`svec` (batched over leading axes)."""
    v = np.asarray(v, dtype=float)
    lead = v.shape[:-1]
    h = np.zeros(lead + (side, side), dtype=complex)
    idx = np.arange(side)
    h[..., idx, idx] = v[..., :side]
    iu, ju = np.triu_indices(side, 1)
    upper = (v[..., side::2] + 1j * v[..., side + 1 :: 2]) / _SQRT2
    h[..., iu, ju] = upper
    h[..., ju, iu] = upper.conj()
    return h


def _group_blocks(blocks: Sequence[Cone]) -> list[tuple[Cone, int, slice]]:
    """Merge runs of identical consecutive blocks into (block, count, span)."""
    groups: list[tuple[Cone, int, slice]] = []
    at = 0
    i = 0
    while i < len(blocks):
        j = i
        while j < len(blocks) and blocks[j] == blocks[i]:
            j += 1
        count = j - i
        width = blocks[i].dim * count
        groups.append((blocks[i], count, slice(at, at + width)))
        at += width
        i = j
    return groups


def _project_batch(
    v: np.ndarray, groups: Sequence[tuple[Cone, int, slice]]
) -> np.ndarray:
    out = np.empty_like(v)
    batch = v.shape[0]
    for block, count, span in groups:
        if isinstance(block, NonnegOrthant):
            np.maximum(v[:, span], 0.0, out=out[:, span])
        else:
            side = block.side
            h = unsvec(v[:, span].reshape(batch * count, side * side), side)
            w, vec = np.linalg.eigh(h)
            np.maximum(w, 0.0, out=w)
            clipped = (vec * w[:, None, :]) @ vec.conj().transpose(0, 2, 1)
            out[:, span] = svec(clipped).reshape(batch, count * side * side)
    return out


def project_cone(x: np.ndarray, blocks: Sequence[Cone]) -> np.ndarray:
    """Euclidean projection of a variable vector onto the product cone."""
    x = np.asarray(x, dtype=float)
    dim = sum(block.dim for block in blocks)
    if x.shape != (dim,):
        raise ProblemMalformed(f"vector length {x.shape} does not match cones ({dim})")
    return _project_batch(x[None, :], _group_blocks(blocks))[0]


# ---------------------------------------------------------------------------
# ADMM core (batched over objectives that share constraints and cones)
# ---------------------------------------------------------------------------


def _admm(problem: ConicProblem, objectives: np.ndarray, settings: SolveSettings):
    if settings.max_iters < 1 or settings.tolerance <= 0:
        raise ProblemMalformed("settings need positive tolerance and max_iters")
    a = problem.dense_matrix()
    b = problem.b
    gram_inv = np.linalg.pinv(a @ a.T, hermitian=True)
    groups = _group_blocks(problem.blocks)
    n = problem.dim
    batch = objectives.shape[0]
    rho, alpha, tol = settings.rho, settings.over_relaxation, settings.tolerance

    # converged instances drop out of the working arrays; `live` maps the
    # remaining rows back to their original batch positions
    live = np.arange(batch)
    shift = objectives / rho
    x = np.zeros((batch, n))
    z = np.zeros((batch, n))
    u = np.zeros((batch, n))
    done = np.zeros(batch, dtype=bool)
    done_iters = np.zeros(batch, dtype=int)
    done_primal = np.full(batch, np.inf)
    done_dual = np.full(batch, np.inf)
    solutions = np.zeros((batch, n))

    k = 0
    for k in range(1, settings.max_iters + 1):
        w = z - u + shift
        resid = w @ a.T - b
        x = w - (resid @ gram_inv) @ a
        xh = alpha * x + (1.0 - alpha) * z
        z_new = _project_batch(xh + u, groups)
        u = u + xh - z_new
        dual = rho * np.max(np.abs(z_new - z), axis=1)
        z = z_new
        eq_gap = np.max(np.abs(z @ a.T - b), axis=1)
        primal = np.maximum(np.max(np.abs(x - z), axis=1), eq_gap)
        conv = (primal <= tol) & (dual <= tol)
        if np.any(conv):
            idx = live[conv]
            done[idx] = True
            done_iters[idx] = k
            done_primal[idx] = primal[conv]
            done_dual[idx] = dual[conv]
            solutions[idx] = z[conv]
            keep = ~conv
            if not np.any(keep):
                break
            live = live[keep]
            x, z, u, shift = x[keep], z[keep], u[keep], shift[keep]

    if live.size and not np.all(done):
        done_iters[live] = k
        done_primal[live] = primal[~conv] if np.any(conv) else primal
        done_dual[live] = dual[~conv] if np.any(conv) else dual
        solutions[live] = z

    reports = []
    for i in range(batch):
        if done[i]:
            status = "optimal"
        else:
            status = "infeasible_suspected" if done_primal[i] > 1e-3 else "max_iters"
        reports.append(
            SolveReport(
                status=status,
                objective_value=float(objectives[i] @ solutions[i]),
                primal_residual=float(done_primal[i]),
                dual_residual=float(done_dual[i]),
                iterations=int(done_iters[i]),
                solution=solutions[i],
            )
        )
    return reports


def solve(problem: ConicProblem, settings: SolveSettings | None = None) -> SolveReport:
    """Solve one cone program; the returned point is exactly cone-feasible."""
    settings = settings or SolveSettings()
    return _admm(problem, problem.objective[None, :], settings)[0]


def solve_same_constraints(
    problem: ConicProblem,
    objectives: np.ndarray,
    settings: SolveSettings | None = None,
) -> list[SolveReport]:
    """Solve many programs differing only in the objective vector.

    The affine and cone structure (and its factorization) is shared; each
    objective row gets its own independent iterate and report.
    """
    settings = settings or SolveSettings()
    objectives = np.asarray(objectives, dtype=float)
    if objectives.ndim != 2 or objectives.shape[1] != problem.dim:
        raise ProblemMalformed(f"objectives must have shape (batch, {problem.dim})")
    return _admm(problem, objectives, settings)


# ---------------------------------------------------------------------------
# the shared-state feasibility program of the entangled scenario
# ---------------------------------------------------------------------------


def shared_state_program(
    pair_ops: Mapping[object, np.ndarray], side: int = 16
) -> ConicProblem:
    """Cone program: maximize tr(state) with tr(op . state) = 0 per pair.

    Each (generally non-Hermitian) pair operator contributes two real
    equalities through its Hermitian and anti-Hermitian witnesses; the trace
    cap tr(state) <= 1 is carried by one orthant slack variable.
    """
    rows, cols, vals, rhs = [], [], [], []
    svec_dim = side * side
    row = 0
    for _, op in sorted(pair_ops.items(), key=lambda kv: str(kv[0])):
        op = np.asarray(op, dtype=complex)
        if op.shape != (side, side):
            raise ProblemMalformed(f"pair operator must be {side}x{side}")
        for witness in ((op + op.conj().T) / 2.0, (op - op.conj().T) / 2.0j):
            coeff = svec(witness)
            nz = np.nonzero(coeff)[0]
            rows.extend([row] * len(nz))
            cols.extend(nz.tolist())
            vals.extend(coeff[nz].tolist())
            rhs.append(0.0)
            row += 1
    # tr(state) + slack = 1
    trace_coeff = svec(np.eye(side, dtype=complex))
    nz = np.nonzero(trace_coeff)[0]
    rows.extend([row] * (len(nz) + 1))
    cols.extend(nz.tolist() + [svec_dim])
    vals.extend(trace_coeff[nz].tolist() + [1.0])
    rhs.append(1.0)

    objective = np.concatenate([trace_coeff, [0.0]])
    return ConicProblem(
        blocks=[HermitianPSD(side), NonnegOrthant(1)],
        objective=objective,
        a_rows=np.array(rows),
        a_cols=np.array(cols),
        a_vals=np.array(vals),
        b=np.array(rhs),
    )


def solve_shared_state_feasibility(
    pair_ops: Mapping[object, np.ndarray],
    settings: SolveSettings | None = None,
    layout: Sequence[Space] = ENTANGLED_LAYOUT,
) -> tuple[LabeledOperator, SolveReport]:
    """Find a unit-trace PSD state annihilating every supplied pair operator.

    The internal tolerance is halved so that the modulus of each complex
    pair trace (combining its two real witnesses) still meets the requested
    tolerance.
    """
    settings = settings or SolveSettings()
    side = math.prod(s.dim for s in layout)
    problem = shared_state_program(pair_ops, side=side)
    inner = SolveSettings(
        tolerance=settings.tolerance / 2.0,
        max_iters=settings.max_iters,
        rho=settings.rho,
        over_relaxation=settings.over_relaxation,
    )
    report = solve(problem, inner)
    if report.status != "optimal":
        raise SolverFailed(
            f"shared-state feasibility solve ended with status {report.status}", report
        )
    state = unsvec(report.solution[: side * side], side)
    if report.objective_value > 1.0 + 10 * settings.tolerance:
        raise SolverFailed("objective exceeds the trace cap", report)
    return LabeledOperator(layout, state), report


# ---------------------------------------------------------------------------
# plain-text tableau dump / parse (for external cross-checks)
# ---------------------------------------------------------------------------


def dump_tableau(problem: ConicProblem) -> str:
    """Objective, cones, coordinate-triplet equalities and right-hand sides."""
    lines = ["conic-tableau v1", f"rows {problem.n_eq}"]
    for block in problem.blocks:
        if isinstance(block, NonnegOrthant):
            lines.append(f"cone orthant {block.n}")
        else:
            lines.append(f"cone psd {block.side}")
    for j in np.nonzero(problem.objective)[0]:
        lines.append(f"o {j} {float(problem.objective[j])!r}")
    for r, c, v in zip(problem.a_rows, problem.a_cols, problem.a_vals):
        lines.append(f"a {int(r)} {int(c)} {float(v)!r}")
    for r, v in enumerate(problem.b):
        lines.append(f"rhs {r} {float(v)!r}")
    return "\n".join(lines) + "\n"


def parse_tableau(text: str) -> ConicProblem:
    blocks: list[Cone] = []
    n_rows = None
    obj_entries: list[tuple[int, float]] = []
    rows, cols, vals = [], [], []
    rhs_entries: list[tuple[int, float]] = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "conic-tableau v1":
        raise ProblemMalformed("not a conic-tableau v1 dump")
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "rows":
            n_rows = int(parts[1])
        elif parts[0] == "cone":
            blocks.append(NonnegOrthant(int(parts[2])) if parts[1] == "orthant" else HermitianPSD(int(parts[2])))
        elif parts[0] == "o":
            obj_entries.append((int(parts[1]), float(parts[2])))
        elif parts[0] == "a":
            rows.append(int(parts[1]))
            cols.append(int(parts[2]))
            vals.append(float(parts[3]))
        elif parts[0] == "rhs":
            rhs_entries.append((int(parts[1]), float(parts[2])))
        else:
            raise ProblemMalformed(f"unknown tableau line: {ln}")
    if n_rows is None:
        raise ProblemMalformed("missing rows header")
    dim = sum(block.dim for block in blocks)
    objective = np.zeros(dim)
    for j, v in obj_entries:
        objective[j] = v
    b = np.zeros(n_rows)
    for r, v in rhs_entries:
        b[r] = v
    return ConicProblem(
        blocks=blocks,
        objective=objective,
        a_rows=np.array(rows, dtype=int),
        a_cols=np.array(cols, dtype=int),
        a_vals=np.array(vals, dtype=float),
        b=b,
    )
