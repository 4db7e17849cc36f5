"""Dense operators on named tensor factors.

Everything in the package that looks like a state, a channel in Choi form
or a wiring operator is a :class:`LabeledOperator`: a square matrix together
with the ordered list of subsystem labels it acts on.  The first label is
the most significant tensor factor, i.e. the basis index of ``|i1 ... ik>``
is ``sum(i_j * prod(later dims))``.

Two scalar kinds are supported and never mixed silently: complex floats
(``complex128`` arrays) and exact rationals (object arrays holding Python
ints / ``fractions.Fraction``).  Conversions are explicit via
:meth:`LabeledOperator.to_float` / :meth:`LabeledOperator.to_exact`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_ATOL = 1e-12


class LabelCollision(ValueError):
    """A subsystem label occurs more than once in a layout."""


class UnknownLabel(ValueError):
    """A referenced label is not part of the operator's layout."""


class LayoutMismatch(ValueError):
    """Two layouts do not agree (as sets or as required orderings)."""


class NotHermitian(ValueError):
    """Operation requires a Hermitian input."""


class NotPSD(ValueError):
    """Operation requires a positive semidefinite input."""


@dataclass(frozen=True)
class Space:
    """A named subsystem wire with a fixed dimension."""

    name: str
    dim: int

    def __repr__(self) -> str:
        return f"{self.name}({self.dim})"


# Canonical wires of the three-party game.  S_P feeds the first slot of the
# hidden wiring, S_F leaves the last slot, X_I / X_O are party X's local
# input and output, S is the shared system of the entangled scenario and O
# is the six-valued guess register.
S_PREP = Space("S_P", 2)
S_FINAL = Space("S_F", 2)
SHARED = Space("S", 2)
A_IN = Space("A_I", 2)
A_OUT = Space("A_O", 2)
B_IN = Space("B_I", 2)
B_OUT = Space("B_O", 2)
C_IN = Space("C_I", 2)
C_OUT = Space("C_O", 2)
OUTCOME = Space("O", 6)


def env(dim: int) -> Space:
    """Auxiliary purification space of caller-chosen dimension."""
    return Space("E", dim)


#: Factor order shared by every network-scenario operator.
NETWORK_LAYOUT = (S_PREP, A_IN, A_OUT, B_IN, B_OUT, C_IN, C_OUT, S_FINAL)

#: Factor order of the shared state in the entangled scenario.
ENTANGLED_LAYOUT = (A_IN, B_IN, C_IN, SHARED)


def _dims(layout: Sequence[Space]) -> tuple[int, ...]:
    return tuple(s.dim for s in layout)


def _side(layout: Sequence[Space]) -> int:
    return math.prod(_dims(layout)) if layout else 1


def _check_layout(layout: Sequence[Space]) -> tuple[Space, ...]:
    layout = tuple(layout)
    if len(set(layout)) != len(layout):
        raise LabelCollision(f"duplicate labels in layout {layout}")
    return layout


def _coerce(data, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(np.shape(data), dtype=object)
        out[...] = np.asarray(data, dtype=object)
        return out
    return np.asarray(data, dtype=complex)


def _is_exact(data) -> bool:
    return isinstance(data, np.ndarray) and data.dtype == object


class LabeledOperator:
    """Square matrix on an ordered list of named tensor factors."""

    __slots__ = ("layout", "data")

    def __init__(self, layout: Sequence[Space], data, *, exact: bool | None = None):
        layout = _check_layout(layout)
        if exact is None:
            exact = _is_exact(data)
        mat = _coerce(data, exact)
        side = _side(layout)
        if mat.shape != (side, side):
            raise LayoutMismatch(
                f"data shape {mat.shape} does not match layout side {side}"
            )
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "data", mat)

    def __setattr__(self, name, value):  # immutable value semantics
        raise AttributeError("LabeledOperator is immutable")

    # -- basic queries -----------------------------------------------------

    @property
    def side(self) -> int:
        return self.data.shape[0]

    @property
    def exact(self) -> bool:
        return self.data.dtype == object

    @classmethod
    def identity(cls, layout: Sequence[Space], *, exact: bool = False) -> "LabeledOperator":
        n = _side(tuple(layout))
        if exact:
            data = np.zeros((n, n), dtype=object)
            data[...] = 0
            for i in range(n):
                data[i, i] = 1
            return cls(layout, data)
        return cls(layout, np.eye(n, dtype=complex))

    def trace(self):
        """Matrix trace; a Fraction/int for exact data, complex for floats."""
        if self.exact:
            return sum(self.data[i, i] for i in range(self.side))
        return complex(np.trace(self.data))

    def adjoint(self) -> "LabeledOperator":
        if self.exact:
            return LabeledOperator(self.layout, self.data.T)  # exact data is real
        return LabeledOperator(self.layout, self.data.conj().T)

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        if self.exact:
            return bool(np.all(self.data == self.data.T))
        return bool(np.max(np.abs(self.data - self.data.conj().T)) <= atol)

    def is_psd(self, atol: float = HERMITIAN_ATOL) -> bool:
        """PSD test: exact rational elimination, or eigenvalue floor for floats."""
        if not self.is_hermitian(atol):
            return False
        if self.exact:
            return _exact_psd(self.data)
        w = np.linalg.eigvalsh(self.data)
        return bool(w[0] >= -max(atol, 1e-10))

    # -- scalar-kind conversions (always explicit) ---------------------------

    def to_float(self) -> "LabeledOperator":
        if not self.exact:
            return self
        out = np.asarray(self.data, dtype=complex)
        return LabeledOperator(self.layout, out)

    def to_exact(self) -> "LabeledOperator":
        """Lift float data with (near-)rational entries to exact scalars.

        Only sensible for constructed integer/half-integer style data; raises
        if any entry has a nonzero imaginary part.
        """
        if self.exact:
            return self
        if np.max(np.abs(self.data.imag)) != 0.0:
            raise ValueError("cannot convert complex data to exact rationals")
        out = np.empty(self.data.shape, dtype=object)
        for i in range(self.side):
            for j in range(self.side):
                out[i, j] = Fraction(self.data[i, j].real).limit_denominator(10**9)
        return LabeledOperator(self.layout, out)

    # -- arithmetic ----------------------------------------------------------

    def _check_compatible(self, other: "LabeledOperator") -> None:
        if self.layout != other.layout:
            raise LayoutMismatch(f"layouts differ: {self.layout} vs {other.layout}")
        if self.exact != other.exact:
            raise TypeError("exact and float operators do not mix implicitly")

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_compatible(other)
        return LabeledOperator(self.layout, self.data + other.data)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_compatible(other)
        return LabeledOperator(self.layout, self.data - other.data)

    def scale(self, factor) -> "LabeledOperator":
        if self.exact and isinstance(factor, (float, complex)):
            raise TypeError("exact operator scaled by float; convert explicitly")
        return LabeledOperator(self.layout, self.data * factor)

    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._check_compatible(other)
        return LabeledOperator(self.layout, np.dot(self.data, other.data))

    def allclose(self, other: "LabeledOperator", atol: float = 1e-12) -> bool:
        self._check_compatible(other)
        if self.exact:
            return bool(np.all(self.data == other.data))
        return bool(np.max(np.abs(self.data - other.data)) <= atol)

    # -- layout-aware operations (method forms of the module ops) -----------

    def kron(self, other: "LabeledOperator") -> "LabeledOperator":
        return kron(self, other)

    def partial_trace(self, labels: Iterable[Space]) -> "LabeledOperator":
        return partial_trace(self, labels)

    def permute_to_layout(self, target: Sequence[Space]) -> "LabeledOperator":
        return permute_to_layout(self, target)

    def dephase(self) -> "LabeledOperator":
        return dephase(self)

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"LabeledOperator({[s.name for s in self.layout]}, side={self.side}, {kind})"


class Vec:
    """Column vector on an ordered list of named tensor factors."""

    __slots__ = ("layout", "data")

    def __init__(self, layout: Sequence[Space], data, *, exact: bool | None = None):
        layout = _check_layout(layout)
        if exact is None:
            exact = _is_exact(data)
        arr = _coerce(data, exact)
        if arr.shape != (_side(layout),):
            raise LayoutMismatch(
                f"vector length {arr.shape} does not match layout side {_side(layout)}"
            )
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Vec is immutable")

    @property
    def exact(self) -> bool:
        return self.data.dtype == object

    def norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.data, dtype=complex)))

    def inner(self, other: "Vec"):
        """Hermitian inner product <self|other>."""
        if self.layout != other.layout:
            raise LayoutMismatch("inner product requires identical layouts")
        a = np.asarray(self.data, dtype=complex)
        b = np.asarray(other.data, dtype=complex)
        return complex(np.vdot(a, b))

    def projector(self) -> LabeledOperator:
        """|v><v| on the same layout (float scalars)."""
        a = np.asarray(self.data, dtype=complex)
        return LabeledOperator(self.layout, np.outer(a, a.conj()))

    def __repr__(self) -> str:
        return f"Vec({[s.name for s in self.layout]}, len={self.data.shape[0]})"


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def kron(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Tensor product; the layout is a's labels followed by b's."""
    if set(a.layout) & set(b.layout):
        raise LabelCollision(
            f"layouts share labels: {set(a.layout) & set(b.layout)}"
        )
    if a.exact != b.exact:
        raise TypeError("exact and float operators do not mix implicitly")
    return LabeledOperator(a.layout + b.layout, np.kron(a.data, b.data))


def permute_to_layout(op: LabeledOperator, target: Sequence[Space]) -> LabeledOperator:
    """Reorder tensor factors; spectrum and trace are unchanged."""
    target = tuple(target)
    if len(target) != len(op.layout) or set(target) != set(op.layout):
        raise LayoutMismatch(f"{target} is not a permutation of {op.layout}")
    if target == op.layout:
        return op
    k = len(op.layout)
    dims = _dims(op.layout)
    perm = [op.layout.index(s) for s in target]
    tens = op.data.reshape(dims + dims)
    tens = tens.transpose(perm + [k + p for p in perm])
    side = op.side
    return LabeledOperator(target, tens.reshape(side, side))


def partial_trace(op: LabeledOperator, labels: Iterable[Space]) -> LabeledOperator:
    """Trace out the given labels; the total trace is preserved."""
    labels = list(labels)
    for s in labels:
        if s not in op.layout:
            raise UnknownLabel(f"{s} not in layout {op.layout}")
    keep = [s for s in op.layout if s not in labels]
    traced = [s for s in op.layout if s in labels]
    moved = permute_to_layout(op, tuple(keep) + tuple(traced))
    dk = _side(keep)
    dt = _side(traced)
    m = moved.data.reshape(dk, dt, dk, dt)
    if op.exact:
        out = np.zeros((dk, dk), dtype=object)
        out[...] = 0
        for t in range(dt):
            out = out + m[:, t, :, t]
    else:
        out = np.einsum("atbt->ab", m)
    return LabeledOperator(tuple(keep), out)


def dephase(op: LabeledOperator) -> LabeledOperator:
    """Zero all off-diagonal entries (idempotent, trace preserving)."""
    if op.exact:
        out = np.zeros(op.data.shape, dtype=object)
        out[...] = 0
        for i in range(op.side):
            out[i, i] = op.data[i, i]
        return LabeledOperator(op.layout, out)
    return LabeledOperator(op.layout, np.diag(np.diag(op.data)))


def vectorize(m, out_layout: Sequence[Space], in_layout: Sequence[Space]) -> Vec:
    """Column-stack a matrix m: in -> out as the vector (m (x) I) sum_i |ii>.

    The resulting layout is out_layout followed by in_layout, matching the
    convention that vec(|i><j|) = |i>|j>.
    """
    out_layout = tuple(out_layout)
    in_layout = tuple(in_layout)
    mat = np.asarray(m, dtype=complex)
    dy, dx = _side(out_layout), _side(in_layout)
    if mat.shape != (dy, dx):
        raise LayoutMismatch(f"matrix shape {mat.shape} does not match ({dy}, {dx})")
    return Vec(out_layout + in_layout, mat.reshape(dy * dx))


def eig_hermitian(op: LabeledOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns ascending eigenvalues and a unitary matrix of column
    eigenvectors; exact inputs are converted to floats first.
    """
    work = op.to_float() if op.exact else op
    if not work.is_hermitian(HERMITIAN_ATOL):
        raise NotHermitian("eig_hermitian requires a Hermitian operator")
    w, v = np.linalg.eigh(work.data)
    return w, v


def _exact_psd(mat: np.ndarray) -> bool:
    """Exact PSD test for real-rational symmetric data via elimination.

    A zero pivot forces its whole row to vanish, otherwise the matrix is
    indefinite.
    """
    n = mat.shape[0]
    a = [[Fraction(mat[i, j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        p = a[i][i]
        if p < 0:
            return False
        if p == 0:
            if any(a[i][j] != 0 for j in range(i, n)):
                return False
            continue
        for r in range(i + 1, n):
            if a[r][i] == 0:
                continue
            f = a[r][i] / p
            for c in range(i, n):
                a[r][c] -= f * a[i][c]
    return True


# ---------------------------------------------------------------------------
# serialization (shared wire format for reports and matrix dumps)
# ---------------------------------------------------------------------------


def _scalar_jsonable(x, exact: bool):
    if exact:
        f = Fraction(x)
        return f"{f.numerator}/{f.denominator}"
    z = complex(x)
    return [z.real, z.imag]


def operator_jsonable(op: LabeledOperator) -> dict:
    """Nested-list form: float entries as [re, im], exact entries as "p/q"."""
    return {
        "layout": [s.name for s in op.layout],
        "exact": op.exact,
        "data": [
            [_scalar_jsonable(op.data[i, j], op.exact) for j in range(op.side)]
            for i in range(op.side)
        ],
    }


def vec_jsonable(v: Vec) -> dict:
    return {
        "layout": [s.name for s in v.layout],
        "exact": v.exact,
        "data": [_scalar_jsonable(x, v.exact) for x in v.data],
    }
