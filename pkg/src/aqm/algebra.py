"""Finite-dimensional algebra of dynamical variables.

The abstract C*-algebra is modeled as the full matrix algebra M_n(C).
A measurement device type is a Context: a complete family of mutually
orthogonal Hermitian projectors (a maximal abelian subalgebra when all
projectors are rank one).  A Character picks one branch of a context and
evaluates every observable diagonal in that context to the corresponding
eigenvalue.  An ElementaryState carries one character per registered
context and is the hidden per-system state determining individual
outcomes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from aqm.errors import (
    DimensionMismatchError,
    IncompatibleObservableError,
    IndeterminateValueError,
    NotHermitianError,
)

HERM_TOL = 1e-10
COMMUTE_TOL = 1e-10
PROJECTOR_TOL = 1e-10

_context_counter = itertools.count()

MatrixLike = "np.ndarray | DynamicalVariable"


def as_matrix(a) -> np.ndarray:
    """Coerce a DynamicalVariable/Observable or array-like to a complex ndarray."""
    if isinstance(a, DynamicalVariable):
        return a.entries
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    return m


def _check_same_dim(*mats: np.ndarray) -> int:
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def is_hermitian(a, tol: float = HERM_TOL) -> bool:
    m = as_matrix(a)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


@dataclass(frozen=True)
class DynamicalVariable:
    """Element of the matrix algebra; not necessarily Hermitian."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other) -> "DynamicalVariable":
        return DynamicalVariable(self.entries + as_matrix(other))

    def __sub__(self, other) -> "DynamicalVariable":
        return DynamicalVariable(self.entries - as_matrix(other))

    def __mul__(self, scalar: complex) -> "DynamicalVariable":
        return DynamicalVariable(self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other) -> "DynamicalVariable":
        return DynamicalVariable(self.entries @ as_matrix(other))

    def adjoint(self) -> "DynamicalVariable":
        return DynamicalVariable(self.entries.conj().T)


@dataclass(frozen=True)
class Observable(DynamicalVariable):
    """Hermitian dynamical variable."""

    herm_tol: float = HERM_TOL

    def __post_init__(self):
        super().__post_init__()
        if not is_hermitian(self.entries, self.herm_tol):
            raise NotHermitianError("observable must be Hermitian within tolerance")


@dataclass(frozen=True)
class Context:
    """Complete family of orthogonal projectors; one measurement device type.

    Maximal (a MASA) when every projector has rank one.
    """

    projectors: tuple
    id: str = field(default="")
    tol: float = PROJECTOR_TOL

    def __post_init__(self):
        projs = []
        for p in self.projectors:
            m = np.array(as_matrix(p), dtype=complex)
            m.setflags(write=False)
            projs.append(m)
        if not projs:
            raise ValueError("context needs at least one projector")
        dim = _check_same_dim(*projs)
        tol = self.tol
        for i, p in enumerate(projs):
            if np.max(np.abs(p - p.conj().T)) > tol:
                raise NotHermitianError(f"projector {i} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > tol:
                raise ValueError(f"projector {i} is not idempotent")
        for i in range(len(projs)):
            for j in range(i + 1, len(projs)):
                if np.max(np.abs(projs[i] @ projs[j])) > tol:
                    raise ValueError(f"projectors {i} and {j} are not orthogonal")
        total = sum(projs)
        if np.max(np.abs(total - np.eye(dim))) > tol:
            raise ValueError("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", tuple(projs))
        if not self.id:
            object.__setattr__(self, "id", f"ctx{next(_context_counter)}")

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def n_branches(self) -> int:
        return len(self.projectors)

    @property
    def is_maximal(self) -> bool:
        return all(round(np.trace(p).real) == 1 for p in self.projectors)

    def branch_rank(self, i: int) -> int:
        return round(np.trace(self.projectors[i]).real)


@dataclass(frozen=True)
class Character:
    """Valuation on one context: picks one branch, evaluates by eigenvalue."""

    context: Context
    branch: int

    def __post_init__(self):
        if not 0 <= self.branch < self.context.n_branches:
            raise ValueError(
                f"branch {self.branch} out of range for context with "
                f"{self.context.n_branches} branches"
            )

    @property
    def context_id(self) -> str:
        return self.context.id

    def __call__(self, a) -> float:
        return evaluate(self, a)


@dataclass(frozen=True)
class ContextFamily:
    """Finite registered family of contexts of equal dimension."""

    contexts: dict

    def __post_init__(self):
        ctxs = dict(self.contexts)
        if ctxs:
            _check_same_dim(*(c.projectors[0] for c in ctxs.values()))
        for cid, ctx in ctxs.items():
            if cid != ctx.id:
                raise ValueError(f"key {cid!r} does not match context id {ctx.id!r}")
        object.__setattr__(self, "contexts", ctxs)

    @classmethod
    def of(cls, *contexts: Context) -> "ContextFamily":
        ids = [c.id for c in contexts]
        if len(set(ids)) != len(ids):
            raise ValueError("context ids must be unique")
        return cls({c.id: c for c in contexts})

    def __iter__(self):
        return iter(self.contexts.values())

    def __len__(self):
        return len(self.contexts)

    def __getitem__(self, cid: str) -> Context:
        return self.contexts[cid]


@dataclass
class ElementaryState:
    """Per-context character assignment; may be populated lazily."""

    assignment: dict = field(default_factory=dict)

    def assign(self, chi: Character) -> None:
        self.assignment[chi.context_id] = chi

    def character_for(self, context_id: str):
        return self.assignment.get(context_id)


# ---------------------------------------------------------------------------
# Operations


def commutes(a, b, tol: float = COMMUTE_TOL) -> bool:
    """True iff the commutator vanishes within `tol` (max-abs norm)."""
    ma, mb = as_matrix(a), as_matrix(b)
    _check_same_dim(ma, mb)
    return bool(np.max(np.abs(ma @ mb - mb @ ma)) <= tol)


def spectral_decompose(a, tol: float | None = None):
    """Eigenvalue clusters and their eigenprojectors, as [(value, projector)].

    Eigenvalues within `tol` of one another are merged into a single
    degenerate cluster; default tol is 1e-8 times the spectral norm.
    """
    m = as_matrix(a)
    if not is_hermitian(m):
        raise NotHermitianError("spectral decomposition requires a Hermitian matrix")
    w, v = np.linalg.eigh(m)
    if tol is None:
        tol = 1e-8 * max(np.max(np.abs(w)), 1e-12) if w.size else 1e-12
    out = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            block = v[:, start:i]
            proj = block @ block.conj().T
            proj = 0.5 * (proj + proj.conj().T)
            out.append((float(np.mean(w[start:i])), proj))
            start = i
    return out


def _check_orthonormal(basis: np.ndarray, dim: int) -> np.ndarray:
    b = np.asarray(basis, dtype=complex)
    if b.shape != (dim, dim):
        raise ValueError(f"refinement basis must be {dim}x{dim}, got {b.shape}")
    if np.max(np.abs(b.conj().T @ b - np.eye(dim))) > 1e-10:
        raise ValueError("refinement basis is not orthonormal")
    return b


def _split_eigenspace(proj: np.ndarray, basis: np.ndarray) -> list:
    """Split a rank-r eigenprojector into r rank-1 projectors.

    Gram-Schmidt on the basis columns projected into the eigenspace; the
    standard basis gives a deterministic tie-break for degeneracies.
    """
    rank = round(np.trace(proj).real)
    if rank == 1:
        return [proj]
    chosen = []
    for col in basis.T:
        v = proj @ col
        for u in chosen:
            v = v - u * (u.conj() @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            chosen.append(v / norm)
        if len(chosen) == rank:
            break
    if len(chosen) != rank:
        raise ValueError("refinement basis does not span the degenerate eigenspace")
    return [np.outer(u, u.conj()) for u in chosen]


def masa_from(a, refinement=None, context_id: str = "") -> Context:
    """Maximal abelian context containing the observable.

    Degenerate eigenspaces are split into rank-1 projectors using the
    `refinement` orthonormal basis (default: standard basis), restricted to
    each eigenspace.
    """
    m = as_matrix(a)
    dim = m.shape[0]
    basis = np.eye(dim, dtype=complex) if refinement is None else _check_orthonormal(refinement, dim)
    projs = []
    for _val, proj in spectral_decompose(m):
        projs.extend(_split_eigenspace(proj, basis))
    return Context(projectors=tuple(projs), id=context_id)


def masa_from_pair(a, b, context_id: str = "") -> Context:
    """Maximal abelian context containing two commuting observables.

    Jointly diagonalizes by restricting B to each eigenspace of A; residual
    degeneracies are split on the standard basis.
    """
    ma, mb = as_matrix(a), as_matrix(b)
    _check_same_dim(ma, mb)
    if not commutes(ma, mb, tol=1e-8):
        raise ValueError("observables do not commute; no common context exists")
    cols = []
    for _val, proj in spectral_decompose(ma):
        w, v = np.linalg.eigh(proj)
        block = v[:, w > 0.5]  # orthonormal basis of the eigenspace
        sub = block.conj().T @ mb @ block
        sub = 0.5 * (sub + sub.conj().T)
        _, u = np.linalg.eigh(sub)
        cols.append(block @ u)
    joint = np.hstack(cols)
    diag = (joint.conj().T @ ma @ joint).diagonal().real + 1j * (
        joint.conj().T @ mb @ joint
    ).diagonal().real
    # group joint eigenvalue pairs so shared (a, b) eigenspaces stay merged
    order = np.lexsort((diag.imag, diag.real))
    joint = joint[:, order]
    diag = diag[order]
    scale = max(np.max(np.abs(diag)), 1e-12)
    projs = []
    start = 0
    for i in range(1, len(diag) + 1):
        if i == len(diag) or abs(diag[i] - diag[i - 1]) > 1e-8 * scale:
            block = joint[:, start:i]
            proj = block @ block.conj().T
            projs.extend(_split_eigenspace(0.5 * (proj + proj.conj().T), np.eye(ma.shape[0], dtype=complex)))
            start = i
    return Context(projectors=tuple(projs), id=context_id)


def contains(q: Context, a, tol: float = COMMUTE_TOL) -> bool:
    """True iff the observable commutes with every projector of the context."""
    m = as_matrix(a)
    _check_same_dim(m, q.projectors[0])
    return all(np.max(np.abs(m @ p - p @ m)) <= tol for p in q.projectors)


def evaluate(chi: Character, a, tol: float = 1e-8) -> float:
    """Eigenvalue of the observable on the character's branch.

    Raises IncompatibleObservableError when the observable is not diagonal
    in the character's context (the value would depend on the device type).
    """
    m = as_matrix(a)
    p = chi.context.projectors[chi.branch]
    _check_same_dim(m, p)
    if not contains(chi.context, m, tol=tol):
        raise IncompatibleObservableError(
            f"observable is not measurable with a device of type {chi.context_id!r}"
        )
    lam = (np.trace(p @ m) / np.trace(p)).real
    if np.max(np.abs(m @ p - lam * p)) > tol * max(1.0, abs(lam)):
        raise IncompatibleObservableError(
            "observable is compatible with the context but not constant on the branch"
        )
    return float(lam)


def is_stable(phi: ElementaryState, a, family: ContextFamily, tol: float = 1e-8) -> bool:
    """True iff all of phi's characters agree on the observable.

    Considers every registered context containing the observable; phi must
    hold a character for each of them.
    """
    m = as_matrix(a)
    values = []
    for ctx in family:
        if not contains(ctx, m, tol=tol):
            continue
        chi = phi.character_for(ctx.id)
        if chi is None:
            raise IndeterminateValueError(
                f"elementary state has no character for context {ctx.id!r}"
            )
        values.append(evaluate(chi, m))
    if not values:
        raise IndeterminateValueError("no registered context contains the observable")
    return max(values) - min(values) <= tol
