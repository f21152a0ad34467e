"""Two-level orthogonal Arnoldi iteration in compact form.

The iteration maintains ``V_j = (I_2 (x) Q) U`` where ``Q`` spans the
second-order Krylov subspace built so far and the stacked ``U = [U1; U2]``
has orthonormal columns; the full 2n-column basis is never formed.  Each
step orthogonalizes at two levels: the new n-vector against ``Q`` (growing
``Q`` by one column unless the remainder deflates) and the stacked
coordinate vector against ``U``.

A hard breakdown of the second level means an invariant subspace has been
found; it is a success state, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .companion import ProblemPair, StartPair, embed_start
from .dense import EPS, orthogonalize_against, orthonormality_defect, orthotol
from .errors import BreakdownError, DimensionMismatchError


@dataclass(frozen=True)
class ToarDecomposition:
    """Compact decomposition state after some number of extension steps.

    ``q`` is n-by-d with orthonormal columns, ``u1``/``u2`` are the d-by-j
    top and bottom coordinate blocks, and ``h`` is the upper-Hessenberg
    matrix grown one column per step: shape ``(j, j - 1)`` normally, square
    ``(j, j)`` after a hard breakdown.  ``d_history[i]`` records the basis
    dimension at the time column ``i + 1`` of ``u`` existed, which is what
    makes the leading sub-blocks recoverable.
    """

    q: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    h: np.ndarray
    j: int
    d_history: tuple[int, ...]
    deflation_log: tuple[tuple[int, float], ...] = ()
    breakdown_at: int | None = None

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def d(self) -> int:
        return self.q.shape[1]

    @property
    def steps(self) -> int:
        """Completed extension steps; the audit works on this prefix."""
        return self.j - 1

    @property
    def complete(self) -> bool:
        return self.breakdown_at is not None

    def dim_at(self, cols: int) -> int:
        """Basis dimension d when the decomposition had ``cols`` columns."""
        if not 1 <= cols <= self.j:
            raise ValueError(f"cols must be in [1, {self.j}], got {cols}")
        return self.d_history[cols - 1]

    def basis(self, cols: int | None = None) -> np.ndarray:
        """Leading Q block spanning the subspace after ``cols`` columns."""
        cols = self.j if cols is None else cols
        return self.q[:, : self.dim_at(cols)]

    def coords(self, cols: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Leading (U1, U2) blocks conforming to ``basis(cols)``."""
        cols = self.j if cols is None else cols
        d = self.dim_at(cols)
        return self.u1[:d, :cols], self.u2[:d, :cols]

    def stacked_u(self, cols: int | None = None) -> np.ndarray:
        u1, u2 = self.coords(cols)
        return np.vstack([u1, u2])

    def hessenberg(self, steps: int | None = None) -> np.ndarray:
        """Rectangular Hessenberg block for the leading ``steps`` steps."""
        steps = self.steps if steps is None else steps
        if not 0 <= steps <= self.steps:
            raise ValueError(f"steps must be in [0, {self.steps}], got {steps}")
        return self.h[: steps + 1, :steps]

    def reconstruct(self, cols: int | None = None) -> np.ndarray:
        """Explicit embedded basis ``(I_2 (x) Q) U`` with ``cols`` columns."""
        cols = self.j if cols is None else cols
        q = self.basis(cols)
        u1, u2 = self.coords(cols)
        return np.vstack([q @ u1, q @ u2])


def toar_init(pair: ProblemPair, s: StartPair) -> ToarDecomposition:
    """Initial one-column state from the starting vectors.

    ``Q`` spans ``span{r_0, r_{-1}}`` (dimension 1 or 2 decided by a
    rank-revealing orthogonalization) and the single column of ``U`` holds
    the coordinates of the normalized embedded start.
    """
    if s.n != pair.n:
        raise DimensionMismatchError(f"start vectors of length {s.n} for problem size {pair.n}")
    n = pair.n
    v1, _ = embed_start(s)
    rank_tol = n * EPS * max(
        float(np.linalg.norm(s.r_zero)), float(np.linalg.norm(s.r_minus1))
    )

    columns = []
    for r in (s.r_zero, s.r_minus1):
        nrm = float(np.linalg.norm(r))
        if not columns:
            if nrm > rank_tol:
                columns.append(r / nrm)
            continue
        q = np.column_stack(columns)
        _, residual, beta = orthogonalize_against(r, q)
        if beta > rank_tol:
            columns.append(residual / beta)
    q = np.column_stack(columns)
    d = q.shape[1]

    u = np.concatenate([q.conj().T @ v1[:n], q.conj().T @ v1[n:]])
    u /= np.linalg.norm(u)
    return ToarDecomposition(
        q=q,
        u1=u[:d].reshape(d, 1),
        u2=u[d:].reshape(d, 1),
        h=np.zeros((1, 0), dtype=np.complex128),
        j=1,
        d_history=(d,),
    )


def toar_step(state: ToarDecomposition, pair: ProblemPair) -> ToarDecomposition:
    """Extend the decomposition by one column.

    First level orthogonalizes the new top-half vector against ``Q``
    (deflating when the remainder is negligible); the second level
    orthogonalizes the stacked coordinate vector against ``U``.  A
    second-level remainder below ``n * eps * ||C||_2`` is a hard breakdown:
    the returned state is complete and must not be extended further.
    """
    if state.complete:
        raise BreakdownError(f"cannot extend: hard breakdown at step {state.breakdown_at}")
    n = pair.n
    if state.n != n:
        raise DimensionMismatchError(f"state of size {state.n} vs problem of size {n}")
    if state.j >= 2 * n:
        raise ValueError(f"cannot extend past {2 * n} columns")
    norm_c = pair.companion_norm.value
    j, d = state.j, state.d

    u1_last = state.u1[:, j - 1]
    u2_last = state.u2[:, j - 1]
    q_u1 = state.q @ u1_last
    q_u2 = state.q @ u2_last
    t = pair.a @ q_u1 + pair.b @ q_u2

    # First level: against Q.
    coeffs, residual, beta = orthogonalize_against(t, state.q)
    defltol = n * EPS * (float(np.linalg.norm(t)) + norm_c)
    deflation_log = state.deflation_log
    if beta > defltol:
        q = np.hstack([state.q, (residual / beta).reshape(n, 1)])
        d_new = d + 1
        u1 = np.vstack([state.u1, np.zeros((1, j), dtype=np.complex128)])
        u2 = np.vstack([state.u2, np.zeros((1, j), dtype=np.complex128)])
        top = np.concatenate([coeffs, [beta]])
        bottom = np.concatenate([u1_last, [0.0]])
    else:
        q = state.q
        d_new = d
        u1 = state.u1
        u2 = state.u2
        top = coeffs
        bottom = u1_last
        deflation_log = deflation_log + ((j, beta),)

    # Second level: against the stacked U.
    candidate = np.concatenate([top, bottom])
    stacked = np.vstack([u1, u2])
    h_col, u_res, h_next = orthogonalize_against(candidate, stacked)

    h = np.zeros((j + 1, state.h.shape[1] + 1), dtype=np.complex128)
    h[: state.h.shape[0], : state.h.shape[1]] = state.h
    h[:j, -1] = h_col

    brktol = n * EPS * norm_c
    if h_next <= brktol:
        # A grown first level implies h_next >= beta > brktol, so a hard
        # breakdown can only follow a deflation and q/u are state's own.
        assert q is state.q
        return ToarDecomposition(
            q=q,
            u1=u1,
            u2=u2,
            h=h[:j, :],
            j=j,
            d_history=state.d_history,
            deflation_log=deflation_log,
            breakdown_at=j,
        )

    h[j, -1] = h_next
    u_new = u_res / h_next
    return ToarDecomposition(
        q=q,
        u1=np.hstack([u1, u_new[:d_new].reshape(d_new, 1)]),
        u2=np.hstack([u2, u_new[d_new:].reshape(d_new, 1)]),
        h=h,
        j=j + 1,
        d_history=state.d_history + (d_new,),
        deflation_log=deflation_log,
    )


def toar_run(pair: ProblemPair, s: StartPair, k: int) -> ToarDecomposition:
    """Run ``k`` extension steps (or fewer on hard breakdown)."""
    if not 1 <= k < 2 * pair.n:
        raise ValueError(f"step count must satisfy 1 <= k < {2 * pair.n}, got {k}")
    state = toar_init(pair, s)
    for _ in range(k):
        state = toar_step(state, pair)
        if state.complete:
            break
    return state


def validate_decomposition(dec: ToarDecomposition) -> None:
    """Assert the structural invariants; raises AssertionError on violation.

    Checks the exact Hessenberg zero pattern, the exact structural zeros of
    the coordinate blocks, the orthonormality defects of ``Q`` and the
    stacked ``U`` against ``orthotol``, and ``d_j <= j + 1``.
    """
    n, d, j = dec.n, dec.d, dec.j
    assert dec.u1.shape == (d, j) and dec.u2.shape == (d, j)
    assert len(dec.d_history) == j
    assert dec.d_history[-1] == d

    defect_q = orthonormality_defect(dec.q)
    assert defect_q <= orthotol(n, d), f"Q defect {defect_q:.3e}"
    stacked = np.vstack([dec.u1, dec.u2])
    defect_u = orthonormality_defect(stacked)
    assert defect_u <= orthotol(2 * d, j), f"U defect {defect_u:.3e}"

    # Hessenberg zeros below the first subdiagonal are never written.
    rows, cols = dec.h.shape
    for c in range(cols):
        assert np.all(dec.h[c + 2 :, c] == 0.0), f"Hessenberg fill-in in column {c}"

    # Structural zeros: column c only reaches the first d_history[c] rows,
    # and a column that grew the basis has a zero bottom entry in the new row.
    for c in range(j):
        dc = dec.d_history[c]
        assert np.all(dec.u1[dc:, c] == 0.0), f"U1 structural fill-in in column {c}"
        assert np.all(dec.u2[dc:, c] == 0.0), f"U2 structural fill-in in column {c}"
        if c > 0 and dc == dec.d_history[c - 1] + 1:
            assert dec.u2[dc - 1, c] == 0.0, f"U2 beta-row entry nonzero in column {c}"

    # Second-order subspace dimension can exceed the column count by one.
    for c in range(j):
        assert dec.d_history[c] <= c + 2, f"d_{c} = {dec.d_history[c]} > {c + 2}"
