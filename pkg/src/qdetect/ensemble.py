"""State ensembles, measurements and detection probabilities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DimensionMismatch, InvalidPovm, NotPsdError, PriorsInvalid, SpanDeficient

TRACE_TOL = 1e-10
PRIOR_TOL = 1e-10
FACTOR_TOL = 1e-10
POVM_TOL = 1e-9


def density_operator(matrix, tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, PSD and unit trace."""
    rho = linalg.hermitian(matrix)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise NotPsdError(f"density operator has trace {tr!r}, expected 1")
    if not linalg.is_psd(rho, 1e-10):
        raise NotPsdError("density operator is not PSD", min_eigenvalue=linalg.min_eigenvalue(rho))
    return rho


def pure_state(vector) -> np.ndarray:
    """Projector onto a (normalized) state vector."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


@dataclass(frozen=True, eq=False)
class Ensemble:
    """States ``rho_i`` with priors ``p_i`` and factors ``phi_i`` (``rho_i = phi_i phi_i^H``).

    Build instances with :func:`build_ensemble`, which validates everything.
    """

    states: tuple
    priors: np.ndarray
    factors: tuple
    weighted_factors: tuple

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def __len__(self) -> int:
        return len(self.states)

    @property
    def psi(self) -> np.ndarray:
        """Block-column concatenation of the weighted factors."""
        return np.hstack(self.weighted_factors)

    @property
    def weighted_states(self) -> list:
        return [p * rho for p, rho in zip(self.priors, self.states)]


def build_ensemble(
    states: Sequence,
    priors: Sequence[float],
    factors: Sequence | None = None,
    require_span: bool = True,
) -> Ensemble:
    """Validate states and priors and compute factors.

    ``factors`` may be supplied (e.g. symmetric factors ``U_i phi``); they are
    checked against the states. Otherwise each state is factored through its
    eigendecomposition.
    """
    if len(states) == 0:
        raise DimensionMismatch("ensemble needs at least one state")
    if len(states) != len(priors):
        raise DimensionMismatch(f"{len(states)} states but {len(priors)} priors")
    rhos = tuple(density_operator(s) for s in states)
    n = rhos[0].shape[0]
    for i, rho in enumerate(rhos):
        if rho.shape != (n, n):
            raise DimensionMismatch(f"state {i} has shape {rho.shape}, expected {(n, n)}")

    p = np.asarray(priors, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise PriorsInvalid("priors must be positive")
    if abs(p.sum() - 1.0) > PRIOR_TOL:
        raise PriorsInvalid(f"priors must sum to 1 (got {float(p.sum())!r})")

    if factors is None:
        phis = tuple(linalg.factorize(rho) for rho in rhos)
    else:
        if len(factors) != len(rhos):
            raise DimensionMismatch(f"{len(factors)} factors for {len(rhos)} states")
        phis = tuple(linalg.as_matrix(f) for f in factors)
        for i, (phi, rho) in enumerate(zip(phis, rhos)):
            if phi.shape[0] != n:
                raise DimensionMismatch(f"factor {i} has {phi.shape[0]} rows, expected {n}")
            err = np.linalg.norm(phi @ phi.conj().T - rho)
            if err > FACTOR_TOL * max(1.0, np.linalg.norm(rho)):
                raise DimensionMismatch(f"factor {i} does not reproduce its state (residual {err:.3g})")
    psis = tuple(np.sqrt(pi) * phi for pi, phi in zip(p, phis))

    if require_span:
        rank = linalg.numerical_rank(np.hstack(psis))
        if rank < n:
            raise SpanDeficient(
                f"state eigenvectors span only {rank} of {n} dimensions; restrict the "
                "problem to the subspace spanned by the states before building the ensemble",
                deficiency=n - rank,
            )
    return Ensemble(rhos, p, phis, psis)


class Povm:
    """Measurement operators ``Pi_i``, PSD and summing to identity.

    Construction validates both conditions within ``tol`` unless ``check=False``,
    which is meant for loading candidates that are about to be verified.
    """

    def __init__(self, operators: Sequence, tol: float = POVM_TOL, check: bool = True):
        ops = tuple(linalg.hermitian(op, tol=1e-9) for op in operators)
        if not ops:
            raise InvalidPovm("POVM needs at least one operator")
        n = ops[0].shape[0]
        if any(op.shape != (n, n) for op in ops):
            raise DimensionMismatch("POVM operators differ in shape")
        self.operators = ops
        if check:
            for i, op in enumerate(ops):
                if not linalg.is_psd(op, tol):
                    raise InvalidPovm(f"operator {i} is not PSD (min eigenvalue {linalg.min_eigenvalue(op):.3g})")
            res = self.completeness_residual()
            if res > tol:
                raise InvalidPovm(f"operators do not sum to identity (residual {res:.3g})")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def __getitem__(self, i):
        return self.operators[i]

    def completeness_residual(self) -> float:
        return float(np.linalg.norm(sum(self.operators) - np.eye(self.dim)))

    def __repr__(self):
        return f"Povm(n={self.dim}, outcomes={len(self)})"


def _check_compatible(e: Ensemble, m: Povm) -> None:
    if m.dim != e.dim:
        raise DimensionMismatch(f"POVM acts on dimension {m.dim}, ensemble on {e.dim}")
    if len(m) != len(e):
        raise DimensionMismatch(f"POVM has {len(m)} outcomes for {len(e)} states")


def per_state_detection(e: Ensemble, m: Povm) -> np.ndarray:
    """Conditional success probabilities ``tr(rho_j Pi_j)`` (priors excluded)."""
    _check_compatible(e, m)
    return np.array([np.einsum("ij,ji->", rho, pi).real for rho, pi in zip(e.states, m.operators)])


def correct_detection_probability(e: Ensemble, m: Povm) -> float:
    """``P_d = sum_i p_i tr(rho_i Pi_i)``."""
    return float(np.dot(e.priors, per_state_detection(e, m)))
