"""Least-squares (square-root) measurement and its optimality certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .ensemble import Ensemble, Povm
from .errors import ConditionNotMet

COND_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LsmResult:
    transform: np.ndarray  # T = W^{-1/2}
    gram: np.ndarray  # W = Psi Psi^H
    factors: tuple  # mu_i = T psi_i
    povm: Povm


@dataclass(frozen=True, eq=False)
class OptimalityReport:
    condition_holds: bool
    alpha: float
    per_state_matrices: tuple  # psi_i^H T psi_i
    max_deviation: float


def least_squares_measurement(e: Ensemble) -> LsmResult:
    """Square-root measurement ``mu_i = (Psi Psi^H)^{-1/2} psi_i`` for an ensemble.

    Raises :class:`~qdetect.errors.SingularError` if the weighted factors do not
    span the space (the Gram operator is then not invertible).
    """
    psi = e.psi
    gram = linalg.sym(psi @ psi.conj().T)
    t = linalg.matrix_inv_sqrt(gram)
    mus = tuple(t @ w for w in e.weighted_factors)
    povm = Povm([mu @ mu.conj().T for mu in mus])
    return LsmResult(t, gram, mus, povm)


def check_square_root_condition(e: Ensemble, lsm: LsmResult, cond_tol: float = COND_TOL) -> OptimalityReport:
    """Test whether every ``psi_i^H T psi_i`` equals one common ``alpha I``.

    Each product is compared against ``alpha`` times an identity of its own
    size, so states of different rank are allowed. ``alpha`` is the mean
    diagonal of the first product. The condition holds iff the largest
    Frobenius deviation is at most ``cond_tol * alpha``.
    """
    products = tuple(linalg.sym(w.conj().T @ lsm.transform @ w) for w in e.weighted_factors)
    alpha = float(np.mean(np.diag(products[0]).real))
    deviation = max(float(np.linalg.norm(p - alpha * np.eye(p.shape[0]))) for p in products)
    holds = alpha > 0 and deviation <= cond_tol * alpha
    return OptimalityReport(bool(holds), alpha, products, deviation)


def certificate_from_condition(e: Ensemble, lsm: LsmResult, report: OptimalityReport) -> np.ndarray:
    """Dual certificate ``X = alpha W^{1/2}`` for an ensemble meeting the condition.

    ``X >= p_i rho_i`` and ``(X - p_i rho_i) mu_i = 0`` hold for every state.
    """
    if not report.condition_holds:
        raise ConditionNotMet(
            f"psi_i^H T psi_i is not a common multiple of identity (max deviation {report.max_deviation:.3g})"
        )
    return report.alpha * linalg.matrix_sqrt(lsm.gram)
