"""Minimum-error measurement as a semidefinite program.

All three problem forms share one primal/dual pair. With a finite group
``{U_1, ..., U_g}`` (just ``{I}`` for the unreduced problem) and cost
matrices ``C_1, ..., C_K``::

    primal:  max  sum_k tr(C_k P_k)   s.t.  P_k >= 0,  sum_k sum_u U_u P_k U_u^H = I
    dual:    min  tr(Y)               s.t.  Z_k = sum_u U_u^H Y U_u - C_k >= 0

* unreduced:  group {I},  K = m,  C_i = p_i rho_i
* GU:         K = 1,      C = rho           (the generator)
* compound:   K = r,      C_k = rho_k / r

In every case the primal objective is the detection probability of the
expanded measurement ``U_i P_k U_i^H``. The dual variable is restricted to
the commutant of the group (matrices with ``U^H Y U = Y``), which is exactly
the range of the constraint map, so the Newton system stays nonsingular.
For such ``Y`` the dual constraints reduce to ``Y >= p_i rho_i`` on the
expanded ensemble, i.e. ``Y`` is directly the certificate of the full problem.

The solver is a feasible-start primal-dual path-following method with the
HKM search direction and Mehrotra predictor-corrector steps, working in
complex Hermitian arithmetic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .ensemble import POVM_TOL, Ensemble, Povm, correct_detection_probability
from .errors import MaxIterations, NumericalBreakdown, RecoveryInfeasible
from .symmetry import CguSpec, GuSpec, as_cgu, expand_operators, generate_cgu

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-9
    comp_tol: float = 1e-7  # max_k ||Z_k P_k||_F at termination
    max_iters: int = 200
    sigma: float = 0.05  # lower bound on the centering factor
    step_fraction: float = 0.95
    predictor_corrector: bool = True
    refine_iters: int = 6  # extra steps after convergence while complementarity keeps halving

    def __post_init__(self):
        if min(self.gap_tol, self.feas_tol, self.comp_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be non-negative")


@dataclass(frozen=True, eq=False)
class Certificate:
    x: np.ndarray
    slacks: tuple  # X - p_i rho_i
    trace: float


@dataclass(frozen=True, eq=False)
class Solution:
    povm: Povm
    certificate: Certificate
    p_correct: float
    duality_gap: float
    iterations: int
    generators: tuple = ()
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VerificationReport:
    slack_min_eigenvalues: tuple
    slacks_psd: bool
    complementary_residuals: tuple
    complementary_ok: bool
    povm_min_eigenvalues: tuple
    povm_completeness_residual: float
    povm_valid: bool
    p_correct: float
    trace_x: float

    @property
    def optimal(self) -> bool:
        return self.slacks_psd and self.complementary_ok and self.povm_valid

    @property
    def gap(self) -> float:
        return self.trace_x - self.p_correct


def make_certificate(e: Ensemble, x) -> Certificate:
    x = linalg.hermitian(x, tol=1e-9)
    slacks = tuple(linalg.sym(x - w) for w in e.weighted_states)
    return Certificate(x, slacks, float(np.trace(x).real))


# -- core interior-point engine ------------------------------------------------


def _invariant_basis(units: np.ndarray) -> np.ndarray:
    """Orthonormal basis of Hermitian matrices fixed by ``Y -> U^H Y U`` for all units."""
    n = units.shape[1]
    full = linalg.hermitian_basis(n)
    if len(units) == 1:
        return full
    avg = np.einsum("uji,bjk,ukl->bil", units.conj(), full, units) / len(units)
    rm = np.einsum("aij,bji->ab", full, avg).real
    w, v = np.linalg.eigh(0.5 * (rm + rm.T))
    basis = np.einsum("ac,aij->cij", v[:, w > 0.5], full)
    return linalg.sym(basis)


def _cholesky_stack(p: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(p)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"{what} lost positive definiteness") from exc


def _max_step(p: np.ndarray, dp: np.ndarray, chol: np.ndarray) -> float:
    """Largest alpha with ``p + alpha dp >= 0`` (inf if unbounded)."""
    linv = np.linalg.inv(chol)
    s = linalg.sym(linv @ dp @ linalg.dagger(linv))
    lam = np.linalg.eigvalsh(s)[:, 0].min()
    # subnormal negatives would overflow the division
    return math.inf if lam > -1e-300 else -1.0 / lam


@dataclass
class _RawResult:
    blocks: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool
    history: list
    basis: np.ndarray
    breakdown: Exception | None = None


def _interior_point(units: np.ndarray, costs: np.ndarray, opts: SolverOptions) -> _RawResult:
    g = len(units)
    k_blocks, n, _ = costs.shape
    basis = _invariant_basis(units)
    b = np.einsum("cii->c", basis).real
    flat_basis = basis.reshape(len(b), -1)
    big_n = k_blocks * n

    def a_op(w):
        return g * np.einsum("cij,kji->c", basis, w).real

    def y_of(coords):
        return np.einsum("c,cij->ij", coords, basis)

    c_max = max(float(np.linalg.eigvalsh(c)[-1]) for c in costs)
    y = (1.0 + max(c_max, 0.0)) / g * b
    x = np.repeat(np.eye(n, dtype=complex)[None] / (k_blocks * g), k_blocks, axis=0)

    history = []
    best = None
    accepted = None  # (comp, x, y) of the best iterate meeting every tolerance
    refine_left = opts.refine_iters
    it = 0
    breakdown = None
    while True:
        ymat = y_of(y)
        z = linalg.sym(g * ymat[None] - costs)
        try:
            lz = _cholesky_stack(z, "dual slack")
            lx = _cholesky_stack(x, "primal iterate")
        except NumericalBreakdown as exc:
            # only reachable after a step; fall back to the best iterate seen
            if accepted is None:
                breakdown = exc
            break
        pobj = float(np.einsum("kij,kji->", costs, x).real)
        dobj = float(b @ y)
        rp = b - a_op(x)
        mu = float(np.einsum("kij,kji->", x, z).real) / big_n
        rel_gap = abs(dobj - pobj) / max(1.0, abs(pobj))
        comp = float(np.linalg.norm(z @ x, axis=(1, 2)).max())
        history.append((pobj, dobj))
        log.debug(
            "iter %3d  primal %.12f  dual %.12f  gap %.2e  comp %.2e  |rp| %.1e",
            it, pobj, dobj, rel_gap, comp, np.linalg.norm(rp),
        )
        if best is None or rel_gap + comp < best[0]:
            best = (rel_gap + comp, x.copy(), y.copy(), it)
        if rel_gap <= opts.gap_tol and comp <= opts.comp_tol and np.linalg.norm(rp) <= opts.feas_tol:
            # refining past the tolerances sharpens the ranges of X and Z,
            # which recovering a measurement from the certificate depends on
            if accepted is not None and comp > 0.5 * accepted[0]:
                if comp < accepted[0]:
                    accepted = (comp, x.copy(), y.copy())
                break
            if accepted is None or comp < accepted[0]:
                accepted = (comp, x.copy(), y.copy())
            if refine_left == 0:
                break
            refine_left -= 1
        if it >= opts.max_iters:
            break
        it += 1

        linv = np.linalg.inv(lz)
        zinv = linalg.sym(linalg.dagger(linv) @ linv)
        # schur[c, d] = g^2 sum_k Re tr(B_c X_k B_d Z_k^{-1})
        t = (x[:, None] @ basis[None] @ zinv[:, None]).sum(axis=0)
        schur = g * g * (flat_basis @ np.swapaxes(t, 1, 2).reshape(len(b), -1).T).real
        schur = 0.5 * (schur + schur.T)

        def direction(nu, corr=None):
            r = nu * zinv - x
            if corr is not None:
                r = r - corr
            rhs = a_op(r) - rp
            try:
                dy = np.linalg.solve(schur, rhs)
            except np.linalg.LinAlgError:
                dy = np.linalg.lstsq(schur, rhs, rcond=None)[0]
            dz = g * y_of(dy)
            dx = linalg.sym(r - x @ dz @ zinv)
            return dy, dz, dx

        if opts.predictor_corrector:
            dy, dz, dx = direction(0.0)
            dz_stack = np.broadcast_to(dz, z.shape)
            ap = min(1.0, _max_step(x, dx, lx))
            ad = min(1.0, _max_step(z, dz_stack, lz))
            mu_aff = float(np.einsum("kij,kji->", x + ap * dx, z + ad * dz_stack).real) / big_n
            sigma = max(opts.sigma, min(1.0, max(0.0, mu_aff / mu)) ** 3)
            dy, dz, dx = direction(sigma * mu, dx @ dz_stack @ zinv)
        else:
            dy, dz, dx = direction(opts.sigma * mu)
        dz_stack = np.broadcast_to(dz, z.shape)
        ap = min(1.0, opts.step_fraction * _max_step(x, dx, lx))
        ad = min(1.0, opts.step_fraction * _max_step(z, dz_stack, lz))
        x = linalg.sym(x + ap * dx)
        y = y + ad * dy

    converged = accepted is not None
    if converged:
        _, x, y = accepted
    else:
        _, x, y, _ = best
    return _RawResult(x, y, it, converged, history, basis, breakdown)


def _solve(units, costs, e: Ensemble, group_for_expansion, opts: SolverOptions) -> Solution:
    units = np.asarray(units, dtype=complex)
    costs = linalg.sym(np.asarray(costs, dtype=complex))
    raw = _interior_point(units, costs, opts)
    blocks = [linalg.sym(p) for p in raw.blocks]
    if group_for_expansion is None:
        ops = blocks
    else:
        ops = expand_operators(group_for_expansion, blocks)
    y = linalg.sym(np.einsum("c,cij->ij", raw.y, raw.basis))
    povm = Povm(ops, tol=max(POVM_TOL, 10 * opts.feas_tol), check=False)
    cert = make_certificate(e, y)
    p_d = correct_detection_probability(e, povm)
    k_blocks, n = len(blocks), e.dim
    diagnostics = {
        "unknowns": k_blocks * n * n,
        "constraint_blocks": k_blocks + 1,
        "full_unknowns": len(e) * n * n,
        "full_constraint_blocks": len(e) + 1,
        "dual_dimension": len(raw.basis),
        "converged": raw.converged,
        "history": raw.history,
    }
    sol = Solution(
        povm=povm,
        certificate=cert,
        p_correct=p_d,
        duality_gap=abs(cert.trace - p_d),
        iterations=raw.iterations,
        generators=tuple(blocks),
        diagnostics=diagnostics,
    )
    if raw.breakdown is not None:
        raise NumericalBreakdown(
            f"{raw.breakdown} at iteration {raw.iterations} (best gap {sol.duality_gap:.3g})"
        ) from raw.breakdown
    if not raw.converged:
        raise MaxIterations(
            f"no convergence in {opts.max_iters} iterations (gap {sol.duality_gap:.3g})", solution=sol
        )
    return sol


def solve_optimal(e: Ensemble, opts: SolverOptions | None = None) -> Solution:
    """Optimal measurement for an arbitrary ensemble (no symmetry used)."""
    opts = opts or SolverOptions()
    n = e.dim
    return _solve(np.eye(n, dtype=complex)[None], e.weighted_states, e, None, opts)


def solve_cgu(spec: CguSpec, opts: SolverOptions | None = None) -> Solution:
    """Optimal measurement for a compound GU set through its ``r n^2``-unknown reduction.

    Only the generators ``P_k`` are optimized; the measurement is
    ``U_i P_k U_i^H`` in i-outer, k-inner order.
    """
    opts = opts or SolverOptions()
    e = generate_cgu(spec)
    costs = [phi @ phi.conj().T / spec.r for phi in spec.generator_factors]
    return _solve(spec.group.stacked, costs, e, spec.group, opts)


def solve_gu(spec: GuSpec, opts: SolverOptions | None = None) -> Solution:
    """Optimal measurement for a GU set through its ``n^2``-unknown reduction."""
    return solve_cgu(as_cgu(spec), opts)


# -- certificates and verification ---------------------------------------------


def recover_povm(e: Ensemble, cert: Certificate, kernel_tol: float = 1e-7, tol: float = 1e-6) -> Povm:
    """Rebuild an optimal measurement from a dual certificate alone.

    Each ``Pi_i`` is confined to the kernel of its slack ``X - p_i rho_i``
    (eigenvalues below ``kernel_tol`` times the largest eigenvalue among the
    slacks and ``X``), ``Pi_i = K_i C_i K_i^H``. The blocks ``C_i`` are the
    minimum-norm least-squares solution of ``sum_i Pi_i = I``, each clipped to
    PSD. Optimal measurements need not be unique; this returns one of them.
    """
    n = e.dim
    spectra = [np.linalg.eigh(s) for s in cert.slacks]
    ref = max([float(w[-1]) for w, _ in spectra] + [float(np.linalg.eigvalsh(cert.x)[-1])])
    thresh = kernel_tol * max(ref, np.finfo(float).tiny)
    kernels = [v[:, w < thresh] for w, v in spectra]

    full = linalg.hermitian_basis(n)
    columns, slices = [], []
    for kern in kernels:
        d = kern.shape[1]
        start = len(columns)
        if d:
            local = linalg.hermitian_basis(d)
            embedded = np.einsum("ij,cjk,lk->cil", kern, local, kern.conj())
            columns.extend(np.einsum("aij,cji->ca", full, embedded).real)
        slices.append((start, len(columns), d))
    if not columns:
        raise RecoveryInfeasible("every slack is positive definite; certificate is not optimal")
    amat = np.array(columns).T
    target = np.einsum("aii->a", full).real
    coef = np.linalg.lstsq(amat, target, rcond=None)[0]

    ops = []
    for kern, (lo, hi, d) in zip(kernels, slices):
        if d == 0:
            ops.append(np.zeros((n, n), dtype=complex))
            continue
        c = np.einsum("c,cij->ij", coef[lo:hi], linalg.hermitian_basis(d))
        w, v = np.linalg.eigh(linalg.sym(c))
        c = (v * np.clip(w, 0.0, None)) @ v.conj().T
        ops.append(linalg.sym(kern @ c @ kern.conj().T))
    residual = float(np.linalg.norm(sum(ops) - np.eye(n)))
    if residual > tol:
        raise RecoveryInfeasible(
            f"kernel projectors cannot be completed to the identity (residual {residual:.3g})", residual=residual
        )
    return Povm(ops, tol=tol)


def verify_optimality(
    e: Ensemble, m: Povm, cert: Certificate | np.ndarray, tol: float = 1e-6, psd_tol: float = 1e-8
) -> VerificationReport:
    """Check dual feasibility, complementary slackness and POVM validity.

    ``X - p_i rho_i`` must be PSD within ``psd_tol`` (relative to
    ``max(1, lambda_max)``), ``||(X - p_i rho_i) Pi_i||_F <= tol``, and the
    operators must be PSD within ``psd_tol`` and sum to identity within
    ``max(tol, 1e-9)``.
    """
    if not isinstance(cert, Certificate):
        cert = make_certificate(e, cert)
    p_d = correct_detection_probability(e, m)
    slack_min, slack_ok = [], True
    for s in cert.slacks:
        w = np.linalg.eigvalsh(s)
        slack_min.append(float(w[0]))
        slack_ok &= bool(w[0] >= -psd_tol * max(1.0, float(w[-1])))
    comp = tuple(float(np.linalg.norm(s @ pi)) for s, pi in zip(cert.slacks, m.operators))
    povm_min, povm_ok = [], True
    for pi in m.operators:
        w = np.linalg.eigvalsh(pi)
        povm_min.append(float(w[0]))
        povm_ok &= bool(w[0] >= -psd_tol * max(1.0, float(w[-1])))
    completeness = m.completeness_residual()
    povm_ok &= completeness <= max(tol, POVM_TOL)
    return VerificationReport(
        slack_min_eigenvalues=tuple(slack_min),
        slacks_psd=slack_ok,
        complementary_residuals=comp,
        complementary_ok=max(comp) <= tol,
        povm_min_eigenvalues=tuple(povm_min),
        povm_completeness_residual=completeness,
        povm_valid=povm_ok,
        p_correct=p_d,
        trace_x=cert.trace,
    )
