"""Finite unitary groups and geometrically uniform (GU / compound GU) state sets.

Conventions
-----------
* Group elements are matrices, not projective classes: ``U`` and ``-U`` are
  different elements.
* The first element of every group is the identity.
* A compound GU ensemble built from ``l`` group elements and ``r`` generators
  lists its states with the group index outer and the generator index inner,
  so state ``(i, k)`` sits at position ``i * r + k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .ensemble import Ensemble, Povm, build_ensemble
from .errors import (
    CountMismatch,
    DimensionMismatch,
    DuplicateElement,
    GeneratorsNotGu,
    NoIdentity,
    NotClosed,
    NotPhaseCommuting,
    NotUnitary,
)

UNITARY_TOL = 1e-10
ELEMENT_MATCH_TOL = 1e-8
PHASE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class UnitaryGroup:
    elements: tuple
    mult_table: np.ndarray  # mult_table[i, j] = k  iff  U_i U_j = U_k
    r_map: np.ndarray  # r_map[j, i] = k  iff  U_j^H U_i = U_k

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def stacked(self) -> np.ndarray:
        return np.stack(self.elements)


def _nearest(products: np.ndarray, elements: np.ndarray):
    """Index of, and distance to, the nearest element for each product."""
    diff = products[..., None, :, :] - elements
    dist = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(-1, -2)))
    idx = np.argmin(dist, axis=-1)
    return idx, np.take_along_axis(dist, idx[..., None], axis=-1)[..., 0]


def build_group(matrices: Sequence, tol: float = ELEMENT_MATCH_TOL) -> UnitaryGroup:
    """Validate a finite group of unitaries and tabulate its multiplication.

    The first matrix must be the identity. Elements are matched by Frobenius
    distance; two inputs closer than ``tol`` are rejected as duplicates.
    """
    if len(matrices) == 0:
        raise DimensionMismatch("a group needs at least one element")
    mats = [linalg.as_matrix(u) for u in matrices]
    n = mats[0].shape[0]
    for i, u in enumerate(mats):
        if u.shape != (n, n):
            raise DimensionMismatch(f"element {i} has shape {u.shape}, expected {(n, n)}")
        res = float(np.linalg.norm(u.conj().T @ u - np.eye(n)))
        if res > UNITARY_TOL * max(1.0, np.sqrt(n)):
            raise NotUnitary(i, res)
    els = np.stack(mats)
    if np.linalg.norm(els[0] - np.eye(n)) > tol:
        raise NoIdentity("the first group element must be the identity")

    m = len(mats)
    if m > 1:
        gap = np.sqrt(np.sum(np.abs(els[:, None] - els[None, :]) ** 2, axis=(-1, -2)))
        gap[np.arange(m), np.arange(m)] = np.inf
        i, j = np.unravel_index(np.argmin(gap), gap.shape)
        if gap[i, j] < tol:
            raise DuplicateElement(f"elements {min(i, j)} and {max(i, j)} coincide")

    products = np.einsum("iab,jbc->ijac", els, els)
    table, dist = _nearest(products, els)
    bad = np.argwhere(dist > tol)
    if bad.size:
        i, j = bad[0]
        raise NotClosed(int(i), int(j), float(dist[i, j]))
    inv_idx, inv_dist = _nearest(np.conj(np.swapaxes(els, -1, -2)), els)
    if np.any(inv_dist > tol):
        k = int(np.argmax(inv_dist))
        raise NotClosed(k, k, float(inv_dist[k]))
    # U_j^H U_i = U_{inv(j)} U_i
    r_map = table[inv_idx, :]
    return UnitaryGroup(tuple(els), table, r_map)


def close_group(generators: Sequence, max_order: int = 4096, tol: float = ELEMENT_MATCH_TOL) -> list:
    """Smallest set containing the identity and closed under products with ``generators``.

    Returns matrices with the identity first, ready for :func:`build_group`.
    """
    gens = [linalg.as_matrix(g) for g in generators]
    n = gens[0].shape[0]
    found = [np.eye(n, dtype=complex)]
    frontier = [found[0]]
    while frontier:
        new = []
        for a in frontier:
            for g in gens:
                p = a @ g
                if all(np.linalg.norm(p - b) > tol for b in found):
                    found.append(p)
                    new.append(p)
                    if len(found) > max_order:
                        raise NotClosed(-1, -1, float("inf"))
        frontier = new
    return found


def cyclic_shift_group(l: int) -> UnitaryGroup:
    """``{I, Z, ..., Z^{l-1}}`` with ``Z`` the cyclic shift ``(Zx)_j = x_{j+1}``."""
    z = np.roll(np.eye(l, dtype=complex), 1, axis=1)
    return build_group([np.linalg.matrix_power(z, i) for i in range(l)])


def diagonal_phase_group(l: int) -> UnitaryGroup:
    """``{I, B, ..., B^{l-1}}`` with ``B = diag(exp(2 pi i s / l))``."""
    b = np.diag(np.exp(2j * np.pi * np.arange(l) / l))
    return build_group([np.linalg.matrix_power(b, k) for k in range(l)])


@dataclass(frozen=True, eq=False)
class GuSpec:
    group: UnitaryGroup
    generator_factor: np.ndarray

    def __post_init__(self):
        phi = linalg.as_matrix(self.generator_factor)
        if phi.shape[0] != self.group.dim:
            raise DimensionMismatch(f"generator has {phi.shape[0]} rows, group acts on {self.group.dim}")
        object.__setattr__(self, "generator_factor", phi)


@dataclass(frozen=True, eq=False)
class CguSpec:
    group: UnitaryGroup
    generator_factors: tuple

    def __post_init__(self):
        if len(self.generator_factors) == 0:
            raise DimensionMismatch("compound GU set needs at least one generator")
        phis = tuple(linalg.as_matrix(f) for f in self.generator_factors)
        for k, phi in enumerate(phis):
            if phi.shape[0] != self.group.dim:
                raise DimensionMismatch(f"generator {k} has {phi.shape[0]} rows, group acts on {self.group.dim}")
        object.__setattr__(self, "generator_factors", phis)

    @property
    def r(self) -> int:
        return len(self.generator_factors)


@dataclass(frozen=True, eq=False)
class PhaseCommutationReport:
    commutes: bool
    phases: np.ndarray | None  # theta[p, t] in radians, (-pi, pi]
    max_residual: float


def as_cgu(spec: GuSpec) -> CguSpec:
    return CguSpec(spec.group, (spec.generator_factor,))


def generate_cgu(spec: CguSpec) -> Ensemble:
    """Equiprobable ensemble ``rho_ik = U_i rho_k U_i^H`` with factors ``U_i phi_k``."""
    factors = [u @ phi for u in spec.group.elements for phi in spec.generator_factors]
    states = [f @ f.conj().T for f in factors]
    priors = np.full(len(states), 1.0 / len(states))
    return build_ensemble(states, priors, factors=factors)


def generate_gu(spec: GuSpec) -> Ensemble:
    """Equiprobable ensemble ``rho_i = U_i rho U_i^H`` with factors ``U_i phi``."""
    return generate_cgu(as_cgu(spec))


def _gram(group: UnitaryGroup, phis) -> np.ndarray:
    g = sum(phi @ phi.conj().T for phi in phis)
    return linalg.sym(sum(u @ g @ u.conj().T for u in group.elements))


def cgu_lsm_generators(spec: CguSpec) -> list:
    """LSM generators ``mu_k = (Phi Phi^H)^{-1/2} phi_k``; the full LSM is ``{U_i mu_k}``."""
    m = linalg.matrix_inv_sqrt(_gram(spec.group, spec.generator_factors))
    return [m @ phi for phi in spec.generator_factors]


def gu_lsm_generator(spec: GuSpec) -> np.ndarray:
    """LSM generator ``mu = (Phi Phi^H)^{-1/2} phi``; the full LSM is ``{U_i mu}``."""
    return cgu_lsm_generators(as_cgu(spec))[0]


def expand_factors(group: UnitaryGroup, generators: Sequence) -> list:
    """``[U_i g_k]`` in i-outer, k-inner order."""
    return [u @ g for u in group.elements for g in generators]


def expand_operators(group: UnitaryGroup, generators: Sequence) -> list:
    """``[U_i P_k U_i^H]`` in i-outer, k-inner order."""
    return [linalg.sym(u @ p @ u.conj().T) for u in group.elements for p in generators]


def check_phase_commutation(g: UnitaryGroup, q: UnitaryGroup, tol: float = PHASE_TOL) -> PhaseCommutationReport:
    """Decide whether ``U_p V_t = exp(i theta(p,t)) V_t U_p`` for all pairs.

    The phase is read off the largest-magnitude entry of ``V_t U_p``.
    """
    if g.dim != q.dim:
        raise DimensionMismatch(f"groups act on dimensions {g.dim} and {q.dim}")
    theta = np.zeros((g.order, q.order))
    worst = 0.0
    commutes = True
    for p, u in enumerate(g.elements):
        for t, v in enumerate(q.elements):
            uv = u @ v
            vu = v @ u
            idx = np.unravel_index(np.argmax(np.abs(vu)), vu.shape)
            phase = uv[idx] / vu[idx]
            res = float(np.linalg.norm(uv - phase * vu)) + abs(abs(phase) - 1.0)
            worst = max(worst, res)
            if res > tol:
                commutes = False
            theta[p, t] = np.angle(phase)
    # np.angle maps -1 to +pi already; fold -pi onto +pi for a canonical range
    theta[np.isclose(theta, -np.pi)] = np.pi
    return PhaseCommutationReport(commutes, theta if commutes else None, worst)


def cgu_gu_lsm_single_generator(spec: CguSpec, q: UnitaryGroup, tol: float = PHASE_TOL) -> np.ndarray:
    """Single LSM generator for a compound GU set whose generators are ``V_k phi``.

    Requires ``spec.generator_factors[k] == q.elements[k] @ phi`` with
    ``phi = spec.generator_factors[0]``, and ``spec.group`` commuting with ``q``
    up to phases. Returns ``mu_bar = (Phi Phi^H)^{-1/2} phi``; the LSM factors
    are ``U_i V_k mu_bar``.
    """
    if spec.r != q.order:
        raise GeneratorsNotGu(f"{spec.r} generators but the generator group has order {q.order}")
    phi = spec.generator_factors[0]
    for k, (v, phik) in enumerate(zip(q.elements, spec.generator_factors)):
        if phik.shape != phi.shape or np.linalg.norm(v @ phi - phik) > tol * max(1.0, np.linalg.norm(phi)):
            raise GeneratorsNotGu(f"generator {k} is not V_{k} applied to generator 0")
    report = check_phase_commutation(spec.group, q, tol)
    if not report.commutes:
        raise NotPhaseCommuting(
            f"group elements do not commute with the generator group up to a phase "
            f"(residual {report.max_residual:.3g})"
        )
    m = linalg.matrix_inv_sqrt(_gram(spec.group, spec.generator_factors))
    return m @ phi


def symmetrize_povm(g: UnitaryGroup, m: Povm, r: int = 1) -> Povm:
    """Group-average a measurement on a GU (``r == 1``) or compound GU ensemble.

    Operators are assumed in the i-outer, k-inner order. The generator
    ``Pi_k = (1/l) sum_s U_s^H Pi_{sk} U_s`` is formed and the output is
    ``U_i Pi_k U_i^H``, which equals ``(1/l) sum_j U_j Pi_{r(j,i),k} U_j^H``.
    """
    l = g.order
    if len(m) != l * r:
        raise CountMismatch(f"POVM has {len(m)} operators, expected {l} * {r} = {l * r}")
    gens = []
    for k in range(r):
        acc = sum(u.conj().T @ m[s * r + k] @ u for s, u in enumerate(g.elements))
        gens.append(linalg.sym(acc / l))
    return Povm(expand_operators(g, gens))
