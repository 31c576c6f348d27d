"""Least-squares measurement, optimality certificates and symmetric SDPs for
minimum-error discrimination of mixed quantum states."""

from .ensemble import (
    Ensemble,
    Povm,
    build_ensemble,
    correct_detection_probability,
    density_operator,
    per_state_detection,
    pure_state,
)
from .lsm import (
    LsmResult,
    OptimalityReport,
    certificate_from_condition,
    check_square_root_condition,
    least_squares_measurement,
)
from .sdp import (
    Certificate,
    Solution,
    SolverOptions,
    VerificationReport,
    make_certificate,
    recover_povm,
    solve_cgu,
    solve_gu,
    solve_optimal,
    verify_optimality,
)
from .symmetry import (
    CguSpec,
    GuSpec,
    PhaseCommutationReport,
    UnitaryGroup,
    build_group,
    cgu_gu_lsm_single_generator,
    cgu_lsm_generators,
    check_phase_commutation,
    close_group,
    cyclic_shift_group,
    diagonal_phase_group,
    generate_cgu,
    generate_gu,
    gu_lsm_generator,
    symmetrize_povm,
)

__version__ = "0.1.0"
