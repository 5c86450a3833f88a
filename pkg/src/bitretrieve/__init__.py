"""One-bit phase retrieval from random subspace proximity queries.

Sample Haar-uniform half-dimensional projections, record for each one
whether a unit signal is closer to its range than to the complement,
and recover the signal's rank-one projection from the resulting bit
string by averaging the proximally selected projections and taking the
principal eigenvector. The theory module provides the closed-form
constants and sample-size bounds governing this pipeline, and the
experiments module reproduces them by seeded Monte Carlo runs.
"""

from .core import (
    BitString,
    FieldKind,
    HermitianMatrix,
    InvalidInput,
    OrthogonalProjection,
    RankOneProjection,
    UnitVector,
    operator_norm,
    rank_one_distance,
    rank_one_from_vector,
)
from .measurement import (
    binary_question,
    corrupt_bits,
    hamming_distance,
    measure,
    measurement_hamming,
    separates,
    soft_hamming,
    t_separates,
)
from .recovery import (
    RecoveryResult,
    empirical_average,
    expected_average,
    flipped_projection,
    pep_recover,
    principal_eigenpair,
)
from .sampler import (
    MeasurementEnsemble,
    SeedStream,
    sample_ensemble,
    sample_haar_projection,
    sample_unit_vector,
)
from .theory import (
    EigenDensity,
    TheoryConstants,
    dsep_probability,
    eigen_density,
    eigen_density_eval,
    hamming_conc_m,
    log_beta,
    mu_pair,
    net_log_cardinality,
    noisy_error_bound,
    pointwise_m,
    spectral_gap,
    theory_constants,
    uniform_m,
)

__version__ = "0.1.0"
