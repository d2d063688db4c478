"""Expected real roots of Gaussian exponential-sum systems.

Spaces of exponential sums with positive squared coefficients form a
semigroup under the reproducing-kernel product; the induced pullback
metric turns expected root counting into convex geometry (mixed volumes
of metric ellipsoids) plus quadrature, cross-checked by direct Monte
Carlo root counting and exact lattice-polytope combinatorics.
"""

from .convexity import (
    EllipsoidBody,
    LatticePolytope,
    ball_volume,
    ellipsoid_volume,
    expected_abs_det_gaussian,
    mixed_volume_ellipsoids,
    mixed_volume_polytopes,
    mixed_volume_polytopes_exact,
    projective_volume,
    tech_identity_residual,
)
from .errors import InternalError, UnsupportedError, ValidationError
from .expectation import (
    DomainBox,
    DomainUnion,
    ExpectedRoots,
    QuadratureConfig,
    ScalingCheck,
    SignedDomain,
    SubadditivityCheck,
    density,
    density_batch,
    expected_roots,
    expected_roots_signed,
    expected_roots_signed_report,
    generic_count,
    scaling_check,
    square_root_ratio,
    subadditivity_check,
    veronese_volume,
)
from .geometry import (
    EvaluationPoint,
    MetricMatrix,
    MomentumVector,
    kernel,
    log_kernel_norm,
    metric,
    metric_batch,
    momentum,
    momentum_batch,
    term_weights,
    weights_batch,
)
from .hull import affine_rank, hull_vertices, minkowski_sum, polytope_volume
from .montecarlo import (
    FLAG_NEWTON_NONCONVERGED,
    FLAG_TANGENCY_REFINED,
    MCEstimate,
    RootCountSample,
    SampledSystem,
    count_roots_1d,
    count_roots_2d,
    estimate_abs_det,
    estimate_expected_roots,
    estimate_signed_roots,
    evaluate_system,
    sample_system,
)
from .reporting import ReportEntry, RunReport, canonical_json
from .spaces import (
    ExpSumSpace,
    SupportShape,
    aronszajn_product,
    kostlan_space,
    make_space,
    power,
    space_from_dict,
    space_to_dict,
    support_hull,
)
from .verification import CheckResult, run_suite

__version__ = "0.1.0"
