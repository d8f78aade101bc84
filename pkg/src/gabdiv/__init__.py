"""gabdiv: generalized alpha-beta divergences on finite alphabets.

Measures are finite lists of density values against quadrature/counting
weights; divergences, entropies, validity checks, and the maximum-entropy
solver all reduce to exact weighted sums over those atoms.
"""

from .divergence import (
    DivergenceValue,
    alpha_convex_mix,
    contamination_weight,
    d_tilde,
    duality_gap,
    gab,
    gab_special,
    pythagorean_gap,
    reduction_identity_gap,
    scaling_identity_gap,
    special_gab_equivalent,
    zooming_identity_gap,
)
from .entropy import (
    ConcavityReport,
    EntropyValue,
    MaxEntProbeReport,
    additivity_gap,
    bernoulli_curve,
    concavity_probe,
    gabe,
    log_norm_entropy,
    max_entropy_probe,
)
from .errors import (
    BadParams,
    DimensionMismatch,
    FactorizationViolated,
    GabdivError,
    Infeasible,
    InvalidMeasure,
    NonFiniteResult,
    NotConverged,
    StepFailed,
    UnsupportedSupport,
)
from .maxent import (
    MaxEntProblem,
    MaxEntSolution,
    SolveOptions,
    c1,
    c2,
    closed_form_log,
    escort_to_primal,
    fixed_point_step,
    solve,
)
from .measures import (
    Hyper,
    Measure,
    Regime,
    classify_regime,
    inner,
    kl,
    norm_pow,
    product_measure,
    total_weight,
    zoom_norm,
    zoom_unnorm,
)
from .psi import (
    CheckOptions,
    GenFn,
    ValidityReport,
    Verdict,
    Witness,
    big_psi,
    big_psi_deriv,
    builtin,
    check_validity,
    combine_linear,
    compose,
    geometric_convexity_check,
    parse_spec,
    scale_psi,
    witness_search,
)

__version__ = "0.1.0"
