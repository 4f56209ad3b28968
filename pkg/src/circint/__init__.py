"""circint: circular interference model toolkit.

Condenses arbitrary cellular interferer deployments onto circles of weighted
nodes, computes exact aggregate-power distributions via finite Gamma-sum
mixtures, and evaluates SIR/rate statistics under base-station collaboration,
all validated against Monte Carlo oracles.
"""

__version__ = "0.1.0"

from .gamma_sum import (  # noqa: F401
    CanonicalTermSet,
    ExpPolyMixture,
    GammaTerm,
    IllConditionedTermsError,
    Polynomial,
    amplitude_bits,
    canonicalize,
    cdf_extended,
    condense,
    mc_sample_sum,
    mixture_cdf,
    mixture_pdf,
    partial_fraction_weight,
    pdf_extended,
    residue_polynomial,
    residue_taylor_data,
    sum_pdf,
    sum_pdf_components,
    term_set_from_json,
    term_set_to_json,
)

from .circular import (  # noqa: F401
    CENTRAL_NODE,
    Circle,
    CircularScenario,
    FadingLaw,
    NodeRef,
    PathLossLaw,
    aggregate_terms,
    node_geometry,
    path_loss,
    rx_gamma_term,
    scenario_from_json,
    scenario_to_json,
)

from .mapping import (  # noqa: F401
    Annulus,
    BaseStation,
    Deployment,
    PppTier,
    annulus_for_expected_count,
    deployment_from_text,
    deployment_to_text,
    hex_grid,
    map_deployment,
    mc_interference_original,
    mean_rx_at_origin,
    profile_papr,
    profiles_to_csv,
    recommend_parameters,
    sample_ppp,
)

from .linkstats import (  # noqa: F401
    CollaborationScheme,
    EmpiricalCdf,
    RateDensity,
    SirDensity,
    closest_inner_nodes,
    collaboration_sets,
    distribution_median,
    ks_critical_value,
    ks_distance,
    ks_distance_bounded,
    rate_pdf,
    sir_cdf,
    sir_pdf,
)

from .experiments import (  # noqa: F401
    CollaborationConfig,
    DecompositionConfig,
    KsSweepConfig,
    PaprConfig,
    ResultRow,
    ResultTable,
    collaboration_densities,
    ks_against_samples,
    reference_one_circle_scenario,
    reference_two_circle_scenario,
    run_collaboration,
    run_ks_sweep,
    run_papr,
    run_single_circle_decomposition,
)
