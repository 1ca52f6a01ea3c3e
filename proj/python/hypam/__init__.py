"""Python access to the hypam C++ library."""

from ._hypam import (
    CovarianceSpec,
    Error,
    HPoint,
    cluster_constants,
    comparison_fn,
    distance,
    exact_h3,
    f_eval,
    first_passage_cdf,
    first_passage_density,
    fk_constant,
    fk_peak,
    fk_quenched,
    geodesic_point,
    long_route_tail,
    optimize,
    radial_final,
    reduce_word,
    sample_field,
    set_threads,
    simulate_bm,
)

__all__ = [
    "CovarianceSpec",
    "Error",
    "HPoint",
    "cluster_constants",
    "comparison_fn",
    "distance",
    "exact_h3",
    "f_eval",
    "first_passage_cdf",
    "first_passage_density",
    "fk_constant",
    "fk_peak",
    "fk_quenched",
    "geodesic_point",
    "long_route_tail",
    "optimize",
    "radial_final",
    "reduce_word",
    "sample_field",
    "set_threads",
    "simulate_bm",
]
