"""Generalized urn processes: simulation, mean-limit analysis and Monte Carlo checks."""
from .urn import (
    OutOfRangeError,
    RateLaw,
    Stop,
    Trajectory,
    TransitionLaw,
    UnsupportedLawError,
    alpha_and_l1,
    interpolate,
    make_uniforms,
    normalize,
    read_ndjson,
    replicate_seed_sequence,
    simulate,
    step,
    write_ndjson,
)
from .models import (
    FertilityLaw,
    FertilitySpec,
    IntLaw,
    MutationMatrix,
    ReplicatorLaw,
    ReplicatorSpec,
    birth_death_law,
    fertility_law,
    genotypes,
    mutation_fertility_law,
    polya_law,
    pure_death_law,
    replicator_law,
)
from .meanfield import (
    EquilibriumReport,
    VectorField,
    additive_fertility_field,
    allele_field,
    classify,
    fertility_field,
    find_equilibria,
    growth_rate,
    hardy_weinberg_defect,
    integrate,
    mean_vector_field,
    nondegeneracy,
    replicator_field,
    time_average_flow,
)
from .diagnostics import noise_decomposition, validate_assumptions
from .analysis import (
    EnsembleConfig,
    EnsembleReport,
    exclusion_check,
    growth_rate_estimate,
    hw_decay_check,
    limit_classification,
    mass_monotonicity_study,
    pseudotrajectory_defect,
    run_ensemble,
    time_average_process,
)

__version__ = "0.1.0"
