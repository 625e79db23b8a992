"""Squeezed thermal states of a parametrically pumped lossy cavity.

The analytic engine integrates the reduced (u, phi, n_th) equations for a
squeezed thermal state; the oracle evolves the full master equation in a
truncated Fock space so the two can be compared.
"""

from .analytic import (
    CoherenceProfile,
    SteadyState,
    Trajectory,
    anti_squeeze_at_threshold,
    coherence_profile,
    g2_peak_time,
    integrate,
    integrate_reduced_nth0,
    quad_closed_form_constant,
    quad_closed_form_general,
    steady_state,
    sts_derivatives,
    thermal_relaxation,
    uniform_grid,
)
from .errors import (
    DimensionLimitError,
    DomainError,
    EnvelopeError,
    IntegrationError,
    NoThresholdError,
    SingularityError,
    ThermSqueezeError,
    TruncationError,
)
from .oracle import (
    auto_dim,
    construct_sts_density,
    evolve,
    lindblad_rhs,
    observables,
    thermal_density,
    trace_distance,
)
from .pump import PumpEnvelope, eval_g, load_sampled_csv, make_envelope
from .sts import (
    ModelParams,
    ObservableRecord,
    StsState,
    g2_of_state,
    nth0_from_nth,
    nth_from_nth0,
    quad_variances,
    total_population,
)

__version__ = "0.1.0"
