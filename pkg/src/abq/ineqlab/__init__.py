"""Numerical laboratory for the anisotropic functional inequalities: the
y-directional Holder/Sobolev product bound, the borderline log-Sobolev
embedding, and the logarithmic Gronwall lemma."""

from .embedding import (
    DEFAULT_R_GRID,
    EmbeddingSample,
    InvalidExponentsError,
    embedding_sweep,
    log_embedding_ratio,
    n_p_functional,
)
from .functions import (
    Gaussian,
    GaussianMixture,
    RandomBandlimitedBump,
    TestFunction,
    TrigBump,
    box_quadrature,
    lq_norm,
    random_test_function,
)
from .gronwall import (
    GronwallCase,
    GronwallReport,
    GronwallSample,
    Proportional,
    Saturating,
    acceptance_grid,
    gronwall_verify,
    q_envelope,
)
from .holder import (
    DegenerateFactorError,
    HolderSweepResult,
    holder_ratio,
    holder_ratio_q2,
    holder_sweep,
)

__all__ = [
    "DEFAULT_R_GRID",
    "DegenerateFactorError",
    "EmbeddingSample",
    "Gaussian",
    "GaussianMixture",
    "GronwallCase",
    "GronwallReport",
    "GronwallSample",
    "HolderSweepResult",
    "InvalidExponentsError",
    "Proportional",
    "RandomBandlimitedBump",
    "Saturating",
    "TestFunction",
    "TrigBump",
    "acceptance_grid",
    "box_quadrature",
    "embedding_sweep",
    "gronwall_verify",
    "holder_ratio",
    "holder_ratio_q2",
    "holder_sweep",
    "log_embedding_ratio",
    "lq_norm",
    "n_p_functional",
    "q_envelope",
    "random_test_function",
]
