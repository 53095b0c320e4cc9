"""Poisson block models with degree correction, orientation, and degree generation."""

from .graph import (
    BlockStats,
    Degrees,
    Graph,
    ParseError,
    Partition,
    SelfLoopError,
    block_stats,
    degrees,
    from_edge_list,
    giant_component,
    read_edge_list,
    read_partition,
    undirected_projection,
    write_edge_list,
    write_partition,
)
from .likelihoods import (
    MODEL_NAMES,
    ModelSpec,
    loglik,
    loglik_dc,
    loglik_ddc,
    loglik_odc,
    loglik_odc_decomposed,
    loglik_sbm,
    mle_parameters,
)
from .degree_priors import (
    BlockPrior,
    DegreePrior,
    GammaHyper,
    dg_objective,
    fit_alpha,
    fit_alpha_bounded,
    fit_beta,
    fit_gamma_hyper,
    gamma_marginal_loglik,
    log_prior,
    sample_power_law,
)
from .objective import ObjectiveState, delta_loglik, objective_value
from .inference import (
    InferenceConfig,
    InferenceResult,
    heat_bath_mcmc,
    kl_heuristic,
    naive_heuristic,
    run_inference,
)
from .metrics import best_match_accuracy, confusion_table, nmi
from .synth import SynthSpec, generate, omega_interpolate, postprocess
from .corpus import IngestConfig, build_network, network_summary
from .experiments import build_model, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
