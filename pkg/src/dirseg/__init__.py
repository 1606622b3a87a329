"""MAP state-path segmentation for sparse hidden Markov models whose
transition and emission rows carry Dirichlet priors.

The marginal path distribution is no longer Markov (it behaves like a
reinforcing urn), so the MAP path is found with iterative algorithms driven
from many posterior-sampled initial paths.  Empirical priors are fitted to a
labeled corpus by moment matching; frequentist and training-data-free
baselines and the evaluation protocol are included.
"""

from .engine import (
    Posteriors,
    ScoreMatrices,
    baum_welch,
    forward_backward,
    forward_backward_scores,
    sample_posterior_path,
    viterbi,
)
from .evaluation import ComparisonTable, PathStats, geo_score, path_stats, relative_sums
from .kernels import BACKEND
from .likelihood import (
    digamma,
    log_emission_given_path,
    log_joint,
    log_joint_hmm,
    log_param_prior_density,
    log_path_prior,
    sample_hmm_pair,
    sample_polya_pair,
)
from .model import (
    CountTables,
    DataError,
    HyperParams,
    ModelSpec,
    ParamMatrices,
    count_path,
    derive_masks,
    is_admissible,
    path_admissible,
)
from .priors import (
    EmpiricalSummary,
    assemble_hyperparams,
    empirical_hyperparams,
    point_estimates,
    posterior_mean_c,
    posterior_update,
    solve_concentrations,
    summarize_corpus,
    weighted_variances,
)
from .segmentation import (
    NotApplicableError,
    RunResult,
    SegConfig,
    StartRecord,
    bem_run,
    multistart,
    sem_run,
    sem_step,
    smm_run,
    smm_step,
    vb_run,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
