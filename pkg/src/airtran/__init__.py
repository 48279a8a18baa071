"""airtran: adaptive-ranking transferability estimation for model selection.

Given a pool of candidate pre-trained sentence encoders and a target
text-ranking dataset, estimate which model will fine-tune best without
fine-tuning any of them: whiten each model's embedding space, fit per
dimension scaling weights in closed form, and score the model by the
expected reciprocal rank of relevant documents within sampled candidate
groups.
"""

from .adascale import (
    ScalingWeights,
    hadamard_pairs,
    load_scaling,
    save_scaling,
    scaling_gradient,
    scaling_loss,
    solve_scaling,
    weighted_score,
)
from .data import (
    CandidateGroup,
    ModelPoolTruth,
    RankingDataset,
    dataset_from_pairs,
    read_manifest,
    read_truth,
    sample_candidates,
    write_manifest,
    write_truth,
)
from .errors import (
    AirtranError,
    CapacityError,
    ConfigError,
    DegenerateInputError,
    EmptyDatasetError,
    ManifestError,
    MatrixDataError,
    MatrixFormatError,
    MatrixLengthError,
    MatrixVersionError,
    MatrixWriteError,
    NumericError,
    ShapeError,
    SingularGramError,
)
from .evaluation import (
    EvalReport,
    estimated_rank_of_best,
    evaluate,
    kendall_tau_b,
    kendall_tau_sign,
)
from .matrixio import matrix_bytes, read_matrix, write_matrix, write_matrix_atomic
from .scoring import (
    ModelScore,
    ScoreConfig,
    TransferabilityReport,
    airtran_score,
    expected_rank_score,
    group_log_likelihood,
    group_ranks,
    log_likelihood_score,
    make_report,
    prepare_features,
    quality_score,
    quality_transferability,
    rank_of_relevant,
    read_report,
)
from .synthpool import SynthConfig, SynthPool, default_noise_levels, generate_pool, save_pool
from .whitening import (
    WhiteningModel,
    apply_whitening,
    fit_whitening,
    load_whitening,
    save_whitening,
)

__version__ = "0.1.0"
