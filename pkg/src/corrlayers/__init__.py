"""Edge-correlated multilayer network models.

Fit correlated ER, SBM and degree-corrected SBM models to pairs of network
layers, measure layer correlations, sample benchmark networks, and predict
edges of one layer from another.
"""

from .counts import (
    BundleCounts,
    DegreeCorrectionSums,
    PairCounts,
    bundle_cooccurrence,
    degree_correction_sums,
    global_cooccurrence,
)
from .dcsbm import (
    CorrDCSBMParams,
    fit_corr_dcsbm_approx,
    fit_corr_dcsbm_full,
    fit_mono_dcsbm,
    pair_correlation,
)
from .errors import CorrLayersError, NumericalError, ValidationError
from .estimators import (
    CorrERParams,
    CorrSBMParams,
    FisherReport,
    effective_correlation,
    er_fisher_variance,
    fit_corr_er,
    fit_corr_sbm,
    pearson_from_params,
)
from .generators import (
    BenchmarkConfig,
    GeneratedInstance,
    make_benchmark,
    q_from_rho,
    sample_corr_dcsbm,
    sample_corr_er,
    sample_corr_er_sequential,
    sample_corr_sbm,
)
from .kernels import BACKEND
from .metrics import auc_affine_reference, pr_auc, roc_auc
from .network import (
    BlockPartition,
    EdgeDomain,
    MultilayerNetwork,
    NormalizedDegrees,
    PairMask,
    build_network,
    normalized_degrees,
    observed_normalized_degrees,
)
from .prediction import (
    ModelKind,
    PredictionReport,
    conditional_probs,
    cross_validate,
    fit_model,
    kfold_split,
    positive_rho_ordering_check,
)

__version__ = "0.1.0"
