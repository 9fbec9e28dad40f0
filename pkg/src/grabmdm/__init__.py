"""Multiview diffusion maps with adaptive bandwidths.

Views of the same ``n`` samples are fused through a block affinity whose
off-diagonal blocks are products of per-view kernel matrices. The resulting
Markov chain only moves across views, and its eigenvectors give per-view,
joint and view-averaged embeddings.
"""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

from ._errors import (
    DegeneracyError,
    DomainError,
    GenerationError,
    GrabMDMError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .bandwidth import (
    BandwidthReport,
    TuningReport,
    admissible_c,
    auto_embedding_dim,
    auto_percentile,
    default_c_grid,
    ecdf_quantile_scale,
    select_bandwidths,
    select_global_scale,
    spectral_distance,
)
from .datasets import (
    ClusterGenSpec,
    LabeledMultiview,
    ManifoldGenSpec,
    gen_clusters,
    gen_manifolds,
    snr,
    spiked_view,
    zscore_normalize,
)
from .embedding import (
    EmbeddingSet,
    TransitionSpectrum,
    build_Q,
    decompose,
    diffusion_distance,
    embed_averaged,
    embed_joint,
    embed_view,
    embedding_matrix,
)
from .experiments import ExperimentConfig, ExperimentResult, run_cluster_bench, run_manifold_bench, run_pipeline
from .kernels import (
    BlockAffinity,
    KernelSpec,
    MultiviewDataset,
    ViewData,
    block_affinity,
    eval_kernel,
    load_views,
    pairwise_sq_dists,
    transition_matrix,
    view_kernel_matrix,
    view_kernels,
)
from .metrics import clustering_accuracy, kmeans, rand_index, trustworthiness
from .sketching import SketchSpec, haar_matrix, sketch_dataset, sketch_view
