"""Shape primitive histogram (SPH/MSPH) descriptors and a face-recognition
evaluation harness: extraction, PCA/LDA reduction, NNC/CRC classification,
deterministic split protocols, parameter sweeps, and extraction benchmarks.
"""

from .imageio import (
    Dataset,
    GrayImage,
    ImageLoadError,
    IntegralImage,
    Sample,
    crop_resize,
    integral,
    load_dataset,
    load_image,
    save_pgm,
)
from .primitives import (
    BinSums,
    CellMatch,
    ShapePrimitiveTemplate,
    TEMPLATES,
    bin_sums,
    generate_templates,
    match_scores,
    select_primitive,
)
from .descriptor import (
    DEFAULT_MSPH_PARAMS,
    DEFAULT_SPH_PARAMS,
    SphDescriptor,
    SphParams,
    block_histogram,
    block_histograms,
    descriptor_dims,
    epsilon,
    extract_msph,
    extract_sph,
    grid_positions,
    load_descriptors,
    save_descriptors,
)
from .subspace import LdaModel, PcaModel, fit_lda, fit_pca, load_model, project, save_model
from .classify import (
    CrcSolver,
    Gallery,
    Prediction,
    crc_classify,
    crc_classify_batch,
    evaluate,
    make_gallery,
    nnc_classify,
    nnc_classify_batch,
)
from .experiments import (
    BenchReport,
    ConfigError,
    ExperimentConfig,
    ResultRecord,
    Split,
    bench_extraction,
    extract_features,
    fixed_split,
    kfold_splits,
    leave_one_out_splits,
    permute_labels,
    run_pipeline,
    sweep,
    write_sweep_csv,
)
from .synth import generate_synthetic_dataset, synthetic_dataset

__version__ = "0.1.0"
