"""attrxfer: do feature attributions from one classifier transfer to others?

The package trains a small zoo of image classifiers on a shared corpus,
produces attribution masks on a source model (mask optimization or
Grad-CAM), extracts Hadamard-masked feature images, and measures how well
every model recognizes those features compared to the raw images.
"""

from .attribution import (AttributionCache, AttributionMap, BaselinePool,
                          BaselineSampler, GradCam, RandomMask,
                          SoundnessSaliency, composite_sample, entropy,
                          grad_cam, optimize_ss_mask, random_mask_like,
                          ss_objective)
from .data import (Dataset, LabeledExample, export_dataset,
                   generate_shapes_dataset, load_image_folder,
                   split_by_id_hash)
from .exceptions import (CacheError, DatasetError, ImageDecodeError,
                         MissingFeatureError, OptimizationError, ReportError,
                         TrainingDiverged, WeightFormatError)
from .features import FeatureExtractor, FeatureInput, extract_features
from .models import (TorchClassifier, TrainConfig, available_models,
                     build_toy_cnn, build_toy_vit, load_weights,
                     register_model, resolve_model, save_weights, train)
from .preprocess import InputSpec, bilinear_resize, preprocess
from .protocol import (EvalRecord, ExampleRow, Histogram, TransferReport,
                       accuracy, confusion_matrix, evaluate, f1_score,
                       histogram_counts, probability_histogram,
                       render_metrics_table, run_transfer_protocol,
                       write_report_files)
from .runconfig import default_config, load_config, save_config
from .seeding import child_seed

__version__ = "0.1.0"

__all__ = [
    "AttributionCache", "AttributionMap", "BaselinePool", "BaselineSampler",
    "CacheError", "Dataset", "DatasetError", "EvalRecord", "ExampleRow",
    "FeatureExtractor", "FeatureInput", "GradCam", "Histogram",
    "ImageDecodeError", "InputSpec", "LabeledExample", "MissingFeatureError",
    "OptimizationError", "RandomMask", "ReportError", "SoundnessSaliency",
    "TorchClassifier", "TrainConfig", "TrainingDiverged", "TransferReport",
    "WeightFormatError", "accuracy", "available_models", "bilinear_resize",
    "build_toy_cnn", "build_toy_vit", "child_seed", "composite_sample",
    "confusion_matrix", "default_config", "entropy", "evaluate",
    "export_dataset", "extract_features", "f1_score",
    "generate_shapes_dataset", "grad_cam", "histogram_counts",
    "load_config", "load_image_folder", "load_weights", "optimize_ss_mask",
    "preprocess", "probability_histogram", "random_mask_like",
    "register_model", "render_metrics_table", "resolve_model",
    "run_transfer_protocol", "save_config", "save_weights",
    "split_by_id_hash", "ss_objective", "train", "write_report_files",
]
