__version__ = "0.1.0"

__all__ = [
    "File", "Dir", "PathLike", "Format", "Settings", "Enums",
    "Template", "generate_template", "pad_white", "interior_index",
    "ChannelParams", "PrintedImage", "print_code", "make_fake", "bsc_flip",
    "EstimatedTemplate", "Estimator", "estimate_template", "otsu_threshold",
    "Codebook", "train_codebook", "merge", "codebook_distance",
    "MetricSuite", "AttentionMask", "lls_score", "build_mask", "pixel_metric", "hamming_metric", "masked_metric",
    "ExperimentConfig", "EvalReport", "auc", "roc_curve", "select_threshold", "one_class_threshold", "run_experiment", "stability_study",
]

from .dir import Dir
from .file import File
from .helper import PathLike
from .format import Format
from .settings import Settings
from .enums import Enums

from .template import Template, generate_template, pad_white, interior_index
from .channel import ChannelParams, PrintedImage, print_code, make_fake, bsc_flip
from .estimator import EstimatedTemplate, Estimator, estimate_template, otsu_threshold
from .codebook import Codebook, train_codebook, merge, codebook_distance
from .metrics import MetricSuite, AttentionMask, lls_score, build_mask, pixel_metric, hamming_metric, masked_metric
from .evaluation import ExperimentConfig, EvalReport, auc, roc_curve, select_threshold, one_class_threshold, run_experiment, stability_study

Settings.DEFAULT = Settings(if_exists=Enums.IfExists.ALLOW, file_class=File, dir_class=Dir)
