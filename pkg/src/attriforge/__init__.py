"""Attribute-conditioned generative editing of material appearance."""

from .data import (
    AugmentationConfig,
    DatasetManifest,
    ImageSample,
    apply_mask,
    augment,
    composite,
    generate_proxy_dataset,
    load_manifest,
    pool_attribute,
)
from .losses import (
    LossWeights,
    d_adv_loss,
    d_att_loss,
    g_adv_loss,
    g_att_loss,
    gradient_penalty,
    rec_loss,
    total_d_loss,
    total_g_loss,
)
from .metrics import MetricReport, evaluate_dataset, evaluate_pair
from .networks import Discriminator, Generator, count_parameters, parameter_report
from .stu import STUCell, inject_attribute, stu_forward
from .trainer import (
    TrainingConfig,
    build_state,
    load_checkpoint,
    sample_target_attribute,
    save_checkpoint,
    tiny_config,
    train,
    train_step,
)

__version__ = "0.1.0"
