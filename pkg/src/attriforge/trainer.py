"""Adversarial training loop: 7 critic updates per generator update,
Adam for both players, per-step derived randomness, checkpointing, and a
CSV loss log.

Every random draw (target attributes, penalty interpolation, shuffling,
augmentation) is derived from (config.seed, stream tag, step/epoch), so
equal seeds give equal loss traces and resuming from a checkpoint replays
the exact remainder of an uninterrupted run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import torch

from . import checkpoint as ckpt_io
from .data import AugmentationConfig, DatasetManifest, ImageSample, augment, load_sample, resize_sample
from .errors import CheckpointError, ConfigParseError, ConfigurationError, DomainError, NumericError
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
from .networks import Discriminator, FULL_CHANNELS, Generator, TINY_CHANNELS

ABLATIONS = ("full", "no_discriminator", "no_stu")
LOSS_CSV_HEADER = ["step", "L_Dadv", "L_GP", "L_Datt", "L_Gadv", "L_Gatt", "L_rec"]


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    weights: LossWeights = field(default_factory=LossWeights)
    d_steps_per_g_step: int = 7
    batch_size: int = 16
    total_steps: int = 2000
    ablation: str = "full"
    seed: int = 0
    image_size: int = 256
    channels: tuple = FULL_CHANNELS
    attribute: str = "glossy"
    augment: bool = True
    checkpoint_every: int = 500
    keep_checkpoints: int = 3

    def __post_init__(self):
        if self.d_steps_per_g_step < 1:
            raise ConfigurationError("d_steps_per_g_step must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if not 0 <= self.beta1 < self.beta2 < 1:
            raise ConfigurationError("betas must satisfy 0 <= beta1 < beta2 < 1")
        if self.ablation not in ABLATIONS:
            raise ConfigurationError(f"unknown ablation '{self.ablation}', expected one of {ABLATIONS}")
        if self.batch_size < 1 or self.total_steps < 0:
            raise ConfigurationError("batch_size must be >= 1 and total_steps >= 0")


def tiny_config(**overrides) -> TrainingConfig:
    """64x64 preset with narrow layers, for tests and smoke training."""
    base = dict(image_size=64, channels=TINY_CHANNELS, batch_size=16)
    base.update(overrides)
    return TrainingConfig(**base)


# --------------------------------------------------------------------------
# Config <-> flat text mapping (shared by checkpoints and the CLI)
# --------------------------------------------------------------------------

_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False}


def config_to_dict(cfg: TrainingConfig) -> dict[str, str]:
    return {
        "learning_rate": repr(cfg.learning_rate),
        "beta1": repr(cfg.beta1),
        "beta2": repr(cfg.beta2),
        "lambda_gp": repr(cfg.weights.gradient_penalty),
        "lambda_d_att": repr(cfg.weights.d_attribute),
        "lambda_g_att": repr(cfg.weights.g_attribute),
        "lambda_rec": repr(cfg.weights.reconstruction),
        "d_steps_per_g_step": str(cfg.d_steps_per_g_step),
        "batch_size": str(cfg.batch_size),
        "total_steps": str(cfg.total_steps),
        "ablation": cfg.ablation,
        "seed": str(cfg.seed),
        "image_size": str(cfg.image_size),
        "channels": ",".join(str(c) for c in cfg.channels),
        "attribute": cfg.attribute,
        "augment": "true" if cfg.augment else "false",
        "checkpoint_every": str(cfg.checkpoint_every),
        "keep_checkpoints": str(cfg.keep_checkpoints),
    }


def _parse_bool(key: str, value: str) -> bool:
    try:
        return _BOOL_STRINGS[value.strip().lower()]
    except KeyError:
        raise ConfigParseError(f"key '{key}': expected a boolean, got '{value}'") from None


def config_from_dict(values: dict[str, str], base: Optional[TrainingConfig] = None) -> TrainingConfig:
    cfg = base or TrainingConfig()
    weights = cfg.weights
    fields = {}
    parsers = {
        "learning_rate": float, "beta1": float, "beta2": float,
        "d_steps_per_g_step": int, "batch_size": int, "total_steps": int,
        "seed": int, "image_size": int,
        "checkpoint_every": int, "keep_checkpoints": int,
        "ablation": str, "attribute": str,
    }
    weight_keys = {
        "lambda_gp": "gradient_penalty",
        "lambda_d_att": "d_attribute",
        "lambda_g_att": "g_attribute",
        "lambda_rec": "reconstruction",
    }
    weight_updates = {}
    for key, raw in values.items():
        try:
            if key in parsers:
                fields[key] = parsers[key](raw)
            elif key in weight_keys:
                weight_updates[weight_keys[key]] = float(raw)
            elif key == "channels":
                fields["channels"] = tuple(int(v) for v in raw.split(","))
            elif key == "augment":
                fields["augment"] = _parse_bool(key, raw)
            else:
                raise ConfigParseError(f"unknown config key '{key}'")
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(f"key '{key}': cannot parse '{raw}': {exc}") from exc
    if weight_updates:
        weights = replace(weights, **weight_updates)
    try:
        return replace(cfg, weights=weights, **fields)
    except (ConfigurationError, DomainError):
        raise
    except TypeError as exc:
        raise ConfigParseError(str(exc)) from exc


# --------------------------------------------------------------------------
# Derived randomness
# --------------------------------------------------------------------------

_STREAM_STEP, _STREAM_SHUFFLE, _STREAM_AUGMENT = 0, 1, 2


def _derived_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def step_rng(seed: int, step: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(_derived_seed(seed, _STREAM_STEP, step))
    return g


def sample_target_attribute(rng: torch.Generator, n: Optional[int] = None):
    """Uniform draw(s) on [0,1] for the editing target."""
    draws = torch.rand(n if n is not None else 1, generator=rng)
    return draws if n is not None else float(draws[0])


# --------------------------------------------------------------------------
# Trainer state
# --------------------------------------------------------------------------


@dataclass
class Batch:
    images: torch.Tensor  # [B,3,S,S]
    masks: torch.Tensor  # [B,1,S,S]
    att_source: torch.Tensor  # [B]


@dataclass
class LossReport:
    d_adv: Optional[float]
    gp: Optional[float]
    d_att: Optional[float]
    g_adv: Optional[float]
    g_att: Optional[float]
    rec: float

    def csv_row(self, step: int) -> list[str]:
        cells = [str(step)]
        for v in (self.d_adv, self.gp, self.d_att, self.g_adv, self.g_att, self.rec):
            cells.append("" if v is None else f"{v:.8f}")
        return cells


@dataclass
class TrainerState:
    config: TrainingConfig
    gen: Generator
    disc: Optional[Discriminator]
    opt_g: torch.optim.Adam
    opt_d: Optional[torch.optim.Adam]
    step: int = 0
    d_updates: int = 0
    g_updates: int = 0


def build_state(config: TrainingConfig) -> TrainerState:
    init = torch.Generator().manual_seed(config.seed)
    gen = Generator(
        config.image_size,
        config.channels,
        use_stu=config.ablation != "no_stu",
        init_generator=init,
    )
    betas = (config.beta1, config.beta2)
    opt_g = torch.optim.Adam(gen.parameters(), lr=config.learning_rate, betas=betas)
    disc = opt_d = None
    if config.ablation != "no_discriminator":
        disc = Discriminator(config.image_size, config.channels, init_generator=init)
        opt_d = torch.optim.Adam(disc.parameters(), lr=config.learning_rate, betas=betas)
    return TrainerState(config=config, gen=gen, disc=disc, opt_g=opt_g, opt_d=opt_d)


def _component_check(step: int, **components: torch.Tensor) -> None:
    values = {k: float(v.detach()) for k, v in components.items()}
    bad = [k for k, v in values.items() if not np.isfinite(v)]
    if bad:
        dump = ", ".join(f"{k}={v}" for k, v in values.items())
        raise NumericError(f"non-finite loss component(s) {bad} at step {step}: {dump}")


def train_step(state: TrainerState, batch: Batch, rng: torch.Generator) -> LossReport:
    """One outer step: critic updates then a single generator update.

    Critic iterations resample the target attribute each time; edits feeding
    the critic are detached from the generator graph. The generator update
    combines the adversarial, attribute, and reconstruction terms, the last
    one using a second pass at the source attribute. Object masks are
    applied to every generated image before it is scored.
    """
    cfg = state.config
    w = cfg.weights
    x, mask, att_s = batch.images, batch.masks, batch.att_source
    b = x.shape[0]

    if cfg.ablation == "no_discriminator":
        x_rec = state.gen(x, att_s) * mask
        l_rec = rec_loss(x, x_rec)
        total = w.reconstruction * l_rec
        _component_check(state.step + 1, L_rec=l_rec)
        state.opt_g.zero_grad()
        total.backward()
        state.opt_g.step()
        state.g_updates += 1
        state.step += 1
        return LossReport(None, None, None, None, None, float(l_rec.detach()))

    last = {}
    for _ in range(cfg.d_steps_per_g_step):
        att_t = sample_target_attribute(rng, b)
        with torch.no_grad():
            y = state.gen(x, att_t) * mask
        adv_real, att_pred_real = state.disc(x)
        adv_fake = state.disc.adv_score(y)
        gp = gradient_penalty(state.disc.adv_score, x, y, w.gradient_penalty, rng=rng)
        wasserstein = d_adv_loss(adv_real, adv_fake)
        l_datt = d_att_loss(att_s, att_pred_real)
        total_d = total_d_loss(wasserstein + gp, l_datt, w)
        _component_check(state.step + 1, L_Dadv=wasserstein, L_GP=gp, L_Datt=l_datt)
        state.opt_d.zero_grad()
        total_d.backward()
        state.opt_d.step()
        state.d_updates += 1
        last = {"d_adv": float(wasserstein.detach()), "gp": float(gp.detach()), "d_att": float(l_datt.detach())}

    att_t = sample_target_attribute(rng, b)
    y = state.gen(x, att_t) * mask
    adv_fake, att_pred_fake = state.disc(y)
    l_gadv = g_adv_loss(adv_fake)
    l_gatt = g_att_loss(att_t, att_pred_fake)
    x_rec = state.gen(x, att_s) * mask
    l_rec = rec_loss(x, x_rec)
    total_g = total_g_loss(l_gadv, l_gatt, l_rec, w)
    _component_check(state.step + 1, L_Gadv=l_gadv, L_Gatt=l_gatt, L_rec=l_rec)
    state.opt_g.zero_grad()
    total_g.backward()
    state.opt_g.step()
    state.g_updates += 1
    state.step += 1
    return LossReport(
        d_adv=last["d_adv"],
        gp=last["gp"],
        d_att=last["d_att"],
        g_adv=float(l_gadv.detach()),
        g_att=float(l_gatt.detach()),
        rec=float(l_rec.detach()),
    )


# --------------------------------------------------------------------------
# Checkpoint binding
# --------------------------------------------------------------------------


def _optimizer_tensors(prefix: str, opt: torch.optim.Adam) -> dict[str, np.ndarray]:
    out = {}
    for idx, entry in opt.state_dict()["state"].items():
        for key, value in entry.items():
            tensor = value if torch.is_tensor(value) else torch.tensor(float(value))
            out[f"{prefix}.{idx}.{key}"] = tensor.detach().cpu().numpy()
    return out


def _load_optimizer(prefix: str, opt: torch.optim.Adam, tensors: dict[str, np.ndarray]) -> None:
    entries: dict[int, dict] = {}
    for name, arr in tensors.items():
        if not name.startswith(prefix + "."):
            continue
        _, idx, key = name.split(".", 2)
        entries.setdefault(int(idx), {})[key] = torch.from_numpy(arr.copy())
    sd = opt.state_dict()
    sd["state"] = entries
    opt.load_state_dict(sd)


def save_checkpoint(state: TrainerState, path: Path) -> Path:
    meta = dict(config_to_dict(state.config))
    meta.update(
        step=str(state.step),
        d_updates=str(state.d_updates),
        g_updates=str(state.g_updates),
    )
    tensors: dict[str, np.ndarray] = {}
    for key, value in state.gen.state_dict().items():
        tensors[f"gen.{key}"] = value.detach().cpu().numpy()
    tensors.update(_optimizer_tensors("opt_g", state.opt_g))
    if state.disc is not None:
        for key, value in state.disc.state_dict().items():
            tensors[f"disc.{key}"] = value.detach().cpu().numpy()
        tensors.update(_optimizer_tensors("opt_d", state.opt_d))
    ckpt_io.write_container(Path(path), meta, tensors)
    return Path(path)


def load_checkpoint(path: Path) -> TrainerState:
    meta, tensors = ckpt_io.read_container(Path(path))
    counters = {k: int(meta.pop(k)) for k in ("step", "d_updates", "g_updates") if k in meta}
    try:
        config = config_from_dict(meta)
    except ConfigParseError as exc:
        raise CheckpointError(f"checkpoint config invalid: {exc}") from exc
    state = build_state(config)
    state.step = counters.get("step", 0)
    state.d_updates = counters.get("d_updates", 0)
    state.g_updates = counters.get("g_updates", 0)

    gen_sd = {k[len("gen."):]: torch.from_numpy(v.copy()) for k, v in tensors.items() if k.startswith("gen.")}
    state.gen.load_state_dict(gen_sd)
    _load_optimizer("opt_g", state.opt_g, tensors)
    if state.disc is not None:
        disc_sd = {
            k[len("disc."):]: torch.from_numpy(v.copy()) for k, v in tensors.items() if k.startswith("disc.")
        }
        state.disc.load_state_dict(disc_sd)
        _load_optimizer("opt_d", state.opt_d, tensors)
    return state


# --------------------------------------------------------------------------
# Full loop
# --------------------------------------------------------------------------


def _materialize(dataset: Union[DatasetManifest, Sequence[ImageSample]]) -> list[ImageSample]:
    if isinstance(dataset, DatasetManifest):
        return [load_sample(dataset, i) for i in range(len(dataset))]
    return list(dataset)


def _batch_indices(seed: int, step: int, n: int, batch_size: int) -> tuple[int, np.ndarray]:
    steps_per_epoch = max(1, n // batch_size)
    epoch = (step - 1) // steps_per_epoch
    slot = (step - 1) % steps_per_epoch
    order = np.random.default_rng(
        np.random.SeedSequence([seed, _STREAM_SHUFFLE, epoch])
    ).permutation(n)
    return epoch, order[slot * batch_size : slot * batch_size + batch_size]


def _prepare_batch(
    samples: list[ImageSample],
    indices: np.ndarray,
    epoch: int,
    config: TrainingConfig,
    aug_config: AugmentationConfig,
) -> Batch:
    images, masks, atts = [], [], []
    for ds_index in indices:
        sample = samples[int(ds_index)]
        if config.augment:
            rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, _STREAM_AUGMENT, epoch, int(ds_index)])
            )
            sample = augment(sample, rng, aug_config)
        elif sample.image.shape[-1] != config.image_size:
            sample = resize_sample(sample, config.image_size)
        images.append(sample.image)
        masks.append(sample.mask)
        atts.append(sample.att_source)
    return Batch(
        images=torch.from_numpy(np.stack(images)),
        masks=torch.from_numpy(np.stack(masks)),
        att_source=torch.tensor(atts, dtype=torch.float32),
    )


def train(
    config: TrainingConfig,
    dataset: Union[DatasetManifest, Sequence[ImageSample]],
    out_dir: Path,
    resume_from: Optional[Path] = None,
    aug_config: Optional[AugmentationConfig] = None,
) -> Path:
    """Run the loop to `config.total_steps`, returning the final checkpoint path.

    Writes `losses.csv` (one row per outer step) and periodic checkpoints,
    keeping the most recent `keep_checkpoints` of them.
    """
    samples = _materialize(dataset)
    if not samples:
        raise ConfigurationError("training dataset is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    aug_cfg = aug_config or AugmentationConfig(final_size=config.image_size)
    if aug_cfg.final_size != config.image_size:
        raise ConfigurationError(
            f"augmentation final size {aug_cfg.final_size} differs from model input {config.image_size}"
        )
    if not config.augment:
        samples = [
            s if s.image.shape[-1] == config.image_size else resize_sample(s, config.image_size)
            for s in samples
        ]

    if resume_from is not None:
        state = load_checkpoint(resume_from)
        comparable = replace(
            state.config,
            total_steps=config.total_steps,
            checkpoint_every=config.checkpoint_every,
            keep_checkpoints=config.keep_checkpoints,
        )
        if comparable != config:
            raise ConfigurationError("resume checkpoint was produced by an incompatible config")
        state.config = config
        log_mode = "a"
    else:
        state = build_state(config)
        log_mode = "w"

    log_path = out_dir / "losses.csv"
    written: list[Path] = sorted(out_dir.glob("step_*.ckpt"))
    with open(log_path, log_mode, newline="", encoding="utf-8") as log:
        writer = csv.writer(log)
        if log_mode == "w":
            writer.writerow(LOSS_CSV_HEADER)
        for step in range(state.step + 1, config.total_steps + 1):
            epoch, indices = _batch_indices(config.seed, step, len(samples), config.batch_size)
            batch = _prepare_batch(samples, indices, epoch, config, aug_cfg)
            report = train_step(state, batch, step_rng(config.seed, step))
            writer.writerow(report.csv_row(step))
            if config.checkpoint_every and step % config.checkpoint_every == 0:
                written.append(save_checkpoint(state, out_dir / f"step_{step:07d}.ckpt"))
                while len(written) > config.keep_checkpoints:
                    old = written.pop(0)
                    old.unlink(missing_ok=True)

    final = out_dir / f"step_{state.step:07d}.ckpt"
    if not final.exists():
        save_checkpoint(state, final)
    return final
