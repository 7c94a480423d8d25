"""Unpaired translation G: S_k* → R_M+1 (and F back) with semantic-shift regularization."""

import itertools
import logging
import math
import random
from dataclasses import dataclass, field

import torch
import torch.nn as nn

from models.translation_nets import TRANSLATION_CHECKPOINT_VERSION, Generator, PatchDiscriminator
from services.losses import (
    DEFAULT_LAMBDAS,
    LossComponents,
    SoftMatte,
    cycle_loss,
    discriminator_loss,
    full_objective,
    generator_adversarial_loss,
    identity_mapping_loss,
    make_soft_matte,
    masked_reg_loss,
    ref_loss,
)
from synth.manifest import DatasetManifest, Origin, Sample
from utils.checkpoints import load_checkpoint, save_checkpoint
from utils.config import Ablation, GanMode, ModelConfig, TrainConfig
from utils.errors import TrainingDivergedError, ValidationError
from utils.image_io import quantize
from utils.tensors import images_to_tensor, tensor_to_images

CHECKPOINT_KIND = "translation"
TRANSLATED_DOMAIN_OFFSET = 10000
ADAM_BETAS = (0.5, 0.999)


class ReplayBuffer:
    """
    Pool of previously generated images for discriminator updates.
    Each new image is returned directly with probability 1/2, otherwise it replaces
    and returns a random older one.
    """

    def __init__(self, max_size: int = 50, seed: int = 0):
        self.max_size = max_size
        self.data: list[torch.Tensor] = []
        self.rng = random.Random(seed)

    def push_and_pop(self, batch: torch.Tensor) -> torch.Tensor:
        if self.max_size <= 0:
            return batch
        returned = []
        for element in batch.detach():
            if len(self.data) < self.max_size:
                self.data.append(element)
                returned.append(element)
            elif self.rng.random() > 0.5:
                i = self.rng.randrange(self.max_size)
                returned.append(self.data[i].clone())
                self.data[i] = element
            else:
                returned.append(element)
        return torch.stack(returned)


@dataclass
class TranslationModel:
    """Generators G (S→R) and F (R→S), discriminators D_S and D_R, and the objective they were trained with."""

    G: Generator
    F: Generator
    D_S: PatchDiscriminator
    D_R: PatchDiscriminator
    matte: SoftMatte
    lambdas: tuple[float, float, float]
    ablation: Ablation
    gan_mode: GanMode
    source_domain_id: int
    height: int
    width: int
    history: dict = field(default_factory=dict)
    version: int = TRANSLATION_CHECKPOINT_VERSION


def active_lambdas(lambdas, ablation: Ablation) -> tuple[float, float, float]:
    """
    Weights of (cycle, identity, matte slot) for each ablation row. The matte slot holds
    L_Mask for mask_full and the unmasked L_Ref for ref, weighted by λ3 either way.
    """
    lambda_cyc, lambda_id, lambda_mask = lambdas
    return {
        Ablation.NONE: (lambda_cyc, 0.0, 0.0),
        Ablation.ID: (lambda_cyc, lambda_id, 0.0),
        Ablation.REF: (lambda_cyc, 0.0, lambda_mask),
        Ablation.MASK_FULL: (lambda_cyc, lambda_id, lambda_mask),
    }[Ablation(ablation)]


def _set_requires_grad(modules, flag: bool):
    for module in modules:
        for p in module.parameters():
            p.requires_grad_(flag)


def _epoch_indices(n: int, steps: int, batch_size: int, generator: torch.Generator) -> list[torch.Tensor]:
    """steps batches drawn from back-to-back permutations of range(n)."""
    needed = steps * batch_size
    order = torch.cat([torch.randperm(n, generator=generator) for _ in range(math.ceil(needed / n))])
    return list(torch.split(order[:needed], batch_size))


@torch.no_grad()
def evaluate_losses(model: TranslationModel, source: torch.Tensor, target: torch.Tensor, batch_size: int = 64) -> dict:
    """Regularizer values over whole datasets, independent of which ones the ablation trains with."""
    for net in (model.G, model.F):
        net.eval()

    totals = {"cycle": 0.0, "identity": 0.0, "ref": 0.0, "mask": 0.0}
    n = max(len(source), len(target))
    steps = math.ceil(n / batch_size)
    for step in range(steps):
        s = source[torch.arange(step * batch_size, min((step + 1) * batch_size, n)) % len(source)]
        x = target[torch.arange(step * batch_size, min((step + 1) * batch_size, n)) % len(target)]
        gs, fx = model.G(s), model.F(x)
        weight = len(s) / n
        totals["cycle"] += weight * float(cycle_loss(s, model.F(gs), x, model.G(fx)))
        totals["identity"] += weight * float(identity_mapping_loss(model.G(x), x, model.F(s), s))
        totals["ref"] += weight * float(ref_loss(gs, s))
        totals["mask"] += weight * float(masked_reg_loss(gs, s, model.matte))
    return totals


def train_translation(
    source: DatasetManifest,
    target: DatasetManifest,
    lambdas: tuple[float, float, float] = DEFAULT_LAMBDAS,
    config: TrainConfig = TrainConfig(learning_rate=2e-4, epochs=30, batch_size=8, weight_decay=0.0),
    ablation: Ablation = Ablation.MASK_FULL,
    gan_mode: GanMode = GanMode.NON_SATURATING,
    model_config: ModelConfig = ModelConfig(),
    buffer_size: int = 50,
    matte_sigma_frac: tuple[float, float] = (1.0 / 3.0, 0.25),
    mask_budget: float = 0.15,
) -> TranslationModel:
    """
    Alternating optimization: the generators minimize the full objective restricted to the
    ablation's regularizers, then the discriminators maximize the adversarial terms on real
    images and replayed fakes. Target identity labels are never read.
    """
    if len(source) == 0 or len(target) == 0:
        raise ValidationError("Translation needs non-empty source and target datasets")
    if source.origins != {Origin.SYNTHETIC}:
        raise ValidationError(f"Translation source {source.name} must be synthetic")
    if (source.height, source.width) != (target.height, target.width):
        raise ValidationError("Source and target image sizes differ")
    if source.height % 4 or source.width % 4:
        raise ValidationError(f"Image size {source.height}×{source.width} must be divisible by 4")

    ablation, gan_mode = Ablation(ablation), GanMode(gan_mode)
    weights = active_lambdas(lambdas, ablation)
    stage = f"train-translate[{ablation}]"

    torch.manual_seed(config.seed)
    model = TranslationModel(
        G=Generator(model_config.generator_filters, model_config.residual_blocks, model_config.identity_init),
        F=Generator(model_config.generator_filters, model_config.residual_blocks, model_config.identity_init),
        D_S=PatchDiscriminator(model_config.discriminator_filters),
        D_R=PatchDiscriminator(model_config.discriminator_filters),
        matte=make_soft_matte(source.height, source.width, matte_sigma_frac),
        lambdas=tuple(lambdas),
        ablation=ablation,
        gan_mode=gan_mode,
        source_domain_id=source.single_domain_id(),
        height=source.height,
        width=source.width,
    )

    source_tensor = images_to_tensor(source.images(), source.height, source.width)
    target_tensor = images_to_tensor(target.images(), target.height, target.width)

    optimizer_g = torch.optim.Adam(
        itertools.chain(model.G.parameters(), model.F.parameters()), lr=config.learning_rate, betas=ADAM_BETAS
    )
    optimizer_d = torch.optim.Adam(
        itertools.chain(model.D_S.parameters(), model.D_R.parameters()), lr=config.learning_rate, betas=ADAM_BETAS
    )
    buffer_r = ReplayBuffer(buffer_size, seed=config.seed)
    buffer_s = ReplayBuffer(buffer_size, seed=config.seed + 1)
    generator = torch.Generator().manual_seed(config.seed)
    matte = model.matte.as_tensor()

    history = {"initial": evaluate_losses(model, source_tensor, target_tensor), "epochs": []}
    steps = math.ceil(max(len(source_tensor), len(target_tensor)) / config.batch_size)
    logging.info(f"{stage} {len(source_tensor)} source and {len(target_tensor)} target images, {steps} steps per epoch")

    for epoch in range(config.epochs):
        sums = {"gan_g": 0.0, "gan_f": 0.0, "cycle": 0.0, "identity": 0.0, "mask": 0.0, "total": 0.0, "discriminator": 0.0}
        source_batches = _epoch_indices(len(source_tensor), steps, config.batch_size, generator)
        target_batches = _epoch_indices(len(target_tensor), steps, config.batch_size, generator)

        for s_index, x_index in zip(source_batches, target_batches):
            s, x = source_tensor[s_index], target_tensor[x_index]
            for net in (model.G, model.F, model.D_S, model.D_R):
                net.train()

            # generator step
            _set_requires_grad([model.D_S, model.D_R], False)
            gs, fx = model.G(s), model.F(x)
            components = LossComponents(
                gan_g=generator_adversarial_loss(model.D_R(gs), gan_mode),
                gan_f=generator_adversarial_loss(model.D_S(fx), gan_mode),
                cycle=cycle_loss(s, model.F(gs), x, model.G(fx)),
            )
            if weights[1] > 0:
                components.identity = identity_mapping_loss(model.G(x), x, model.F(s), s)
            if ablation == Ablation.MASK_FULL:
                components.mask = masked_reg_loss(gs, s, matte)
            elif ablation == Ablation.REF:
                components.mask = ref_loss(gs, s)

            total = full_objective(components, weights)
            if not math.isfinite(total.item()):
                raise TrainingDivergedError(stage, epoch + 1, total.item())

            optimizer_g.zero_grad()
            total.backward()
            optimizer_g.step()

            # discriminator step
            _set_requires_grad([model.D_S, model.D_R], True)
            fake_r = buffer_r.push_and_pop(gs.detach())
            fake_s = buffer_s.push_and_pop(fx.detach())
            d_loss = 0.5 * (
                discriminator_loss(model.D_R(x), model.D_R(fake_r), gan_mode)
                + discriminator_loss(model.D_S(s), model.D_S(fake_s), gan_mode)
            )
            if not math.isfinite(d_loss.item()):
                raise TrainingDivergedError(stage, epoch + 1, d_loss.item())

            optimizer_d.zero_grad()
            d_loss.backward()
            optimizer_d.step()

            for key in ("gan_g", "gan_f", "cycle", "identity", "mask"):
                sums[key] += float(getattr(components, key))
            sums["total"] += total.item()
            sums["discriminator"] += d_loss.item()

        record = {key: value / steps for key, value in sums.items()}
        history["epochs"].append(record)
        logging.info(
            f"{stage} Epoch {epoch + 1}/{config.epochs} total {record['total']:.4f} cycle {record['cycle']:.4f} "
            f"identity {record['identity']:.4f} mask {record['mask']:.4f} D {record['discriminator']:.4f}"
        )

    history["final"] = evaluate_losses(model, source_tensor, target_tensor)
    if history["final"]["mask"] > mask_budget:
        logging.warning(f"{stage} Final masked regularizer {history['final']['mask']:.4f} exceeds budget {mask_budget}")

    for net in (model.G, model.F, model.D_S, model.D_R):
        net.eval()
    model.history = history
    return model


@torch.no_grad()
def translate(model: TranslationModel, source: DatasetManifest, batch_size: int = 64) -> DatasetManifest:
    """G(s) for every sample of the source domain; identity labels are carried over verbatim."""
    if (source.height, source.width) != (model.height, model.width):
        raise ValidationError(
            f"Model translates {model.height}×{model.width} images, got {source.height}×{source.width}"
        )
    domain_id = source.single_domain_id()
    if domain_id != model.source_domain_id:
        raise ValidationError(f"Model was trained on domain {model.source_domain_id}, got domain {domain_id}")

    model.G.eval()
    inputs = images_to_tensor(source.images(), source.height, source.width)
    outputs = []
    for i in range(0, len(inputs), batch_size):
        outputs += tensor_to_images(model.G(inputs[i : i + batch_size]))

    translated_id = TRANSLATED_DOMAIN_OFFSET + domain_id
    samples = [
        Sample(quantize(image), sample.identity_id, translated_id, Origin.SYNTHETIC)
        for image, sample in zip(outputs, source.samples)
    ]
    logging.info(f"translate Translated {len(samples)} images of domain {domain_id} into domain {translated_id}")
    return DatasetManifest(f"{source.name}-translated", source.height, source.width, samples)


def _plain_history(history: dict) -> dict:
    return {
        "initial": {k: float(v) for k, v in history.get("initial", {}).items()},
        "final": {k: float(v) for k, v in history.get("final", {}).items()},
        "epochs": [{k: float(v) for k, v in record.items()} for record in history.get("epochs", [])],
    }


def save_translation(model: TranslationModel, path):
    hparams = {
        "generator": model.G.hparams(),
        "discriminator": model.D_R.hparams(),
        "lambdas": list(model.lambdas),
        "ablation": str(model.ablation),
        "gan_mode": str(model.gan_mode),
        "source_domain_id": model.source_domain_id,
        "height": model.height,
        "width": model.width,
        "matte_sigmas": [model.matte.sigmas[0] / model.height, model.matte.sigmas[1] / model.width],
    }
    state = {name: getattr(model, name).state_dict() for name in ("G", "F", "D_S", "D_R")}
    return save_checkpoint(
        path, CHECKPOINT_KIND, TRANSLATION_CHECKPOINT_VERSION, hparams, state, history=_plain_history(model.history)
    )


def load_translation(path) -> TranslationModel:
    payload = load_checkpoint(path, CHECKPOINT_KIND, TRANSLATION_CHECKPOINT_VERSION)
    hparams = payload["hparams"]
    gen, disc = hparams["generator"], hparams["discriminator"]

    def generator() -> Generator:
        return Generator(gen["filters"], gen["residual_blocks"], gen["identity_init"])

    model = TranslationModel(
        G=generator(),
        F=generator(),
        D_S=PatchDiscriminator(disc["filters"]),
        D_R=PatchDiscriminator(disc["filters"]),
        matte=make_soft_matte(hparams["height"], hparams["width"], tuple(hparams["matte_sigmas"])),
        lambdas=tuple(hparams["lambdas"]),
        ablation=Ablation(hparams["ablation"]),
        gan_mode=GanMode(hparams["gan_mode"]),
        source_domain_id=hparams["source_domain_id"],
        height=hparams["height"],
        width=hparams["width"],
        history=payload.get("history", {}),
    )
    for name in ("G", "F", "D_S", "D_R"):
        net: nn.Module = getattr(model, name)
        net.load_state_dict(payload["state"][name])
        net.eval()
    return model
