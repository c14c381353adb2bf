"""Small standalone attribute regressor used to judge edits.

Trained once on proxy renders and then frozen, it provides an independent
estimate of the perceptual attribute of any image, so attribute sweeps of
the generator can be scored without trusting the discriminator that
trained alongside it.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .data import DatasetManifest, load_sample, resize_sample
from .networks import init_weights_


class AttributeRegressor(nn.Module):
    def __init__(self, image_size: int = 64, width: int = 32):
        super().__init__()
        self.image_size = image_size
        self.conv1 = nn.Conv2d(3, width, 4, 2, 1)
        self.conv2 = nn.Conv2d(width, 2 * width, 4, 2, 1)
        self.conv3 = nn.Conv2d(2 * width, 4 * width, 4, 2, 1)
        self.conv4 = nn.Conv2d(4 * width, 4 * width, 4, 2, 1)
        self.head = nn.Linear(4 * width, 1)

    def forward(self, x: Tensor) -> Tensor:
        h = F.leaky_relu(self.conv1(x), 0.1)
        h = F.leaky_relu(self.conv2(h), 0.1)
        h = F.leaky_relu(self.conv3(h), 0.1)
        h = F.leaky_relu(self.conv4(h), 0.1)
        return torch.sigmoid(self.head(h.mean(dim=(2, 3)))).squeeze(1)


def stack_dataset(manifest: DatasetManifest, image_size: int) -> tuple[Tensor, Tensor]:
    images, labels = [], []
    for i in range(len(manifest)):
        sample = resize_sample(load_sample(manifest, i), image_size)
        images.append(sample.image)
        labels.append(sample.att_source)
    return torch.from_numpy(np.stack(images)), torch.tensor(labels, dtype=torch.float32)


def train_regressor(
    manifest: DatasetManifest,
    image_size: int = 64,
    steps: int = 2000,
    batch_size: int = 64,
    lr: float = 2e-3,
    seed: int = 0,
) -> AttributeRegressor:
    """Fit the regressor with MSE on (image, rated attribute) pairs.

    Uses horizontal-flip augmentation and a stepped learning-rate decay;
    returns the model frozen in eval mode.
    """
    g = torch.Generator().manual_seed(seed)
    model = AttributeRegressor(image_size)
    init_weights_(model, g, std=0.05)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=max(1, steps * 2 // 5), gamma=0.3)
    images, labels = stack_dataset(manifest, image_size)
    n = len(labels)
    for _ in range(steps):
        idx = torch.randint(0, n, (min(batch_size, n),), generator=g)
        x = images[idx]
        if bool(torch.rand(1, generator=g) < 0.5):
            x = torch.flip(x, dims=[3])
        loss = F.mse_loss(model(x), labels[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()
        sched.step()
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def predict_attributes(model: AttributeRegressor, images: Tensor) -> np.ndarray:
    with torch.no_grad():
        return model(images.float()).numpy()
