"""Label-conditioned GAN for tabular flow features.

Both players receive the class label as one extra input column. Each
minibatch does one discriminator step on (real, fake) followed by one
generator step with the non-saturating loss ``-log D(G(z, y), y)``.
Probabilities are clamped to [1e-7, 1 - 1e-7] inside the losses only.
"""
from dataclasses import dataclass

import numpy as np

from .. import accounting
from .._random import make_rng
from ..netcore import AdamState, adam_step, backward, forward, init_net
from ._base import (Stopwatch, TrainLog, TrainingError, check_target_class, check_trainable,
                    synthetic_dataset, with_label, with_labels)

PROB_CLAMP = 1e-7


@dataclass
class GanModel:
    generator: object
    discriminator: object
    noise_dim: int
    feature_names: list
    method = "gan"

    def __post_init__(self):
        n_feat = self.generator.layer_sizes[-1]
        if self.generator.layer_sizes[0] != self.noise_dim + 1:
            raise ValueError("generator input must be noise_dim + 1 (label appended)")
        if self.discriminator.layer_sizes[0] != n_feat + 1:
            raise ValueError("discriminator input must be feature dim + 1 (label appended)")
        if self.discriminator.layer_sizes[-1] != 1 or self.discriminator.activations[-1] != "sigmoid":
            raise ValueError("discriminator must end in a single sigmoid unit")

    @property
    def nbytes(self):
        return self.generator.nbytes + self.discriminator.nbytes

    def generate(self, target_class, n_samples, seed):
        return gan_generate(self, target_class, n_samples, seed)


def _clamp(p):
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def discriminator_loss(d_real, d_fake):
    """BCE with real -> 1 and fake -> 0, each averaged over its batch, then summed halves."""
    d_real, d_fake = _clamp(np.asarray(d_real)), _clamp(np.asarray(d_fake))
    return float(-np.mean(np.log(d_real)) - np.mean(np.log(1.0 - d_fake))) / 2.0


def generator_loss(d_fake):
    return float(-np.mean(np.log(_clamp(np.asarray(d_fake)))))


def build_gan(n_features, noise_dim=32, hidden_sizes=(64, 64), seed=0, feature_names=None,
              disc_activation="leaky_relu"):
    hidden = list(hidden_sizes)
    gen = init_net([noise_dim + 1] + hidden + [n_features],
                   ["relu"] * len(hidden) + ["sigmoid"], make_rng(seed, 1).integers(2**63))
    disc = init_net([n_features + 1] + hidden + [1],
                    [disc_activation] * len(hidden) + ["sigmoid"], make_rng(seed, 2).integers(2**63))
    names = feature_names or [f"f{j}" for j in range(n_features)]
    return GanModel(gen, disc, noise_dim, list(names))


def discriminator_step(model, x_real, y_real, x_fake, y_fake, state):
    """One Adam step on the discriminator; returns the loss before the step."""
    d_real, tape_r = forward(model.discriminator, with_labels(x_real, y_real))
    d_fake, tape_f = forward(model.discriminator, with_labels(x_fake, y_fake))
    loss = discriminator_loss(d_real, d_fake)
    br, bf = x_real.shape[0], x_fake.shape[0]
    g_real, _ = backward(model.discriminator, tape_r, -0.5 / (br * _clamp(d_real)))
    g_fake, _ = backward(model.discriminator, tape_f, 0.5 / (bf * (1.0 - _clamp(d_fake))))
    grads = [a + b for a, b in zip(g_real, g_fake)]
    accounting.note(tape_r, tape_f, g_real, g_fake)
    adam_step(model.discriminator, grads, state)
    return loss


def generator_step(model, z, y, state):
    """One Adam step on the generator through a frozen discriminator; returns the loss before."""
    x_fake, tape_g = forward(model.generator, with_labels(z, y))
    d_fake, tape_d = forward(model.discriminator, with_labels(x_fake, y))
    loss = generator_loss(d_fake)
    _, g_in = backward(model.discriminator, tape_d, -1.0 / (z.shape[0] * _clamp(d_fake)))
    grads, _ = backward(model.generator, tape_g, g_in[:, :-1])
    accounting.note(tape_g, tape_d, grads)
    adam_step(model.generator, grads, state)
    return loss


def gan_train(ds, epochs=100, batch_size=128, noise_dim=32, hidden_sizes=(64, 64), seed=0,
              learning_rate=5e-4, beta1=0.5, disc_activation="leaky_relu"):
    """Adversarially train a conditional GAN on ``ds``; returns ``(model, TrainLog)``."""
    check_trainable(ds, "gan_train")
    model = build_gan(ds.n_features, noise_dim, hidden_sizes, seed, ds.feature_names,
                      disc_activation)
    d_opt = AdamState.for_net(model.discriminator, learning_rate, beta1=beta1)
    g_opt = AdamState.for_net(model.generator, learning_rate, beta1=beta1)
    rng = make_rng(seed, 3)
    log = TrainLog()
    x_all, y_all = ds.features, ds.labels
    n = ds.n_rows
    with accounting.live(ds, model, d_opt, g_opt):
        for epoch in range(1, epochs + 1):
            clock = Stopwatch()
            order = rng.permutation(n)
            d_sum = g_sum = 0.0
            for batch_no, start in enumerate(range(0, n, batch_size), start=1):
                idx = order[start:start + batch_size]
                x, y = x_all[idx], y_all[idx]
                b = idx.size
                z = rng.standard_normal((b, noise_dim))
                x_fake = forward(model.generator, with_labels(z, y))[0]
                d_loss = discriminator_step(model, x, y, x_fake, y, d_opt)
                z = rng.standard_normal((b, noise_dim))
                g_loss = generator_step(model, z, y, g_opt)
                if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
                    raise TrainingError("non-finite GAN loss", epoch, batch_no)
                d_sum += d_loss * b
                g_sum += g_loss * b
            log.add(epoch, clock.lap(), discriminator=d_sum / n, generator=g_sum / n)
    return model, log


def gan_generate(model, target_class, n_samples, seed):
    """Run the generator on ``n_samples`` noise draws z ~ N(0, I) with label ``target_class``."""
    check_target_class(target_class)
    rng = make_rng(seed, target_class)
    z = rng.standard_normal((n_samples, model.noise_dim))
    feats = forward(model.generator, with_label(z, target_class))[0] if n_samples else \
        np.empty((0, len(model.feature_names)))
    return synthetic_dataset(feats, target_class, model.feature_names, "gan",
                             {"n_samples": int(n_samples), "seed": int(seed)})
