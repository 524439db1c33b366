"""Conditional VAE for tabular flow features.

The encoder maps a feature row to the mean and log-variance of a Gaussian
posterior; the decoder takes a latent sample with the class label appended
and reconstructs the row through a sigmoid output. Loss per row:
``MSE(x, x_hat) + beta * KL(N(mu, sigma^2) || N(0, I))``.

The squared error is the log-likelihood of a Gaussian decoder with fixed
variance. After training, that per-feature variance is estimated from the
reconstruction residuals, and generation samples from the decoder
distribution ``N(x_hat, diag(output_std^2))`` rather than returning the
mean, which alone is visibly under-dispersed.
"""
from dataclasses import dataclass

import numpy as np

from .. import accounting
from .._random import make_rng
from ..netcore import AdamState, adam_step, backward, forward, init_net
from ._base import (Stopwatch, TrainLog, TrainingError, check_target_class, check_trainable,
                    synthetic_dataset, with_label, with_labels)


@dataclass
class VaeModel:
    encoder: object
    decoder: object
    latent_dim: int
    beta: float
    feature_names: list
    condition_encoder: bool = False
    output_std: object = None  # per-feature decoder noise; None samples the mean only
    method = "vae"

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        n_in = len(self.feature_names) + (1 if self.condition_encoder else 0)
        if self.encoder.layer_sizes[0] != n_in:
            raise ValueError(f"encoder input must be {n_in} wide")
        if self.encoder.layer_sizes[-1] != 2 * self.latent_dim:
            raise ValueError("encoder must output 2 * latent_dim values (mean, log-variance)")
        if self.decoder.layer_sizes[0] != self.latent_dim + 1:
            raise ValueError("decoder input must be latent_dim + 1 (label appended)")
        if self.output_std is not None:
            self.output_std = np.asarray(self.output_std, dtype=np.float64)
            if self.output_std.shape != (len(self.feature_names),):
                raise ValueError("output_std needs one entry per feature")

    @property
    def nbytes(self):
        return self.encoder.nbytes + self.decoder.nbytes

    def generate(self, target_class, n_samples, seed):
        return vae_generate(self, target_class, n_samples, seed)


def kl_divergence(mu, logvar):
    """Per-row KL of N(mu, exp(logvar)) from N(0, I), summed over latent dimensions."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    return 0.5 * np.sum(mu * mu + np.exp(logvar) - 1.0 - logvar, axis=-1)


def reparameterize(mu, logvar, eps):
    return mu + np.exp(0.5 * logvar) * eps


def build_vae(n_features, latent_dim=16, hidden_sizes=(64, 32), beta=1.0, seed=0,
              feature_names=None, condition_encoder=False):
    hidden = list(hidden_sizes)
    enc = init_net([n_features + int(condition_encoder)] + hidden + [2 * latent_dim],
                   ["relu"] * len(hidden) + ["identity"], make_rng(seed, 1).integers(2**63))
    dec = init_net([latent_dim + 1] + hidden[::-1] + [n_features],
                   ["relu"] * len(hidden) + ["sigmoid"], make_rng(seed, 2).integers(2**63))
    names = feature_names or [f"f{j}" for j in range(n_features)]
    return VaeModel(enc, dec, latent_dim, beta, list(names), condition_encoder)


def vae_loss_and_grads(model, x, y, eps):
    """Mean batch loss and exact gradients for one minibatch with fixed noise ``eps``.

    Returns ``(recon, kl, enc_grads, dec_grads, tapes)``.
    """
    b, d = x.shape
    L = model.latent_dim
    enc_in = with_labels(x, y) if model.condition_encoder else x
    enc_out, enc_tape = forward(model.encoder, enc_in)
    mu, logvar = enc_out[:, :L], enc_out[:, L:]
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eps
    x_hat, dec_tape = forward(model.decoder, with_labels(z, y))

    diff = x_hat - x
    recon = float(np.mean(np.sum(diff * diff, axis=1) / d))
    kl = float(np.mean(kl_divergence(mu, logvar)))

    g_xhat = (2.0 / (b * d)) * diff
    dec_grads, g_in = backward(model.decoder, dec_tape, g_xhat)
    g_z = g_in[:, :L]
    g_mu = g_z + model.beta * mu / b
    g_logvar = g_z * eps * 0.5 * sigma + model.beta * 0.5 * (sigma * sigma - 1.0) / b
    enc_grads, _ = backward(model.encoder, enc_tape, np.column_stack([g_mu, g_logvar]))
    return recon, kl, enc_grads, dec_grads, (enc_tape, dec_tape)


def vae_train(ds, epochs=50, batch_size=128, latent_dim=16, hidden_sizes=(64, 32), beta=1.0,
              seed=0, learning_rate=1e-3, condition_encoder=False, sample_noise=True):
    """Train a conditional VAE on ``ds`` (features expected in [0, 1]).

    Returns ``(model, TrainLog)``; the log holds the mean reconstruction, KL
    and total loss of every epoch. With ``sample_noise`` the decoder noise
    scale is fitted on the training rows afterwards.
    """
    check_trainable(ds, "vae_train")
    model = build_vae(ds.n_features, latent_dim, hidden_sizes, beta, seed, ds.feature_names,
                      condition_encoder)
    enc_opt = AdamState.for_net(model.encoder, learning_rate)
    dec_opt = AdamState.for_net(model.decoder, learning_rate)
    rng = make_rng(seed, 3)
    log = TrainLog()
    x_all, y_all = ds.features, ds.labels
    n = ds.n_rows
    with accounting.live(ds, model, enc_opt, dec_opt):
        for epoch in range(1, epochs + 1):
            clock = Stopwatch()
            order = rng.permutation(n)
            sums = np.zeros(3)
            for batch_no, start in enumerate(range(0, n, batch_size), start=1):
                idx = order[start:start + batch_size]
                x, y = x_all[idx], y_all[idx]
                eps = rng.standard_normal((idx.size, latent_dim))
                recon, kl, g_enc, g_dec, tapes = vae_loss_and_grads(model, x, y, eps)
                total = recon + beta * kl
                if not np.isfinite(total):
                    raise TrainingError("non-finite VAE loss", epoch, batch_no)
                accounting.note(x, eps, tapes, g_enc, g_dec)
                adam_step(model.encoder, g_enc, enc_opt)
                adam_step(model.decoder, g_dec, dec_opt)
                sums += np.array([recon, kl, total]) * idx.size
            sums /= n
            log.add(epoch, clock.lap(), reconstruction=sums[0], kl=sums[1], total=sums[2])
        if sample_noise:
            model.output_std = residual_std(model, x_all, y_all)
    return model, log


def residual_std(model, x, y):
    """Per-feature RMS reconstruction error at the posterior mean (the Gaussian decoder's MLE scale)."""
    enc_in = with_labels(x, y) if model.condition_encoder else x
    mu = forward(model.encoder, enc_in)[0][:, :model.latent_dim]
    x_hat = forward(model.decoder, with_labels(mu, y))[0]
    accounting.note(mu, x_hat)
    return np.sqrt(np.mean((x - x_hat) ** 2, axis=0))


def vae_generate(model, target_class, n_samples, seed):
    """Decode ``n_samples`` prior draws z ~ N(0, I) conditioned on ``target_class``.

    When the model carries ``output_std``, Gaussian decoder noise is added.
    """
    check_target_class(target_class)
    rng = make_rng(seed, target_class)
    z = rng.standard_normal((n_samples, model.latent_dim))
    feats = forward(model.decoder, with_label(z, target_class))[0] if n_samples else \
        np.empty((0, len(model.feature_names)))
    if model.output_std is not None:
        feats = np.clip(feats + model.output_std * rng.standard_normal(feats.shape), 0.0, 1.0)
    return synthetic_dataset(feats, target_class, model.feature_names, "vae",
                             {"n_samples": int(n_samples), "seed": int(seed)})
