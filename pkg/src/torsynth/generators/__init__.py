"""SMOTE, conditional VAE and conditional GAN, each with train-then-generate per class."""
import json
import time

import numpy as np

from ..dataset import concat
from ..netcore import net_from_dict, net_to_dict
from ._base import TrainingError, TrainLog
from .gan import GanModel, gan_generate, gan_train
from .smote import SmoteConfig, SmoteModel, smote_fit, smote_generate
from .vae import VaeModel, kl_divergence, vae_generate, vae_train

FORMAT_VERSION = 1
METHODS = ("smote", "vae", "gan")


def generate_balanced(model, n_per_class, seed):
    """``n_per_class`` rows of class 0 followed by as many of class 1."""
    return concat([model.generate(0, n_per_class, seed), model.generate(1, n_per_class, seed)],
                  op="generate_balanced", params={"n_per_class": int(n_per_class),
                                                  "seed": int(seed), "method": model.method})


def generation_timing(model, n_samples, seed=0):
    """Wall-clock seconds to emit ``n_samples`` rows (split evenly over both classes)."""
    start = time.perf_counter()
    half = n_samples // 2
    model.generate(0, n_samples - half, seed)
    model.generate(1, half, seed)
    return time.perf_counter() - start


def model_to_dict(model, log=None):
    """JSON-ready document: method tag, configuration, network weights and training log."""
    doc = {"format_version": FORMAT_VERSION, "method": model.method,
           "feature_names": list(model.feature_names),
           "train_log": log.to_list() if log is not None else []}
    if isinstance(model, SmoteModel):
        doc["config"] = {"k_neighbors": model.config.k_neighbors, "seed": model.config.seed}
        doc["class_rows"] = {str(c): a.tolist() for c, a in model.class_rows.items()}
        doc["neighbors"] = {str(c): a.tolist() for c, a in model.neighbors.items()}
    elif isinstance(model, VaeModel):
        doc["config"] = {"latent_dim": model.latent_dim, "beta": model.beta,
                         "condition_encoder": model.condition_encoder,
                         "output_std": None if model.output_std is None
                         else model.output_std.tolist()}
        doc["encoder"] = net_to_dict(model.encoder)
        doc["decoder"] = net_to_dict(model.decoder)
    elif isinstance(model, GanModel):
        doc["config"] = {"noise_dim": model.noise_dim}
        doc["generator"] = net_to_dict(model.generator)
        doc["discriminator"] = net_to_dict(model.discriminator)
    else:
        raise TypeError(f"not a generator model: {type(model).__name__}")
    return doc


def model_from_dict(doc):
    """Inverse of :func:`model_to_dict`; returns ``(model, TrainLog)``."""
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported generator format version {doc.get('format_version')!r}")
    method = doc["method"]
    names = doc["feature_names"]
    cfg = doc["config"]
    if method == "smote":
        model = SmoteModel(SmoteConfig(cfg["k_neighbors"], cfg["seed"]), names,
                           {int(c): np.array(a, dtype=np.float64).reshape(-1, len(names))
                            for c, a in doc["class_rows"].items()},
                           {int(c): np.array(a, dtype=np.int64).reshape(-1, cfg["k_neighbors"])
                            for c, a in doc["neighbors"].items()})
    elif method == "vae":
        model = VaeModel(net_from_dict(doc["encoder"]), net_from_dict(doc["decoder"]),
                         cfg["latent_dim"], cfg["beta"], names, cfg["condition_encoder"],
                         cfg["output_std"])
    elif method == "gan":
        model = GanModel(net_from_dict(doc["generator"]), net_from_dict(doc["discriminator"]),
                         cfg["noise_dim"], names)
    else:
        raise ValueError(f"unknown generator method {method!r}")
    return model, TrainLog(list(doc.get("train_log", [])))


def save_model(model, path, log=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, log), fh)
    return path


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


__all__ = ["GanModel", "METHODS", "SmoteConfig", "SmoteModel", "TrainLog", "TrainingError",
           "VaeModel", "gan_generate", "gan_train", "generate_balanced", "generation_timing",
           "kl_divergence", "load_model", "model_from_dict", "model_to_dict", "save_model",
           "smote_fit", "smote_generate", "vae_generate", "vae_train"]
