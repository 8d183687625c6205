"""Layer stacks, model builders, and archive persistence."""

from __future__ import annotations

import numpy as np

from .archive import ArchiveError, load_archive, save_archive
from .layers import ACTIVATIONS, BatchNorm, Dense, Dropout
from .rng import Rng

_KIND_DENSE = 0.0
_KIND_BATCHNORM = 1.0
_KIND_DROPOUT = 2.0


class Network:
    """An ordered layer stack with a training/inference mode switch."""

    def __init__(self, layers):
        self.layers = list(layers)
        self.training = False
        self._forward_armed = False
        width = None
        for i, layer in enumerate(self.layers):
            if layer.in_width is not None:
                if width is not None and layer.in_width != width:
                    raise ValueError(
                        f"layer {i} expects width {layer.in_width} but receives {width}"
                    )
                width = layer.out_width

    def train(self) -> "Network":
        self.training = True
        return self

    def eval(self) -> "Network":
        self.training = False
        for layer in self.layers:
            layer.clear_cache()
        self._forward_armed = False
        return self

    def forward(self, x: np.ndarray, rng: Rng | None = None) -> np.ndarray:
        out = x
        for layer in self.layers:
            out = layer.forward(out, training=self.training, rng=rng)
        self._forward_armed = self.training
        return out

    def backward(self, loss_grad: np.ndarray) -> None:
        """Propagate dL/d(output) back through every layer, filling grads."""
        if not self._forward_armed:
            raise RuntimeError("backward requires a preceding forward in training mode")
        grad = loss_grad
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        self._forward_armed = False

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(arr for _, arr in layer.params())
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def archive_entries(self, prefix: str = "") -> list[tuple[str, np.ndarray]]:
        """Flatten the network into named tensors; metadata under "meta/"."""
        entries: list[tuple[str, np.ndarray]] = [
            (f"{prefix}meta/n_layers", np.array([float(len(self.layers))]))
        ]
        for i, layer in enumerate(self.layers):
            tag = f"{prefix}layer{i}"
            if isinstance(layer, Dense):
                act = float(ACTIVATIONS.index(layer.activation))
                meta = [_KIND_DENSE, layer.in_width, layer.out_width, act]
                entries.append((f"{prefix}meta/layer{i}", np.array(meta)))
                entries.append((f"{tag}/W", layer.W))
                entries.append((f"{tag}/b", layer.b))
            elif isinstance(layer, BatchNorm):
                meta = [_KIND_BATCHNORM, layer.in_width, layer.eps, layer.momentum]
                entries.append((f"{prefix}meta/layer{i}", np.array(meta)))
                entries.append((f"{tag}/running_mean", layer.running_mean))
                entries.append((f"{tag}/running_var", layer.running_var))
            elif isinstance(layer, Dropout):
                entries.append((f"{prefix}meta/layer{i}", np.array([_KIND_DROPOUT, layer.p])))
            else:
                raise ArchiveError(f"cannot serialize layer type {type(layer).__name__}")
        return entries

    @classmethod
    def from_entries(cls, entries: dict[str, np.ndarray], prefix: str = "") -> "Network":
        try:
            n_layers = int(entries[f"{prefix}meta/n_layers"][0])
        except KeyError as exc:
            raise ArchiveError(f"archive lacks network metadata: {exc}") from None
        layers = []
        for i in range(n_layers):
            meta = entries[f"{prefix}meta/layer{i}"]
            tag = f"{prefix}layer{i}"
            kind = meta[0]
            if kind == _KIND_DENSE:
                layer = Dense(int(meta[1]), int(meta[2]), ACTIVATIONS[int(meta[3])])
                layer.W = entries[f"{tag}/W"].copy()
                layer.b = entries[f"{tag}/b"].copy()
            elif kind == _KIND_BATCHNORM:
                layer = BatchNorm(int(meta[1]), eps=meta[2], momentum=meta[3])
                layer.running_mean = entries[f"{tag}/running_mean"].copy()
                layer.running_var = entries[f"{tag}/running_var"].copy()
            elif kind == _KIND_DROPOUT:
                layer = Dropout(meta[1])
            else:
                raise ArchiveError(f"unknown layer kind {kind} in archive")
            layers.append(layer)
        return cls(layers)

    def save(self, path, extra_entries=None) -> None:
        entries = self.archive_entries()
        if extra_entries:
            entries.extend(extra_entries)
        save_archive(entries, path)

    @classmethod
    def load(cls, path) -> "Network":
        return cls.from_entries(dict(load_archive(path)))


class Autoencoder:
    """Encoder/decoder pair held as one network; the first ``latent_layers``
    layers form the encoder."""

    def __init__(self, net: Network, latent_layers: int):
        self.net = net
        self.latent_layers = latent_layers

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Latent representation, evaluated in inference mode."""
        out = x
        for layer in self.net.layers[: self.latent_layers]:
            out = layer.forward(out, training=False)
        return out

    def decode(self, latents: np.ndarray) -> np.ndarray:
        """Reconstruction from latents; decode(encode(x)) == reconstruct(x)."""
        out = latents
        for layer in self.net.layers[self.latent_layers :]:
            out = layer.forward(out, training=False)
        return out

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        self.net.eval()
        return self.net.forward(x)

    def save(self, path) -> None:
        entries = self.net.archive_entries()
        entries.append(("meta/latent_layers", np.array([float(self.latent_layers)])))
        save_archive(entries, path)

    @classmethod
    def load(cls, path) -> "Autoencoder":
        entries = dict(load_archive(path))
        net = Network.from_entries(entries)
        try:
            latent_layers = int(entries["meta/latent_layers"][0])
        except KeyError:
            raise ArchiveError("archive lacks autoencoder metadata") from None
        return cls(net, latent_layers)


def make_autoencoder(rng: Rng, input_width: int = 784, hidden: int = 256,
                     latent: int = 64) -> Autoencoder:
    """Two relu encoder layers into the latent, mirrored decoder ending in
    sigmoid so reconstructions stay in [0, 1]."""
    net = Network([
        Dense(input_width, hidden, "relu", rng=rng),
        Dense(hidden, latent, "relu", rng=rng),
        Dense(latent, hidden, "relu", rng=rng),
        Dense(hidden, input_width, "sigmoid", rng=rng),
    ])
    return Autoencoder(net, latent_layers=2)


def make_classifier(in_width: int, rng: Rng, hidden=(128, 64, 32), n_classes: int = 10,
                    dropout: float = 0.3) -> Network:
    """Three dense+batchnorm+dropout blocks followed by a softmax output."""
    layers = []
    width = in_width
    for h in hidden:
        layers.append(Dense(width, h, "relu", rng=rng))
        layers.append(BatchNorm(h))
        layers.append(Dropout(dropout))
        width = h
    layers.append(Dense(width, n_classes, "softmax", rng=rng))
    return Network(layers)
