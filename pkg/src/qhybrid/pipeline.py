"""Experiment stages and the cached end-to-end pipeline.

Every stage derives its randomness from Rng(seed).split(<stage label>), so
stages are independent of execution order and re-runs are byte-identical.
Stage outputs live under one output directory; the pipeline re-runs a stage
when its outputs are missing, when --force is given, or when an upstream
stage ran in this invocation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import load_archive_dict, save_archive
from .config import ExperimentConfig, require_data
from .data import AugmentSpec, augment, load_raw_dataset, one_hot
from .network import Autoencoder, Network, make_autoencoder, make_classifier
from .optim import Adam
from .qfeatures import ScalingStats, transform_features
from .reports import (
    evaluate_classifier,
    read_csv,
    write_confusion_csv,
    write_csv,
    write_metrics_csv,
    write_pgm,
)
from .rng import Rng
from .train import train

MODE_CODES = {"exact": 0.0, "sampled": 1.0}
LAYOUT_CODES = {"marginal": 0.0, "histogram": 1.0}


class StageError(Exception):
    """A pipeline stage failed; the message carries the stage name."""


@dataclass
class StagePaths:
    out_dir: Path

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.ae_model = self.out_dir / "ae_model.qhm"
        self.ae_loss_csv = self.out_dir / "ae_loss.csv"
        self.recon_dir = self.out_dir / "recon"
        self.latents = self.out_dir / "latents.qhm"
        self.qfeatures = self.out_dir / "qfeatures.qhm"
        self.clf_model = {
            "latent": self.out_dir / "clf_latent.qhm",
            "quantum": self.out_dir / "clf_quantum.qhm",
        }
        self.clf_history_csv = {
            "latent": self.out_dir / "clf_latent_history.csv",
            "quantum": self.out_dir / "clf_quantum_history.csv",
        }
        self.eval_confusion_csv = {
            "latent": self.out_dir / "eval_latent_confusion.csv",
            "quantum": self.out_dir / "eval_quantum_confusion.csv",
        }
        self.eval_metrics_csv = {
            "latent": self.out_dir / "eval_latent_metrics.csv",
            "quantum": self.out_dir / "eval_quantum_metrics.csv",
        }
        self.summary = self.out_dir / "summary.txt"


@dataclass
class Splits:
    train_images: np.ndarray  # (N, 28, 28) uint8
    train_labels: np.ndarray
    val_images: np.ndarray
    val_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray


def load_splits(cfg: ExperimentConfig) -> Splits:
    """Seed-shuffle the training set, take the configured subset, and hold
    out the last val_fraction of it; the test files stay untouched."""
    require_data(cfg)
    raw_train = load_raw_dataset(cfg.train_images, cfg.train_labels)
    raw_test = load_raw_dataset(cfg.test_images, cfg.test_labels)
    order = Rng(cfg.seed).split("valsplit").permutation(len(raw_train))
    if cfg.train_subset:
        order = order[: cfg.train_subset]
    n_val = max(1, int(round(len(order) * cfg.val_fraction)))
    if n_val >= len(order):
        raise StageError(f"validation split swallows all {len(order)} rows")
    train_idx, val_idx = order[:-n_val], order[-n_val:]
    return Splits(
        train_images=raw_train.images[train_idx],
        train_labels=raw_train.labels[train_idx],
        val_images=raw_train.images[val_idx],
        val_labels=raw_train.labels[val_idx],
        test_images=raw_test.images,
        test_labels=raw_test.labels,
    )


def _flatten01(images: np.ndarray) -> np.ndarray:
    return images.reshape(len(images), -1).astype(np.float64) / 255.0


def _augment_spec(cfg: ExperimentConfig) -> AugmentSpec:
    return AugmentSpec(
        rotate_max_deg=cfg.rotate_max_deg,
        shift_max_px=cfg.shift_max_px,
        hflip_enabled=cfg.hflip,
        probability=cfg.augment_prob,
    )


def _augment_images(images: np.ndarray, spec: AugmentSpec, rng: Rng) -> np.ndarray:
    out = np.empty_like(images)
    for i in range(len(images)):
        out[i] = augment(images[i], spec, rng)
    return out


def stage_train_ae(cfg: ExperimentConfig, paths: StagePaths, splits: Splits) -> None:
    rng = Rng(cfg.seed).split("train-ae")
    x_train = _flatten01(splits.train_images)
    x_val = _flatten01(splits.val_images)
    ae = make_autoencoder(rng.split("init"))

    epoch_features = None
    if cfg.augment and cfg.augment_stage in ("ae", "both"):
        spec = _augment_spec(cfg)

        def epoch_features(epoch: int) -> np.ndarray:
            fresh = _augment_images(splits.train_images, spec, rng.split(f"augment/{epoch}"))
            return _flatten01(fresh)

    history = train(
        ae.net, x_train, None,
        epochs=cfg.ae_epochs, batch_size=cfg.ae_batch, adam=Adam(alpha=cfg.ae_lr),
        rng=rng.split("loop"), x_val=x_val,
        lr_step=cfg.lr_step, lr_factor=cfg.lr_factor, epoch_features=epoch_features,
    )
    ae.save(paths.ae_model)
    write_csv(paths.ae_loss_csv, ["epoch", "train_mse", "val_mse"],
              [[rec.epoch, rec.train_loss, rec.val_loss] for rec in history])
    paths.recon_dir.mkdir(parents=True, exist_ok=True)
    n_pairs = min(10, len(x_val))
    recon = ae.reconstruct(x_val[:n_pairs])
    for i in range(n_pairs):
        write_pgm(paths.recon_dir / f"recon_{i:02d}_orig.pgm", x_val[i].reshape(28, 28))
        write_pgm(paths.recon_dir / f"recon_{i:02d}_ae.pgm", recon[i].reshape(28, 28))


def stage_encode(cfg: ExperimentConfig, paths: StagePaths, splits: Splits) -> None:
    ae = Autoencoder.load(paths.ae_model)
    train_images = splits.train_images
    train_labels = splits.train_labels
    if cfg.augment and cfg.augment_stage in ("clf", "both") and cfg.augment_copies > 0:
        # expand the classifier's training set with augmented copies; the
        # originals keep their leading positions
        spec = _augment_spec(cfg)
        rng = Rng(cfg.seed).split("encode-augment")
        blocks = [train_images]
        for c in range(cfg.augment_copies):
            blocks.append(_augment_images(splits.train_images, spec, rng.split(f"copy/{c}")))
        train_images = np.concatenate(blocks, axis=0)
        train_labels = np.tile(splits.train_labels, 1 + cfg.augment_copies)
    entries = [
        ("latents/train", ae.encode(_flatten01(train_images))),
        ("labels/train", train_labels.astype(np.float64)),
        ("latents/val", ae.encode(_flatten01(splits.val_images))),
        ("labels/val", splits.val_labels.astype(np.float64)),
        ("latents/test", ae.encode(_flatten01(splits.test_images))),
        ("labels/test", splits.test_labels.astype(np.float64)),
    ]
    save_archive(entries, paths.latents)


def stage_qtransform(cfg: ExperimentConfig, paths: StagePaths) -> None:
    entries = load_archive_dict(paths.latents)
    stats = ScalingStats.fit(entries["latents/train"])
    rng = Rng(cfg.seed).split("qtransform")
    out = [
        ("qscale/min", stats.minimum),
        ("qscale/max", stats.maximum),
        ("meta/mode", np.array([MODE_CODES[cfg.quantum_mode]])),
        ("meta/shots", np.array([float(cfg.shots)])),
        ("meta/seed", np.array([float(cfg.seed)])),
        ("meta/layout", np.array([LAYOUT_CODES[cfg.quantum_layout]])),
    ]
    for split in ("train", "val", "test"):
        features = transform_features(
            entries[f"latents/{split}"], stats,
            mode=cfg.quantum_mode, shots=cfg.shots, rng=rng.split(split),
            layout=cfg.quantum_layout,
        )
        out.append((f"qfeat/{split}", features))
        out.append((f"labels/{split}", entries[f"labels/{split}"]))
    save_archive(out, paths.qfeatures)


def _features_for(which: str, paths: StagePaths):
    if which == "latent":
        entries = load_archive_dict(paths.latents)
        key = "latents"
    elif which == "quantum":
        entries = load_archive_dict(paths.qfeatures)
        key = "qfeat"
    else:
        raise ValueError(f"feature set must be latent or quantum, got {which!r}")
    sets = {}
    for split in ("train", "val", "test"):
        x = entries[f"{key}/{split}"]
        y = one_hot(entries[f"labels/{split}"].astype(np.int64))
        sets[split] = (x, y)
    return sets


def stage_train_clf(cfg: ExperimentConfig, paths: StagePaths, which: str) -> None:
    sets = _features_for(which, paths)
    x_train, y_train = sets["train"]
    x_val, y_val = sets["val"]
    if len(x_train) != len(y_train):
        raise StageError(f"feature/label count mismatch: {len(x_train)} vs {len(y_train)}")
    rng = Rng(cfg.seed).split(f"train-clf/{which}")
    net = make_classifier(
        x_train.shape[1], rng.split("init"),
        hidden=tuple(cfg.clf_widths), dropout=cfg.clf_dropout,
    )
    history = train(
        net, x_train, y_train,
        epochs=cfg.clf_epochs, batch_size=cfg.clf_batch, adam=Adam(alpha=cfg.clf_lr),
        rng=rng.split("loop"), x_val=x_val, y_val=y_val,
        lr_step=cfg.lr_step, lr_factor=cfg.lr_factor,
    )
    net.save(paths.clf_model[which])
    write_csv(
        paths.clf_history_csv[which],
        ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"],
        [[r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc] for r in history],
    )


def stage_eval(cfg: ExperimentConfig, paths: StagePaths, which: str) -> None:
    sets = _features_for(which, paths)
    x_test, y_test = sets["test"]
    net = Network.load(paths.clf_model[which])
    report = evaluate_classifier(net, x_test, y_test)
    write_confusion_csv(paths.eval_confusion_csv[which], report.confusion)
    write_metrics_csv(paths.eval_metrics_csv[which], report)


def _final_history_row(path) -> dict[str, float]:
    header, rows = read_csv(path)
    if not rows:
        return {}
    return {name: float(cell) for name, cell in zip(header, rows[-1]) if cell != "None"}


def _metric_map(path) -> dict[str, float]:
    _, rows = read_csv(path)
    return {name: float(value) for name, value in rows}


def stage_summary(cfg: ExperimentConfig, paths: StagePaths) -> str:
    entries = load_archive_dict(paths.latents)
    ae_final = _final_history_row(paths.ae_loss_csv)
    lines = [
        "hybrid quantum-classical experiment summary",
        "===========================================",
        f"seed: {cfg.seed}",
        "samples: train={} val={} test={}".format(
            len(entries["latents/train"]), len(entries["latents/val"]),
            len(entries["latents/test"]),
        ),
        f"quantum mode: {cfg.quantum_mode} (shots={cfg.shots}, layout={cfg.quantum_layout})",
        "",
    ]
    if ae_final:
        lines.append(
            "autoencoder: train_mse={:.6f} val_mse={:.6f} (epochs={})".format(
                ae_final["train_mse"], ae_final["val_mse"], cfg.ae_epochs
            )
        )
    else:
        lines.append("autoencoder: no training epochs recorded")
    lines += [
        "",
        "classifier            train_acc  val_acc  test_acc  test_loss",
    ]
    for which, label in (("latent", "latent (baseline)"), ("quantum", "quantum features")):
        hist = _final_history_row(paths.clf_history_csv[which])
        metrics = _metric_map(paths.eval_metrics_csv[which])
        lines.append(
            "{:<20}  {:>9} {:>8} {:>9} {:>10}".format(
                label,
                "{:.4f}".format(hist["train_acc"]) if hist else "n/a",
                "{:.4f}".format(hist["val_acc"]) if hist else "n/a",
                "{:.4f}".format(metrics["accuracy"]),
                "{:.4f}".format(metrics["loss"]),
            )
        )
    text = "\n".join(lines) + "\n"
    paths.summary.write_text(text, encoding="utf-8")
    return text


_STAGE_DEPS = {
    "train-ae": (),
    "encode": ("train-ae",),
    "qtransform": ("encode",),
    "clf-latent": ("encode",),
    "clf-quantum": ("qtransform",),
    "eval-latent": ("clf-latent",),
    "eval-quantum": ("clf-quantum",),
    "summary": ("eval-latent", "eval-quantum"),
}

_STAGE_ORDER = tuple(_STAGE_DEPS)


def _stage_outputs(name: str, paths: StagePaths) -> tuple[Path, ...]:
    return {
        "train-ae": (paths.ae_model, paths.ae_loss_csv),
        "encode": (paths.latents,),
        "qtransform": (paths.qfeatures,),
        "clf-latent": (paths.clf_model["latent"], paths.clf_history_csv["latent"]),
        "clf-quantum": (paths.clf_model["quantum"], paths.clf_history_csv["quantum"]),
        "eval-latent": (paths.eval_confusion_csv["latent"], paths.eval_metrics_csv["latent"]),
        "eval-quantum": (paths.eval_confusion_csv["quantum"], paths.eval_metrics_csv["quantum"]),
        "summary": (paths.summary,),
    }[name]


def run_pipeline(cfg: ExperimentConfig, *, force: bool = False, log=print) -> str:
    """Run train-ae -> encode -> qtransform -> classifiers -> evals -> summary
    with per-stage caching; returns the summary text."""
    paths = StagePaths(cfg.out_dir)
    paths.out_dir.mkdir(parents=True, exist_ok=True)
    splits_box: list[Splits] = []

    def splits() -> Splits:
        if not splits_box:
            splits_box.append(load_splits(cfg))
        return splits_box[0]

    runners = {
        "train-ae": lambda: stage_train_ae(cfg, paths, splits()),
        "encode": lambda: stage_encode(cfg, paths, splits()),
        "qtransform": lambda: stage_qtransform(cfg, paths),
        "clf-latent": lambda: stage_train_clf(cfg, paths, "latent"),
        "clf-quantum": lambda: stage_train_clf(cfg, paths, "quantum"),
        "eval-latent": lambda: stage_eval(cfg, paths, "latent"),
        "eval-quantum": lambda: stage_eval(cfg, paths, "quantum"),
        "summary": lambda: stage_summary(cfg, paths),
    }

    ran: set[str] = set()
    for name in _STAGE_ORDER:
        missing = any(not p.exists() for p in _stage_outputs(name, paths))
        upstream_ran = any(dep in ran for dep in _STAGE_DEPS[name])
        if force or missing or upstream_ran:
            log(f"[{name}] running")
            try:
                runners[name]()
            except StageError:
                raise
            except Exception as exc:
                raise StageError(f"{name}: {exc}") from exc
            ran.add(name)
        else:
            log(f"[{name}] cached")
    return paths.summary.read_text(encoding="utf-8")


def check_thresholds(cfg: ExperimentConfig, paths: StagePaths) -> list[str]:
    """Compare recorded metrics against the config's --check floors."""
    failures = []
    ae_final = _final_history_row(paths.ae_loss_csv)
    if not ae_final or not np.isfinite(ae_final.get("val_mse", np.nan)):
        failures.append("autoencoder history records no validation MSE")
    elif ae_final["val_mse"] > cfg.check_ae_val_mse:
        failures.append(
            f"autoencoder val MSE {ae_final['val_mse']:.6f} > {cfg.check_ae_val_mse}"
        )
    for which, floor in (("latent", cfg.check_latent_val_acc),
                         ("quantum", cfg.check_quantum_val_acc)):
        hist = _final_history_row(paths.clf_history_csv[which])
        if not hist:
            failures.append(f"{which} classifier history is empty")
        elif hist["val_acc"] < floor:
            failures.append(f"{which} val accuracy {hist['val_acc']:.4f} < {floor}")
    return failures
