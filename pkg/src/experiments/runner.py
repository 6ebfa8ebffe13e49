"""
Experiment Runner - Comparison runs with and without diversification

Every arm of a comparison starts from make_rng(seed), so both arms draw
identical initial parameters and identical minibatch orders until their
updates diverge.
"""
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from src.data.datasets import MNIST_TRAIN_SIZE, LabeledDataset, binarize, resize_images, train_validation_split
from src.data.loaders import load_named
from src.data.synthetic import synth_blobs
from src.experiments.artifacts import save_image_grid, write_counts_csv, write_summary
from src.experiments.checkpoint import save_checkpoint
from src.experiments.config import DatasetName, ExperimentConfig
from src.experiments.oracles import run_oracles
from src.experiments.state import ExperimentKind, RunRecord
from src.models.dbn import export_mlp, pretrain_layerwise
from src.models.dnn import DrSchedule, Mlp, SideInfoMode, train_dnn
from src.models.vae import DrMode, VaeModel, manifold_grid, train_vae
from src.numerics import make_rng
from src.regularization.sideinfo import sample_global_pairs, simulate_pair_counts
from src.utils.errors import ConfigError
from src.utils.logging import logger

# Separate streams so data generation and side information never touch the arms' stream
DATA_STREAM = 1
PAIRS_STREAM = 2

BLOBS_DIM = 16
BLOBS_TRAIN_PER_CLASS = 50
BLOBS_TEST_PER_CLASS = 20


def image_shape(n_features: int) -> Optional[Tuple[int, int]]:
    """(side, side) when the features form a square grayscale image"""
    side = int(round(math.sqrt(n_features)))
    return (side, side) if side * side == n_features else None


def _prepare(dataset: LabeledDataset, cfg: ExperimentConfig, subset: Optional[int]) -> LabeledDataset:
    dataset = dataset.take(subset)
    if cfg.downsample is not None:
        shape = image_shape(dataset.n_features)
        if shape is None:
            raise ConfigError(f"downsample needs square grayscale images, got {dataset.n_features} features")
        dataset = resize_images(dataset, shape, (cfg.downsample, cfg.downsample))
    if cfg.binarize_threshold is not None:
        dataset = binarize(dataset, cfg.binarize_threshold)
    return dataset


def load_experiment_data(cfg: ExperimentConfig) -> Tuple[LabeledDataset, LabeledDataset]:
    """
    Train and test sets for a config, after subsetting, resizing and binarization

    Returns:
        (train, test)
    """
    if cfg.dataset is DatasetName.BLOBS:
        rng = make_rng(cfg.seed, stream=DATA_STREAM)
        train = synth_blobs(BLOBS_TRAIN_PER_CLASS, cfg.n_classes, BLOBS_DIM, 0.8, rng)
        test = synth_blobs(BLOBS_TEST_PER_CLASS, cfg.n_classes, BLOBS_DIM, 0.8, rng)
    else:
        train = load_named(cfg.dataset.value, "train", cfg.data_root)
        if cfg.dataset is DatasetName.MNIST and len(train) > MNIST_TRAIN_SIZE:
            train, _ = train_validation_split(train)
        test = load_named(cfg.dataset.value, "test", cfg.data_root)
    train = _prepare(train, cfg, cfg.train_subset)
    test = _prepare(test, cfg, cfg.test_subset)
    logger.info(f"Data: {cfg.dataset.value} train={len(train)} test={len(test)} features={train.n_features}")
    return train, test


def comparison_arms(cfg: ExperimentConfig) -> List[Tuple[str, float]]:
    """(arm name, alpha) pairs; a zero alpha gives only the unregularized arm"""
    if cfg.alpha == 0:
        return [("no-dr", 0.0)]
    arms = [("dr", cfg.alpha)]
    if cfg.compare:
        arms.append(("no-dr", 0.0))
    return arms


def run_pretrain_dbn(cfg: ExperimentConfig, record: RunRecord):
    """Greedy pretraining per arm, then plain fine-tuning of the exported classifier"""
    train, test = load_experiment_data(cfg)
    out = Path(cfg.output_dir)
    for name, alpha in comparison_arms(cfg):
        record.start_arm(name, alpha)
        rng = make_rng(cfg.seed)
        stack, curves = pretrain_layerwise(train.inputs, train.labels, cfg.layer_sizes, cfg.lr, alpha, cfg.k,
                                           cfg.epochs, cfg.batch_size, rng, arm=name)
        for depth, curve in enumerate(curves):
            path = out / f"{name}_layer{depth}.csv"
            curve.to_csv(path)
            record.add_artifact(path)
        record.add_artifact(save_checkpoint(stack, out / f"{name}_stack.drn"))

        model = export_mlp(stack, train.n_classes, rng)
        record.add_artifact(save_checkpoint(model, out / f"{name}_init.drn"))
        model, finetune = train_dnn(model, train, test, DrSchedule.off(), cfg.finetune_lr, cfg.finetune_epochs,
                                    cfg.batch_size, rng, side_info=SideInfoMode.BATCH, arm=f"{name}/finetune")
        finetune.to_csv(out / f"{name}_finetune.csv")
        record.add_artifact(out / f"{name}_finetune.csv")
        record.add_artifact(save_checkpoint(model, out / f"{name}_final.drn"))

        final = {f"layer{depth}_pll": curve.last()["pll"] for depth, curve in enumerate(curves)}
        final["test_error"] = finetune.last()["test_error"]
        logger.log_arm(name, record.current_arm.minutes, final)
        record.complete_arm(final)


def run_train_dnn(cfg: ExperimentConfig, record: RunRecord):
    """Backprop from a shared initialization, with and without layer diversification"""
    train, test = load_experiment_data(cfg)
    out = Path(cfg.output_dir)
    sizes = [train.n_features, *cfg.layer_sizes, train.n_classes]
    global_pairs = None
    if cfg.side_info is SideInfoMode.GLOBAL and cfg.alpha > 0:
        global_pairs = sample_global_pairs(train.labels, cfg.global_pairs, make_rng(cfg.seed, stream=PAIRS_STREAM))
        record.notes["global_pairs"] = len(global_pairs)

    for name, alpha in comparison_arms(cfg):
        record.start_arm(name, alpha)
        rng = make_rng(cfg.seed)
        model = Mlp.initialize(sizes, rng, std=cfg.init_std)
        record.add_artifact(save_checkpoint(model, out / f"{name}_init.drn"))
        schedule = DrSchedule(alpha, cfg.decay, cfg.per_layer_scale)
        model, curve = train_dnn(model, train, test, schedule, cfg.lr, cfg.epochs, cfg.batch_size, rng,
                                 side_info=cfg.side_info, global_pairs=global_pairs,
                                 norm_penalty=cfg.norm_penalty, arm=name)
        curve.to_csv(out / f"{name}.csv")
        record.add_artifact(out / f"{name}.csv")
        record.add_artifact(save_checkpoint(model, out / f"{name}_final.drn"))
        logger.log_arm(name, record.current_arm.minutes, curve.last())
        record.complete_arm(curve.last())


def run_train_vae(cfg: ExperimentConfig, record: RunRecord):
    """VAE training per arm plus manifold grids for 2-d latent spaces"""
    train, _ = load_experiment_data(cfg)
    out = Path(cfg.output_dir)
    shape = image_shape(train.n_features)
    arms = [(name, alpha, cfg.dr_mode if alpha > 0 else DrMode.NONE) for name, alpha in comparison_arms(cfg)]

    for name, alpha, mode in arms:
        record.start_arm(name, alpha)
        rng = make_rng(cfg.seed)
        model = VaeModel.initialize(train.n_features, cfg.layer_sizes, cfg.latent_dim, rng)
        record.add_artifact(save_checkpoint(model, out / f"{name}_init.drn"))
        model, curve = train_vae(model, train.inputs, train.labels, cfg.lr, cfg.epochs, cfg.batch_size,
                                 alpha, mode, rng, arm=name)
        curve.to_csv(out / f"{name}.csv")
        record.add_artifact(out / f"{name}.csv")
        record.add_artifact(save_checkpoint(model, out / f"{name}_final.drn"))

        if cfg.latent_dim == 2 and shape is not None:
            lo, hi = cfg.grid_range
            grid = manifold_grid(model, lo, hi, cfg.grid_steps)
            record.add_artifact(save_image_grid(grid, shape, out / f"{name}_manifold.png"))
        elif cfg.latent_dim == 2:
            logger.warning(f"[{name}] {train.n_features} features do not form a square image; no manifold grid")
        logger.log_arm(name, record.current_arm.minutes, curve.last())
        record.complete_arm(curve.last())


def run_gradcheck(cfg: ExperimentConfig, record: RunRecord) -> int:
    """All gradient and enumeration oracles; nonzero exit when any exceeds its tolerance"""
    record.start_arm("gradcheck", 0.0)
    results = run_oracles(cfg.instances, cfg.seed)
    final = {result.name: result.max_error for result in results}
    record.notes["tolerances"] = {result.name: result.tolerance for result in results}
    record.notes["failed"] = [result.name for result in results if not result.passed]
    record.complete_arm(final)
    return 0 if all(result.passed for result in results) else 1


def run_pairs_stats(cfg: ExperimentConfig, record: RunRecord):
    """Pair counts of uniformly labeled batches"""
    record.start_arm("pairs-stats", 0.0)
    counts = simulate_pair_counts(cfg.stat_batches, cfg.batch_size, cfg.n_classes, make_rng(cfg.seed))
    record.add_artifact(write_counts_csv(counts, Path(cfg.output_dir) / "pairs.csv"))
    expected = math.comb(cfg.batch_size, 2) * (1.0 - 1.0 / cfg.n_classes)
    final = {
        "mean_pair_count": float(np.mean(counts)),
        "min_pair_count": float(np.min(counts)),
        "max_pair_count": float(np.max(counts)),
        "expected_pair_count": expected,
    }
    logger.info(f"[pairs-stats] {logger.format_metrics(final)}")
    record.complete_arm(final)


def run(cfg: ExperimentConfig) -> int:
    """
    Run one experiment and write its artifacts under cfg.output_dir

    Returns:
        Exit status (0 success, 1 oracle failure)
    """
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    record = RunRecord(kind=cfg.kind, seed=cfg.seed)
    logger.info(f"Running {cfg.kind.value} (seed {cfg.seed}) into {cfg.output_dir}")

    status = 0
    try:
        if cfg.kind is ExperimentKind.PRETRAIN_DBN:
            run_pretrain_dbn(cfg, record)
        elif cfg.kind is ExperimentKind.TRAIN_DNN:
            run_train_dnn(cfg, record)
        elif cfg.kind is ExperimentKind.TRAIN_VAE:
            run_train_vae(cfg, record)
        elif cfg.kind is ExperimentKind.GRADCHECK:
            status = run_gradcheck(cfg, record)
        else:
            run_pairs_stats(cfg, record)
    except Exception as e:
        record.fail_arm(f"{type(e).__name__}: {e}")
        raise
    finally:
        record.notes["config"] = cfg.model_dump(mode="json")
        write_summary(record.get_summary(), Path(cfg.output_dir) / "summary.json")
    return status
