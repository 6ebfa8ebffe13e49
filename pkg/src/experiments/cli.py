"""
Command Line - argparse front end for the experiment runner
"""
import argparse
from typing import Any, Dict, List, Optional

from src.experiments.config import DatasetName, resolve_config
from src.experiments.runner import run
from src.experiments.state import ExperimentKind
from src.models.dnn import SideInfoMode
from src.models.vae import DrMode
from src.utils.config import Config
from src.utils.errors import DRError
from src.utils.logging import logger

# Exit status for configuration and data failures
EXIT_INVALID = 2


def _sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _add_shared(parser: argparse.ArgumentParser):
    parser.add_argument("--config", default=None, help="YAML config (default: config/config.yaml)")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (required unless set in YAML)")
    parser.add_argument("--output-dir", dest="output_dir", default=None)
    parser.add_argument("--data-root", dest="data_root", default=None, help="Dataset directory (or DR_DATA_ROOT)")
    parser.add_argument("--dataset", choices=[d.value for d in DatasetName], default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--lr", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None, help="Diversification weight (0 disables)")
    parser.add_argument("--decay", type=float, default=None, help="Per-epoch alpha multiplier in (0, 1]")
    parser.add_argument("--k", type=int, default=None, help="Gibbs rounds for CD-k")
    parser.add_argument("--layer-sizes", dest="layer_sizes", type=_sizes, default=None,
                        help="Hidden sizes, e.g. 500,300,200")
    parser.add_argument("--per-layer-scale", dest="per_layer_scale", type=_floats, default=None)
    parser.add_argument("--norm-penalty", dest="norm_penalty", type=float, default=None)
    parser.add_argument("--no-compare", dest="compare", action="store_const", const=False, default=None,
                        help="Run only the regularized arm")
    parser.add_argument("--train-subset", dest="train_subset", type=int, default=None)
    parser.add_argument("--test-subset", dest="test_subset", type=int, default=None)
    parser.add_argument("--downsample", type=int, default=None, help="Resize square images to NxN")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per experiment kind"""
    parser = argparse.ArgumentParser(
        prog="dr-experiments",
        description="Diversifying regularization experiments for RBMs, DBNs, sigmoid networks and VAEs",
    )
    subparsers = parser.add_subparsers(dest="kind", required=True)

    dbn = subparsers.add_parser(ExperimentKind.PRETRAIN_DBN.value, help="Greedy DBN pretraining plus fine-tuning")
    _add_shared(dbn)
    dbn.add_argument("--finetune-lr", dest="finetune_lr", type=float, default=None)
    dbn.add_argument("--finetune-epochs", dest="finetune_epochs", type=int, default=None)

    dnn = subparsers.add_parser(ExperimentKind.TRAIN_DNN.value, help="Sigmoid network with layer diversification")
    _add_shared(dnn)
    dnn.add_argument("--side-info", dest="side_info", choices=[m.value for m in SideInfoMode], default=None)
    dnn.add_argument("--global-pairs", dest="global_pairs", type=int, default=None)

    vae = subparsers.add_parser(ExperimentKind.TRAIN_VAE.value, help="VAE with diversified reconstructions")
    _add_shared(vae)
    vae.add_argument("--dr-mode", dest="dr_mode", choices=[m.value for m in DrMode], default=None)
    vae.add_argument("--latent-dim", dest="latent_dim", type=int, default=None)
    vae.add_argument("--hidden", dest="layer_sizes", type=_sizes, default=None, help="Encoder hidden sizes")
    vae.add_argument("--grid-steps", dest="grid_steps", type=int, default=None)

    gradcheck = subparsers.add_parser(ExperimentKind.GRADCHECK.value, help="Gradient and enumeration oracles")
    _add_shared(gradcheck)
    gradcheck.add_argument("--instances", type=int, default=None)

    stats = subparsers.add_parser(ExperimentKind.PAIRS_STATS.value, help="Pair counts of uniformly labeled batches")
    _add_shared(stats)
    stats.add_argument("--n-classes", dest="n_classes", type=int, default=None)
    stats.add_argument("--batches", dest="stat_batches", type=int, default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, resolve the configuration and run

    Returns:
        0 on success, 1 when an oracle fails, 2 on configuration or data errors
    """
    args = build_parser().parse_args(argv)
    overrides: Dict[str, Any] = {key: value for key, value in vars(args).items() if key not in ("kind", "config")}

    try:
        cfg = resolve_config(args.kind, Config(args.config), overrides)
        return run(cfg)
    except (DRError, FileNotFoundError) as e:
        logger.error(f"{args.kind} failed: {e}")
        return EXIT_INVALID
