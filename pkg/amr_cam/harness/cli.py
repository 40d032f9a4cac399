"""
Interfaz de línea de comandos `amr-cam`.

Subcomandos: train, eval, xi-sweep, bg-sweep, ablate, modfn-compare,
export-heatmaps y gen-data. Los errores conocidos terminan con una sola línea
`error: <mensaje>` en stderr y código 2.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from amr_cam.data import GenerationError
from amr_cam.data.cache import write_cache
from amr_cam.data.synth import DatasetGenerator
from amr_cam.harness import ConfigError, HarnessError
from amr_cam.harness.config import load_run_config, with_overrides
from amr_cam.harness.evaluate import evaluate, load_split
from amr_cam.harness.experiments import (
    DEFAULT_BG_THRESHOLDS,
    DEFAULT_XIS,
    ExperimentRunner,
    bg_sweep,
    write_table,
    xi_sweep,
)
from amr_cam.harness.heatmaps import HeatmapExporter
from amr_cam.harness.train import train
from amr_cam.helpers.logger import configure_logging
from amr_cam.models.schemas import RunConfig
from amr_cam.network.checkpoint import load_checkpoint
from amr_cam.numcore import NumcoreError
from amr_cam.recalib import CoefficientError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 2


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"lista de reales inválida: {text}") from error


def _ints(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"lista de enteros inválida: {text}") from error


def _add_seed_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="semilla de la corrida")


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    _add_seed_option(parser)
    parser.add_argument("--config", type=Path, help="archivo clave=valor")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="CLAVE=VALOR",
        help="sobrescribe una clave (repetible)",
    )


def _add_checkpoint_options(parser: argparse.ArgumentParser) -> None:
    _add_seed_option(parser)
    parser.add_argument("--checkpoint", type=Path, required=True)
    parser.add_argument("--split", choices=("train", "val"), default="val")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="CLAVE=VALOR",
        help="sobrescribe una clave de la configuración guardada",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amr-cam",
        description="CAMs con modulación de activación y recalibración.",
    )
    parser.add_argument("--log-level", default="INFO")
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser("train", help="entrena y guarda un checkpoint")
    _add_config_options(command)
    command.add_argument("--out", type=Path, default=Path("runs/train"))

    command = commands.add_parser("eval", help="mIoU de las pseudo-etiquetas")
    _add_checkpoint_options(command)
    command.add_argument("--xi", type=float, default=None)
    command.add_argument("--bg-threshold", type=float, default=None)
    command.add_argument("--flip-eval", action="store_true")
    command.add_argument("--out", type=Path, default=None, help="reporte JSON")

    command = commands.add_parser("xi-sweep", help="tabla de mIoU por xi")
    _add_checkpoint_options(command)
    command.add_argument("--xis", type=_floats, default=list(DEFAULT_XIS))
    command.add_argument("--out", type=Path, default=Path("xi_sweep.csv"))

    command = commands.add_parser("bg-sweep", help="tabla por umbral de fondo")
    _add_checkpoint_options(command)
    command.add_argument(
        "--thresholds", type=_floats, default=list(DEFAULT_BG_THRESHOLDS)
    )
    command.add_argument("--out", type=Path, default=Path("bg_sweep.csv"))

    command = commands.add_parser("ablate", help="ablación de componentes")
    _add_config_options(command)
    command.add_argument("--out", type=Path, default=Path("ablation.csv"))

    command = commands.add_parser("modfn-compare", help="comparación de modulaciones")
    _add_config_options(command)
    command.add_argument("--out", type=Path, default=Path("modfn_compare.csv"))

    command = commands.add_parser("export-heatmaps", help="CAMs como PGM")
    _add_checkpoint_options(command)
    command.add_argument("--indices", type=_ints, required=True)
    command.add_argument("--out", type=Path, default=Path("heatmaps"))

    command = commands.add_parser("gen-data", help="escribe el caché del conjunto")
    _add_config_options(command)
    command.add_argument("--out", type=Path, default=None, help="directorio del caché")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    return load_run_config(args.config, args.overrides, args.seed)


def _stored_config(args: argparse.Namespace, stored: RunConfig) -> RunConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "flip_eval", False):
        overrides.append("flip_eval=true")
    return with_overrides(stored, overrides)


def cmd_train(args: argparse.Namespace) -> None:
    outcome = train(_run_config(args), args.out)
    weighted = outcome.report.variants["weighted"]
    print(f"checkpoint: {outcome.checkpoint}")
    print(f"mIoU ponderada: {100 * weighted.miou:.2f}")


def cmd_eval(args: argparse.Namespace) -> None:
    model, stored = load_checkpoint(args.checkpoint)
    config = _stored_config(args, stored)
    if config.dataset.n_classes != model.n_classes:
        raise ConfigError(
            f"La configuración pide {config.dataset.n_classes} clases y el "
            f"checkpoint tiene {model.n_classes}."
        )
    stream = load_split(config, args.split)
    report = evaluate(model, config, stream, args.xi, args.bg_threshold)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    for kind, metrics in report.variants.items():
        print(
            f"{kind}: mIoU={100 * metrics.miou:.2f} "
            f"precision={metrics.precision:.4f} recall={metrics.recall:.4f}"
        )


def cmd_xi_sweep(args: argparse.Namespace) -> None:
    model, stored = load_checkpoint(args.checkpoint)
    config = _stored_config(args, stored)
    table = xi_sweep(model, config, load_split(config, args.split), args.xis)
    write_table(table, args.out)
    print(table.to_string(index=False))


def cmd_bg_sweep(args: argparse.Namespace) -> None:
    model, stored = load_checkpoint(args.checkpoint)
    config = _stored_config(args, stored)
    table = bg_sweep(model, config, load_split(config, args.split), args.thresholds)
    write_table(table, args.out)
    print(table.to_string(index=False))


def cmd_ablate(args: argparse.Namespace) -> None:
    table = ExperimentRunner(_run_config(args)).ablate()
    write_table(table, args.out)
    print(table.to_string(index=False))


def cmd_modfn_compare(args: argparse.Namespace) -> None:
    table = ExperimentRunner(_run_config(args)).modfn_compare()
    write_table(table, args.out)
    print(table.to_string(index=False))


def cmd_export_heatmaps(args: argparse.Namespace) -> None:
    model, stored = load_checkpoint(args.checkpoint)
    config = _stored_config(args, stored)
    exporter = HeatmapExporter(model, config)
    written = exporter.export(load_split(config, args.split), args.indices, args.out)
    print(f"{len(written)} archivos en {args.out}")


def cmd_gen_data(args: argparse.Namespace) -> None:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"dataset.seed={args.seed}")
    config = load_run_config(args.config, overrides).dataset
    target = args.out or config.cache_dir
    if target is None:
        raise ConfigError("gen-data necesita --out o dataset.cache_dir.")
    train_split, val_split = DatasetGenerator(config).generate()
    written = write_cache(target, config, train_split, val_split)
    print(f"{written} archivos en {target}")


COMMANDS: Dict[str, Callable[[argparse.Namespace], None]] = {
    "train": cmd_train,
    "eval": cmd_eval,
    "xi-sweep": cmd_xi_sweep,
    "bg-sweep": cmd_bg_sweep,
    "ablate": cmd_ablate,
    "modfn-compare": cmd_modfn_compare,
    "export-heatmaps": cmd_export_heatmaps,
    "gen-data": cmd_gen_data,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Punto de entrada; devuelve el código de salida."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        COMMANDS[args.command](args)
    except (HarnessError, NumcoreError, GenerationError, CoefficientError) as error:
        print(f"error: {error.message}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as error:
        logger.error("fallo de E/S en %s", args.command, exc_info=True)
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def run() -> None:
    sys.exit(main())
