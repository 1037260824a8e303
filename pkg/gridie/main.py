"""
Command-line entry point: `gridie train|predict|eval|bench|coord-eval|align`.

Exit codes: 0 on success, 1 on invalid input, 2 on runtime failures.
"""

import sys
import traceback
from functools import wraps
from typing import Any, Callable, Dict, Optional

import click
from pydantic import ValidationError

from gridie import __version__
from gridie.cli import commands
from gridie.config import Settings, get_settings
from gridie.core.errors import GridIEError, InputValidationError
from gridie.eval.scoring import SCORERS
from gridie.utils.logger import command_context, get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def _settings(ctx: click.Context, **overrides: Any) -> Settings:
    given = {k: v for k, v in overrides.items() if v is not None}
    settings = get_settings(ctx.obj["config"], **ctx.obj["overrides"], **given)
    setup_logging(log_level=settings.log_level, json_logs=settings.json_logs)
    return settings


def handle_errors(func: Callable) -> Callable:
    """Map the error hierarchy onto exit codes with a one-line message."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        with command_context(func.__name__):
            try:
                func(*args, **kwargs)
            except (InputValidationError, ValidationError) as e:
                logger.warning("invalid_input", error=str(e))
                click.echo(f"error: {e}", err=True)
                sys.exit(EXIT_INVALID)
            except GridIEError as e:
                logger.error("command_failed", error=str(e), error_type=type(e).__name__)
                click.echo(f"error: {e}", err=True)
                sys.exit(EXIT_RUNTIME)
            except (OSError, RuntimeError) as e:
                logger.error(
                    "unexpected_error",
                    error=str(e),
                    error_type=type(e).__name__,
                    traceback=traceback.format_exc(),
                )
                click.echo(f"error: {type(e).__name__}: {e}", err=True)
                sys.exit(EXIT_RUNTIME)

    return wrapper


@click.group("gridie")
@click.version_option(__version__)
@click.option("--config", "config_file", type=click.Path(dir_okay=False), default=None, help="key=value config file")
@click.option("--log-level", default=None, help="Overrides log_level")
@click.option("--json-logs", is_flag=True, default=None, help="Emit JSON log lines")
@click.pass_context
def cli(ctx: click.Context, config_file: Optional[str], log_level: Optional[str], json_logs: Optional[bool]) -> None:
    """Grid-labeling OpenIE: train, predict, evaluate and benchmark."""
    overrides: Dict[str, Any] = {}
    if log_level is not None:
        overrides["log_level"] = log_level
    if json_logs:
        overrides["json_logs"] = True
    ctx.obj = {"config": config_file, "overrides": overrides}


@cli.command()
@click.argument("task", type=click.Choice(["oie", "coord"]))
@click.argument("train_file", type=click.Path(dir_okay=False))
@click.argument("out_checkpoint", type=click.Path(dir_okay=False))
@click.option("--dev", "dev_file", type=click.Path(dir_okay=False), default=None, help="Dev set for model selection")
@click.option("--gold-tags", type=click.Path(dir_okay=False), default=None, help="Tags file for tagger=gold")
@click.option("--constraints", type=click.Choice(["all", "posc", "headverb", "none"]), default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
@handle_errors
def train(
    ctx: click.Context,
    task: str,
    train_file: str,
    out_checkpoint: str,
    dev_file: Optional[str],
    gold_tags: Optional[str],
    constraints: Optional[str],
    epochs: Optional[int],
    seed: Optional[int],
) -> None:
    """Train an extractor (oie) or a coordination analyzer (coord)."""
    settings = _settings(ctx, constraints=constraints, epochs=epochs, seed=seed)
    summary = commands.cmd_train(task, train_file, out_checkpoint, settings, dev_file=dev_file, gold_tags=gold_tags)
    click.echo(f"trained {summary.task} model on {summary.examples} examples for {summary.epochs} epochs")
    click.echo(f"accuracy\t{summary.final_accuracy:.4f}")
    if summary.alignment is not None:
        click.echo(f"alignment_coverage\t{summary.alignment.coverage:.4f}")
    if summary.best_epoch is not None:
        click.echo(f"best_epoch\t{summary.best_epoch}\tdev_f1\t{summary.best_dev_f1:.2f}")
    if summary.final_violations is not None:
        click.echo(commands.format_violations(summary.final_violations))
    click.echo(f"checkpoint\t{summary.checkpoint}\nlog\t{summary.log_file}")


@cli.command()
@click.argument("sentences_file", type=click.Path(dir_okay=False))
@click.argument("oie_checkpoint", type=click.Path(dir_okay=False))
@click.argument("out_file", type=click.Path(dir_okay=False))
@click.option("--coord", "coord_checkpoint", type=click.Path(dir_okay=False), default=None)
@click.option("--workers", type=int, default=None)
@click.pass_context
@handle_errors
def predict(
    ctx: click.Context,
    sentences_file: str,
    oie_checkpoint: str,
    out_file: str,
    coord_checkpoint: Optional[str],
    workers: Optional[int],
) -> None:
    """Write an extraction TSV for a file of sentences."""
    settings = _settings(ctx, workers=workers)
    summary = commands.cmd_predict(sentences_file, oie_checkpoint, out_file, settings, coord_checkpoint)
    click.echo(f"sentences\t{summary.sentences}\nsplit_sentences\t{summary.split_sentences}\nextractions\t{summary.extractions}")


@cli.command("eval")
@click.argument("system_file", type=click.Path(dir_okay=False))
@click.argument("gold_file", type=click.Path(dir_okay=False))
@click.option("--scorer", "scorers", type=click.Choice(sorted(SCORERS)), multiple=True, help="Repeatable; default all")
@click.option("--auc/--no-auc", default=None, help="Require or skip AUC (default: where defined)")
@click.option("--tsv", "tsv_file", type=click.Path(dir_okay=False), default=None, help="Also write the TSV report to a file")
@click.pass_context
@handle_errors
def evaluate(
    ctx: click.Context,
    system_file: str,
    gold_file: str,
    scorers: tuple,
    auc: Optional[bool],
    tsv_file: Optional[str],
) -> None:
    """Score a system extraction file against gold."""
    _settings(ctx)
    reports = commands.cmd_eval(system_file, gold_file, scorers or tuple(SCORERS), auc)
    click.echo(commands.format_table(reports))
    report_tsv = commands.format_tsv(reports)
    click.echo()
    click.echo(report_tsv)
    if tsv_file is not None:
        with open(tsv_file, "w", encoding="utf-8") as handle:
            handle.write(report_tsv + "\n")


@cli.command()
@click.argument("sentences_file", type=click.Path(dir_okay=False))
@click.argument("oie_checkpoint", type=click.Path(dir_okay=False))
@click.option("--coord", "coord_checkpoint", type=click.Path(dir_okay=False), default=None)
@click.option("--levels", type=int, default=None, help="Grid levels of the extractor")
@click.option("--workers", type=int, default=None)
@click.pass_context
@handle_errors
def bench(
    ctx: click.Context,
    sentences_file: str,
    oie_checkpoint: str,
    coord_checkpoint: Optional[str],
    levels: Optional[int],
    workers: Optional[int],
) -> None:
    """Measure sentences per second and encoder passes."""
    settings = _settings(ctx, workers=workers)
    result = commands.cmd_bench(sentences_file, oie_checkpoint, settings, coord_checkpoint, levels)
    for key, value in result.model_dump().items():
        click.echo(f"{key}\t{value}")


@cli.command("coord-eval")
@click.argument("gold_file", type=click.Path(dir_okay=False))
@click.argument("coord_checkpoint", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def coord_eval(ctx: click.Context, gold_file: str, coord_checkpoint: str) -> None:
    """Exact-match scores of a coordination analyzer."""
    _settings(ctx)
    report = commands.cmd_coord_eval(gold_file, coord_checkpoint)
    click.echo(commands.format_table([report]))


@cli.command()
@click.argument("train_file", type=click.Path(dir_okay=False))
@click.argument("out_file", type=click.Path(dir_okay=False))
@click.pass_context
@handle_errors
def align(ctx: click.Context, train_file: str, out_file: str) -> None:
    """Convert OpenIE training tuples to grid rows and report coverage."""
    settings = _settings(ctx)
    stats = commands.cmd_align(train_file, out_file, settings)
    click.echo(f"aligned\t{stats.aligned}\nskipped\t{stats.total_skipped}\ncoverage\t{stats.coverage:.4f}")
    for reason, count in sorted(stats.skipped.items()):
        click.echo(f"skipped:{reason}\t{count}")


def main() -> None:
    cli(prog_name="gridie")


if __name__ == "__main__":
    main()
