"""
Command implementations behind the `gridie` CLI.

Each command takes parsed settings and paths and returns a pydantic result;
printing and exit codes live in `gridie.main`.
"""

import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import torch
from pydantic import BaseModel, computed_field

from gridie.cli.dependencies import encoder_config, get_tagger, load_labeler, penalty_weights
from gridie.cli.formats import (
    coord_grid,
    read_coord_training,
    read_oie_training,
    read_sentences,
    read_tuples,
    write_extractions,
    write_rows,
)
from gridie.config import Settings
from gridie.core.alignment import AlignmentStats, GoldTriple, gold_grid
from gridie.core.constraints import ViolationReport
from gridie.core.decode import grid_to_coordinations
from gridie.core.errors import InputValidationError, UnsupportedMetricError
from gridie.core.lingo import Tagger, TokenMasks, append_special, masks_for, tokenize
from gridie.core.pipeline import ExtractionPipeline
from gridie.core.schemas import OieLabel
from gridie.eval.coordination import coord_score
from gridie.eval.scoring import CURVE_SCORERS, SCORERS, ScoreReport, TupleRecord, carb_score, get_scorer, pr_curve_auc
from gridie.nnet.checkpoint import save_checkpoint
from gridie.nnet.model import IGLModel
from gridie.nnet.predictor import IGLPredictor
from gridie.nnet.training import EpochRecord, Example, Trainer
from gridie.nnet.vocab import Vocabulary
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]
TASKS = ("oie", "coord")

LOG_COLUMNS = ("epoch", "step", "loss", "accuracy", "constrained", "posc", "hvc", "hve", "ec", "extractions", "dev_f1")


# ============================================================================
# Training
# ============================================================================

class TrainSummary(BaseModel):
    """Outcome of a training run."""
    task: str
    examples: int
    epochs: int
    checkpoint: str
    log_file: str
    final_accuracy: float
    final_violations: Optional[ViolationReport] = None
    alignment: Optional[AlignmentStats] = None
    best_epoch: Optional[int] = None
    best_dev_f1: Optional[float] = None


def build_oie_examples(
    rows: Sequence[Tuple[str, List[GoldTriple]]],
    tagger: Tagger,
    levels: int,
    stats: Optional[AlignmentStats] = None,
) -> List[Example]:
    """Align gold triples and attach token masks; sentences with no aligned triple are dropped."""
    stats = stats if stats is not None else AlignmentStats()
    examples = []
    for text, triples in rows:
        sentence = append_special(tokenize(text))
        grid = gold_grid(sentence, triples, levels, stats)
        if not (grid.labels != OieLabel.N).any():
            logger.debug("training_sentence_dropped", sentence=text[:80])
            continue
        examples.append(Example(sentence=sentence, gold=grid, masks=masks_for(sentence, tagger)))
    return examples


def build_coord_examples(path: PathLike, levels: int) -> List[Example]:
    examples = []
    for block in read_coord_training(path):
        width = len(block.sentence)
        if len(block.rows) > levels:
            logger.warning("coordination_rows_truncated", line=block.line, rows=len(block.rows), levels=levels)
        examples.append(Example(
            sentence=block.sentence,
            gold=coord_grid(block, levels),
            masks=TokenMasks(important=(False,) * width, head_verb=(False,) * width),
        ))
    return examples


def _dev_f1(model: IGLModel, vocab: Vocabulary, dev: Sequence[Tuple[str, List[GoldTriple]]]) -> float:
    pipeline = ExtractionPipeline(IGLPredictor(model, vocab))
    results = pipeline.run_many([text for text, _ in dev])
    system = {str(i): [TupleRecord.from_extraction(e) for e in r.extractions] for i, r in enumerate(results)}
    gold = {
        str(i): [TupleRecord(subject=t.subject, relation=t.relation, obj=t.obj) for t in triples]
        for i, (_, triples) in enumerate(dev)
    }
    return carb_score(system, gold).f1


def _log_row(record: EpochRecord) -> List[object]:
    v = record.violations
    counts = [v.posc, v.hvc, v.hve, v.ec, v.extraction_count] if v else [""] * 5
    dev = f"{record.dev_f1:.2f}" if record.dev_f1 is not None else ""
    return [record.epoch, record.step, f"{record.loss:.5f}", f"{record.accuracy:.4f}", int(record.constrained), *counts, dev]


def cmd_train(
    task: str,
    train_file: PathLike,
    out_checkpoint: PathLike,
    settings: Settings,
    dev_file: Optional[PathLike] = None,
    gold_tags: Optional[PathLike] = None,
) -> TrainSummary:
    """
    Train an OpenIE extractor or a coordination analyzer and save it.

    OpenIE training data is aligned to grid rows first. With `dev_file` the
    checkpoint keeps the weights of the epoch with the best dev CaRB F1.
    A per-epoch log is written next to the checkpoint as `<checkpoint>.log.tsv`.

    Raises:
        InputValidationError: On an unknown task or an empty training set
        CorpusFormatError: On malformed training rows
        TrainingDivergedError: If the loss stops being finite
    """
    if task not in TASKS:
        raise InputValidationError(f"Unknown task '{task}'; expected one of {TASKS}")
    levels = settings.levels(task)

    stats: Optional[AlignmentStats] = None
    if task == "oie":
        stats = AlignmentStats()
        examples = build_oie_examples(read_oie_training(train_file), get_tagger(settings, gold_tags), levels, stats)
        logger.info(
            "alignment_finished",
            aligned=stats.aligned,
            skipped=stats.total_skipped,
            reasons=stats.skipped,
            coverage=round(stats.coverage, 4),
        )
    else:
        examples = build_coord_examples(train_file, levels)
    if not examples:
        raise InputValidationError(f"{train_file}: no usable training examples")

    dev = read_oie_training(dev_file) if dev_file is not None and task == "oie" else None
    vocab = Vocabulary.build(e.sentence for e in examples)
    model = IGLModel.from_config(encoder_config(settings, vocab, task))
    trainer = Trainer(
        model,
        vocab,
        penalty_weights(settings),
        learning_rate=settings.learning_rate,
        weight_decay=settings.weight_decay,
        batch_size=settings.batch_size,
        warmup_epochs=settings.warmup_epochs,
        seed=settings.seed,
    )
    logger.info("training_started", task=task, examples=len(examples), vocabulary=len(vocab), epochs=settings.epochs)

    best: Dict[str, object] = {"f1": None, "epoch": None, "state": None}

    def on_epoch_end(record: EpochRecord) -> None:
        if dev is None or (record.epoch <= settings.warmup_epochs and record.epoch < settings.epochs):
            return
        record.dev_f1 = _dev_f1(model, vocab, dev)
        if best["f1"] is None or record.dev_f1 > best["f1"]:
            best.update(
                f1=record.dev_f1,
                epoch=record.epoch,
                state={k: v.detach().clone() for k, v in model.state_dict().items()},
            )

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(settings.seed)
        history = trainer.fit(examples, settings.epochs, on_epoch_end=on_epoch_end)
    if best["state"] is not None:
        model.load_state_dict(best["state"])
        logger.info("best_epoch_selected", epoch=best["epoch"], dev_f1=best["f1"])

    save_checkpoint(out_checkpoint, model, vocab, task)
    log_file = Path(f"{out_checkpoint}.log.tsv")
    with open(log_file, "w", encoding="utf-8") as handle:
        write_rows(handle, [LOG_COLUMNS, *(_log_row(r) for r in history)])

    last = history[-1]
    return TrainSummary(
        task=task,
        examples=len(examples),
        epochs=len(history),
        checkpoint=str(out_checkpoint),
        log_file=str(log_file),
        final_accuracy=last.accuracy,
        final_violations=last.violations,
        alignment=stats,
        best_epoch=best["epoch"],
        best_dev_f1=best["f1"],
    )


# ============================================================================
# Prediction and benchmarking
# ============================================================================

class PredictSummary(BaseModel):
    sentences: int
    split_sentences: int
    extractions: int


def build_pipeline(
    oie_checkpoint: PathLike,
    coord_checkpoint: Optional[PathLike] = None,
    levels: Optional[int] = None,
) -> ExtractionPipeline:
    extractor = load_labeler(str(oie_checkpoint), "oie")
    if levels is not None:
        extractor = IGLPredictor(extractor.model, extractor.vocab, levels=levels)
    coordinator = load_labeler(str(coord_checkpoint), "coord") if coord_checkpoint is not None else None
    return ExtractionPipeline(extractor, coordinator)


def cmd_predict(
    sentences_file: PathLike,
    oie_checkpoint: PathLike,
    out_file: PathLike,
    settings: Settings,
    coord_checkpoint: Optional[PathLike] = None,
) -> PredictSummary:
    """
    Extract tuples for every sentence and write them as an extraction TSV.

    Without a coordination checkpoint the extractor runs on the sentences
    as given. Output follows input line order; within a sentence rows go
    by descending confidence.
    """
    sentences = read_sentences(sentences_file)
    pipeline = build_pipeline(oie_checkpoint, coord_checkpoint)
    results = pipeline.run_many(
        [text for _, text in sentences],
        workers=settings.workers,
        ids=[sentence_id for sentence_id, _ in sentences],
    )
    with open(out_file, "w", encoding="utf-8") as handle:
        written = write_extractions(
            handle,
            ((sentence_id, e) for (sentence_id, _), r in zip(sentences, results) for e in r.extractions),
        )
    summary = PredictSummary(
        sentences=len(sentences),
        split_sentences=sum(r.leaves for r in results),
        extractions=written,
    )
    logger.info("prediction_finished", **summary.model_dump())
    return summary


class BenchResult(BaseModel):
    """Throughput of one end-to-end prediction run."""
    sentences: int
    split_sentences: int
    seconds: float
    encoder_invocations: int
    coordination_invocations: int = 0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def sentences_per_second(self) -> float:
        return self.sentences / self.seconds if self.seconds > 0 else float("inf")


def cmd_bench(
    sentences_file: PathLike,
    oie_checkpoint: PathLike,
    settings: Settings,
    coord_checkpoint: Optional[PathLike] = None,
    levels: Optional[int] = None,
) -> BenchResult:
    """
    Time end-to-end prediction and count encoder passes.

    The extractor encodes every (split) sentence exactly once, whatever the
    number of grid levels.
    """
    sentences = read_sentences(sentences_file)
    texts = [text for _, text in sentences]
    pipeline = build_pipeline(oie_checkpoint, coord_checkpoint, levels)
    pipeline.extractor.model.reset_counter()
    if pipeline.coordinator is not None:
        pipeline.coordinator.model.reset_counter()

    start = time.perf_counter()
    results = pipeline.run_many(texts, workers=settings.workers, ids=[sentence_id for sentence_id, _ in sentences])
    seconds = time.perf_counter() - start

    result = BenchResult(
        sentences=len(texts),
        split_sentences=sum(r.leaves for r in results),
        seconds=seconds,
        encoder_invocations=pipeline.extractor.model.encoder_invocations,
        coordination_invocations=pipeline.coordinator.model.encoder_invocations if pipeline.coordinator else 0,
    )
    logger.info("benchmark_finished", **result.model_dump())
    return result


# ============================================================================
# Evaluation
# ============================================================================

def cmd_eval(
    system_file: PathLike,
    gold_file: PathLike,
    scorers: Sequence[str] = tuple(SCORERS),
    auc: Optional[bool] = None,
) -> List[ScoreReport]:
    """
    Score a system file against a gold file.

    Args:
        system_file: Extraction TSV (a 4-column gold file is accepted too)
        gold_file: Gold TSV
        scorers: Scorer names
        auc: True to require AUC, False to skip it, None for AUC where defined

    Raises:
        UnsupportedMetricError: If AUC is required for Wire57-C
    """
    system = read_tuples(system_file)
    gold = read_tuples(gold_file)
    reports = []
    for name in scorers:
        score = get_scorer(name)
        if auc is True and name not in CURVE_SCORERS:
            raise UnsupportedMetricError("AUC undefined for Wire57-C")
        if auc is not False and name in CURVE_SCORERS:
            reports.append(pr_curve_auc(system, gold, name))
        else:
            reports.append(score(system, gold))
    for report in reports:
        logger.info("scored", scorer=report.scorer, precision=report.precision, recall=report.recall, f1=report.f1, auc=report.auc)
    return reports


def format_table(reports: Sequence[ScoreReport]) -> str:
    """Aligned human-readable score table."""
    lines = [f"{'scorer':<14}{'P':>8}{'R':>8}{'F1':>8}{'AUC':>8}"]
    for r in reports:
        auc = f"{r.auc:.1f}" if r.auc is not None else "n/a"
        lines.append(f"{r.scorer:<14}{r.precision:>8.1f}{r.recall:>8.1f}{r.f1:>8.1f}{auc:>8}")
    return "\n".join(lines)


REPORT_COLUMNS = ("scorer", "precision", "recall", "f1", "auc")
VIOLATION_COLUMNS = ("posc", "hvc", "hve", "ec", "extractions")


def format_tsv(reports: Sequence[ScoreReport]) -> str:
    """Machine-readable score report with a header row."""
    return "\n".join(["\t".join(REPORT_COLUMNS), *(r.tsv() for r in reports)])


def format_violations(report: ViolationReport) -> str:
    """Violation counts in fixed column order with a header row."""
    return "\t".join(VIOLATION_COLUMNS) + "\n" + report.tsv()


def cmd_coord_eval(gold_file: PathLike, coord_checkpoint: PathLike) -> ScoreReport:
    """Score a coordination analyzer against an annotated coordination file."""
    blocks = read_coord_training(gold_file)
    labeler = load_labeler(str(coord_checkpoint), "coord")
    grids = labeler.label([b.sentence for b in blocks])
    predicted = {str(b.line): grid_to_coordinations(g, b.sentence) for b, g in zip(blocks, grids)}
    gold = {
        str(b.line): grid_to_coordinations(coord_grid(b, max(len(b.rows), 1)), b.sentence)
        for b in blocks
    }
    return coord_score(predicted, gold)


def cmd_align(train_file: PathLike, out_file: PathLike, settings: Settings) -> AlignmentStats:
    """
    Convert an OpenIE training TSV into grid rows.

    Each aligned sentence is written as its tokens followed by one line of
    S/R/O/N labels per level, blocks separated by blank lines.
    """
    stats = AlignmentStats()
    levels = settings.levels("oie")
    with open(out_file, "w", encoding="utf-8") as handle:
        for text, triples in read_oie_training(train_file):
            sentence = append_special(tokenize(text))
            grid = gold_grid(sentence, triples, levels, stats)
            rows = [row for row in grid.symbols() if any(s != "N" for s in row)]
            if not rows:
                continue
            handle.write(" ".join(sentence.surfaces) + "\n")
            for row in rows:
                handle.write(" ".join(row) + "\n")
            handle.write("\n")
    logger.info(
        "alignment_finished",
        aligned=stats.aligned,
        skipped=stats.total_skipped,
        reasons=stats.skipped,
        coverage=round(stats.coverage, 4),
    )
    return stats
