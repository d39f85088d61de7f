"""Command-line entry point wiring the pipeline stages together.

Subcommands: build-gt (corpus co-occurrence ground truth), eval (estimator
scoring against ground truth), bounds (threshold-bound report), simulate
(synthetic populations + bound verification), metrics (metrics over an
existing record file).

Exit codes: 0 success, 1 fatal I/O, 2 validation/domain error, 3 degenerate
input. All randomness flows from --seed; the worker-count environment
variable AMBIUQ_WORKERS never affects results, only wall time.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shlex
import subprocess
import sys

import numpy as np

from . import bounds as bounds_mod
from . import corpus as corpus_mod
from . import formats
from . import simlab
from .dirichlet import expected_epistemic, posterior
from .dist import decompose, row_entropy
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    EstimatorUnavailableError,
    UQError,
    ValidationError,
)
from .estimators import (
    EquivalenceMap,
    align,
    align_ensemble,
    cluster,
    msp,
    mutual_information,
    semantic_entropy,
)
from .metrics import EvalRecord, aucroc, concordance, summarize

DEFAULT_DELTAS = (math.log(1.5), math.log(2.0), math.log(3.0))
DEFAULT_EPSILON = 0.01
WORKERS_ENV = "AMBIUQ_WORKERS"


def _warn(msg: str) -> None:
    print(f"ambiuq: {msg}", file=sys.stderr)


def _read_jsonl_with_warnings(path):
    records, errors = formats.read_jsonl(path)
    for lineno, message in errors:
        _warn(f"{path}:{lineno}: skipped: {message}")
    return records


def _parse_float_list(text: str, flag: str):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ValidationError(f"{flag}: expected comma-separated numbers: {exc}")


class CommandFilter:
    """Entailment filter backed by an external command.

    The command receives one JSON object per line on stdin
    ({"chunk_id", "text", "question", "answer"}) and must reply with one
    line per object: yes/no, accept/reject, true/false, or 1/0.
    """

    _YES = {"yes", "accept", "true", "1"}
    _NO = {"no", "reject", "false", "0"}

    def __init__(self, command: str):
        self.command = command
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )

    def __call__(self, chunk, question: str, answer: str) -> bool:
        payload = json.dumps(
            {
                "chunk_id": chunk.chunk_id,
                "text": chunk.text,
                "question": question,
                "answer": answer,
            },
            sort_keys=True,
        )
        self.proc.stdin.write(payload + "\n")
        self.proc.stdin.flush()
        reply = self.proc.stdout.readline().strip().casefold()
        if reply in self._YES:
            return True
        if reply in self._NO:
            return False
        raise ValidationError(
            f"filter command {self.command!r} replied {reply!r}; expected yes/no"
        )

    def close(self) -> None:
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.wait(timeout=30)


class FileFilter:
    """Entailment filter from a pre-computed decision file.

    Rows: {"question", "answer", "chunk_id", "accept": bool}. Chunks with no
    recorded decision are accepted (the file only refines, never widens).
    """

    def __init__(self, path: str):
        self.decisions = {}
        for lineno, obj in _read_jsonl_with_warnings(path):
            try:
                key = (str(obj["question"]), str(obj["answer"]), str(obj["chunk_id"]))
                self.decisions[key] = bool(obj["accept"])
            except KeyError as exc:
                _warn(f"{path}:{lineno}: skipped: missing field {exc}")

    def __call__(self, chunk, question: str, answer: str) -> bool:
        return self.decisions.get((question, answer, chunk.chunk_id), True)


def cmd_build_gt(args) -> int:
    docs = []
    for lineno, obj in _read_jsonl_with_warnings(args.corpus):
        try:
            docs.append(formats.parse_corpus_doc(obj))
        except (ValidationError, ValueError, TypeError) as exc:
            _warn(f"{args.corpus}:{lineno}: skipped document: {exc}")
    specs = []
    for lineno, obj in _read_jsonl_with_warnings(args.specs):
        try:
            specs.append(formats.parse_question_spec(obj))
        except (ValidationError, ValueError, TypeError) as exc:
            _warn(f"{args.specs}:{lineno}: skipped spec: {exc}")
    if not specs:
        _warn("specs file contains no usable question specs; writing empty dataset")

    accept = None
    if args.filter_cmd and args.filter_file:
        raise ValidationError("--filter-cmd and --filter-file are mutually exclusive")
    if args.filter_file:
        accept = FileFilter(args.filter_file)
    command_filter = None
    if args.filter_cmd:
        accept = command_filter = CommandFilter(args.filter_cmd)

    try:
        index = corpus_mod.build_index(corpus_mod.chunk_corpus(docs))
        try:
            workers = int(os.environ.get(WORKERS_ENV, "1"))
        except ValueError:
            raise ValidationError(f"{WORKERS_ENV} must be an integer")
        records = corpus_mod.build_ground_truth(
            index, specs, cap=args.cap, accept=accept, workers=workers
        )
    finally:
        if command_filter is not None:
            command_filter.close()

    kept = [r for r in records if not r.discarded]
    discarded = [r for r in records if r.discarded]
    formats.write_jsonl(args.out, (formats.ground_truth_to_dict(r) for r in kept))
    discard_log = args.discard_log or f"{args.out}.discards.jsonl"
    formats.write_jsonl(
        discard_log, (formats.ground_truth_to_dict(r) for r in discarded)
    )
    print(
        f"wrote {len(kept)} ground-truth records to {args.out}; "
        f"{len(discarded)} discarded (see {discard_log})"
    )
    return 0


def _metric_rows(records, estimators, deltas):
    """One CSV row per estimator: concordance plus AUCROC at each delta."""
    auc_cols = [f"aucroc@{d:.6g}" for d in deltas]
    fieldnames = ["estimator", "concordance", *auc_cols]
    rows = []
    n_values = 0
    for name in estimators:
        row = {"estimator": name}
        try:
            row["concordance"] = f"{concordance(records, name):.6f}"
            n_values += 1
        except DegenerateInputError as exc:
            _warn(f"concordance[{name}]: {exc}")
            row["concordance"] = ""
        for d, col in zip(deltas, auc_cols):
            try:
                row[col] = f"{aucroc(records, name, d):.6f}"
                n_values += 1
            except DegenerateInputError as exc:
                _warn(f"aucroc[{name}, delta={d:.6g}]: {exc}")
                row[col] = ""
        rows.append(row)
    return fieldnames, rows, n_values


def _aligned_counts(record, joint_classes, eq) -> np.ndarray:
    """Map a ground-truth record's counts onto the aligned joint support."""
    merged = {}
    for answer, count in zip(record.answers, record.counts):
        key = eq.canonical(answer)
        merged[key] = merged.get(key, 0) + count
    return np.array([float(merged.get(c, 0)) for c in joint_classes])


def cmd_eval(args) -> int:
    if not (0.0 < args.epsilon <= 0.1):
        raise ValidationError(f"--epsilon must be in (0, 0.1], got {args.epsilon}")
    deltas = _parse_float_list(args.deltas, "--deltas")
    gammas = _parse_float_list(args.dirichlet_gamma, "--dirichlet-gamma") \
        if args.dirichlet_gamma else ()
    for g in gammas:
        if g < 1.0:
            raise ValidationError(f"--dirichlet-gamma values must be >= 1, got {g}")

    mapping = None
    if args.equivalence:
        with open(args.equivalence, "r", encoding="utf-8") as fh:
            mapping = json.load(fh)
        if not isinstance(mapping, dict):
            raise ValidationError("--equivalence must contain a JSON object")
    eq = EquivalenceMap(mapping)

    gt_records = {}
    for lineno, obj in _read_jsonl_with_warnings(args.ground_truth):
        try:
            record = formats.parse_ground_truth(obj)
        except (ValidationError, ValueError, TypeError) as exc:
            _warn(f"{args.ground_truth}:{lineno}: skipped: {exc}")
            continue
        if record.discarded:
            _warn(f"{record.question_id}: ground truth is discarded; skipped")
            continue
        gt_records[record.question_id] = record

    predictions = {}
    for lineno, obj in _read_jsonl_with_warnings(args.predictions):
        try:
            pred = formats.parse_prediction(obj)
        except (ValidationError, ValueError, TypeError) as exc:
            _warn(f"{args.predictions}:{lineno}: skipped: {exc}")
            continue
        predictions[pred.question_id] = pred

    matched = sorted(set(gt_records) & set(predictions))
    for qid in sorted(set(gt_records) - set(predictions)):
        _warn(f"{qid}: no prediction record; skipped")
    for qid in sorted(set(predictions) - set(gt_records)):
        _warn(f"{qid}: no ground-truth record; skipped")
    if not matched:
        raise ValidationError("no question_id is present in both input files")

    single_gamma = gammas[0] if len(gammas) == 1 else None
    eval_records = []
    counts_list, model_list = [], []
    scores_by_name: dict = {}
    for qid in matched:
        gt = gt_records[qid]
        pred = predictions[qid]
        p_model = cluster(pred, eq)
        p_star_aligned, p_model_aligned = align(
            gt.p_star, p_model, eq, epsilon=args.epsilon
        )
        parts = decompose(p_star_aligned, p_model_aligned)
        true_eu = max(parts.epistemic, 0.0)
        counts = _aligned_counts(gt, p_star_aligned.classes, eq)
        if single_gamma is not None:
            true_eu = max(
                expected_epistemic(posterior(counts, single_gamma), p_model_aligned), 0.0
            )
        scores = {"SE": semantic_entropy(p_model)}
        try:
            scores["MSP"] = msp(pred.best_answer_prob)
        except EstimatorUnavailableError as exc:
            _warn(f"{qid}: MSP disabled: {exc}")
        if pred.ensemble is not None:
            scores["MI"] = mutual_information(
                align_ensemble(pred.ensemble, eq, epsilon=args.epsilon)
            )
        else:
            _warn(f"{qid}: MI disabled: no ensemble in prediction record")
        eval_records.append(EvalRecord(qid, true_eu, scores))
        counts_list.append(counts)
        model_list.append(p_model_aligned.probs)
        for name, value in scores.items():
            scores_by_name.setdefault(name, {})[qid] = value

    formats.write_jsonl(
        args.records_out, (formats.eval_record_to_dict(r) for r in eval_records)
    )
    print(f"wrote {len(eval_records)} eval records to {args.records_out}")

    if len(gammas) > 1:
        # each estimator is ablated over the records that carry it
        rows = []
        for name in sorted(scores_by_name):
            keep = [i for i, r in enumerate(eval_records) if name in r.scores]
            try:
                rows.extend(
                    simlab.gamma_ablation(
                        [counts_list[i] for i in keep],
                        [model_list[i] for i in keep],
                        {name: [eval_records[i].scores[name] for i in keep]},
                        gammas,
                    )
                )
            except DegenerateInputError as exc:
                _warn(f"gamma ablation[{name}]: {exc}")
        labels = [*gammas, "point"]
        rows.sort(key=lambda r: (labels.index(r["gamma"]), r["estimator"]))
        formats.write_csv(
            args.ablation_out,
            ["gamma", "estimator", "concordance"],
            (
                {**row, "concordance": f"{row['concordance']:.6f}"}
                for row in rows
            ),
        )
        print(f"wrote gamma ablation to {args.ablation_out}")

    estimators = sorted(scores_by_name)
    fieldnames, rows, n_values = _metric_rows(eval_records, estimators, deltas)
    if n_values == 0:
        raise DegenerateInputError(
            "no metric is defined on these records (constant true EU and/or "
            "single-class binarization at every delta)"
        )
    formats.write_csv(args.metrics_out, fieldnames, rows)
    print(f"wrote metrics for {len(estimators)} estimators to {args.metrics_out}")
    return 0


def cmd_bounds(args) -> int:
    query = bounds_mod.BoundQuery(k=args.k, delta=args.delta)
    try:
        a_delta = bounds_mod.alpha_delta(query)
    except DomainError as exc:
        raise DomainError(f"--delta/--k: {exc}")
    report = {
        "k": args.k,
        "delta": args.delta,
        "alpha_delta": a_delta,
        "eu_lower_bound": bounds_mod.eu_lower_bound_high_entropy(query),
    }
    if 0.0 < args.delta <= math.log(2.0):
        report["gamma_delta"] = bounds_mod.gamma_delta(args.delta)
    else:
        report["gamma_delta"] = None

    if (args.avg_loss is None) != (args.p_low_entropy is None):
        raise ValidationError("--avg-loss and --p-low-entropy must be given together")
    if args.avg_loss is not None:
        try:
            bound = bounds_mod.thm2_probability_bound(
                args.delta, args.avg_loss, args.p_low_entropy
            )
        except (DomainError, DegenerateInputError) as exc:
            raise type(exc)(f"--delta/--avg-loss/--p-low-entropy: {exc}")
        report["thm2"] = {
            "gamma_delta": bound.gamma_delta,
            "eu_cap": bound.eu_cap,
            "prob_lower_bound": bound.prob_lower_bound,
        }
    else:
        report["thm2"] = None

    grid = np.linspace(0.0, math.log(args.k), args.bound_line_points)
    report["bound_line"] = [
        {
            "delta": float(d),
            "eu_lower_bound": bounds_mod.eu_lower_bound_high_entropy(
                bounds_mod.BoundQuery(k=args.k, delta=float(d))
            ),
        }
        for d in grid
    ]
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValidationError("--config must contain a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    config = simlab.SimConfig.from_dict(raw)
    result = simlab.run_experiment(config)

    formats.write_jsonl(
        args.out, (formats.eval_record_to_dict(r) for r in result.records)
    )
    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(result.report, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(result.records)} records to {args.out}; report to {args.report}")

    if args.scatter_csv:
        se = result.scores["SE"]
        formats.write_csv(
            args.scatter_csv,
            ["question_id", "predictive_entropy", "true_eu"],
            (
                {
                    "question_id": r.question_id,
                    "predictive_entropy": f"{se[i]:.9g}",
                    "true_eu": f"{r.true_eu:.9g}",
                }
                for i, r in enumerate(result.records)
            ),
        )
    if args.hist_csv:
        summary = summarize(row_entropy(result.p_star), bins=args.hist_bins)
        formats.write_csv(
            args.hist_csv,
            ["bin_left", "bin_right", "count"],
            (
                {"bin_left": f"{left:.9g}", "bin_right": f"{right:.9g}", "count": count}
                for left, right, count in summary.histogram_rows()
            ),
        )
    if args.ablation_csv:
        gammas = _parse_float_list(args.gammas, "--gammas")
        rows = result.gamma_ablation(gammas)
        formats.write_csv(
            args.ablation_csv,
            ["gamma", "estimator", "concordance"],
            ({**row, "concordance": f"{row['concordance']:.6f}"} for row in rows),
        )
    return 0


def cmd_metrics(args) -> int:
    deltas = _parse_float_list(args.deltas, "--deltas")
    records = []
    for lineno, obj in _read_jsonl_with_warnings(args.records):
        try:
            records.append(formats.parse_eval_record(obj))
        except (ValidationError, ValueError, TypeError) as exc:
            _warn(f"{args.records}:{lineno}: skipped: {exc}")
    if not records:
        raise ValidationError("no usable eval records")
    estimators = sorted({name for r in records for name in r.scores})
    fieldnames, rows, n_values = _metric_rows(records, estimators, deltas)
    if n_values == 0:
        raise DegenerateInputError("no metric is defined on these records")
    formats.write_csv(args.metrics_out, fieldnames, rows)
    if args.hist_out:
        summary = summarize([r.true_eu for r in records], bins=args.hist_bins)
        formats.write_csv(
            args.hist_out,
            ["bin_left", "bin_right", "count"],
            (
                {"bin_left": f"{left:.9g}", "bin_right": f"{right:.9g}", "count": count}
                for left, right, count in summary.histogram_rows()
            ),
        )
    print(f"wrote metrics for {len(estimators)} estimators to {args.metrics_out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambiuq",
        description="Uncertainty decomposition toolkit for ambiguous QA",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-gt", help="build ground-truth answer distributions")
    p.add_argument("--corpus", required=True, help="corpus JSONL: {doc_id, sections}")
    p.add_argument("--specs", required=True, help="question spec JSONL")
    p.add_argument("--out", required=True, help="output ground-truth JSONL")
    p.add_argument("--discard-log", default=None, help="discarded-record JSONL")
    p.add_argument("--cap", type=int, default=corpus_mod.DEFAULT_CAP)
    p.add_argument("--filter-cmd", default=None, help="external entailment command")
    p.add_argument("--filter-file", default=None, help="pre-computed decisions JSONL")
    p.set_defaults(func=cmd_build_gt)

    p = sub.add_parser("eval", help="score estimators against ground truth")
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--records-out", required=True, help="EvalRecord JSONL output")
    p.add_argument("--metrics-out", required=True, help="metrics CSV output")
    p.add_argument("--ablation-out", default="gamma_ablation.csv")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--deltas", default=",".join(str(d) for d in DEFAULT_DELTAS))
    p.add_argument(
        "--dirichlet-gamma",
        default=None,
        help="comma-separated gamma values; one switches true EU to the "
        "Dirichlet expected EU, several emit a gamma-ablation CSV",
    )
    p.add_argument("--equivalence", default=None, help="JSON class-mapping file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", help="entropy-threshold bound report")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--avg-loss", type=float, default=None)
    p.add_argument("--p-low-entropy", type=float, default=None)
    p.add_argument("--bound-line-points", type=int, default=33)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="synthetic populations and verification")
    p.add_argument("--config", required=True, help="SimConfig JSON file")
    p.add_argument("--out", required=True, help="EvalRecord JSONL output")
    p.add_argument("--report", required=True, help="verification report JSON")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--scatter-csv", default=None, help="(H(p), EU) scatter data")
    p.add_argument("--hist-csv", default=None, help="ground-truth entropy histogram")
    p.add_argument("--hist-bins", type=int, default=30)
    p.add_argument("--ablation-csv", default=None, help="gamma-ablation CSV")
    p.add_argument("--gammas", default="1,2,5,10,100")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="metrics over an EvalRecord file")
    p.add_argument("--records", required=True)
    p.add_argument("--metrics-out", required=True)
    p.add_argument("--hist-out", default=None, help="true-EU histogram CSV")
    p.add_argument("--hist-bins", type=int, default=30)
    p.add_argument("--deltas", default=",".join(str(d) for d in DEFAULT_DELTAS))
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateInputError as exc:
        _warn(f"degenerate input: {exc}")
        return 3
    except (ValidationError, DomainError, ConfigurationError) as exc:
        _warn(f"error: {exc}")
        return 2
    except UQError as exc:
        _warn(f"error: {exc}")
        return 2
    except json.JSONDecodeError as exc:
        _warn(f"invalid JSON: {exc}")
        return 2
    except OSError as exc:
        _warn(f"I/O error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
