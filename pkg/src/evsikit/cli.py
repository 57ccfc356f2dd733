"""Command-line surface: rank, sweep, gen, split, train, select, serve.

Output contract: ``--output-format json`` emits one sorted-keys JSON
document, byte-identical across identical invocations with identical
seeds; ``table`` mirrors the ranking layout (sensor, EVSI, Action
(Signal), Action (No Signal)); ``csv`` is machine-readable rows. Exit
codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .classifier import DEFAULT_C_GRID, LogisticTrainer, TrainingConfig, cross_validate, evaluate
from .data import (
    SplitSpec,
    SynthConfig,
    ingest_channel_stats,
    load_csv,
    save_csv,
    simulation_split,
    synth_generate,
)
from .decision import (
    CostConvention,
    CostModel,
    rank_by_evsi,
    report_doc,
    sensitivity_sweep,
    sweep_doc,
)
from .errors import EvsiKitError
from .metrics import matrix_to_csv
from .selection import (
    forward_stepwise,
    greedy_evsi_selection,
    mask_importance,
    trace_to_doc,
)
from .service import EvsiService
from .session import (
    SessionManager,
    create_full_session,
    create_stats_session,
    load_session,
)

RANK_HEADERS = ("sensor", "EVSI", "Action (Signal)", "Action (No Signal)")


# ------------------------------------------------------------ small helpers


def _render_table(headers, rows) -> str:
    cells = [tuple(str(c) for c in row) for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
        for i, h in enumerate(headers)
    ]
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()
    out = [line(headers), line(tuple("-" * w for w in widths))]
    out.extend(line(r) for r in cells)
    return "\n".join(out)


def _render_csv(headers, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue().rstrip("\n")


def _render_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2)


def _num(x: float) -> str:
    return format(x, ".6g")


def _csv_list(text: str) -> tuple[str, ...]:
    items = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not items:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}")
    return items


def _ratio_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratios must be comma-separated numbers: {text!r}")


def _split_spec(text: str) -> SplitSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError(
            "spec needs 6 comma-separated counts: "
            "train-normal,train-fault,val-normal,val-fault,test-normal,test-fault"
        )
    try:
        counts = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"spec counts must be integers: {text!r}")
    return SplitSpec(*counts)


def _default_seed() -> int:
    raw = os.environ.get("EVSI_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"usage error: EVSI_SEED must be an integer, got {raw!r}")


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _load_splits(data_dir: str):
    root = Path(data_dir)
    train_path = root / "train.csv"
    val_path = root / "validation.csv"
    for p in (train_path, val_path):
        if not p.exists():
            raise EvsiKitError(f"data directory is missing {p.name}: {p}")
    return load_csv(train_path), load_csv(val_path)


# ------------------------------------------------------------- subcommands


def _cmd_rank(args) -> str:
    stats = ingest_channel_stats(args.stats)
    costs = CostModel(args.cost_r, args.cost_p, CostConvention(args.convention))
    reports = rank_by_evsi(stats.sensors, None, stats.priors, costs)
    if args.output_format == "json":
        return _render_json({"rankings": [report_doc(r) for r in reports]})
    rows = [
        (r.sensor_label, _num(r.evsi), r.action_on_signal.value, r.action_on_no_signal.value)
        for r in reports
    ]
    render = _render_csv if args.output_format == "csv" else _render_table
    return render(RANK_HEADERS, rows)


def _cmd_sweep(args) -> str:
    stats = ingest_channel_stats(args.stats)
    table = sensitivity_sweep(
        stats.sensors, None, stats.priors, args.cost_r, args.ratios,
        convention=CostConvention(args.convention),
    )
    if args.output_format == "json":
        return _render_json(sweep_doc(table))
    headers = ("ratio",) + RANK_HEADERS
    rows = [
        (_num(ratio), e.sensor_label, _num(e.evsi),
         e.action_on_signal.value, e.action_on_no_signal.value)
        for ratio, section in zip(table.ratios, table.sections)
        for e in section
    ]
    render = _render_csv if args.output_format == "csv" else _render_table
    return render(headers, rows)


def _cmd_gen(args) -> str:
    config = SynthConfig(
        num_features=args.features,
        num_fault_classes=args.classes,
        sims_per_class=args.sims,
        samples_per_sim=args.samples,
        informative_features=args.informative,
        seed=_resolve_seed(args),
    )
    dataset = synth_generate(config)
    save_csv(dataset, args.out)
    return f"wrote {len(dataset)} rows ({config.num_features} features) to {args.out}"


def _cmd_split(args) -> str:
    train_source = load_csv(args.train)
    test_source = load_csv(args.test) if args.test else None
    result = simulation_split(train_source, args.spec, test_source)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, ds in (
        ("train", result.train), ("validation", result.validation), ("test", result.test)
    ):
        path = out_dir / f"{name}.csv"
        save_csv(ds, path)
        lines.append(f"{name}: {len(ds)} rows -> {path}")
    return "\n".join(lines)


def _cmd_train(args) -> str:
    train_split, val_split = _load_splits(args.data)
    features = args.features if args.features else train_split.feature_names
    seed = _resolve_seed(args)
    config = TrainingConfig(seed=seed)
    cv = None
    if args.cv:
        cv = cross_validate(train_split, DEFAULT_C_GRID, feature_set=features, config=config)
        config = TrainingConfig(inverse_regularization_C=cv.best_C, seed=seed)
    model = LogisticTrainer().fit(train_split, tuple(features), config)
    result = evaluate(model, val_split)
    confusion = matrix_to_csv(result.matrix)
    if args.output_format == "json":
        doc = {
            "features": list(features),
            "accuracy": result.accuracy,
            "confusion": [list(row) for row in result.matrix.counts],
            "inverse_regularization_C": config.inverse_regularization_C,
        }
        if cv is not None:
            doc["cv_mean_accuracies"] = [[c, a] for c, a in cv.mean_accuracies]
        return _render_json(doc)
    lines = []
    if cv is not None:
        grid = ", ".join(f"C={_num(c)}: {_num(a)}" for c, a in cv.mean_accuracies)
        lines.append(f"cross-validation ({grid}) -> C={_num(cv.best_C)}")
    lines.append(f"accuracy,{result.accuracy!r}")
    lines.append(confusion)
    return "\n".join(lines)


def _cmd_select(args) -> str:
    train_split, val_split = _load_splits(args.data)
    config = TrainingConfig(seed=_resolve_seed(args))
    trainer = LogisticTrainer()
    if args.mode == "mask":
        features = tuple(args.base or ()) + tuple(args.candidates or ())
        ranking = mask_importance(
            trainer, train_split, val_split,
            features if features else train_split.feature_names, config,
        )
        if args.output_format == "json":
            return _render_json(
                {
                    "mode": "mask",
                    "baseline_accuracy": ranking.baseline_accuracy,
                    "entries": [
                        {
                            "feature": e.feature,
                            "accuracy_delta": e.accuracy_delta,
                            "masked_accuracy": e.masked_accuracy,
                        }
                        for e in ranking.entries
                    ],
                }
            )
        headers = ("feature", "accuracy_delta", "masked_accuracy")
        rows = [(e.feature, _num(e.accuracy_delta), _num(e.masked_accuracy))
                for e in ranking.entries]
        render = _render_csv if args.output_format == "csv" else _render_table
        return render(headers, rows)

    base = tuple(args.base or ())
    candidates = tuple(args.candidates or ())
    if args.mode == "forward":
        trace = forward_stepwise(
            trainer, train_split, val_split, base, candidates, args.budget, config
        )
    else:
        costs = CostModel(args.cost_r, args.cost_p)
        trace = greedy_evsi_selection(
            trainer, train_split, val_split, base, candidates, costs, args.budget, config
        )
    if args.output_format == "json":
        return _render_json(trace_to_doc(trace))
    headers = ("round", "chosen", "score", "baseline_score")
    rows = [
        (
            r.round_index,
            r.chosen if r.chosen is not None else "-",
            _num(r.scores[r.chosen]) if r.chosen is not None else "-",
            _num(r.baseline_score),
        )
        for r in trace.rounds
    ]
    render = _render_csv if args.output_format == "csv" else _render_table
    body = render(headers, rows)
    summary = f"deployed: {', '.join(trace.deployed) or '(none)'}  stop: {trace.stop_reason.value}"
    return f"{body}\n{summary}" if rows else summary


def build_server(args) -> EvsiService:
    """Construct (but do not run) the service for ``serve`` arguments."""
    costs = CostModel(args.cost_r, args.cost_p)
    doc = json.loads(Path(args.session).read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "backend" in doc and "rankings" in doc:
        session = load_session(args.session)
        resources = None
        if session.backend.value == "full":
            if not args.data:
                raise EvsiKitError("resuming a full-backend session requires --data DIR")
            resources = _full_resources(args)
        manager = SessionManager(session, resources)
    elif args.backend == "stats":
        stats = ingest_channel_stats(args.session)
        manager = create_stats_session(stats, costs)
    else:
        if not args.data:
            raise EvsiKitError("--backend full requires --data DIR")
        manager = create_full_session(
            _full_resources(args), tuple(args.base or ()), tuple(args.candidates or ()), costs
        )
    return EvsiService(manager, port=args.port, host=args.host)


def _full_resources(args):
    from .session import FullBackendResources

    train_split, val_split = _load_splits(args.data)
    return FullBackendResources(
        trainer=LogisticTrainer(),
        train_split=train_split,
        validation_split=val_split,
        config=TrainingConfig(seed=_resolve_seed(args)),
    )


def _cmd_serve(args) -> str:
    service = build_server(args)
    print(f"serving on {service.url}", flush=True)
    service.serve_forever()
    return ""


# ------------------------------------------------------------------- parser


def _add_format_flag(parser) -> None:
    parser.add_argument(
        "--output-format", choices=("table", "json", "csv"), default="table",
        help="rendering for stdout (default: table)",
    )


def _add_seed_flag(parser) -> None:
    parser.add_argument(
        "--seed", type=int, default=None,
        help="RNG seed (default: EVSI_SEED env var, else 0)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evsikit",
        description="Value-of-information sensor ranking, selection, and serving tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rank = sub.add_parser("rank", help="rank sensors by EVSI from a channel-stats file")
    rank.add_argument("--stats", required=True, help="channel-stats JSON file")
    rank.add_argument("--cost-r", type=float, required=True, help="remediation cost R")
    rank.add_argument("--cost-p", type=float, required=True, help="plant-damage cost P")
    rank.add_argument("--convention", choices=("eq4", "flatfix"), default="eq4")
    _add_format_flag(rank)
    rank.set_defaults(func=_cmd_rank)

    sweep = sub.add_parser("sweep", help="EVSI and actions across a grid of P/R ratios")
    sweep.add_argument("--stats", required=True)
    sweep.add_argument("--cost-r", type=float, required=True)
    sweep.add_argument("--ratios", type=_ratio_list, default=(2.0, 4.0, 8.0, 16.0))
    sweep.add_argument("--convention", choices=("eq4", "flatfix"), default="eq4")
    _add_format_flag(sweep)
    sweep.set_defaults(func=_cmd_sweep)

    gen = sub.add_parser("gen", help="generate a synthetic labeled dataset")
    gen.add_argument("--features", type=int, required=True)
    gen.add_argument("--classes", type=int, required=True, help="number of fault classes")
    gen.add_argument("--sims", type=int, required=True, help="simulations per class")
    gen.add_argument("--samples", type=int, required=True, help="samples per simulation")
    gen.add_argument("--informative", type=_csv_list, required=True,
                     help="comma-separated informative feature names")
    _add_seed_flag(gen)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    split = sub.add_parser("split", help="partition whole simulations into train/val/test")
    split.add_argument("--train", required=True, help="training-source CSV")
    split.add_argument("--test", default=None, help="separate test-source CSV")
    split.add_argument("--spec", type=_split_spec, default=SplitSpec(),
                       help="six counts: train-n,train-f,val-n,val-f,test-n,test-f")
    split.add_argument("--out-dir", required=True)
    split.set_defaults(func=_cmd_split)

    train = sub.add_parser("train", help="fit a classifier and report validation metrics")
    train.add_argument("--data", required=True, help="directory with train.csv/validation.csv")
    train.add_argument("--features", type=_csv_list, default=None)
    train.add_argument("--cv", action="store_true", help="pick C by cross-validation")
    _add_seed_flag(train)
    _add_format_flag(train)
    train.set_defaults(func=_cmd_train)

    select = sub.add_parser("select", help="rank or greedily deploy candidate sensors")
    select.add_argument("mode", choices=("mask", "forward", "evsi"))
    select.add_argument("--data", required=True)
    select.add_argument("--base", type=_csv_list, default=None)
    select.add_argument("--candidates", type=_csv_list, default=None)
    select.add_argument("--cost-r", type=float, default=1.0)
    select.add_argument("--cost-p", type=float, default=8.0)
    select.add_argument("--budget", type=int, default=10)
    _add_seed_flag(select)
    _add_format_flag(select)
    select.set_defaults(func=_cmd_select)

    serve_p = sub.add_parser("serve", help="serve a deployment session over HTTP")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--session", required=True,
                         help="saved session JSON or channel-stats JSON")
    serve_p.add_argument("--backend", choices=("stats", "full"), default="stats")
    serve_p.add_argument("--cost-r", type=float, default=1.0)
    serve_p.add_argument("--cost-p", type=float, default=8.0)
    serve_p.add_argument("--data", default=None,
                         help="train/validation directory for the full backend")
    serve_p.add_argument("--base", type=_csv_list, default=None)
    serve_p.add_argument("--candidates", type=_csv_list, default=None)
    _add_seed_flag(serve_p)
    serve_p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        output = args.func(args)
    except EvsiKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if output:
        print(output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
