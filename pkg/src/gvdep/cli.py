"""Command line entry point: ``gvdep <subcommand> [flags]``.

Every subcommand rebuilds the dataset from ``--data-root`` and writes its
artifacts under ``--out-dir``. Exit status 2 flags bad input (flags, missing
files, config), 3 flags data that fails validation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from gvdep import report
from gvdep.actions import OrientationUndecidable, UnknownPeriod
from gvdep.config import BEST_16, EURO_2020, LAST_8, ConfigError, load_config
from gvdep.evaluation import (TooFewMatches, ablate, eleven_dominates, make_folds, plateau_check,
                              read_ablation_csv, write_ablation_csv)
from gvdep.features import SLOTS_PER_TEAM, write_matrix
from gvdep.gbt import DegenerateLabels, EmptyMatrix, TrainConfig
from gvdep.ingest import (IngestError, MissingFile, frame_player_count_histogram, load_corpus,
                          write_cache)
from gvdep.labeling import TARGETS, write_labels_csv
from gvdep.pipeline import TARGET_SCHEMA, Dataset, run_valuation
from gvdep.valuation import (EmptyEventSet, UnknownTeam, read_team_csv, team_report, write_team_csv,
                             write_valuation_csv)

EXIT_OK, EXIT_INPUT, EXIT_DATA = 0, 2, 3
GAME_FILTERS = {"best16": BEST_16, "last8": LAST_8, "all": None}



class InputError(Exception):
    pass


def _train_config(args) -> TrainConfig:
    return TrainConfig(n_trees=args.n_trees, max_depth=args.max_depth,
                       learning_rate=args.learning_rate)


def _dataset(args) -> Dataset:
    config = load_config(args.config, k=args.k, k_prime=args.k_prime)
    corpus = load_corpus(args.data_root, args.competition, args.season)
    return Dataset(corpus, config)


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    ds = _dataset(args)
    out = _out(args)
    write_cache(ds.corpus, out / "corpus.jsonl")
    write_labels_csv(out / "labels.csv", ds.actions, ds.labels)
    stats = ds.stats()
    _write_json(out / "dataset_stats.json", {**asdict(stats), "legacy_c": ds.legacy_constants()})
    hist = frame_player_count_histogram(ds.corpus, [s.event_id for s in ds.states])
    _write_json(out / "player_counts.json", {str(k): v for k, v in hist.items()})
    print(f"{stats.n_matches} matches, {stats.n_observed} states kept, "
          f"{stats.n_unobserved} removed for missing frames")
    return EXIT_OK


def cmd_features(args) -> int:
    ds = _dataset(args)
    out = _out(args)
    refs = [(s.match_id, s.state_index) for s in ds.states]
    for schema in sorted(set(TARGET_SCHEMA.values())):
        target = next(t for t, s in TARGET_SCHEMA.items() if s == schema)
        path = out / f"features_{schema}_n{args.n_nearest}.f8"
        write_matrix(path, ds.matrix(target, args.n_nearest), schema, args.n_nearest, refs)
        print(path)
    return EXIT_OK


def cmd_train(args) -> int:
    ds = _dataset(args)
    models = _out(args) / "models"
    models.mkdir(exist_ok=True)
    cfg = _train_config(args)
    for t in TARGETS:
        model = ds.fit(t, ds.match_ids, cfg, args.n_nearest)
        model.save(models / f"{t}.json")
        print(f"{t}: {len(model.trees)} trees, final train loss {model.train_loss[-1]:.5f}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    ds = _dataset(args)
    out = _out(args)
    folds = make_folds(ds.match_ids, args.folds, args.seed)
    n_values = args.n_values if args.n_values is not None else list(range(SLOTS_PER_TEAM + 1))
    result = ablate(ds.fold_predictor(_train_config(args)), args.targets, folds, n_values)
    write_ablation_csv(out / "ablation.csv", result)
    summary = {}
    for t in args.targets:
        summary[t] = {"mean_f1": {str(n): v for n, v in result.mean_f1(t).items()}}
        if {0, 3, 4, SLOTS_PER_TEAM} <= set(n_values):
            summary[t]["plateau"] = asdict(plateau_check(result, t))
            summary[t]["eleven_dominates"] = eleven_dominates(result, t)
    _write_json(out / "ablation_summary.json", summary)
    for t in args.targets:
        means = result.mean_f1(t)
        print(t, " ".join(f"{n}:{v:.3f}" for n, v in means.items()))
    return EXIT_OK


def cmd_value(args) -> int:
    ds = _dataset(args)
    out = _out(args)
    folds = make_folds(ds.match_ids, args.folds, args.seed)
    models: dict = {}
    corpus_id = f"{args.competition}/{args.season}"
    val = run_valuation(ds, folds, _train_config(args), args.n_nearest, models, corpus_id)
    model_dir = out / "models"
    model_dir.mkdir(exist_ok=True)
    for (k, t), model in sorted(models.items()):
        model.save(model_dir / f"fold{k}_{t}.json")
    consts = ds.legacy_constants()
    write_valuation_csv(out / "valuation.csv", val)
    game_filter = GAME_FILTERS[args.game_filter]
    reports = team_report(val, ds.corpus.matches, ds.goals(), game_filter,
                          teams=args.teams or None)
    write_team_csv(out / "teams.csv", reports)
    _write_json(out / "weights.json", {
        **asdict(val.weights),
        "abs_gains": val.weights.abs_gains,
        "abs_attacked": val.weights.abs_attacked,
        "legacy_c_labels": consts["labels"],
        "legacy_c_events": consts["events"],
        "folds": [list(f) for f in folds.test],
    })
    print(f"weight_gains {val.weights.weight_gains:+.5f}  weight_attacked {val.weights.weight_attacked:+.5f}"
          f"  C {consts['labels']:.4f}  teams {len(reports)}")
    return EXIT_OK


def cmd_report(args) -> int:
    out = _out(args)
    written = []
    if (out / "ablation.csv").exists():
        written.append(report.render(report.ablation_plot(read_ablation_csv(out / "ablation.csv")),
                                     out / "ablation.svg"))
    if (out / "teams.csv").exists():
        teams = read_team_csv(out / "teams.csv")
        written.append(report.render(report.team_scatter(teams), out / "teams_gvdep.svg"))
        written.append(report.render(report.team_scatter(teams, "legacy_vdep_value"),
                                     out / "teams_legacy_vdep.svg"))
    if (out / "player_counts.json").exists():
        hist = {int(k): v for k, v in json.loads((out / "player_counts.json").read_text()).items()}
        written.append(report.render(report.player_count_histogram(hist), out / "player_counts.svg"))
    if args.match is not None:
        if not (out / "valuation.csv").exists():
            raise InputError("valuation.csv not found; run `gvdep value` first")
        rows = report.event_table(out / "valuation.csv", args.match, (args.start, args.stop))
        print(report.format_event_table(rows))
    if not written and args.match is None:
        raise InputError(f"no pipeline CSVs under {out}")
    for p in written:
        print(p)
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data-root", default=".", help="open-data root (matches/, events/, three-sixty/)")
    common.add_argument("--competition", type=int, default=EURO_2020[0])
    common.add_argument("--season", type=int, default=EURO_2020[1])
    common.add_argument("--seed", type=int, default=0, help="fold assignment seed")
    common.add_argument("--k", type=int, default=5, help="gains/attacked look-ahead")
    common.add_argument("--k-prime", type=int, default=10, help="scores/concedes look-ahead")
    common.add_argument("--n-nearest", type=int, default=SLOTS_PER_TEAM,
                        choices=range(SLOTS_PER_TEAM + 1), metavar="{0..11}")
    common.add_argument("--out-dir", default="out")
    common.add_argument("--config", default=None, help="action-map / gain-trigger ini file")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--n-trees", type=int, default=TrainConfig.n_trees)
    model.add_argument("--max-depth", type=int, default=TrainConfig.max_depth)
    model.add_argument("--learning-rate", type=float, default=TrainConfig.learning_rate)
    model.add_argument("--folds", type=int, default=10)

    parser = argparse.ArgumentParser(prog="gvdep", description="Score-scaled defensive valuation pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="load the corpus, write cache, labels and stats")
    sub.add_parser("features", parents=[common], help="export feature matrices")
    sub.add_parser("train", parents=[common, model], help="fit the four classifiers on all matches")
    p = sub.add_parser("ablate", parents=[common, model], help="F1 across folds for each n_nearest")
    p.add_argument("--targets", nargs="+", choices=TARGETS, default=list(TARGETS))
    p.add_argument("--n-values", nargs="+", type=int, default=None)
    p = sub.add_parser("value", parents=[common, model], help="out-of-fold valuations and team reports")
    p.add_argument("--game-filter", choices=sorted(GAME_FILTERS), default="best16")
    p.add_argument("--teams", nargs="+", type=int, default=None)
    p = sub.add_parser("report", parents=[common], help="render SVG figures, print event tables")
    p.add_argument("--match", type=int, default=None)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--stop", type=int, default=10)
    return parser


COMMANDS = {"ingest": cmd_ingest, "features": cmd_features, "train": cmd_train,
            "ablate": cmd_ablate, "value": cmd_value, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InputError, MissingFile, ConfigError, TooFewMatches, UnknownTeam, report.UnknownMatch) as exc:
        print(f"gvdep: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IngestError, UnknownPeriod, OrientationUndecidable, DegenerateLabels, EmptyMatrix,
            EmptyEventSet) as exc:
        print(f"gvdep: data validation failed: {exc}", file=sys.stderr)
        return EXIT_DATA

if __name__ == "__main__":
    sys.exit(main())
