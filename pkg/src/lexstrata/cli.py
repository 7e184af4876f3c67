"""Command-line surface: train, segment, eval, inspect, ratelab, encode-binary."""

import argparse
import json
import logging
import random
import statistics
import sys

from . import corpus as corpus_mod
from . import evaluation, persist, ratelab, scoring
from .config import Config
from .learner import Trainer
from .segmenter import SearchParams, segment
from .weights import RateSchedule

log = logging.getLogger("lexstrata")

CONFIG_FLAGS = [
    # (flag, config field, type, help)
    ("--window", "window", int, "prediction window on each side (offsets +/-1..window)"),
    ("--edge-budget", "edge_budget", int, "max entries per prediction-edge map"),
    ("--cooccur-budget", "cooccur_budget", int, "max entries per co-occurrence list"),
    ("--t-opt", "t_opt", int, "optimistic-probability threshold on concept frequency"),
    ("--rate-schedule", "rate_schedule", str, "edge learning-rate schedule: frequency_decay or static"),
    ("--r-min", "r_min", float, "minimum (or static) edge learning rate"),
    ("--r-mix", "r_mix", float, "rate for historical-probability updates"),
    ("--epsilon", "epsilon", float, "probability floor for missing predictions"),
    ("--beam-tries", "beam_tries", int, "segmentation candidates generated per kept parent"),
    ("--beam-keep", "beam_keep", int, "segmentation candidates kept per layer"),
    ("--top-selector", "top_selector", str, "final selection score: optimistic_coma or fast"),
    ("--composition-mode", "composition_mode", str, "model3 (top layer only) or model4 (any layer)"),
    ("--min-cooccur", "min_cooccur", int, "minimum co-occurrence count to compose"),
    ("--min-tail-score", "min_tail_score", float, "minimum binomial tail score to compose"),
    ("--period", "period", int, "episodes between periodic tasks"),
    ("--layer-threshold", "layer_threshold", float, "min-frequency moving average that triggers a new layer"),
    ("--ma-rate", "ma_rate", float, "rate for reported moving averages"),
    ("--seed", "seed", int, "RNG seed for the whole run"),
]


def _add_config_flags(parser):
    defaults = Config()
    for flag, field, typ, help_text in CONFIG_FLAGS:
        parser.add_argument(flag, dest=field, type=typ, default=None,
                            help=f"{help_text} (default: {getattr(defaults, field)})")
    parser.add_argument("--binary", dest="binary_mode", action="store_true", default=None,
                        help="binary mode: episodes are random tokens as 8-bit codes (default: off)")
    parser.add_argument("--add-layer-at", dest="layer_add_episodes", type=int,
                        action="append", default=None, metavar="EPISODE",
                        help="force a layer addition at this episode (repeatable; "
                             "takes effect at the next periodic phase)")
    parser.add_argument("--config", dest="config_file", default=None,
                        help="JSON file of config fields; flags override it")


def _build_config(args):
    fields = {}
    if args.config_file:
        with open(args.config_file, encoding="utf-8") as fh:
            fields.update(json.load(fh))
    for _, field, _, _ in CONFIG_FLAGS:
        value = getattr(args, field)
        if value is not None:
            fields[field] = value
    if args.binary_mode is not None:
        fields["binary_mode"] = args.binary_mode
    if args.layer_add_episodes is not None:
        fields["layer_add_episodes"] = tuple(args.layer_add_episodes)
    return Config.from_dict(fields)


def cmd_train(args):
    handle = corpus_mod.load_corpus(args.corpus)
    if args.snapshot_in:
        network, trainer_state = persist.load_snapshot(args.snapshot_in)
        trainer = Trainer(network=network)
        if trainer_state is not None:
            trainer.restore_state(trainer_state)
        log.info("resumed from %s at episode %d", args.snapshot_in, network.episode_idx)
    else:
        trainer = Trainer(config=_build_config(args))
    writer = evaluation.MetricsWriter(args.metrics_out) if args.metrics_out else None
    start = trainer.network.episode_idx
    every = max(1, args.episodes // 20) if args.episodes else 1

    def progress(record):
        done = record.episode - start
        if done % every == 0 or done == args.episodes:
            top = record.per_level[-1]
            log.info("episode %d: levels=%d top coma=%.3f fast=%.3f",
                     record.episode, len(record.per_level),
                     top["coma_actual"], top["fast_coma"])

    seen_reports = 0

    def progress_with_periodic(record):
        nonlocal seen_reports
        progress(record)
        for report in trainer.periodic_log[seen_reports:]:
            seen_reports += 1
            if report.created or report.layer_added:
                log.info("periodic @%d: %d holonyms%s", report.episode,
                         len(report.created),
                         f", layer added (l_max={report.l_max})"
                         if report.layer_added else "")

    try:
        trainer.train(handle, args.episodes, writer=writer,
                      progress=progress_with_periodic)
    finally:
        if writer:
            writer.close()
    persist.save_snapshot(trainer.network, args.snapshot_out, trainer.to_state())
    log.info("saved %s (episode %d, l_max=%d, %d concepts)", args.snapshot_out,
             trainer.network.episode_idx, trainer.network.l_max,
             len(trainer.network.concepts))
    return 0


def _frozen_segment(network, line, params, rng):
    """Segment one line against a frozen model (no learning, no allocation)."""
    stripped, boundaries = corpus_mod.strip_line(line)
    known = [ch for ch in stripped if ch in network.char_to_primitive]
    if len(known) != len(stripped):
        stripped = "".join(known)
        boundaries = frozenset(b for b in boundaries if 0 < b < len(stripped))
    if not stripped:
        return None, None
    episode = corpus_mod.Episode(line, stripped, boundaries,
                                 [network.char_to_primitive[ch] for ch in stripped])
    return episode, segment(episode, network, params, rng)


def cmd_segment(args):
    network, _ = persist.load_snapshot(args.snapshot)
    params = SearchParams(args.tries, args.keep, args.top_selector or network.config.top_selector)
    rng = random.Random(args.seed if args.seed is not None else network.config.seed)
    fh = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8")
    try:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            episode, chain = _frozen_segment(network, line, params, rng)
            if chain is None:
                log.warning("no known characters in line %r", line)
                continue
            actual = scoring.coma(network, chain.top, optimistic=False)
            optimistic = scoring.coma(network, chain.top, optimistic=True)
            print(f"line: {line}")
            print(f"score: actual={actual:.3f} optimistic={optimistic:.3f}")
            for level in range(len(chain.levels) - 1, -1, -1):
                print(f"L={level}: " + " ".join(chain.surfaces(network, level)))
    finally:
        if fh is not sys.stdin:
            fh.close()
    return 0


def cmd_eval(args):
    network, _ = persist.load_snapshot(args.snapshot)
    handle = corpus_mod.load_corpus(args.corpus)
    params = SearchParams(args.tries, args.keep, args.top_selector or network.config.top_selector)
    rng = random.Random(args.seed if args.seed is not None else network.config.seed)
    scores, reports = [], []
    attempts = 0
    while len(scores) < args.episodes and attempts < args.episodes * 10:
        attempts += 1
        episode, chain = _frozen_segment(network, handle.sample(rng), params, rng)
        if chain is None:
            continue
        selector_score = (scoring.coma(network, chain.top, optimistic=True)
                          if params.top_selector == "optimistic_coma"
                          else scoring.fast_coma(network, chain.top))
        scores.append(selector_score)
        reports.append(evaluation.count_bad_splits(chain, episode, network))
    mean_score = statistics.fmean(scores)
    mean_bad1 = statistics.fmean(r.bad1 for r in reports)
    mean_bad2 = statistics.fmean(r.bad2 for r in reports)
    mean_ratio = statistics.fmean(r.bad_ratio for r in reports)
    print(f"episodes: {len(scores)}")
    print(f"mean selector score: {mean_score:.4f}")
    print(f"mean bad1: {mean_bad1:.3f}")
    print(f"mean bad2: {mean_bad2:.3f}")
    print(f"mean bad-split ratio: {mean_ratio:.4f}")
    return 0


def _format_edges(network, concept, offset, top_k):
    wmap = concept.weights.get(offset)
    if not wmap:
        return "(no edges)"
    ranked = sorted(wmap.items(), key=lambda cw: -cw[1])[:top_k]
    return "  ".join(f"{network.concepts[cid].surface!r},{w:.3f}" for cid, w in ranked)


def cmd_inspect(args):
    network, _ = persist.load_snapshot(args.snapshot)
    print(f"episodes trained: {network.episode_idx}")
    print(f"layers: 0..{network.l_max}")
    for level in range(network.l_max + 1):
        total = evaluation.concept_counts(network, level)
        nonclone = evaluation.concept_counts(network, level,
                                             min_freq=args.min_freq, non_clone_only=True)
        print(f"level {level}: {total} concepts, "
              f"{nonclone} non-clones with freq >= {args.min_freq}")
    if args.concept is not None:
        _inspect_concept(network, args)
    return 0


def _inspect_concept(network, args):
    matches = [c for c in network.concepts
               if c.surface == args.concept and (args.level is None or c.level == args.level)]
    if not matches:
        print(f"no concept with surface {args.concept!r}")
        return
    for c in matches:
        kind = "clone" if c.is_clone else "composite" if c.level else "primitive"
        print(f"\n{c.surface!r}@{c.level} ({kind})  freq={c.freq}  "
              f"last_seen={network.episode_idx - c.last_seen} episodes ago  "
              f"hist_score={scoring.score_hist(network, c.id):.2f}")
        for offset in network.config.offsets:
            print(f"  pos={offset:+d}: {_format_edges(network, c, offset, args.top_k)}")
        if c.holonyms:
            ranked = sorted((network.concepts[h] for h in c.holonyms),
                            key=lambda h: -h.freq)[:args.top_k]
            print(f"  holonyms ({len(c.holonyms)}): "
                  + "  ".join(f"{h.freq} {h.surface!r}" for h in ranked))


def cmd_ratelab(args):
    schedule = RateSchedule(args.schedule, args.r_min)
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    try:
        print("p,T,schedule,r_min,eps,trials,"
              "mean_violations,sd_violations,mean_overs,sd_overs,mean_first,sd_first",
              file=out)
        for p in args.p:
            r = ratelab.run_experiment(p, args.T, schedule, args.eps, args.trials, args.seed)
            print(f"{p},{args.T},{args.schedule},{args.r_min},{args.eps},{args.trials},"
                  f"{r.mean_violations:.2f},{r.sd_violations:.2f},"
                  f"{r.mean_overs:.2f},{r.sd_overs:.2f},"
                  f"{r.mean_first:.2f},{r.sd_first:.2f}", file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_encode_binary(args):
    codebook = corpus_mod.BinaryCodebook()
    fh = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8")
    try:
        for line in fh:
            for token in line.split():
                print(corpus_mod.encode_binary(token, codebook))
    finally:
        if fh is not sys.stdin:
            fh.close()
    if args.codebook_out:
        with open(args.codebook_out, "w", encoding="utf-8") as out:
            json.dump(codebook.to_state(), out, ensure_ascii=False, indent=2)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lexstrata",
        description="Learn a layered vocabulary of string concepts from raw text "
                    "by repeated segmentation and local weight updates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the learning loop on a corpus")
    p.add_argument("--corpus", required=True, help="UTF-8 text file, one episode per line")
    p.add_argument("--episodes", type=int, required=True, help="number of episodes to train")
    p.add_argument("--snapshot-out", required=True, help="where to write the model snapshot")
    p.add_argument("--snapshot-in", default=None, help="resume from this snapshot")
    p.add_argument("--metrics-out", default=None, help="per-episode metrics CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="segment lines with a frozen model")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--input", default="-", help="text file of lines, or - for stdin")
    p.add_argument("--tries", type=int, default=Config.beam_tries)
    p.add_argument("--keep", type=int, default=Config.beam_keep)
    p.add_argument("--top-selector", default=None, choices=["optimistic_coma", "fast"])
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="frozen-model segmentation quality over sampled episodes")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--episodes", type=int, default=188)
    p.add_argument("--tries", type=int, default=Config.beam_tries)
    p.add_argument("--keep", type=int, default=Config.beam_keep)
    p.add_argument("--top-selector", default=None, choices=["optimistic_coma", "fast"])
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("inspect", help="human-readable views of a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--concept", default=None, help="surface string to inspect")
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--min-freq", type=int, default=50)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("ratelab", help="learning-rate schedule simulator")
    p.add_argument("--p", type=float, action="append", required=True,
                   help="target probability (repeatable)")
    p.add_argument("--T", type=int, default=10000, help="stream length per trial")
    p.add_argument("--eps", type=float, default=0.5, help="relative error tolerance")
    p.add_argument("--schedule", default="frequency_decay",
                   choices=["frequency_decay", "static"])
    p.add_argument("--r-min", type=float, default=0.001)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default="-", help="CSV path, or - for stdout")
    p.set_defaults(func=cmd_ratelab)

    p = sub.add_parser("encode-binary", help="re-encode tokens as 8-bit character codes")
    p.add_argument("--input", default="-", help="text file, or - for stdin")
    p.add_argument("--codebook-out", default=None, help="write the codebook as JSON")
    p.set_defaults(func=cmd_encode_binary)

    return parser


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
