"""Command-line interface: synth, preprocess, train, generate, evaluate, graph-query.

Exit status is 0 on success, 1 for invalid input or configuration and 2
for failures while running.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PROFILES, RunConfig
from .corpus import ConfigurationError, load_corpus
from .evaluation import evaluate_run
from .pipeline import load_artifacts, load_run, preprocess, train
from .synth import make_synthetic_corpus
from .topic_graph import load_graph, scored_neighbors

logger = logging.getLogger("slarm")

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # usage mistakes count as invalid input, not as a runtime failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per RunConfig field, spelled exactly like the field (dashes also accepted)."""
    group = parser.add_argument_group("run configuration (flags override --config)")
    group.add_argument("--config", help="JSON file with RunConfig fields")
    for f in dataclasses.fields(RunConfig):
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        kwargs = dict(dest=f.name, default=None)
        if f.name == "profile":
            group.add_argument(*names, choices=sorted(PROFILES), **kwargs)
        elif f.type == "bool":
            group.add_argument(*names, action=argparse.BooleanOptionalAction, **kwargs)
        elif f.name == "punctuation":
            group.add_argument(*names, nargs="+", metavar="TOKEN", **kwargs)
        else:
            group.add_argument(*names, type={"int": int, "float": float}.get(f.type, str), **kwargs)


def resolve_config(args, base: dict | None = None) -> RunConfig:
    """Layering: ``base`` (e.g. a run's stored config) < --config file < --profile < other flags."""
    values = dict(base or {})
    if args.config:
        values.update(RunConfig.load(args.config).to_dict())
    if args.profile:
        values.update(PROFILES[args.profile], profile=args.profile)
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "profile":
            values[f.name] = v
    return RunConfig.from_dict(values)


def cmd_synth(args) -> int:
    if args.pairs < 1:
        raise UsageError("--pairs must be at least 1")
    make_synthetic_corpus(args.seed, args.pairs, responses_per_post=args.responses_per_post, out=args.out)
    print(f"wrote {args.pairs} pairs to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    config = resolve_config(args)
    corpus = load_corpus(args.corpus, config.max_len)
    data = preprocess(corpus, config, args.run)
    print(
        f"{len(data.pairs)} pairs, vocabulary {data.vocab.size}, graph edges {data.graph.num_edges} -> {args.run}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_train(args) -> int:
    if args.config and not Path(args.config).exists():
        raise ConfigurationError(f"config file not found: {args.config}")
    stored, _ = load_artifacts(args.run)
    config = resolve_config(args, base=stored.to_dict())
    final = train(config, args.run)
    print(json.dumps(final, sort_keys=True))
    return EXIT_OK


def cmd_generate(args) -> int:
    post = args.post.split()
    if not post:
        raise UsageError("--post must contain at least one token")
    system = load_run(args.run, args.checkpoint)
    rng = np.random.default_rng(args.seed)
    result = system.respond(post, rng=rng, eps_zero=args.eps_zero)
    print("direct: " + " ".join(result.direct_tokens))
    print("supplementary: " + " ".join(result.supplementary_tokens))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    report = evaluate_run(args.hyp, args.ref, args.out)
    sys.stdout.write(report.to_json())
    return EXIT_OK


def cmd_graph_query(args) -> int:
    if args.k < 1:
        raise UsageError("-k must be at least 1")
    path = Path(args.run) / "graph.txt"
    if not path.exists():
        raise FileNotFoundError(f"no topic graph at {path}; run preprocess first")
    graph = load_graph(path)
    for word, prob in scored_neighbors(graph, [args.word], args.k):
        print(f"{word}\t{prob:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slarm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a templated toy corpus")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--responses-per-post", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="segment, build vocabulary, TF-IDF and topic graph")
    p.add_argument("--corpus", required=True, help="TSV file: post<TAB>response per line")
    p.add_argument("--run", required=True, help="run directory to create")
    _add_config_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train both generators on a preprocessed run")
    p.add_argument("--run", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="respond to one post")
    p.add_argument("--run", required=True)
    p.add_argument("--post", required=True)
    p.add_argument("--eps-zero", action="store_true", help="use the prior mean instead of a sample")
    p.add_argument("--seed", type=int, default=None, help="seed for the latent sample")
    p.add_argument("--checkpoint", default=None, help="defaults to the latest in the run")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="corpus BLEU-1..4 and Distinct-1/2")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("graph-query", help="top neighbours of a word in the topic graph")
    p.add_argument("--run", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("-k", "--k", type=int, default=5)
    p.set_defaults(func=cmd_graph_query)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"slarm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"slarm {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
