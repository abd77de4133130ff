"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
Failures print a machine-readable JSON object on stderr and leave no
partial output files (artifacts are written via atomic rename).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import PipelineConfig, validate_config
from .errors import ConfigError, DegenerateClassBalance, FactgraphError
from .evalkit import (
    HttpScorer,
    MockScorer,
    balanced_accuracy,
    build_core_dataset,
    confusion_from_scores,
    core_metrics,
    load_evidence_jsonl,
    paired_bootstrap,
    score_pair,
    tune_threshold,
)
from .evalkit.core import CorePair
from .gateway import Gateway, HttpBackend, MockBackend
from .hopscan import hop_distribution
from .jsonio import read_jsonl, write_json, write_jsonl, write_text
from .llm import LlmClient
from .mocking import ScriptedResponder
from .promptgen import TemplateLibrary
from .synthesis import (
    POLICY_OFF,
    SynthesisParams,
    gen_doc_corpus,
    gen_mhqa_pairs,
    load_mhqa_jsonl,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(FactgraphError):
    """Bad invocation: unreadable inputs, malformed requests."""


def _require_input(path: str) -> Path:
    resolved = Path(path)
    if not resolved.is_file():
        raise UsageError(f"input path does not exist: {resolved}")
    return resolved


def build_client(config: PipelineConfig) -> LlmClient:
    backend_cfg = config.backend
    if backend_cfg.kind == "mock":
        fixtures = {}
        if backend_cfg.fixtures:
            fixtures = json.loads(Path(backend_cfg.fixtures).read_text("utf-8"))
        fallback = (
            ScriptedResponder(
                config.prompts.tuple_delimiter, config.prompts.group_delimiter
            )
            if backend_cfg.scripted
            else None
        )
        backend = MockBackend(fixtures=fixtures, fallback=fallback)
    else:
        backend = HttpBackend(
            endpoint=backend_cfg.endpoint, api_key_env=backend_cfg.api_key_env
        )
    gateway = Gateway(backend, cache_dir=config.cache_dir or None)
    templates = TemplateLibrary(config.prompts.dir or None)
    return LlmClient(
        gateway=gateway,
        templates=templates,
        model=backend_cfg.model,
        temperature=backend_cfg.temperature,
        max_tokens=backend_cfg.max_tokens,
        tuple_delimiter=config.prompts.tuple_delimiter,
        group_delimiter=config.prompts.group_delimiter,
    )


def build_scorer(config: PipelineConfig):
    if config.scorer.kind == "http":
        return HttpScorer(config.scorer.endpoint, max_batch=config.scorer.max_batch)
    return MockScorer()


def _synthesis_params(config: PipelineConfig) -> SynthesisParams:
    synth = config.synthesis
    return SynthesisParams(
        hops=tuple(synth.hops),
        shape=synth.shape,
        max_subgraphs_per_doc=synth.max_subgraphs_per_doc,
        corrupt_fraction=synth.corrupt_fraction,
        nli_policy_hotpotqa=synth.nli_policy_hotpotqa,
        nli_policy_musique=synth.nli_policy_musique,
        seed=config.seed,
    )


def _manifest(command: str, config: PipelineConfig, counts: dict, outputs: dict) -> dict:
    return {
        "command": command,
        "config_digest": config.digest(),
        "seed": config.seed,
        "counts": dict(sorted(counts.items())),
        "outputs": outputs,
    }


# -- commands ---------------------------------------------------------------


def cmd_extract_graph(args, config: PipelineConfig) -> int:
    client = build_client(config)
    docs = list(read_jsonl(_require_input(args.input)))
    rows = []
    counts = {"documents": len(docs), "extracted": 0, "dropped_ill_formatted": 0}
    for record in docs:
        try:
            graph = client.extract_doc_graph(record["doc"], str(record["id"]))
        except FactgraphError:
            counts["dropped_ill_formatted"] += 1
            continue
        rows.append(graph.to_dict())
        counts["extracted"] += 1
    write_jsonl(args.output, rows)
    if args.manifest:
        write_json(
            args.manifest,
            _manifest("extract-graph", config, counts, {"graphs": str(args.output)}),
        )
    return EXIT_OK


def cmd_gen_doc(args, config: PipelineConfig) -> int:
    client = build_client(config)
    params = _synthesis_params(config)
    docs = [
        (str(record["id"]), record["doc"])
        for record in read_jsonl(_require_input(args.input))
    ]
    result = gen_doc_corpus(docs, params, client)
    write_jsonl(args.output, [s.to_dict() for s in result.sorted_samples()])
    manifest_path = args.manifest or (str(args.output) + ".manifest.json")
    write_json(
        manifest_path,
        _manifest("gen-doc", config, result.counts, {"samples": str(args.output)}),
    )
    return EXIT_OK


def cmd_gen_mhqa(args, config: PipelineConfig) -> int:
    client = build_client(config)
    params = _synthesis_params(config)
    records = load_mhqa_jsonl(_require_input(args.input))
    needs_nli = (
        params.nli_policy_hotpotqa != POLICY_OFF
        or params.nli_policy_musique != POLICY_OFF
    )
    scorer = build_scorer(config) if needs_nli else None
    result = gen_mhqa_pairs(records, params, client, nli_scorer=scorer)
    write_jsonl(args.output, [s.to_dict() for s in result.sorted_samples()])
    manifest_path = args.manifest or (str(args.output) + ".manifest.json")
    write_json(
        manifest_path,
        _manifest("gen-mhqa", config, result.counts, {"samples": str(args.output)}),
    )
    return EXIT_OK


def cmd_hopscan(args, config: PipelineConfig) -> int:
    client = build_client(config)
    corpus = [
        (record["doc"], record["claim"])
        for record in read_jsonl(_require_input(args.input))
    ]
    histogram = hop_distribution(
        corpus,
        client,
        sample_size=args.sample_size or config.eval.hopscan_sample_size,
        seed=config.seed,
    )
    write_json(args.output, histogram.to_dict())
    if args.table:
        write_text(args.table, histogram.to_table() + "\n")
    else:
        print(histogram.to_table())
    return EXIT_OK


def _load_eval_pairs(path: Path) -> list[dict]:
    pairs = list(read_jsonl(path))
    for row in pairs:
        for key in ("id", "doc", "claim", "label"):
            if key not in row:
                raise UsageError(f"eval record missing {key!r}: {row}")
    return pairs


def cmd_eval(args, config: PipelineConfig) -> int:
    pairs = _load_eval_pairs(_require_input(args.input))
    datasets = {str(row.get("dataset", "default")) for row in pairs}
    if len(datasets) != 1:
        raise UsageError(
            f"eval input must hold one dataset, found {sorted(datasets)}"
        )
    dataset = datasets.pop()
    scorer = build_scorer(config)
    budget = args.budget or config.eval.budget_tokens
    scores = [
        score_pair(scorer, row["doc"], row["claim"], budget) for row in pairs
    ]
    labels = [int(row["label"]) for row in pairs]
    if args.fixed_threshold is not None:
        theta = args.fixed_threshold
    elif config.eval.fixed_threshold:
        theta = config.eval.fixed_threshold_value
    else:
        theta, _ = tune_threshold(scores, labels, config.eval.grid_step)
    confusion = confusion_from_scores(scores, labels, theta)
    bacc = balanced_accuracy(confusion)
    scores_path = args.scores_out or (str(args.output) + ".scores.jsonl")
    write_jsonl(
        scores_path,
        [
            {"id": row["id"], "score": score, "label": label}
            for row, score, label in zip(pairs, scores, labels)
        ],
    )
    report = {
        "dataset": dataset,
        "theta": theta,
        "bacc": bacc,
        "confusion": confusion.to_dict(),
        "per_pair_scores": str(scores_path),
        "scorer": getattr(scorer, "name", "unknown"),
        "budget_tokens": budget,
        "config_digest": config.digest(),
    }
    write_json(args.output, report)
    return EXIT_OK


def _load_scores(path: Path) -> tuple[list[str], list[float], list[int]]:
    ids, scores, labels = [], [], []
    for row in read_jsonl(path):
        ids.append(str(row["id"]))
        scores.append(float(row["score"]))
        labels.append(int(row["label"]))
    return ids, scores, labels


def cmd_tune_threshold(args, config: PipelineConfig) -> int:
    _, scores, labels = _load_scores(_require_input(args.scores))
    theta, bacc = tune_threshold(scores, labels, config.eval.grid_step)
    write_json(args.output, {"theta": theta, "bacc": bacc, "pairs": len(scores)})
    return EXIT_OK


def cmd_core_build(args, config: PipelineConfig) -> int:
    records = load_evidence_jsonl(_require_input(args.input))
    result = build_core_dataset(records, seed=config.seed)
    write_jsonl(args.output, [p.to_dict() for p in result.pairs])
    manifest_path = args.manifest or (str(args.output) + ".manifest.json")
    write_json(
        manifest_path,
        _manifest(
            "core-build",
            config,
            {"records": len(records), "pairs": len(result.pairs), "skipped": result.skipped},
            {"pairs": str(args.output)},
        ),
    )
    return EXIT_OK


def cmd_core_eval(args, config: PipelineConfig) -> int:
    pairs = [CorePair.from_dict(row) for row in read_jsonl(_require_input(args.input))]
    if not pairs:
        raise UsageError("no pairs in input")
    scorer = build_scorer(config)
    budget = args.budget or config.eval.budget_tokens
    pair_scores = [
        (
            score_pair(scorer, pair.positive_doc, pair.claim, budget),
            score_pair(scorer, pair.negative_doc, pair.claim, budget),
        )
        for pair in pairs
    ]
    metrics = core_metrics(pair_scores, theta=args.theta)
    payload = metrics.to_dict()
    payload.update({"theta": args.theta, "config_digest": config.digest()})
    write_json(args.output, payload)
    return EXIT_OK


def cmd_bootstrap_test(args, config: PipelineConfig) -> int:
    ids_a, scores_a, labels_a = _load_scores(_require_input(args.scores_a))
    ids_b, scores_b, labels_b = _load_scores(_require_input(args.scores_b))
    if ids_a != ids_b or labels_a != labels_b:
        raise UsageError("score files must align on ids and labels")
    result = paired_bootstrap(
        scores_a,
        scores_b,
        labels_a,
        theta_a=args.theta_a,
        theta_b=args.theta_b,
        runs=config.eval.bootstrap_runs,
        sample_size=config.eval.bootstrap_sample_size,
        seed=config.seed,
    )
    payload = result.to_dict()
    payload.update(
        {
            "theta_a": args.theta_a,
            "theta_b": args.theta_b,
            "runs": config.eval.bootstrap_runs,
            "sample_size": config.eval.bootstrap_sample_size,
        }
    )
    write_json(args.output, payload)
    return EXIT_OK


# -- wiring -----------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factgraph",
        description="Context-graph synthetic data generation and evaluation toolkit",
    )
    parser.add_argument("--config", required=True, help="TOML config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-graph", help="document JSONL -> graph JSONL")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_extract_graph)

    p = sub.add_parser("gen-doc", help="document JSONL -> sample pairs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_gen_doc)

    p = sub.add_parser("gen-mhqa", help="QA JSONL -> samples")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_gen_mhqa)

    p = sub.add_parser("hopscan", help="(doc, claim) JSONL -> hop histogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--table", help="also write the fixed-width table here")
    p.add_argument("--sample-size", type=int, dest="sample_size")
    p.set_defaults(func=cmd_hopscan)

    p = sub.add_parser("eval", help="labeled pairs JSONL -> score report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--scores-out", dest="scores_out")
    p.add_argument("--budget", type=int)
    p.add_argument("--fixed-threshold", type=float, dest="fixed_threshold")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune-threshold", help="scores JSONL -> best threshold")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_tune_threshold)

    p = sub.add_parser("core-build", help="evidence JSONL -> intact/corrupted pairs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_core_build)

    p = sub.add_parser("core-eval", help="pairs JSONL -> connected-reasoning metrics")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_core_eval)

    p = sub.add_parser("bootstrap-test", help="two score files -> p-value")
    p.add_argument("--scores-a", dest="scores_a", required=True)
    p.add_argument("--scores-b", dest="scores_b", required=True)
    p.add_argument("--theta-a", dest="theta_a", type=float, required=True)
    p.add_argument("--theta-b", dest="theta_b", type=float, required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_bootstrap_test)

    return parser


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": {"type": kind, "message": message}}), file=sys.stderr)


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        config = validate_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        return args.func(args, config)
    except ConfigError as exc:
        _emit_error("config", "; ".join(exc.violations))
        return EXIT_USAGE
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except DegenerateClassBalance as exc:
        _emit_error("degenerate_class_balance", str(exc))
        return EXIT_RUNTIME
    except FactgraphError as exc:
        _emit_error(type(exc).__name__.lower(), str(exc))
        return EXIT_RUNTIME
    except OSError as exc:
        _emit_error("io", str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
