"""Command-line surface.

Subcommands: extract-keyphrases, chunk, train, eval, report, gradcheck,
selftest. Exit codes: 0 success, 2 configuration error, 3 data error,
4 numeric failure.

When the environment variable CHULO_SCORER_CMD names an external scorer
bridge executable, prompt scoring runs through it; otherwise the
built-in n-gram scorer is fitted on the input corpus.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .candidates import extract_candidates
from .chunks import (
    WeightConfig,
    chunk_document,
    embed_document,
    mark_keyphrase_tokens,
    write_chunk_record,
)
from .config import load_experiment_config, skp_config_from_file
from .corpus import Document, Vocabulary, build_vocab, tokenize
from .errors import ConfigError, DataError, NumericError, ScorerError
from .harness import (
    KeyphrasePipeline,
    evaluate_experiment,
    save_result,
    scorer_from_env,
    train_experiment,
)
from .metrics import MetricsReport, render_report
from .ngram import BigramScorer
from .nn.checkpoint import load_checkpoint
from .nn.gradcheck import backward_and_check, toy_setup
from .scorer import RecordingScorer
from .skp import RankedKeyphrase, SkpConfig
from .tagging import pos_tag


def load_text_documents(path) -> list[Document]:
    """Lenient JSONL loader for unlabeled extraction input: every record
    needs an id plus either "text" or pre-split "tokens"."""
    docs = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: malformed JSON on line {lineno}: {exc}") from None
            if "id" not in record:
                raise DataError(f"{path}: line {lineno} missing 'id'")
            if "tokens" in record:
                tokens = tuple(str(t) for t in record["tokens"])
            elif "text" in record:
                tokens = tuple(tokenize(record["text"]))
            else:
                raise DataError(f"{path}: record {record['id']!r} has neither "
                                f"'text' nor 'tokens'")
            docs.append(Document(str(record["id"]), tokens))
    return docs


def cmd_extract_keyphrases(args) -> int:
    docs = load_text_documents(args.input)
    skp_cfg = skp_config_from_file(args.config) if args.config else SkpConfig()
    if args.top_n is not None:
        skp_cfg = SkpConfig(
            alpha=skp_cfg.alpha, gamma=skp_cfg.gamma,
            segment_length=skp_cfg.segment_length,
            prompt_template=skp_cfg.prompt_template,
            category=skp_cfg.category, top_n=args.top_n)
    scorer = scorer_from_env(docs)
    if args.record_scorer:
        scorer = RecordingScorer(scorer, args.record_scorer)
    pipeline = KeyphrasePipeline(skp=skp_cfg, method=args.method, scorer=scorer)
    pipeline.fit(docs)
    try:
        with open(args.output, "w", encoding="utf-8") as out:
            for doc in docs:
                ranked = pipeline.keyphrases(doc)
                payload = {
                    "id": doc.id,
                    "keyphrases": [
                        {"surface": k.phrase.surface, "score": k.score,
                         "first_occurrence": k.phrase.first_occurrence}
                        for k in ranked
                    ],
                }
                out.write(json.dumps(payload, ensure_ascii=False) + "\n")
    finally:
        pipeline.close()
    print(f"wrote keyphrases for {len(docs)} documents to {args.output}")
    return 0


def cmd_chunk(args) -> int:
    try:
        weight_a, weight_b = (float(part) for part in args.weights.split(","))
    except ValueError:
        raise ConfigError(f"--weights expects 'a,b', got {args.weights!r}") from None
    weights = WeightConfig(weight_a, weight_b)
    docs = load_text_documents(args.input)
    keys_by_doc: dict[str, list[str]] = {}
    try:
        fh = open(args.keys, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {args.keys}: {exc}") from None
    with fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            keys_by_doc[str(record["id"])] = [
                entry["surface"] for entry in record.get("keyphrases", [])]
    vocab = build_vocab([d.tokens for d in docs], min_frequency=1)
    if args.checkpoint:
        state, extra = load_checkpoint(args.checkpoint)
        table = state.params["embed.token"]
        vocab_tokens = extra.get("vocab")
        if vocab_tokens:
            vocab = Vocabulary(tuple(vocab_tokens), int(extra.get("min_frequency", 1)))
    else:
        rng = np.random.default_rng(args.seed)
        table = rng.normal(0.0, 0.02, size=(len(vocab), args.d_model))
    skipped = 0
    with open(args.output, "wb") as out:
        for doc in docs:
            encoded = vocab.encode(doc)
            cs = chunk_document(encoded, args.chunk_size)
            wanted = set(keys_by_doc.get(doc.id, ()))
            if wanted and len(doc.tokens) > 0:
                candidates = extract_candidates(pos_tag(doc))
                matched = [c for c in candidates if c.surface in wanted]
                skipped += len(wanted) - len({c.surface for c in matched})
                cs = mark_keyphrase_tokens(
                    cs, encoded,
                    [RankedKeyphrase(c, 1.0, 0.0, 0.0) for c in matched])
            emb = embed_document(cs, table, weights)
            write_chunk_record(out, cs, emb)
    if skipped:
        print(f"warning: {skipped} keyphrase surfaces not re-locatable "
              f"as candidates", file=sys.stderr)
    print(f"wrote {len(docs)} chunk records to {args.output}")
    return 0


def cmd_train(args) -> int:
    cfg = load_experiment_config(args.config)
    result, report, pipeline = train_experiment(cfg, progress=args.progress)
    pipeline.close()
    os.makedirs(args.output_dir, exist_ok=True)
    ckpt_path = os.path.join(args.output_dir, "checkpoint.chlm")
    save_result(ckpt_path, result, cfg)
    with open(os.path.join(args.output_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    with open(os.path.join(args.output_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(render_report(report) + "\n")
    print(render_report(report))
    print(f"checkpoint: {ckpt_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_experiment_config(args.config)
    state, extra = load_checkpoint(args.checkpoint)
    report = evaluate_experiment(state, extra, cfg)
    print(render_report(report))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        print(f"report JSON: {args.output}")
    return 0


def cmd_report(args) -> int:
    with open(args.metrics, encoding="utf-8") as fh:
        report = MetricsReport.from_dict(json.load(fh))
    print(render_report(report))
    return 0


def cmd_gradcheck(args) -> int:
    modes = ["doc-single", "token"] if args.task_mode == "both" else [args.task_mode]
    for mode in modes:
        state, batch = toy_setup(mode, seed=args.seed)
        _, report = backward_and_check(
            state, batch, check=True, rng=np.random.default_rng(args.seed))
        print(f"== task mode {mode}")
        print(report.summary())
    return 0


def cmd_selftest(args) -> int:
    from .corpus import LabelSet, parse_records
    from .harness import fit_model, prepare_dataset, evaluate_prepared
    from .config import ExperimentConfig
    from .nn.optim import TrainConfig
    from .synthetic import synthetic_doc_corpus

    train_records, test_records, labels = synthetic_doc_corpus(
        n_train=90, n_test=30, seed=args.seed)
    label_set = LabelSet(tuple(labels))
    train_docs = parse_records(train_records, "doc-single", label_set)
    test_docs = parse_records(test_records, "doc-single", label_set)
    cfg = ExperimentConfig(
        schema="doc-single", chunk_size=10, min_frequency=1,
        dropout_rate=0.0,
        train=TrainConfig(learning_rate=3e-3, batch_size=16, max_epochs=8,
                          patience=8, seed=args.seed),
    )
    vocab = build_vocab([d.tokens for d in train_docs], cfg.min_frequency)
    scorer = BigramScorer().fit([d.tokens for d in train_docs])
    pipeline = KeyphrasePipeline(skp=cfg.skp, method="skp", scorer=scorer)
    pipeline.fit(train_docs)
    train_data = prepare_dataset(train_docs, vocab, pipeline, cfg.chunk_size)
    test_data = prepare_dataset(test_docs, vocab, pipeline, cfg.chunk_size)
    result = fit_model(train_data, test_data, label_set, vocab, cfg)
    report = evaluate_prepared(result.best_state, test_data, label_set, cfg)
    print(f"selftest accuracy: {report.overall:.3f} "
          f"(best epoch {result.best_epoch})")
    if report.overall < 0.6:
        raise NumericError(f"selftest accuracy {report.overall:.3f} below 0.6")
    print("selftest OK")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chulo",
        description="keyphrase-weighted chunk representations for long documents")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-keyphrases", help="rank and select keyphrases")
    p.add_argument("--input", required=True, help="JSONL documents")
    p.add_argument("--method", choices=["skp", "tfidf"], default="skp")
    p.add_argument("--top-n", type=int, default=None)
    p.add_argument("--config", default=None, help="key-value file with skp.* entries")
    p.add_argument("--output", required=True, help="keys JSONL path")
    p.add_argument("--record-scorer", default=None,
                   help="write a scorer request/response trace (JSONL)")
    p.set_defaults(func=cmd_extract_keyphrases)

    p = sub.add_parser("chunk", help="chunk documents and write embeddings")
    p.add_argument("--input", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--chunk-size", type=int, required=True)
    p.add_argument("--weights", default="0.8,0.1", help="a,b")
    p.add_argument("--output", required=True)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", default=None,
                   help="use a trained embedding table instead of a seeded one")
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("train", help="train from an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--output", default=None, help="write report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render a report JSON as a table")
    p.add_argument("--metrics", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--task-mode", choices=["doc-single", "doc-multi", "token", "both"],
                   default="both")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="small end-to-end training smoke test")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ScorerError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
