"""Command-line pipelines: annotate, prepare, stats, train, generate, evaluate.

Exit codes: 0 success, 1 validation or runtime error, 2 bad usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus
from .annotator import AnnotationError, annotate_corpus
from .config import ConfigError, dump_config, load_config, model_and_train_configs, require
from .lexicon import LexiconError, load_lexicon

log = logging.getLogger("termdialog")


class CLIError(Exception):
    pass


def _read_jsonl(path) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    try:
                        records.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise CLIError(f"{path}:{lineno}: bad JSON ({exc.msg})") from exc
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc
    return records


def _write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def _records_to_pairs(records: list[dict]) -> list:
    """Accept pair records ``{id, src_text, tgt_text}`` or raw dialogues ``{id, utterances}``."""
    pairs = []
    for i, r in enumerate(records):
        if "utterances" in r:
            utts = [corpus.Utterance(str(u["speaker"]).lower(), u["text"].strip())
                    for u in r["utterances"] if u["text"].strip()]
            pairs.extend(corpus.dialogue_to_pairs(str(r["id"]), utts))
        elif "src_text" in r and "tgt_text" in r:
            pairs.append(corpus.pair_from_record({**r, "id": str(r.get("id", i))}))
        else:
            raise CLIError(f"record {i} has neither utterances nor src_text/tgt_text")
    return pairs


def _config(args, overrides: dict | None = None) -> dict:
    over: dict = {}
    if getattr(args, "seed", None) is not None:
        over["split"] = {"seed": args.seed}
        over["train"] = {"seed": args.seed}
    if getattr(args, "threads", None) is not None:
        over["threads"] = args.threads
    if getattr(args, "out_dir", None) is not None:
        over.setdefault("paths", {})["out_dir"] = args.out_dir
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            over.setdefault(section, {})[key] = value
    return load_config(args.config, over)


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["paths"]["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_annotate(args) -> int:
    cfg = _config(args, {("paths", "lexicon"): args.lexicon})
    lex = load_lexicon(require(cfg, "paths", "lexicon"))
    pairs = _records_to_pairs(_read_jsonl(args.input))
    annotated = annotate_corpus(pairs, lex, threads=cfg["threads"])
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8") as fh:
        for a in annotated:
            fh.write(a.to_json() + "\n")
    n_tokens = sum(len(a.src.tokens) + len(a.tgt.tokens) for a in annotated)
    n_phrases = sum(len(a.src.spans) + len(a.tgt.spans) for a in annotated)
    print(f"{args.input}: records={len(annotated)} tokens={n_tokens} term_phrases={n_phrases}")
    return 0


def cmd_prepare(args) -> int:
    cfg = _config(args, {("paths", "raw"): args.raw, ("paths", "lexicon"): args.lexicon})
    raw = require(cfg, "paths", "raw")
    lex = load_lexicon(require(cfg, "paths", "lexicon"))
    out = _out_dir(cfg)
    pairs, report = corpus.parse_raw(raw)
    fcfg = corpus.FilterConfig(**cfg["filter"])
    kept = corpus.filter_and_truncate(pairs, fcfg)
    try:
        parts = corpus.split(kept, cfg["split"]["ratios"], cfg["split"]["seed"])
    except corpus.CorpusConfigError as exc:
        raise ConfigError(str(exc)) from exc
    stats = {}
    for name, part in zip(("train", "val", "test"), parts):
        annotated = annotate_corpus(part, lex, threads=cfg["threads"])
        _write_jsonl(out / f"{name}.jsonl", (a.to_record() for a in annotated))
        stats[name] = corpus.compute_stats(part, lex)
    (out / "stats.json").write_text(
        json.dumps({k: v.to_dict() for k, v in stats.items()}, indent=2) + "\n", encoding="utf-8")
    table = corpus.format_stats_table({"Train": stats["train"], "Val": stats["val"], "Test": stats["test"]})
    (out / "stats.txt").write_text(table, encoding="utf-8")
    dump_config(cfg, out / "resolved_config.yaml")
    print(f"parsed {report.pairs} pairs from {report.dialogues} dialogues ({report.skipped} lines skipped); "
          f"{len(kept)} kept after filtering")
    print(table, end="")
    return 0


def cmd_stats(args) -> int:
    cfg = _config(args, {("paths", "lexicon"): args.lexicon})
    lex = load_lexicon(require(cfg, "paths", "lexicon"))
    columns = {}
    for path in args.inputs:
        records = _read_jsonl(path)
        pairs = _records_to_pairs(records)
        columns[Path(path).stem] = corpus.compute_stats(pairs, lex)
    table = corpus.format_stats_table(columns)
    if args.json:
        print(json.dumps({k: v.to_dict() for k, v in columns.items()}, indent=2))
    else:
        print(table, end="")
    if args.out_dir:
        out = _out_dir(cfg)
        (out / "stats.json").write_text(
            json.dumps({k: v.to_dict() for k, v in columns.items()}, indent=2) + "\n", encoding="utf-8")
        (out / "stats.txt").write_text(table, encoding="utf-8")
    return 0


def _load_examples(path, vocab, max_len):
    from .model import encode_record

    return [encode_record(r, vocab, max_len) for r in _read_jsonl(path)]


def cmd_train(args) -> int:
    from .model import build_vocab, encode_record, model_tokens, save_checkpoint, train
    from .model.training import TrainingDiverged

    cfg = _config(args, {("paths", "train"): args.train, ("paths", "val"): args.val,
                         ("train", "preset"): args.preset})
    train_path = require(cfg, "paths", "train")
    mcfg, tcfg = model_and_train_configs(cfg)
    out = _out_dir(cfg)
    train_records = _read_jsonl(train_path)
    if not train_records:
        raise CLIError(f"{train_path}: empty training set")
    vocab = build_vocab((toks for r in train_records for toks in model_tokens(r)), cfg["vocab"]["min_freq"])
    train_set = [encode_record(r, vocab, mcfg.max_len) for r in train_records]
    val_path = cfg["paths"].get("val")
    val_set = _load_examples(val_path, vocab, mcfg.max_len) if val_path else []
    try:
        result = train(train_set, val_set, vocab, tcfg, mcfg)
    except TrainingDiverged as exc:
        raise CLIError(f"training diverged: {exc}") from exc
    digest = save_checkpoint(out / "checkpoint.json", result.model, vocab,
                             {"train_config": tcfg.to_dict(), "best_val_ppl": result.best_val_ppl,
                              "best_epoch": result.best_epoch})
    result.write_history(out / "history.csv")
    dump_config(cfg, out / "resolved_config.yaml")
    last = result.history[-1]
    print(f"steps={last.step} lm_loss={last.lm_loss:.6f} classifier_loss={last.classifier_loss:.6f} "
          f"best_val_ppl={result.best_val_ppl} checkpoint_sha256={digest}")
    return 0


def _generate(cfg, checkpoint, input_path):
    from .annotator import strip_markers
    from .model import CheckpointError, encode_record, generate, load_checkpoint
    from .model.training import evaluate_nll

    try:
        model, vocab, _ = load_checkpoint(checkpoint)
    except CheckpointError as exc:
        raise CLIError(str(exc)) from exc
    records = _read_jsonl(input_path)
    if not records:
        raise CLIError(f"{input_path}: empty test set")
    for r in records:
        if "src_flattened" not in r:
            raise CLIError(f"{input_path}: records must be annotated (run `termdialog annotate` first)")
    examples = [encode_record(r, vocab, model.cfg.max_len) for r in records]
    if all(i == vocab.unk_id for e in examples for i in e.src_ids[:-1]):
        raise CLIError("no input token is in the checkpoint vocabulary; wrong checkpoint for this data?")
    dec = cfg["decode"]
    responses = []
    for r, e in zip(records, examples):
        ids = generate(model, e.src_ids, dec["max_new"], vocab.bos_id, vocab.eos_id,
                       dec["strategy"], dec["beam_size"])
        cand = " ".join(strip_markers(vocab.decode(ids)))
        ref = " ".join(strip_markers(t.lower() for t in r["tgt_flattened"].split()))
        responses.append({"id": r["id"], "candidate": cand, "reference": ref})
    nlls = evaluate_nll(model, examples, vocab)
    return responses, [{"id": r["id"], "nlls": n} for r, n in zip(records, nlls)]


def cmd_generate(args) -> int:
    cfg = _config(args, {("decode", "strategy"): args.strategy, ("decode", "beam_size"): args.beam_size,
                         ("decode", "max_new"): args.max_new})
    responses, nlls = _generate(cfg, args.checkpoint, args.input)
    out = _out_dir(cfg)
    output = Path(args.output) if args.output else out / "responses.jsonl"
    _write_jsonl(output, responses)
    _write_jsonl(output.with_name(output.stem + ".nll.jsonl"), nlls)
    print(f"wrote {len(responses)} responses to {output}")
    return 0


def cmd_evaluate(args) -> int:
    from .metrics import MetricError, evaluate_run

    cfg = _config(args, {("paths", "lexicon"): args.lexicon, ("decode", "strategy"): args.strategy,
                         ("decode", "beam_size"): args.beam_size, ("decode", "max_new"): args.max_new})
    lex_path = cfg["paths"].get("lexicon")
    lex = load_lexicon(lex_path) if lex_path else None
    if args.responses:
        responses = _read_jsonl(args.responses)
        nll_rows = _read_jsonl(args.nll) if args.nll else []
    elif args.checkpoint and args.input:
        responses, nll_rows = _generate(cfg, args.checkpoint, args.input)
    else:
        raise CLIError("evaluate needs --responses, or --checkpoint with --input")
    if not responses:
        raise CLIError("empty test set")
    nlls = [x for row in nll_rows for x in row["nlls"]] or None
    try:
        report = evaluate_run([r["candidate"] for r in responses], [r["reference"] for r in responses],
                              nlls, lex)
    except MetricError as exc:
        raise CLIError(str(exc)) from exc
    out = _out_dir(cfg)
    (out / "report.json").write_text(report.dumps() + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.format_table(args.name), encoding="utf-8")
    if args.checkpoint and args.input:
        _write_jsonl(out / "responses.jsonl", responses)
    dump_config(cfg, out / "resolved_config.yaml")
    print(report.format_table(args.name), end="")
    print(f"distinct terminology phrases: {report.distinct_term_count}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML pipeline config")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out-dir")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="termdialog", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", parents=[common], help="insert terminology markers into dialogue pairs")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("prepare", parents=[common], help="parse, filter, split, annotate and summarize a raw dump")
    p.add_argument("--raw")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics table")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--lexicon")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", parents=[common], help="train the joint-loss model")
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--preset", choices=["full", "desk", "overfit"])
    p.set_defaults(func=cmd_train)

    decode = argparse.ArgumentParser(add_help=False)
    decode.add_argument("--strategy", choices=["greedy", "beam"])
    decode.add_argument("--beam-size", type=int)
    decode.add_argument("--max-new", type=int)

    p = sub.add_parser("generate", parents=[common, decode], help="decode responses for annotated inputs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", parents=[common, decode], help="metric report for generated responses")
    p.add_argument("--checkpoint")
    p.add_argument("--input")
    p.add_argument("--responses", help="JSON lines of {id, candidate, reference}")
    p.add_argument("--nll", help="JSON lines of {id, nlls} for perplexity")
    p.add_argument("--lexicon")
    p.add_argument("--name", default="model")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CLIError, ConfigError, LexiconError, AnnotationError, OSError, ValueError, KeyError) as exc:
        print(f"termdialog {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
