"""Command-line entry point.

Exit codes: 0 success, 1 validation or data failure, 2 usage error.
Data goes to stdout, diagnostics to stderr; ``--format tsv|json`` keeps
stdout machine-readable. ``MUNDARTLEX_DATA_DIR`` supplies default
inventory/rules files; the packaged defaults are the fallback.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import phoneset as ps
from . import lexicon as lx
from .evaluation import (
    EvalError,
    exact_match_report,
    load_tags,
    rank_accuracy,
)
from .vocab import VocabError, tokenize_target

_DOMAIN_ERRORS = (
    ps.PhonesetError,
    lx.LexiconError,
    EvalError,
    VocabError,
    OSError,
)


def _data_file(filename: str, override: str | None) -> Path:
    if override:
        return Path(override)
    env_dir = os.environ.get("MUNDARTLEX_DATA_DIR")
    if env_dir and (Path(env_dir) / filename).exists():
        return Path(env_dir) / filename
    return ps.default_data_path(filename)


def _load_inventories(args) -> tuple[ps.PhoneInventory, ps.PhoneInventory, tuple]:
    extended = ps.load_inventory(_data_file("extended.txt", args.inventory), name="extended")
    reduced = ps.load_inventory(_data_file("reduced.txt", args.reduced_inventory), name="reduced")
    rules = ps.load_rules(_data_file("rules.tsv", args.rules), reduced)
    return extended, reduced, rules


def _emit(lines: list[str]) -> None:
    for line in lines:
        print(line)


def cmd_dict_validate(args) -> int:
    extended, reduced, _ = _load_inventories(args)
    inv = reduced if args.phoneset == "reduced" else extended
    lex = lx.load_lexicon(args.dict, inv)
    if lex.duplicate_rows:
        print(f"warning: {lex.duplicate_rows} duplicate rows collapsed", file=sys.stderr)
    report = lx.validate(lex)
    if args.format == "tsv":
        _emit(report.as_tsv_lines())
    elif args.format == "json":
        print(json.dumps({"ok": report.ok, "counts": report.counts}))
    else:
        sys.stdout.write(report.as_text())
    return 0 if report.ok else 1


def cmd_dict_convert(args) -> int:
    extended, reduced, rules = _load_inventories(args)
    lex = lx.load_lexicon(args.dict, extended)
    rows = lx.render_rows(lex, phoneset=args.phoneset, rules=rules, reduced=reduced)
    if args.out:
        lx.export_lexicon(lex, args.out, phoneset=args.phoneset, rules=rules, reduced=reduced)
        print(f"wrote {len(lex)} entries to {args.out}", file=sys.stderr)
    else:
        _emit(rows)
    return 0


def cmd_train(args) -> int:
    from .checkpoint import save_checkpoint
    from .model import ModelConfig, ModelError, Transformer
    from .training import TrainConfig, TrainingDivergedError, split_pairs, train
    from .vocab import build_vocabs, load_pairs_tsv

    pairs = load_pairs_tsv(args.data, args.direction)
    if not pairs:
        print("no training pairs", file=sys.stderr)
        return 1
    valid_pairs: list = []
    test_pairs: list = []
    if args.split:
        try:
            fractions = tuple(float(x) for x in args.split.split(":"))
        except ValueError:
            fractions = ()
        if len(fractions) != 3:
            print(f"bad --split {args.split!r}, expected train:valid:test", file=sys.stderr)
            return 2
        pairs, valid_pairs, test_pairs = split_pairs(pairs, fractions, args.seed)
    src_vocab, tgt_vocab = build_vocabs(pairs)
    config = ModelConfig(
        n_layers=args.layers,
        n_heads=args.heads,
        d_k=args.d_k,
        d_v=args.d_v,
        d_model=args.d_model,
        d_word_vec=args.d_model,
        d_inner_hid=args.d_inner,
        dropout=args.dropout,
        max_len=args.max_len,
    )
    train_cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        dropout=args.dropout,
        seed=args.seed,
        lr_scale=args.lr_scale,
        warmup_steps=args.warmup,
    )
    model = Transformer(config, src_vocab, tgt_vocab, direction=args.direction, seed=args.seed)
    try:
        model, history = train(model, pairs, train_cfg)
    except (ModelError, TrainingDivergedError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for epoch, loss in enumerate(history, start=1):
        print(f"epoch {epoch}: loss {loss:.6f}", file=sys.stderr)
    model.meta.update(
        {
            "direction": args.direction,
            "n_train": len(pairs),
            "n_valid": len(valid_pairs),
            "n_test": len(test_pairs),
            "data": str(args.data),
        }
    )
    save_checkpoint(model, args.out)
    print(f"saved checkpoint to {args.out}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    from .checkpoint import CheckpointError, load_checkpoint
    from .decode import DecodeConfig, DecodeError, predict_topk

    try:
        model = load_checkpoint(args.model)
    except CheckpointError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    cfg = DecodeConfig(
        beam_size=args.beam, top_k=args.top_k, max_decode_len=args.max_decode_len
    )
    unknown: list[str] = []
    try:
        results = predict_topk(model, args.input, cfg, unknown=unknown)
    except DecodeError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if unknown:
        print(f"warning: unknown input tokens {sorted(set(unknown))}", file=sys.stderr)
    if args.format == "json":
        print(
            json.dumps(
                [
                    {"input": args.input, "rank": r, "output": out, "score": score}
                    for r, (out, score) in enumerate(results, start=1)
                ],
                ensure_ascii=False,
            )
        )
    else:
        for r, (out, score) in enumerate(results, start=1):
            print(f"{args.input}\t{r}\t{out}\t{score:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    from .checkpoint import CheckpointError, load_checkpoint
    from .decode import DecodeConfig, DecodeError, predict_topk

    try:
        model = load_checkpoint(args.model)
    except CheckpointError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    cfg = DecodeConfig(beam_size=args.beam, top_k=1, max_decode_len=args.max_decode_len)
    pairs = []
    for lineno, line in enumerate(Path(args.data).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            print(f"line {lineno}: expected src<TAB>tgt[<TAB>dialect]", file=sys.stderr)
            return 1
        dialect = lx.Dialect.parse(cols[2]) if len(cols) > 2 and cols[2] else None
        try:
            best = predict_topk(model, cols[0], cfg)[0][0]
        except DecodeError as exc:
            print(f"line {lineno}: {exc}", file=sys.stderr)
            return 1
        pairs.append(
            (
                dialect,
                tokenize_target(best, model.direction),
                tokenize_target(cols[1], model.direction),
            )
        )
    report = exact_match_report(pairs)
    if args.format == "tsv":
        _emit(report.as_tsv_lines())
    elif args.format == "json":
        print(
            json.dumps(
                {
                    name: {
                        "pairs": g.n_pairs,
                        "exact": g.n_exact,
                        "mean_distance": g.mean_distance,
                    }
                    for name, g in report.groups.items()
                }
            )
        )
    else:
        sys.stdout.write(report.as_text())
    return 0


def cmd_tags_report(args) -> int:
    records = load_tags(args.tags)
    if not records:
        print("no tags", file=sys.stderr)
        return 1
    try:
        table = rank_accuracy(records, top_k=args.top_k)
    except EvalError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if args.format == "tsv":
        _emit(table.as_tsv_lines())
    elif args.format == "json":
        print(json.dumps(table.as_json_dict(), ensure_ascii=False))
    else:
        sys.stdout.write(table.as_text())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        pool_path=args.pool,
        store_path=args.store,
        sessions_path=args.sessions,
        ui_dir=args.ui_dir,
        top_k=args.top_k,
        enforce_reasons=not args.no_enforce_reasons,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _add_inventory_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--inventory", help="extended inventory file")
    p.add_argument("--reduced-inventory", help="reduced inventory file")
    p.add_argument("--rules", help="reduction rules file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mundartlex", description=__doc__)
    parser.add_argument("--config", help="key=value defaults file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dict-validate", help="check a dictionary TSV")
    p.add_argument("--dict", required=True)
    p.add_argument("--phoneset", choices=["extended", "reduced"], default="extended")
    p.add_argument("--format", choices=["text", "tsv", "json"], default="text")
    _add_inventory_flags(p)
    p.set_defaults(func=cmd_dict_validate)

    p = sub.add_parser("dict-convert", help="rewrite a dictionary in another phone set")
    p.add_argument("--dict", required=True)
    p.add_argument("--phoneset", choices=["extended", "reduced"], default="reduced")
    p.add_argument("--out")
    _add_inventory_flags(p)
    p.set_defaults(func=cmd_dict_convert)

    p = sub.add_parser("train", help="train a p2g or g2p model")
    p.add_argument("--data", required=True, help="src<TAB>tgt training TSV")
    p.add_argument("--direction", choices=["p2g", "g2p"], default="p2g")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=55)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", help="train:valid:test fractions, e.g. 0.8:0.1:0.1")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--d-k", type=int, default=32)
    p.add_argument("--d-v", type=int, default=32)
    p.add_argument("--d-model", type=int, default=50)
    p.add_argument("--d-inner", type=int, default=400)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--warmup", type=int, default=400)
    p.add_argument("--lr-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="decode candidates for one input")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--beam", type=int, default=10)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--max-decode-len", type=int, default=40)
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="exact-match report on a test TSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="src<TAB>tgt[<TAB>dialect] TSV")
    p.add_argument("--beam", type=int, default=10)
    p.add_argument("--max-decode-len", type=int, default=40)
    p.add_argument("--format", choices=["text", "tsv", "json"], default="text")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tags-report", help="rank-accuracy table from a tags JSONL")
    p.add_argument("--tags", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--format", choices=["text", "tsv", "json"], default="text")
    p.set_defaults(func=cmd_tags_report)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--pool", required=True, help="candidate pool TSV")
    p.add_argument("--store", required=True, help="append-only tags JSONL")
    p.add_argument("--sessions", help="session persistence file")
    p.add_argument("--ui-dir", help="static UI bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--no-enforce-reasons", action="store_true")
    p.set_defaults(func=cmd_serve)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    defaults = {}
    for lineno, line in enumerate(Path(known.config).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise LexiconConfigError(f"{known.config}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        defaults[key.replace("-", "_")] = value
    for sp in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        usable = {}
        for action in sp._actions:
            if action.dest in defaults:
                value = defaults[action.dest]
                usable[action.dest] = action.type(value) if callable(action.type) else value
        sp.set_defaults(**usable)


class LexiconConfigError(ValueError):
    pass


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except LexiconConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
