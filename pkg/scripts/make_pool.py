#!/usr/bin/env python3
"""Build an annotation pool from a dictionary TSV and a trained p2g model.

For every (headword, dialect) entry the model decodes the top-k writings;
the output TSV feeds ``mundartlex serve --pool``.
"""
from __future__ import annotations

import argparse
import sys

from mundartlex.checkpoint import load_checkpoint
from mundartlex.decode import DecodeConfig, DecodeError, predict_topk
from mundartlex.lexicon import load_lexicon
from mundartlex.phoneset import default_extended, format_sampa, load_inventory


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dict", required=True, help="dictionary TSV")
    ap.add_argument("--model", required=True, help="p2g checkpoint")
    ap.add_argument("--inventory", help="inventory file (default: packaged extended set)")
    ap.add_argument("--out", required=True, help="pool TSV to write")
    ap.add_argument("--beam", type=int, default=10)
    ap.add_argument("--top-k", type=int, default=5)
    args = ap.parse_args()

    inv = load_inventory(args.inventory, name="extended") if args.inventory else default_extended()
    lex = load_lexicon(args.dict, inv)
    model = load_checkpoint(args.model)
    if model.direction != "p2g":
        print(f"warning: checkpoint direction is {model.direction}", file=sys.stderr)
    cfg = DecodeConfig(beam_size=args.beam, top_k=args.top_k)

    rows = ["headword\tdialect\tsampa\trank\tcandidate"]
    skipped = 0
    for entry in lex.entries:
        sampa = format_sampa(entry.sampa)
        try:
            results = predict_topk(model, sampa, cfg)
        except DecodeError as exc:
            print(f"skipping {entry.headword!r}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        if len(results) < args.top_k:
            print(f"skipping {entry.headword!r}: only {len(results)} candidates", file=sys.stderr)
            skipped += 1
            continue
        for rank, (text, _score) in enumerate(results[: args.top_k], start=1):
            rows.append(f"{entry.headword}\t{entry.dialect.value}\t{sampa}\t{rank}\t{text}")

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    n_items = (len(rows) - 1) // args.top_k
    print(f"wrote {n_items} items ({skipped} skipped) to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
