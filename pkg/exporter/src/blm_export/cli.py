"""blm-export: embeddings and fill-mask candidates for the BLM toolkit."""

from __future__ import annotations

import argparse
import sys

from .export import ExportJob, export_embeddings
from .fillmask import fill_mask_audit


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blm-export",
        description="Bridge pretrained language models to the BLM toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="averaged-token sentence embeddings -> BLME")
    p.add_argument("--model", required=True,
                   help="model identifier (or stub:identity[:dim])")
    p.add_argument("--sentences", required=True,
                   help="JSON-lines sentence file or a blm dataset/bank file")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fillmask", help="top-k mask fillers -> audit file")
    p.add_argument("--model", required=True,
                   help="masked-LM identifier (or stub:mlm)")
    p.add_argument("--slots", required=True,
                   help="slot-request file (blmkit.lexicon.write_slot_requests)")
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--out", required=True)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "embed":
            job = ExportJob(model_id=args.model, sentences_path=args.sentences,
                            output_path=args.out, batch_size=args.batch_size)
            count = export_embeddings(job)
            print(f"embedded {count} sentences -> {args.out}")
        else:
            rows = fill_mask_audit(args.slots, args.model, args.k, args.out)
            print(f"wrote {rows} audit rows -> {args.out}")
    except Exception as exc:  # model loading raises library-specific types
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
