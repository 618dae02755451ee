"""Command-line pipeline driver.

Every subcommand is batch-oriented and reproducible: seeds are mandatory,
all randomness flows from the given master seed through named substreams,
and each run writes a manifest (resolved configuration, input digests,
tool version) next to its outputs.  Values can come from a JSON config file
(--config); explicit flags win over file values.

Exit codes: 0 success, 1 runtime error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .core import BlmError
from .dataio import SplitSpec, read_dataset, split, stats, stats_table, write_dataset
from .embedding import BlmeProvider, StructuralEmbedder, embed_dataset, save_embedded
from .evaluate import (
    error_distribution,
    f1_score,
    latent_traversal,
    project_latents,
    svg_heatmap,
    svg_stacked_bars,
    write_confusion_csv,
    write_projection_csv,
)
from .ffnn import FfnnConfig, evaluate as ffnn_evaluate, save_ffnn, train_ffnn
from .generate import build_sentence_bank, generate_dataset
from .lexicon import builtin_lexicon, load_lexicon
from .nn import TrainConfig, load_checkpoint
from .oracle import validate_instance
from .templates import builtin_template, template_from_file
from .vae import (
    SentenceVae,
    TwoLevelVae,
    VaeConfig,
    evaluate_triples,
    evaluate_two_level,
    make_triples,
    save_sentence_vae,
    save_two_level,
    train_sentence_vae,
    train_two_level,
)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_path, command, config: dict, inputs, outputs):
    config = {k: v for k, v in config.items() if k != "func"}
    manifest = {
        "tool": "blmkit",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs if p and os.path.exists(str(p))},
        "outputs": [str(p) for p in outputs],
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _resolve_lexicon(args):
    if getattr(args, "lexicon", None):
        return load_lexicon(args.lexicon), args.lexicon
    return builtin_lexicon(args.task, args.lang), None


def _resolve_template(args):
    if getattr(args, "template", None):
        return template_from_file(args.template, args.lang), args.template
    return builtin_template(args.task, args.lang), None


def _provider(spec: str, inputs: list):
    if spec.startswith("structural"):
        seed = 0
        if ":" in spec:
            seed = int(spec.split(":", 1)[1])
        return StructuralEmbedder(seed)
    inputs.append(spec)
    return BlmeProvider(spec)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs,
        rng_seed=args.seed, threads=args.threads,
    )


def _load_model(path):
    kind, arrays, meta = load_checkpoint(path)
    if kind == "ffnn":
        return kind, arrays, meta
    cfg = VaeConfig(grid=tuple(meta["grid"]), kernel=meta["kernel"],
                    channels=meta["channels"], latent=meta["latent"])
    if kind == "sentence-vae":
        latent_range = arrays.pop("latent_range", None)
        model = SentenceVae(params=arrays, config=cfg, latent_range=latent_range)
        return kind, model, meta
    if kind == "two-level-vae":
        sent = {k: v for k, v in arrays.items() if not k.startswith("task_")}
        task = {k: v for k, v in arrays.items() if k.startswith("task_")}
        model = TwoLevelVae(sent, task, cfg, meta.get("answer_dim", 768))
        return kind, model, meta
    raise BlmError(f"unknown checkpoint kind {kind!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    template, template_path = _resolve_template(args)
    lexicon, lexicon_path = _resolve_lexicon(args)
    instances = generate_dataset(template, lexicon, args.n, args.type,
                                 args.seed, exhaustive=args.exhaustive)
    if args.validate:
        bad = [r.instance_id for inst in instances
               if not (r := validate_instance(inst, template)).consistent]
        if bad:
            raise BlmError(f"{len(bad)} generated instances failed the oracle: {bad[:3]}")
    write_dataset(instances, args.out)
    write_manifest(args.out, "generate", vars(args),
                   [template_path, lexicon_path], [args.out])
    print(f"wrote {len(instances)} instances to {args.out}")


def cmd_bank(args):
    template, template_path = _resolve_template(args)
    lexicon, lexicon_path = _resolve_lexicon(args)
    bank = build_sentence_bank(template, lexicon, args.n, args.seed)
    write_dataset(bank, args.out)
    write_manifest(args.out, "bank", vars(args),
                   [template_path, lexicon_path], [args.out])
    print(f"wrote {len(bank)} bank sentences to {args.out}")


def cmd_embed(args):
    items = read_dataset(args.data)
    inputs = [args.data]
    provider = _provider(args.provider, inputs)
    embedded = embed_dataset(provider, items)
    save_embedded(embedded, args.out, provenance=provider.identity)
    write_manifest(args.out, "embed", vars(args), inputs, [args.out])
    print(f"embedded {len(items)} items with {provider.identity} -> {args.out}")


def cmd_split(args):
    items = read_dataset(args.data)
    spec = SplitSpec(train_fraction=args.train_fraction,
                     dev_fraction=args.dev_fraction,
                     train_sample_size=args.sample,
                     rng_seed=args.seed,
                     stratify_by_pattern=args.stratify)
    train, dev, test = split(items, spec)
    outs = []
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        path = f"{args.out_prefix}.{name}.jsonl"
        write_dataset(part, path)
        outs.append(path)
    write_manifest(args.out_prefix + ".split", "split", vars(args), [args.data], outs)
    print(f"split {len(items)} -> train {len(train)} / dev {len(dev)} / test {len(test)}")


def _embedded(args, path):
    items = read_dataset(path)
    inputs = [path]
    provider = _provider(args.provider, inputs)
    return embed_dataset(provider, items), items, inputs


def cmd_train(args):
    config = _train_config(args)
    train_data, _, inputs = _embedded(args, args.train)
    dev_data = None
    if args.dev:
        dev_data, _, dev_inputs = _embedded(args, args.dev)
        inputs += dev_inputs
    from .embedding import EmbeddedBank, EmbeddedInstances
    if args.solver == "vae-sentence":
        if not isinstance(train_data, EmbeddedBank):
            raise BlmError("vae-sentence trains on a sentence bank (use `blm bank`)")
        triples = make_triples(train_data, args.seed)
        dev_triples = make_triples(dev_data, args.seed) if dev_data else None
        model, log = train_sentence_vae(triples, dev_triples, config)
        save_sentence_vae(args.out, model, config, provider_id=train_data.provider_id)
    else:
        if not isinstance(train_data, EmbeddedInstances):
            raise BlmError(f"{args.solver} trains on a puzzle dataset, not a bank")
        if args.solver == "ffnn":
            params, log = train_ffnn(train_data, dev_data, config)
            save_ffnn(args.out, params, config,
                      FfnnConfig(dim=train_data.context.shape[2]),
                      provider_id=train_data.provider_id)
        else:
            model, log = train_two_level(train_data, dev_data, config)
            save_two_level(args.out, model, config, provider_id=train_data.provider_id)
    log_path = args.out + ".trainlog.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    write_manifest(args.out, "train", vars(args), inputs, [args.out, log_path])
    final = log[-1] if log else {}
    print(f"trained {args.solver}: final {json.dumps(final, sort_keys=True)}")


def cmd_evaluate(args):
    kind, model, meta = _load_model(args.model)
    data, items, inputs = _embedded(args, args.test)
    inputs.append(args.model)
    from .embedding import EmbeddedBank, EmbeddedInstances
    if kind == "ffnn":
        chosen, accuracy = ffnn_evaluate(model, data)
    elif kind == "two-level-vae":
        chosen, accuracy = evaluate_two_level(model, data)
    else:
        if not isinstance(data, EmbeddedBank):
            raise BlmError("a sentence-vae checkpoint is evaluated on a bank")
        triples = make_triples(data, args.seed)
        chosen, accuracy = evaluate_triples(model, triples)
        scores = f1_score(chosen, np.zeros(len(chosen), dtype=int))
        report = {"kind": kind, "accuracy": accuracy, **scores}
        _write_eval(args, report, inputs)
        return
    scores = f1_score(chosen, data.correct_index)
    histogram = error_distribution(chosen, items)
    report = {"kind": kind, "accuracy": accuracy, **scores, "errors": histogram}
    if args.svg:
        labels = sorted(histogram["counts"])
        series = {lab: [histogram["fractions"].get(lab, 0.0)] for lab in labels}
        svg_stacked_bars(args.svg, ["test"], series, title="answer type distribution")
    _write_eval(args, report, inputs)


def _write_eval(args, report, inputs):
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_manifest(args.out, "evaluate", vars(args), inputs, [args.out])
    print(json.dumps({k: report[k] for k in ("kind", "accuracy", "f1")}, sort_keys=True))


def cmd_probe(args):
    kind, model, meta = _load_model(args.model)
    if kind != "sentence-vae":
        raise BlmError("probing requires a sentence-vae checkpoint")
    data, items, inputs = _embedded(args, args.bank)
    inputs.append(args.model)
    os.makedirs(args.out, exist_ok=True)
    outs = []
    if args.what == "traverse":
        triples = make_triples(data, args.seed)
        report = latent_traversal(model, triples, steps=args.steps)
        base_csv = os.path.join(args.out, "baseline.csv")
        write_confusion_csv(base_csv, report.baseline_matrix, report.patterns)
        svg_heatmap(os.path.join(args.out, "baseline.svg"), report.baseline_matrix,
                    report.patterns, report.patterns, title="untraversed confusion")
        outs += [base_csv]
        summary = ["unit,step,value,diagonal_fraction"]
        for (u, s), matrix in sorted(report.matrices.items()):
            total = matrix.sum()
            diag = np.trace(matrix) / total if total else 0.0
            summary.append(f"{u},{s},{report.values[(u, s)]:.6f},{diag:.6f}")
            csv_path = os.path.join(args.out, f"confusion_u{u}_s{s}.csv")
            write_confusion_csv(csv_path, matrix, report.patterns)
            svg_heatmap(os.path.join(args.out, f"confusion_u{u}_s{s}.svg"), matrix,
                        report.patterns, report.patterns,
                        title=f"unit {u} step {s} value {report.values[(u, s)]:.3f}")
            outs.append(csv_path)
        summary_path = os.path.join(args.out, "summary.csv")
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(summary) + "\n")
        outs.append(summary_path)
        print(f"traversal: baseline accuracy {report.baseline_accuracy:.4f}, "
              f"{len(report.matrices)} matrices -> {args.out}")
    else:  # project
        coords, ids, patterns = project_latents(model, data.vectors, data.patterns,
                                                ids=data.ids)
        csv_path = os.path.join(args.out, "projection.csv")
        write_projection_csv(csv_path, coords, ids, patterns)
        outs.append(csv_path)
        print(f"projected {len(ids)} latents -> {csv_path}")
    write_manifest(os.path.join(args.out, "probe"), f"probe-{args.what}",
                   vars(args), inputs, outs)


def cmd_stats(args):
    items = read_dataset(args.data)
    report = stats(items)
    table = stats_table(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
            fh.write("\n")
        write_manifest(args.out, "stats", vars(args), [args.data], [args.out])
    sys.stdout.write(table)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _apply_config_file(argv):
    """Pull defaults from a --config JSON file; explicit flags override."""
    if "--config" not in argv:
        return argv, {}
    i = argv.index("--config")
    path = argv[i + 1]
    with open(path, encoding="utf-8") as fh:
        values = json.load(fh)
    rest = argv[:i] + argv[i + 2:]
    extra = []
    for key, value in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in rest:
            continue
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        else:
            extra += [flag, str(value)]
    return rest + extra, values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blm", description="Blackbird Language Matrices toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, required=True, help="master rng seed")

    p = sub.add_parser("generate", help="generate a puzzle dataset")
    p.add_argument("--task", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--type", required=True, choices=["I", "II", "III"])
    p.add_argument("--n", type=int)
    p.add_argument("--exhaustive", action="store_true",
                   help="enumerate every Type I seed instead of sampling n")
    p.add_argument("--lexicon", help="lexicon file (default: builtin fixture)")
    p.add_argument("--template", help="template file (default: builtin)")
    p.add_argument("--validate", action="store_true",
                   help="run the rule oracle on every generated instance")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bank", help="generate a pattern-uniform sentence bank")
    p.add_argument("--task", required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lexicon")
    p.add_argument("--template")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_bank)

    p = sub.add_parser("embed", help="embed a dataset or bank into a BLME file")
    p.add_argument("--data", required=True)
    p.add_argument("--provider", default="structural:0",
                   help="structural:<seed> or a BLME file path")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("split", help="hold out test, sample train, carve dev")
    p.add_argument("--data", required=True)
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--dev-fraction", type=float, default=0.2)
    p.add_argument("--sample", type=int, default=None,
                   help="train sample size (default: whole pool)")
    p.add_argument("--stratify", action="store_true",
                   help="apply the split per sentence pattern")
    p.add_argument("--out-prefix", required=True)
    add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a solver")
    p.add_argument("solver", choices=["ffnn", "vae-sentence", "vae-two-level"])
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--provider", default="structural:0")
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--epochs", type=int, default=120)
    p.add_argument("--threads", type=int, default=0,
                   help="0: use BLM_THREADS (default 1 = bitwise reproducible)")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--provider", default="structural:0")
    p.add_argument("--svg", help="write an answer-type stacked-bar SVG here")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("probe", help="latent traversal / 2-D projection")
    p.add_argument("what", choices=["traverse", "project"])
    p.add_argument("--model", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--provider", default="structural:0")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    return parser


def dispatch(argv) -> int:
    try:
        argv, _ = _apply_config_file(list(argv))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        return 1
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (BlmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
