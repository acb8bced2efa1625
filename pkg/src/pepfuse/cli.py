"""Batch command-line interface.

One binary, subcommand style. Exit codes: 0 success, 1 validation error,
2 I/O error. All tabular outputs are TSV with a header row; ``--json``
prints a JSON mirror to stdout instead of the human summary. Commands
that write files also write a ``<out>.manifest.json`` sidecar, and report
paths render figures next to the delimited output unless ``--no-figures``
is given. Config precedence: built-in defaults < ``--config`` file <
``--set key=value`` flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import checkpoint as ckpt_io
from . import config as config_mod
from . import figures
from .composition import composition_compare, fold_change_matrix
from .descriptors import DescriptorConfig, encode_dataset
from .augment import AugmentConfig, augment
from .embedstore import HashEmbeddingProvider, StoreEmbeddingProvider, \
    open_store
from .errors import ConfigError, FastaError, PepfuseError
from .manifest import ManifestWriter
from .metrics import evaluate_scores
from .sequences import ALPHABET, parse_fasta, parse_label_manifest
from .tables import dump_tables
from .trainer import default_provider, finetune_stage2, load_model, \
    predict_detail, predict_tta, train_config_from, train_stage1, build_setup

# stdout column order for `evaluate` and the metric keys backing it
EVAL_COLUMNS = (
    ("Accuracy", "acc"),
    ("Sensitivity", "sn"),
    ("Specificity", "sp"),
    ("MCC", "mcc"),
    ("G-mean", "gmean"),
    ("AUROC", "auroc"),
    ("AUPRC", "auprc"),
)


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors (2 is reserved for I/O)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_text(path: str) -> str:
    with open(path, "r") as fh:
        return fh.read()


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _stem(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root or path


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def _config_layers(args) -> list[dict]:
    layers = []
    if getattr(args, "config", None):
        layers.append(config_mod.parse_config_text(_read_text(args.config)))
    overrides = {}
    for item in getattr(args, "overrides", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = config_mod.coerce(key.strip(), value.strip())
    if overrides:
        layers.append(overrides)
    return layers


def _merged_config(args, *pre_layers: dict) -> dict:
    layers = list(pre_layers) + _config_layers(args)
    if getattr(args, "seed", None) is not None \
            and args.command in ("train", "finetune"):
        layers.append({"train.seed": args.seed})
    return config_mod.merge(*layers)


def _manifest(args) -> ManifestWriter:
    argv = getattr(args, "_argv", None) or sys.argv[1:]
    return ManifestWriter(args.command, argv, __version__)


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if getattr(args, "json", False):
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        for line in human_lines:
            print(line)


def _open_provider(path: str | None, d_e: int, seed: int):
    """Store-backed provider with a hash fallback for sequences the store
    does not cover (augmented/TTA variants); pure hash when no store."""
    if path is None:
        return HashEmbeddingProvider(d_e, seed)
    store = open_store(path)
    return StoreEmbeddingProvider(store,
                                  HashEmbeddingProvider(store.d_e, seed))


def _load_labels(path: str) -> dict[str, int]:
    text = _read_text(path)
    if text.lstrip().startswith(">"):
        ds = parse_fasta(text)
        mapping = {}
        for pep, label in ds.records:
            if label is None:
                raise FastaError(f"record {pep.id} has no label")
            mapping[pep.id] = label
        return mapping
    return parse_label_manifest(text)


# ---------------------------------------------------------------- encode

def _cmd_encode(args) -> int:
    if args.dump_tables:
        for name, text in dump_tables().items():
            print(f"# table: {name}")
            sys.stdout.write(text)
        return 0
    if args.fasta is None or args.out is None:
        raise ConfigError("encode requires a FASTA input and --out")
    mw = _manifest(args)
    mw.add_input(args.fasta)
    if args.config:
        mw.add_input(args.config)
    cfg = _merged_config(args)
    mw.config_digest = config_mod.config_digest(cfg)
    dcfg = DescriptorConfig(**config_mod.section(cfg, "descriptors"))
    ds = parse_fasta(_read_text(args.fasta))
    matrix, schema = encode_dataset(ds.peptides(), dcfg,
                                    threads=args.threads)
    with open(args.out, "w") as fh:
        fh.write("id\t" + "\t".join(schema) + "\n")
        for (pep, _), row in zip(ds.records, matrix):
            fh.write(pep.id + "\t"
                     + "\t".join(f"{v:.10g}" for v in row) + "\n")
    mw.add_artifact(args.out)
    mw.write(args.out)
    _emit(args, {
        "out": args.out,
        "rows": len(ds.records),
        "dim": int(matrix.shape[1]),
        "ids": [pep.id for pep, _ in ds.records],
        "schema": list(schema),
        "values": [[float(v) for v in row] for row in matrix],
    }, [f"encoded {len(ds.records)} peptides x {matrix.shape[1]} features "
        f"-> {args.out}"])
    return 0


# --------------------------------------------------------------- augment

def _cmd_augment(args) -> int:
    if args.dump_blosum:
        sys.stdout.write(dump_tables()["blosum62.tsv"])
        return 0
    if args.fasta is None or args.out is None:
        raise ConfigError("augment requires a FASTA input and --out")
    mw = _manifest(args)
    mw.add_input(args.fasta)
    if args.config:
        mw.add_input(args.config)
    cfg = _merged_config(args)
    mw.config_digest = config_mod.config_digest(cfg)
    mw.seed = args.seed
    acfg = AugmentConfig(**config_mod.section(cfg, "augment"))
    ds = parse_fasta(_read_text(args.fasta))
    tasks = [(i, k, pep, label)
             for i, (pep, label) in enumerate(ds.records)
             for k in range(args.per_input)]

    # per-item streams keep the output identical for any worker count
    def one(task):
        i, k, pep, label = task
        rng = np.random.default_rng([args.seed, i, k])
        return f"{pep.id}.aug{k}", pep.id, augment(pep, acfg, rng).residues, \
            label

    if args.threads > 1 and len(tasks) >= 64:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            produced = list(pool.map(one, tasks))
    else:
        produced = [one(t) for t in tasks]
    lines = []
    for new_id, src, residues, label in produced:
        header = f">{new_id}"
        if label is not None:
            header += f"|label={label}"
        header += f"|src={src}|seed={args.seed}"
        lines.append(header)
        lines.append(residues)
    _write_text(args.out, "\n".join(lines) + "\n")
    mw.add_artifact(args.out)
    mw.write(args.out)
    _emit(args, {
        "out": args.out,
        "seed": args.seed,
        "records": [{"id": rid, "src": src, "residues": res, "label": lab}
                    for rid, src, res, lab in produced],
    }, [f"augmented {len(ds.records)} peptides x {args.per_input} "
        f"-> {len(produced)} records in {args.out}"])
    return 0


# ------------------------------------------------------- train / finetune

def _history_csv(history: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(history[0].keys()))
        writer.writeheader()
        writer.writerows(history)


def _finish_training(args, result, cfg_for_digest, mw) -> int:
    ckpt_io.save(result.checkpoint, args.out_ckpt)
    mw.add_artifact(args.out_ckpt)
    log_path = args.log or f"{args.out_ckpt}.log.csv"
    _history_csv(result.history, log_path)
    mw.add_artifact(log_path)
    artifacts = []
    if not args.no_figures:
        fig = figures.training_curves(result.history,
                                      f"{_stem(args.out_ckpt)}.training.png")
        mw.add_artifact(fig)
        artifacts.append(fig)
    mw.config_digest = config_mod.config_digest(cfg_for_digest)
    mw.seed = cfg_for_digest["train.seed"]
    mw.write(args.out_ckpt)
    best = result.checkpoint.best_metric
    _emit(args, {
        "checkpoint": args.out_ckpt,
        "log": log_path,
        "figures": artifacts,
        "stage": result.checkpoint.stage,
        "epochs_run": len(result.history),
        "best_epoch": result.checkpoint.epoch,
        "best_metric": best,
        "history": result.history,
    }, [f"{result.checkpoint.stage}: {len(result.history)} epochs, "
        f"best epoch {result.checkpoint.epoch} "
        f"(val {best:.4f}) -> {args.out_ckpt}"])
    return 0


def _cmd_train(args) -> int:
    cfg = _merged_config(args)
    if args.print_config:
        sys.stdout.write(config_mod.dump_config(cfg))
        return 0
    if args.train is None or args.out_ckpt is None:
        raise ConfigError("train requires --train and --out-ckpt")
    mw = _manifest(args)
    mw.add_input(args.train)
    for path in (args.val, args.embeddings, args.config):
        if path:
            mw.add_input(path)
    provider = _open_provider(args.embeddings, cfg["embed.dim"],
                              cfg["embed.seed"])
    setup = build_setup(cfg, embeddings=provider)
    tcfg = train_config_from(cfg)
    train_ds = parse_fasta(_read_text(args.train), task_name="train")
    val_ds = (parse_fasta(_read_text(args.val), task_name="val")
              if args.val else None)
    result = train_stage1(train_ds, val_ds, tcfg, setup)
    full = config_mod.parse_config_text(setup.config_text)
    return _finish_training(args, result, full, mw)


def _cmd_finetune(args) -> int:
    cfg = _merged_config(args, config_mod.FINETUNE_OVERRIDES)
    if args.print_config:
        sys.stdout.write(config_mod.dump_config(cfg))
        return 0
    if args.base_ckpt is None or args.task is None or args.out_ckpt is None:
        raise ConfigError("finetune requires --base-ckpt, --task "
                          "and --out-ckpt")
    mw = _manifest(args)
    mw.add_input(args.base_ckpt)
    mw.add_input(args.task)
    for path in (args.val, args.embeddings, args.config):
        if path:
            mw.add_input(path)
    base = ckpt_io.load(args.base_ckpt)
    provider = (None if args.embeddings is None else
                _open_provider(args.embeddings, cfg["embed.dim"],
                               cfg["embed.seed"]))
    tcfg = train_config_from(cfg)
    task_ds = parse_fasta(_read_text(args.task), task_name="task")
    val_ds = (parse_fasta(_read_text(args.val), task_name="val")
              if args.val else None)
    result = finetune_stage2(base, task_ds, tcfg, embeddings=provider,
                             val_ds=val_ds)
    full = config_mod.parse_config_text(result.checkpoint.config_text)
    return _finish_training(args, result, full, mw)


# --------------------------------------------------------------- predict

def _position_attention(alpha_windows: np.ndarray, length: int,
                        width: int) -> np.ndarray:
    """Spread window attention evenly over covered positions.

    The CNN branch attends over length-``width`` windows; each window's
    weight is split equally across the residues it covers, so the result
    is a distribution over all ``length`` positions.
    """
    out = np.zeros(length)
    for w, weight in enumerate(alpha_windows):
        out[w:w + width] += weight / width
    return out


def _cmd_predict(args) -> int:
    mw = _manifest(args)
    mw.add_input(args.ckpt)
    mw.add_input(args.fasta)
    if args.embeddings:
        mw.add_input(args.embeddings)
    lm = load_model(ckpt_io.load(args.ckpt))
    mw.config_digest = config_mod.config_digest(lm.full_config)
    mw.seed = args.seed
    if args.embeddings:
        provider = _open_provider(args.embeddings,
                                  lm.full_config["embed.dim"],
                                  lm.full_config["embed.seed"])
        if provider.d_e != lm.model.config.embed_dim:
            raise ConfigError(
                f"store width {provider.d_e} != model width "
                f"{lm.model.config.embed_dim}")
    else:
        provider = default_provider(lm)
    ds = parse_fasta(_read_text(args.fasta))

    rows = []
    gate_rows = []
    attn_rows = []
    attn_figs = []
    width = lm.model.config.conv_width
    for i, (pep, _) in enumerate(ds.records):
        detail = predict_detail(lm, pep, provider)
        if args.tta > 0:
            rng = np.random.default_rng([args.seed, i])
            probs = predict_tta(lm, pep, provider, args.tta, rng)
        else:
            probs = detail.probs.data
        rows.append((pep.id, float(probs[0]), float(probs[1]),
                     int(probs[1] >= 0.5)))
        if args.dump_gates:
            gate_rows.append((pep.id, float(detail.gate.data)))
        if args.dump_attention:
            cnn_pos = _position_attention(detail.attn_cnn.data, len(pep),
                                          width)
            bilstm = detail.attn_bilstm.data
            for j, residue in enumerate(pep.residues):
                attn_rows.append((pep.id, j + 1, residue,
                                  float(cnn_pos[j]), float(bilstm[j])))
            if not args.no_figures and len(attn_figs) < 12:
                fig = figures.attention_profile(
                    pep.residues, cnn_pos, bilstm,
                    f"{_stem(args.dump_attention)}."
                    f"{_safe_name(pep.id)}.png",
                    title=pep.id)
                attn_figs.append(fig)

    with open(args.out, "w") as fh:
        fh.write("id\tprob_negative\tprob_positive\tlabel\n")
        for rid, p0, p1, label in rows:
            fh.write(f"{rid}\t{p0:.10g}\t{p1:.10g}\t{label}\n")
    mw.add_artifact(args.out)
    if args.dump_gates:
        with open(args.dump_gates, "w") as fh:
            fh.write("id\tgate\n")
            for rid, gate in gate_rows:
                fh.write(f"{rid}\t{gate:.10g}\n")
        mw.add_artifact(args.dump_gates)
    if args.dump_attention:
        with open(args.dump_attention, "w") as fh:
            fh.write("id\tposition\tresidue\tattn_cnn\tattn_bilstm\n")
            for rid, pos, residue, a_c, a_b in attn_rows:
                fh.write(f"{rid}\t{pos}\t{residue}\t{a_c:.10g}"
                         f"\t{a_b:.10g}\n")
        mw.add_artifact(args.dump_attention)
    figs = list(attn_figs)
    if not args.no_figures:
        figs.append(figures.score_histogram(
            np.array([r[2] for r in rows]), f"{_stem(args.out)}.scores.png"))
        if args.dump_gates:
            figs.append(figures.gate_histogram(
                np.array([g for _, g in gate_rows]),
                f"{_stem(args.dump_gates)}.png"))
    for fig in figs:
        mw.add_artifact(fig)
    mw.write(args.out)
    _emit(args, {
        "out": args.out,
        "tta": args.tta,
        "seed": args.seed,
        "figures": figs,
        "predictions": [
            {"id": rid, "prob_negative": p0, "prob_positive": p1,
             "label": label}
            for rid, p0, p1, label in rows],
    }, [f"predicted {len(rows)} peptides -> {args.out}"
        + (f" (TTA x{args.tta})" if args.tta else "")])
    return 0


# -------------------------------------------------------------- evaluate

def _read_predictions(path: str) -> dict[str, float]:
    lines = _read_text(path).splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty prediction file")
    header = lines[0].rstrip("\n").split("\t")
    try:
        id_col = header.index("id")
    except ValueError:
        raise ConfigError(f"{path}: no 'id' column") from None
    score_col = None
    for name in ("prob_positive", "score"):
        if name in header:
            score_col = header.index(name)
            break
    if score_col is None:
        raise ConfigError(f"{path}: no 'prob_positive' or 'score' column")
    out: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) <= max(id_col, score_col):
            raise ConfigError(f"{path}:{lineno}: short row")
        rid = parts[id_col]
        if rid in out:
            raise ConfigError(f"{path}:{lineno}: duplicate id {rid!r}")
        out[rid] = float(parts[score_col])
    if not out:
        raise ConfigError(f"{path}: no prediction rows")
    return out


def _cmd_evaluate(args) -> int:
    preds = _read_predictions(args.pred)
    labels_map = _load_labels(args.labels)
    missing = sorted(set(preds) - set(labels_map))
    if missing:
        raise ConfigError(f"no label for prediction ids: {missing[:5]}")
    ids = sorted(preds)
    scores = np.array([preds[i] for i in ids])
    labels = np.array([labels_map[i] for i in ids])
    metrics = evaluate_scores(scores, labels, threshold=args.threshold)

    header = "\t".join(name for name, _ in EVAL_COLUMNS)
    values = "\t".join(f"{metrics[key]:.4f}" for _, key in EVAL_COLUMNS)
    table = f"{header}\n{values}\n"
    payload = {
        "n": len(ids),
        "threshold": args.threshold,
        **{key: metrics[key] for key in
           ("acc", "sn", "sp", "mcc", "f1", "gmean", "auroc", "auprc")},
    }
    human = [table.rstrip("\n")]
    if args.out:
        mw = _manifest(args)
        mw.add_input(args.pred)
        mw.add_input(args.labels)
        _write_text(args.out, table)
        mw.add_artifact(args.out)
        human.append(f"wrote {args.out}")
        if not args.no_figures:
            fig = figures.roc_pr_curves(scores, labels,
                                        f"{_stem(args.out)}.roc_pr.png")
            mw.add_artifact(fig)
            payload["figures"] = [fig]
            human.append(f"wrote {fig}")
        mw.write(args.out)
        payload["out"] = args.out
    _emit(args, payload, human)
    return 0


# ----------------------------------------------------------------- stats

def _cmd_stats(args) -> int:
    pairwise = args.a is not None or args.b is not None
    matrix = args.background is not None or bool(args.subset)
    if pairwise == matrix:
        raise ConfigError("stats needs either --a/--b or "
                          "--background/--subset, not both")
    mw = _manifest(args)
    figs: list[str] = []

    if pairwise:
        if args.a is None or args.b is None:
            raise ConfigError("stats needs both --a and --b")
        mw.add_input(args.a)
        mw.add_input(args.b)
        ds_a = parse_fasta(_read_text(args.a))
        ds_b = parse_fasta(_read_text(args.b))
        report = composition_compare(ds_a, ds_b)
        with open(args.out, "w") as fh:
            fh.write("residue\tmean_a\tmean_b\tlog2fc\tp\tstars\n")
            for i, residue in enumerate(report.residues):
                fh.write(f"{residue}\t{report.mean_a[i]:.10g}"
                         f"\t{report.mean_b[i]:.10g}"
                         f"\t{report.log2_fold[i]:.10g}"
                         f"\t{report.p_value[i]:.10g}"
                         f"\t{report.stars[i]}\n")
        mw.add_artifact(args.out)
        if not args.no_figures:
            figs.append(figures.composition_bars(
                report, f"{_stem(args.out)}.composition.png",
                label_a=os.path.basename(args.a),
                label_b=os.path.basename(args.b)))
        payload = {
            "out": args.out,
            "residues": list(report.residues),
            "mean_a": report.mean_a.tolist(),
            "mean_b": report.mean_b.tolist(),
            "t_stat": report.t_stat.tolist(),
            "p_value": report.p_value.tolist(),
            "log2fc": report.log2_fold.tolist(),
            "stars": list(report.stars),
        }
        n_sig = sum(1 for s in report.stars if s != "ns")
        human = [f"compared {args.a} vs {args.b}: "
                 f"{n_sig}/20 residues significant -> {args.out}"]
    else:
        if args.background is None or not args.subset:
            raise ConfigError("stats matrix mode needs --background and "
                              "at least one --subset NAME=PATH")
        mw.add_input(args.background)
        background = parse_fasta(_read_text(args.background))
        subsets = {}
        for item in args.subset:
            if "=" not in item:
                raise ConfigError(f"--subset expects NAME=PATH, got {item!r}")
            name, _, path = item.partition("=")
            if name in subsets:
                raise ConfigError(f"duplicate subset name {name!r}")
            mw.add_input(path)
            subsets[name] = parse_fasta(_read_text(path))
        names, folds, pvals = fold_change_matrix(background, subsets)
        with open(args.out, "w") as fh:
            fh.write("subset\t" + "\t".join(ALPHABET) + "\n")
            for row, name in enumerate(names):
                fh.write(name + "\t"
                         + "\t".join(f"{v:.10g}" for v in folds[row]) + "\n")
        pval_path = f"{_stem(args.out)}.pvalues.tsv"
        with open(pval_path, "w") as fh:
            fh.write("subset\t" + "\t".join(ALPHABET) + "\n")
            for row, name in enumerate(names):
                fh.write(name + "\t"
                         + "\t".join(f"{v:.10g}" for v in pvals[row]) + "\n")
        mw.add_artifact(args.out)
        mw.add_artifact(pval_path)
        if not args.no_figures:
            figs.append(figures.fold_change_heatmap(
                list(names), folds, f"{_stem(args.out)}.heatmap.png"))
        payload = {
            "out": args.out,
            "pvalues": pval_path,
            "subsets": list(names),
            "residues": list(ALPHABET),
            "log2fc": folds.tolist(),
            "p_value": pvals.tolist(),
        }
        human = [f"fold-change matrix for {len(names)} subsets "
                 f"-> {args.out}"]
    for fig in figs:
        mw.add_artifact(fig)
        human.append(f"wrote {fig}")
    payload["figures"] = figs
    mw.write(args.out)
    _emit(args, payload, human)
    return 0


# ------------------------------------------------------------ embedstore

def _cmd_embedstore(args) -> int:
    store = open_store(args.store)
    records = [{"id": r.peptide_id, "length": r.length,
                "digest": r.digest.hex()} for r in store.records]
    _emit(args, {
        "path": args.store,
        "version": 1,
        "d_e": store.d_e,
        "count": len(store),
        "records": records,
    }, [f"PEMB store {args.store}: version=1 d_e={store.d_e} "
        f"records={len(store)}",
        "id\tlength\tsha256",
        *[f"{r['id']}\t{r['length']}\t{r['digest'][:16]}" for r in records]])
    return 0


# ----------------------------------------------------------------- parser

def _add_config_flags(sub) -> None:
    sub.add_argument("--config", default=None,
                     help="key=value config file")
    sub.add_argument("--set", dest="overrides", action="append",
                     metavar="KEY=VALUE", default=None,
                     help="single config override; repeatable")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="pepfuse",
        description="Antiviral peptide classification toolkit.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version",
                        version=f"pepfuse {__version__}")
    subs = parser.add_subparsers(dest="command", required=True,
                                 metavar="COMMAND")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = subs.add_parser("encode", help="encode peptides into descriptors",
                        formatter_class=fmt)
    p.add_argument("fasta", nargs="?", default=None, help="input FASTA")
    p.add_argument("--out", default=None, help="output TSV matrix")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads")
    p.add_argument("--dump-tables", action="store_true",
                   help="print the bundled data tables and exit")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_encode)

    p = subs.add_parser("augment", help="write augmented FASTA variants",
                        formatter_class=fmt)
    p.add_argument("fasta", nargs="?", default=None, help="input FASTA")
    p.add_argument("--out", default=None, help="output FASTA")
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--per-input", type=int, default=1,
                   help="variants per input record")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads")
    p.add_argument("--dump-blosum", action="store_true",
                   help="print the bundled substitution matrix and exit")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_augment)

    p = subs.add_parser("train", help="pretrain on a labeled dataset",
                        formatter_class=fmt)
    p.add_argument("--train", default=None, help="labeled training FASTA")
    p.add_argument("--val", default=None,
                   help="labeled validation FASTA (default: carved split)")
    p.add_argument("--embeddings", default=None,
                   help="PEMB store; absent records fall back to hash "
                        "embeddings")
    p.add_argument("--out-ckpt", default=None, help="checkpoint to write")
    p.add_argument("--seed", type=int, default=None,
                   help="override train.seed")
    p.add_argument("--log", default=None,
                   help="epoch CSV log (default: <out-ckpt>.log.csv)")
    p.add_argument("--print-config", action="store_true",
                   help="print the merged config and exit")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = subs.add_parser("finetune",
                        help="fine-tune a pretrained checkpoint on a "
                             "subclass task", formatter_class=fmt)
    p.add_argument("--base-ckpt", default=None, help="stage-1 checkpoint")
    p.add_argument("--task", default=None, help="labeled subclass FASTA")
    p.add_argument("--val", default=None, help="labeled validation FASTA")
    p.add_argument("--embeddings", default=None, help="PEMB store")
    p.add_argument("--out-ckpt", default=None, help="checkpoint to write")
    p.add_argument("--seed", type=int, default=None,
                   help="override train.seed")
    p.add_argument("--log", default=None,
                   help="epoch CSV log (default: <out-ckpt>.log.csv)")
    p.add_argument("--print-config", action="store_true",
                   help="print the merged config and exit")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_finetune)

    p = subs.add_parser("predict", help="score peptides with a checkpoint",
                        formatter_class=fmt)
    p.add_argument("fasta", help="input FASTA")
    p.add_argument("--ckpt", required=True, help="model checkpoint")
    p.add_argument("--out", required=True, help="output TSV of scores")
    p.add_argument("--embeddings", default=None,
                   help="PEMB store; absent records fall back to hash "
                        "embeddings")
    p.add_argument("--tta", type=int, default=0, metavar="N",
                   help="average over N substitution variants per peptide")
    p.add_argument("--seed", type=int, default=0, help="TTA RNG seed")
    p.add_argument("--dump-gates", default=None, metavar="PATH",
                   help="write per-sample fusion gates TSV")
    p.add_argument("--dump-attention", default=None, metavar="PATH",
                   help="write per-position branch attention TSV")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    p.set_defaults(func=_cmd_predict)

    p = subs.add_parser("evaluate", help="score predictions against labels",
                        formatter_class=fmt)
    p.add_argument("--pred", required=True, help="prediction TSV")
    p.add_argument("--labels", required=True,
                   help="labeled FASTA or two-column id/label TSV")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="positive-class threshold")
    p.add_argument("--out", default=None, help="also write the table here")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    p.set_defaults(func=_cmd_evaluate)

    p = subs.add_parser("stats", help="residue composition statistics",
                        formatter_class=fmt)
    p.add_argument("--a", default=None, help="first FASTA (pairwise mode)")
    p.add_argument("--b", default=None, help="second FASTA (pairwise mode)")
    p.add_argument("--background", default=None,
                   help="background FASTA (matrix mode)")
    p.add_argument("--subset", action="append", metavar="NAME=PATH",
                   default=None, help="named subset FASTA; repeatable")
    p.add_argument("--out", required=True, help="output TSV")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    p.add_argument("--json", action="store_true", help="JSON to stdout")
    p.set_defaults(func=_cmd_stats)

    p = subs.add_parser("embedstore", help="embedding store utilities",
                        formatter_class=fmt)
    esubs = p.add_subparsers(dest="subcommand", required=True,
                             metavar="ACTION")
    pi = esubs.add_parser("inspect", help="print header and record table",
                          formatter_class=fmt)
    pi.add_argument("store", help="PEMB file")
    pi.add_argument("--json", action="store_true", help="JSON to stdout")
    pi.set_defaults(func=_cmd_embedstore)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage error (1) or --help/--version (0)
        code = exc.code
        return code if isinstance(code, int) else 0
    args._argv = list(argv) if argv is not None else sys.argv[1:]
    try:
        return args.func(args)
    except PepfuseError as exc:
        print(f"pepfuse: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"pepfuse: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
