"""Command line entry point.

Exit codes: 0 success, 1 usage or export error, 2 I/O error. Output is
a short human line by default, a JSON object with ``--json``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from . import __version__
from .embedder import DEFAULT_MODEL
from .errors import ExportError
from .exporter import ExportJob, export
from .manifest import ManifestWriter


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esm-export",
        description="Export per-residue language-model embeddings into a "
                    "PEMB store.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version",
                        version=f"esm-export {__version__}")
    parser.add_argument("--fasta", required=True, help="input FASTA")
    parser.add_argument("--out", required=True, help="output PEMB store")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="checkpoint id, or stub[:d_e[:seed]] for the "
                             "deterministic offline backend")
    parser.add_argument("--batch-size", type=int, default=8,
                        help="sequences per inference batch")
    parser.add_argument("--device", default="cpu",
                        help="inference device for real checkpoints")
    parser.add_argument("--json", action="store_true",
                        help="JSON to stdout")
    return parser


def _stub_seed(model: str) -> int | None:
    parts = model.split(":")
    if parts[0] != "stub":
        return None
    try:
        return int(parts[2]) if len(parts) > 2 else 0
    except ValueError:
        return None  # make_embedder reports the bad spec


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0

    raw_argv = list(argv) if argv is not None else sys.argv[1:]
    mw = ManifestWriter("export", raw_argv, __version__)
    try:
        job = ExportJob(fasta=args.fasta, out=args.out, model=args.model,
                        batch_size=args.batch_size, device=args.device)
        mw.config_digest = hashlib.sha256(
            json.dumps(job.__dict__, sort_keys=True).encode()).hexdigest()
        mw.seed = _stub_seed(args.model)
        mw.add_input(args.fasta)
        result = export(job)
    except ExportError as exc:
        print(f"esm-export: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"esm-export: i/o error: {exc}", file=sys.stderr)
        return 2
    mw.add_artifact(result.out)
    manifest_path = mw.write(result.out)
    if args.json:
        print(json.dumps({"out": result.out, "d_e": result.d_e,
                          "records": result.record_count,
                          "manifest": manifest_path}, sort_keys=True))
    else:
        print(f"exported {result.record_count} records "
              f"(d_e={result.d_e}) -> {result.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
