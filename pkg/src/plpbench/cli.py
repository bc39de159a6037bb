"""Command-line interface.

Exit codes: 0 success, 2 usage or validation error, 3 domain error,
4 backend or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__, datasets, evaluate, models, pipelines, retrieval
from .errors import BackendError, DomainError, IoError, UnsupportedLanguage, ValidationError
from .datasets import data_file
from .graph import build_program_graph
from .pipelines import Task
from .tokenizer import CodeSnippet, Language, tokenize, tokenize_lexical

log = logging.getLogger("plpbench")

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_BACKEND = 0, 2, 3, 4
BOOLEAN_FLAGS = frozenset({"descending", "with-resources"})


class UsageError(Exception):
    pass


def _input_path(value: str) -> Path:
    """Existing input file; ``toy:<name>`` resolves to a bundled dataset."""
    if value.startswith("toy:"):
        path = data_file(f"toy_{value[4:]}.jsonl")
    else:
        path = Path(value)
    if not path.is_file():
        raise UsageError(f"no such file: {value}")
    return path


def _load(value: str, schema) -> datasets.Dataset:
    ds = datasets.load(_input_path(value), schema)
    # bundled data is recorded by name so outputs do not depend on the install path
    return dataclasses.replace(ds, provenance=value) if value.startswith("toy:") else ds


def _emit(text: str, out) -> None:
    if out:
        try:
            Path(out).parent.mkdir(parents=True, exist_ok=True)
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _schema(args, path):
    if args.schema:
        return datasets.Schema.parse(args.schema)
    meta = datasets.meta_path(path)
    if meta.is_file():
        return datasets.Schema.parse(json.loads(meta.read_text())["schema"])
    raise UsageError("--schema is required (no .meta.json sidecar found)")


def write_manifest(out, command: str, args, extra=None) -> Path:
    """Record the flags that produced ``out`` next to it."""
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config_file")}
    body = {"command": command, "plpbench_version": __version__, "flags": flags}
    if extra:
        body.update(extra)
    body["config_hash"] = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    path = Path(str(out) + ".manifest.json")
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# -- commands --------------------------------------------------------------

def cmd_tokenize(args):
    path = _input_path(args.file)
    lang = Language.parse(args.lang) if args.lang else Language.from_path(path)
    snippet = CodeSnippet.from_file(path, lang)
    if args.mode == "graph":
        text = build_program_graph(snippet).to_json()
    elif args.mode == "ast":
        if lang is Language.Unknown:
            raise UnsupportedLanguage(f"cannot build a syntax tree for {path} (language unknown; pass --lang)")
        text = tokenize(snippet, "ast").to_json()
    else:
        text = tokenize_lexical(snippet).to_json()
    _emit(text + "\n", args.out)


def _partition(value: str):
    try:
        parts = tuple(float(x) for x in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad partition {value!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("partition needs three comma-separated fractions")
    return parts


def cmd_data(args):
    path = _input_path(args.file)
    action = args.action
    if action == "binarize":
        rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        out = datasets.binarize_similarity_scores(rows, args.threshold)
        _emit("".join(json.dumps(r) + "\n" for r in out), args.out)
        return
    ds = _load(args.file, _schema(args, path))
    if action in ("load", "stats"):
        _emit(json.dumps(datasets.stats(ds), indent=2) + "\n", args.out if action == "stats" else None)
        if action == "load" and args.out:
            datasets.save(ds, args.out)
        return
    if action == "split":
        if not args.out:
            raise UsageError("data split needs --out DIR")
        parts = datasets.split(ds, datasets.SplitSpec(args.partition, args.seed))
        out_dir = Path(args.out)
        for name, part in zip(("train", "valid", "test"), parts):
            datasets.save(part, out_dir / f"{name}.jsonl")
        write_manifest(out_dir / "split", "data split", args, {"sizes": [len(p) for p in parts]})
        print(json.dumps({"train": len(parts[0]), "valid": len(parts[1]), "test": len(parts[2])}))
        return
    if action == "shuffle":
        result = datasets.shuffle(ds, args.seed)
    elif action == "sort":
        result = datasets.sort(ds, args.key, ascending=not args.descending)
    elif action == "pairs":
        result = datasets.make_similarity_pairs(ds, args.n_pairs, args.balance, args.seed)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(action)
    if args.out:
        datasets.save(result, args.out)
    else:
        _emit(result.dumps(), None)


def cmd_ingest(args):
    paths = [_input_path(p) for p in args.files]
    out = args.store or args.out
    if not out:
        raise UsageError("ingest needs --out (or --store)")
    if not 0 <= args.overlap < args.chunk_size:
        raise UsageError(f"need 0 <= --overlap < --chunk-size (got {args.overlap}, {args.chunk_size})")
    embedder = models.from_pretrained(args.model)
    store = retrieval.ingest(paths, embedder, args.chunk_size, args.overlap)
    store.save(out)
    print(json.dumps({"store": str(out), "count": len(store), "dim": store.dim}))


def _sampling(args):
    return models.SamplingConfig(temperature=args.temperature, max_output_tokens=args.max_tokens, seed=args.seed)


def _augmenter(args, task):
    if not args.store:
        return None
    if task is not Task.OpenMPQA:
        raise UsageError("--store only applies to the qa task")
    store = retrieval.VectorStore.load(_input_path(args.store))
    embedder = models.from_pretrained(args.embedder or store.embedder or "mock:echo")
    return retrieval.ContextAugmenter(store, embedder, args.k, args.token_budget)


def cmd_run(args):
    task = Task.parse(args.task)
    ds = _load(args.dataset, pipelines.TASK_SCHEMA[task])
    handle = models.from_pretrained(args.model)
    config = _sampling(args)
    spec = pipelines.PipelineSpec(task, handle, config, _augmenter(args, task))
    results = pipelines.run_batch(spec, ds, args.parallelism)
    rows = evaluate.prediction_rows(task, ds.records, results)
    _emit("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), args.out)
    if args.out:
        write_manifest(args.out, "run", args, {
            "task": task.value, "model": handle.name, "dataset": ds.provenance,
            "sampling": config.to_dict(),
            "effective_temperature": config.effective_temperature(handle.requires_positive_temperature),
            "n_records": len(rows), "n_failures": sum(1 for r in rows if "error" in r),
        })
    _all_failed([r for r in rows if "error" in r], len(rows), "record")


def _all_failed(failures, total, what):
    """Exit with the backend code when nothing succeeded (partial failures stay in the output)."""
    if total and len(failures) == total:
        raise BackendError(f"every {what} failed; first error: {failures[0]['message']}")


def _read_predictions(path):
    path = _input_path(path)
    rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    manifest_path = Path(str(path) + ".manifest.json")
    manifest = json.loads(manifest_path.read_text()) if manifest_path.is_file() else {}
    return rows, manifest


def cmd_eval(args):
    reports = []
    if args.predictions:
        for p in args.predictions:
            rows, manifest = _read_predictions(p)
            task = Task.parse(args.task or manifest.get("task") or "")
            per_example, aggregates = evaluate.score_rows(task, rows)
            reports.append(evaluate.EvalReport(
                task, manifest.get("model", Path(p).stem), manifest.get("dataset", ""), per_example, aggregates,
                manifest.get("sampling", {}), manifest.get("flags", {}).get("seed"),
            ))
    else:
        if not (args.task and args.model and args.dataset):
            raise UsageError("eval needs --predictions FILE..., or --task, --model and --dataset")
        task = Task.parse(args.task)
        ds = _load(args.dataset, pipelines.TASK_SCHEMA[task])
        reports = evaluate.compute(task, args.model, ds, _sampling(args), args.seed,
                                   _augmenter(args, task), args.parallelism)
        _all_failed([{"message": r.error} for r in reports if r.error], len(reports), "model")
    _emit(evaluate.dumps_reports(reports), args.out)
    if args.out:
        Path(str(args.out) + ".resources.json").write_text(
            json.dumps({r.model: r.resources for r in reports}, indent=2) + "\n", encoding="utf-8")
        write_manifest(args.out, "eval", args, {"models": [r.model for r in reports]})
    if args.format in ("md", "csv"):
        sys.stdout.write(evaluate.leaderboard(reports, args.metric).render(args.format))


def cmd_board(args):
    reports = []
    for p in args.reports:
        reports.extend(evaluate.load_reports(_input_path(p)))
    if not reports:
        raise UsageError("no reports to rank")
    board = evaluate.leaderboard(reports, args.metric)
    _emit(board.render(args.format or "md"), args.out)


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    common.add_argument("--config-file", help="key=value file supplying defaults for any flag")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=["json", "csv", "md"], help="output format")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--temperature", type=float, default=0.0)
    sampling.add_argument("--max-tokens", type=int, default=256)
    sampling.add_argument("--parallelism", type=int, default=1)
    sampling.add_argument("--store", help="vector store for retrieval-augmented QA")
    sampling.add_argument("--embedder", help="embedding model for --store (default: the one that built it)")
    sampling.add_argument("--k", type=int, default=retrieval.DEFAULT_K)
    sampling.add_argument("--token-budget", type=int, default=3840)

    parser = argparse.ArgumentParser(prog="plpbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", parents=[common], help="tokenize a source file or build its program graph")
    p.add_argument("file")
    p.add_argument("--mode", choices=["lexical", "ast", "graph"], default="lexical")
    p.add_argument("--lang", help="C, Cpp, Python or Unknown (default: from the file extension)")
    p.add_argument("--model", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("data", parents=[common], help="load, split, shuffle, sort, pair and summarize datasets")
    p.add_argument("action", choices=["load", "split", "shuffle", "sort", "pairs", "stats", "binarize"])
    p.add_argument("file")
    p.add_argument("--schema", help="CodeClassification, ParallelismLabel, SimilarityPairs or QA")
    p.add_argument("--partition", type=_partition, default=(0.8, 0.1, 0.1))
    p.add_argument("--key", default="id")
    p.add_argument("--descending", action="store_true")
    p.add_argument("--n-pairs", type=int, default=100)
    p.add_argument("--balance", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--model", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_data)

    p = sub.add_parser("ingest", parents=[common], help="chunk and embed text files into a vector store")
    p.add_argument("files", nargs="+")
    p.add_argument("--chunk-size", type=int, default=retrieval.DEFAULT_CHUNK_SIZE)
    p.add_argument("--overlap", type=int, default=retrieval.DEFAULT_OVERLAP)
    p.add_argument("--store", help="same as --out")
    p.add_argument("--model", default="mock:echo", help="embedding model (default mock:echo)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", parents=[common, sampling], help="run a task pipeline and write predictions")
    p.add_argument("task", help="similarity, parallelism or qa")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", parents=[common, sampling], help="score predictions or evaluate models")
    p.add_argument("--predictions", nargs="+", help="prediction files written by `run`")
    p.add_argument("--task")
    p.add_argument("--model", action="append", help="model to evaluate (repeatable)")
    p.add_argument("--dataset")
    p.add_argument("--metric", help="primary metric when also rendering a leaderboard")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("board", parents=[common], help="render a leaderboard from eval reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--metric", help="primary metric (default: F1, or ROUGE_L_F1 for qa)")
    p.add_argument("--model", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_board)
    return parser


def _config_argv(argv):
    """Splice ``--config-file`` key=value pairs in front of the explicit flags."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config-file")
    known, _ = pre.parse_known_args(argv)
    if not known.config_file:
        return argv
    path = Path(known.config_file)
    if not path.is_file():
        raise UsageError(f"no such config file: {path}")
    injected = []
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        value = value.strip("\"'")
        if key in BOOLEAN_FLAGS:
            if value.lower() in ("1", "true", "yes", "on"):
                injected.append("--" + key)
        else:
            injected += ["--" + key, value]
    # after the subcommand (and the data action) so explicit flags still win
    commands = {"tokenize", "data", "ingest", "run", "eval", "board"}
    pos = next((i for i, a in enumerate(argv) if a in commands), None)
    if pos is None:
        return argv + injected
    pos += 2 if argv[pos] == "data" else 1
    return argv[:pos] + injected + argv[pos:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _config_argv(argv)
    except UsageError as exc:
        print(f"plpbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ValidationError) as exc:
        print(f"plpbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"plpbench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (BackendError, IoError, OSError) as exc:
        print(f"plpbench: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ValueError as exc:
        print(f"plpbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
