"""Command-line entry point wiring all pipeline stages.

Subcommands: process, coordinator, worker, postprocess, index, serve,
rag-batch, eval.  A JSON config file (kebab-case keys, same format as
the wire schemas) supplies defaults; flags always override config.
Logs go to stderr; data goes to files or stdout.

Exit codes: 0 success, 1 runtime error, 2 config error, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .core import read_jsonl, sample_from_dict, serialize_sample
from .dispatch import Coordinator, JobConfig, Worker, run_local
from .dispatch.local import make_extract_task_fn, make_tasks
from .eval import run_benchmark
from .index import HashEmbedder, HybridIndex, RemoteEmbedder
from .postproc import PipelineConfig, apply_pipeline, read_chunks, write_chunks
from .rag import PromptTemplate, RagService, RemoteGenerator, run_batch
from .rag.engine import GENERATORS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_USAGE = 64


class ConfigError(ValueError):
    pass


class _UsageError(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise _UsageError(EXIT_USAGE)


@dataclass
class AppConfig:
    """Declarative job config; JSON keys are kebab-case field names."""

    inputs: list[str] = field(default_factory=list)
    out: str = ""
    mode: str = "default"
    workers: int = max(1, os.cpu_count() or 1)
    batch_size: int = 4
    max_retries: int = 2
    coordinator: str = ""
    chunk_size: int = 256
    chunk_overlap: int = 32
    min_chunk_chars: int = 20
    stages: list[dict] = field(default_factory=list)
    index_path: str = ""
    embedder: str = "hash"  # "hash" or a sidecar base URL
    embedder_dim: int = 64
    port: int = 8080
    generator: str = "extractive"  # echo | extractive | sidecar base URL
    template: str = ""
    retrieval_k: int = 3
    retrieval_mode: str = "rrf"

    @classmethod
    def load(cls, path: str) -> "AppConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {}
        for key, value in raw.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[name] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def dump(self) -> str:
        obj = {k.replace("_", "-"): v for k, v in asdict(self).items()}
        return json.dumps(obj, indent=2)


def _resolve_out(cfg: AppConfig, args) -> Path:
    out = getattr(args, "out", None) or cfg.out or os.environ.get("MMORE_OUT", "")
    if not out:
        raise ConfigError("no output directory: pass --out, set `out` in config, or set MMORE_OUT")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _make_embedder(cfg: AppConfig):
    if cfg.embedder == "hash":
        return HashEmbedder(cfg.embedder_dim)
    return RemoteEmbedder(cfg.embedder)


def _make_generator(cfg: AppConfig):
    if cfg.generator in GENERATORS:
        return GENERATORS[cfg.generator]()
    return RemoteGenerator(cfg.generator)


def _make_template(cfg: AppConfig):
    return PromptTemplate(cfg.template) if cfg.template else PromptTemplate()


def _job_config(cfg: AppConfig, inputs: list[str], out: Path) -> JobConfig:
    return JobConfig(
        inputs=inputs,
        mode=cfg.mode,
        workers_per_node=cfg.workers,
        batch_size=cfg.batch_size,
        max_retries=cfg.max_retries,
        coordinator=cfg.coordinator,
        assets_dir=str(out / "assets"),
    )


def cmd_process(cfg: AppConfig, args) -> int:
    out = _resolve_out(cfg, args)
    inputs = args.inputs or cfg.inputs
    if not inputs:
        raise ConfigError("no inputs given")
    job = _job_config(cfg, inputs, out)
    manifest = out / "samples.jsonl"
    ok = failed = 0
    with open(manifest, "wb") as f:
        for result in run_local(job):
            if result.ok:
                f.write(serialize_sample(sample_from_dict(result.sample)) + b"\n")
                ok += 1
            else:
                logger.error("task %s failed: %s", result.task_id, result.error)
                failed += 1
    logger.info("processed %d files (%d failed) -> %s", ok, failed, manifest)
    print(str(manifest))
    return EXIT_OK


def cmd_coordinator(cfg: AppConfig, args) -> int:
    out = _resolve_out(cfg, args)
    inputs = args.inputs or cfg.inputs
    if not inputs:
        raise ConfigError("no inputs given")
    host, _, port = (args.bind or "127.0.0.1:9400").partition(":")
    job = _job_config(cfg, inputs, out)
    coordinator = Coordinator(make_tasks(job), job, result_log=str(out / "results.log"))
    addr = coordinator.serve(host, int(port or 9400))
    logger.info("coordinator listening on %s:%d", *addr)
    try:
        coordinator.wait()
    finally:
        coordinator.shutdown()
    results = coordinator.results
    manifest = out / "samples.jsonl"
    with open(manifest, "wb") as f:
        for tid in sorted(results):
            r = results[tid]
            if r.ok:
                f.write(serialize_sample(sample_from_dict(r.sample)) + b"\n")
    print(str(manifest))
    return EXIT_OK


def cmd_worker(cfg: AppConfig, args) -> int:
    host, _, port = args.connect.partition(":")
    out = _resolve_out(cfg, args)
    job = _job_config(cfg, [], out)
    worker = Worker((host, int(port)), make_extract_task_fn(job),
                    workers_per_node=cfg.workers)
    return worker.run()


def cmd_postprocess(cfg: AppConfig, args) -> int:
    out = _resolve_out(cfg, args)
    samples = read_jsonl(args.samples or out / "samples.jsonl")
    pipeline = PipelineConfig(
        stages=cfg.stages,
        chunk_size=cfg.chunk_size,
        chunk_overlap=cfg.chunk_overlap,
        min_chunk_chars=cfg.min_chunk_chars,
    )
    chunks = apply_pipeline(samples, pipeline)
    path = out / "chunks.jsonl"
    write_chunks(chunks, path)
    logger.info("wrote %d chunks -> %s", len(chunks), path)
    print(str(path))
    return EXIT_OK


def cmd_index(cfg: AppConfig, args) -> int:
    out = _resolve_out(cfg, args)
    chunks = read_chunks(args.chunks or out / "chunks.jsonl")
    index = HybridIndex(_make_embedder(cfg))
    index.add_chunks(chunks)
    path = Path(args.index or cfg.index_path or out / "index")
    index.save(path)
    logger.info("indexed %d chunks -> %s", len(index), path)
    print(str(path))
    return EXIT_OK


def _load_index(cfg: AppConfig, args, out: Path) -> HybridIndex:
    path = Path(getattr(args, "index", "") or cfg.index_path or out / "index")
    return HybridIndex.load(path, embedder=_make_embedder(cfg))


def cmd_serve(cfg: AppConfig, args) -> int:
    out = _resolve_out(cfg, args)
    index = _load_index(cfg, args, out)
    service = RagService(
        index, _make_generator(cfg), _make_template(cfg),
        port=args.port or cfg.port,
    )
    addr = service.address
    logger.info("serving on http://%s:%d", *addr)
    print(f"http://{addr[0]}:{addr[1]}")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.shutdown()
    return EXIT_OK


def cmd_rag_batch(cfg: AppConfig, args) -> int:
    out = _resolve_out(cfg, args)
    index = _load_index(cfg, args, out)
    report = run_batch(
        args.input, args.output or out / "answers.jsonl",
        index, _make_generator(cfg),
        k=cfg.retrieval_k, mode=cfg.retrieval_mode, template=_make_template(cfg),
    )
    logger.info("batch done: %(ok)d ok, %(failed)d failed", report)
    print(json.dumps(report))
    return EXIT_OK


def cmd_eval(cfg: AppConfig, args) -> int:
    pairs = []
    if args.pairs:
        for line in Path(args.pairs).read_text().splitlines():
            line = line.strip()
            if line:
                extracted, truth = line.split("\t")
                pairs.append((extracted, truth))
    elif args.extracted and args.truth:
        pairs.append((args.extracted, args.truth))
    else:
        raise ConfigError("eval needs --pairs or --extracted/--truth")
    report = run_benchmark(pairs, truncate_chars=args.truncate)
    print(report.table())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            for p in report.pairs:
                f.write(json.dumps(p.to_dict()) + "\n")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="omnirag", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON config file (kebab-case keys)")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective config and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out", help="output directory (or MMORE_OUT)")

    p = sub.add_parser("process", help="extract a corpus into samples.jsonl")
    common(p)
    p.add_argument("--in", dest="inputs", action="append", default=[], help="input path/glob")
    p.add_argument("--mode", choices=("default", "fast"))

    p = sub.add_parser("coordinator", help="run the distributed coordinator")
    common(p)
    p.add_argument("--in", dest="inputs", action="append", default=[])
    p.add_argument("--bind", default="127.0.0.1:9400")
    p.add_argument("--mode", choices=("default", "fast"))

    p = sub.add_parser("worker", help="run a worker node")
    common(p)
    p.add_argument("--connect", required=True, help="coordinator host:port")

    p = sub.add_parser("postprocess", help="filter/tag/chunk samples")
    common(p)
    p.add_argument("--samples", help="samples.jsonl path")

    p = sub.add_parser("index", help="build the hybrid index from chunks")
    common(p)
    p.add_argument("--chunks", help="chunks.jsonl path")
    p.add_argument("--index", help="index directory")

    p = sub.add_parser("serve", help="serve /retrieve, /rag, /health")
    common(p)
    p.add_argument("--index", help="index directory")
    p.add_argument("--port", type=int, default=0)

    p = sub.add_parser("rag-batch", help="answer a JSONL batch of queries")
    common(p)
    p.add_argument("--index", help="index directory")
    p.add_argument("--input", required=True, help="JSONL with {id, input}")
    p.add_argument("--output", help="output JSONL path")

    p = sub.add_parser("eval", help="score extracted text against ground truth")
    p.add_argument("--pairs", help="TSV: extracted<TAB>truth per line")
    p.add_argument("--extracted")
    p.add_argument("--truth")
    p.add_argument("--truncate", type=int, default=50_000)
    p.add_argument("--report", help="write per-pair JSONL records here")
    return parser


COMMANDS = {
    "process": cmd_process,
    "coordinator": cmd_coordinator,
    "worker": cmd_worker,
    "postprocess": cmd_postprocess,
    "index": cmd_index,
    "serve": cmd_serve,
    "rag-batch": cmd_rag_batch,
    "eval": cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        return e.code

    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        cfg = AppConfig.load(args.config) if args.config else AppConfig()
        if getattr(args, "mode", None):
            cfg.mode = args.mode
        if args.dump_config:
            print(cfg.dump())
            return EXIT_OK
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return EXIT_CONFIG
    except Exception as e:
        logger.debug("unhandled failure", exc_info=True)
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
