"""Command-line entry point: ``python -m sqlgrpo VERB [flags]``.

Exit codes: 0 success, 1 validation error (bad flags, config, data or SQL),
2 runtime error (divergence, I/O, anything unexpected). Every verb that
produces artifacts writes ``manifest.json`` next to them.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, override

log = logging.getLogger("sqlgrpo")

VALIDATION, RUNTIME = 1, 2


class UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser | None = None):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self)


# ---------------------------------------------------------------- manifests

def content_hash(path: str | Path) -> str:
    """Git blob hash of a file, or of a directory as a sorted list of (relative path, blob hash).

    Manifests inside a directory are skipped since they record machine-specific paths.
    """
    path = Path(path)
    if path.is_dir():
        h = hashlib.sha1()
        for p in sorted(q for q in path.rglob("*") if q.is_file() and q.name != "manifest.json"):
            h.update(f"{p.relative_to(path).as_posix()} {content_hash(p)}\n".encode())
        return h.hexdigest()
    data = path.read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_manifest(out_dir: Path, verb: str, argv: list[str], cfg: RunConfig | None, inputs: dict[str, Path],
                   metrics: dict | None = None, extra: dict | None = None) -> Path:
    m = {
        "verb": verb,
        "argv": argv,
        "config": cfg.to_dict() if cfg else None,
        "inputs": {k: {"path": str(v), "sha1": content_hash(v)} for k, v in inputs.items() if v is not None},
        "metrics": metrics or {},
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    m.update(extra or {})
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(m, indent=1, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- helpers

def _wd(args) -> Path:
    return Path(args.workdir)


def _resolve(args, p: str | None) -> Path | None:
    """Paths are relative to the workdir unless absolute."""
    if p is None:
        return None
    q = Path(p)
    return q if q.is_absolute() else _wd(args) / q


def _config(args) -> RunConfig:
    return RunConfig.load(_resolve(args, args.config) if args.config else None)


def _datasets(args):
    from .dataset import ingest
    data = _resolve(args, args.data)
    return ingest(data / "train.jsonl", split="train"), ingest(data / "dev.jsonl", split="dev")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, ensure_ascii=False, sort_keys=True))


def _fingerprint(cfg: RunConfig, **extra) -> dict:
    fp = {"w_sem": cfg.rewards.w_sem, "sem_mode": cfg.grpo.sem_mode}
    fp.update(extra)
    return fp


# ---------------------------------------------------------------- verbs

def cmd_mkdata(args, argv) -> int:
    from .corpus import mkdata
    cfg = override(_config(args), data__seed=args.seed, data__questions_per_schema=args.questions)
    out = _resolve(args, args.out)
    summary = mkdata(out, cfg.data.seed, cfg.data.schemas, cfg.data.questions_per_schema)
    write_manifest(out, "mkdata", argv, cfg, {}, summary)
    _emit(summary)
    return 0


def cmd_mkstates(args, argv) -> int:
    from .dataset import load_schemas
    from .schema import generate_random_state, save_state
    cfg = _config(args)
    schemas, _ = load_schemas(_resolve(args, args.data) / "schemas")
    out = _resolve(args, args.out)
    out.mkdir(parents=True, exist_ok=True)
    k = args.count if args.count is not None else cfg.eval.k_states - 1
    seed0 = args.seed if args.seed is not None else cfg.eval.state_seed
    written = []
    for db_id, schema in sorted(schemas.items()):
        for i in range(k):
            p = out / f"{db_id}.random{seed0 + i}.state.json"
            save_state(generate_random_state(schema, seed0 + i, cfg.eval.state_size), p)
            written.append(p.name)
    write_manifest(out, "mkstates", argv, cfg, {"schemas": _resolve(args, args.data) / "schemas"},
                   {"files": len(written)})
    _emit({"written": written})
    return 0


def cmd_train_encoder(args, argv) -> int:
    from .encoder import train_encoder
    cfg = override(_config(args), encoder_train__epochs=args.epochs, encoder_train__seed=args.seed)
    train_ds, dev_ds = _datasets(args)
    out = _resolve(args, args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    enc, elog = train_encoder(train_ds, dev_ds, cfg.encoder_train, encoder_config=cfg.encoder_model)
    enc.save(out / "encoder.ckpt", {"train": cfg.to_dict()["encoder"]["train"]})
    with open(out / "log.jsonl", "w", encoding="utf-8") as f:
        for rec in elog:
            f.write(json.dumps(rec) + "\n")
    final = elog[-1]
    write_manifest(out, "train-encoder", argv, cfg, {"data": _resolve(args, args.data)}, final,
                   {"seconds": round(time.perf_counter() - t0, 1)})
    _emit(final)
    return 0


def cmd_embed(args, argv) -> int:
    from .encoder import Encoder
    enc = Encoder.load(_resolve(args, args.encoder) / "encoder.ckpt")
    texts = list(args.text or [])
    if args.file:
        texts += [t for t in _resolve(args, args.file).read_text(encoding="utf-8").splitlines() if t.strip()]
    if not texts:
        raise UsageError("embed needs --text or --file")
    vecs = enc.embed_batch(texts)
    _emit([{"text": t, "vector": [round(float(x), 8) for x in v]} for t, v in zip(texts, vecs)])
    return 0


def cmd_sft(args, argv) -> int:
    from .evaluation import evaluate
    from .policy import sft_train
    cfg = override(_config(args), sft__epochs=args.epochs, sft__seed=args.seed)
    train_ds, dev_ds = _datasets(args)
    out = _resolve(args, args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    pol, slog = sft_train(train_ds, dev_ds, cfg.sft, policy_config=cfg.policy_model, tokenizer=cfg.tokenizer)
    pol.save(out / "policy.ckpt", {"sft_log": slog})
    rep = evaluate(pol, dev_ds, "SFT", cfg.eval, {"stage": "sft", "seed": cfg.sft.seed})
    rep.save(out / "eval.json")
    metrics = {"eval_loss": slog[-1]["eval_loss"], "dev": rep.overall}
    write_manifest(out, "sft", argv, cfg, {"data": _resolve(args, args.data)}, metrics,
                   {"seconds": round(time.perf_counter() - t0, 1)})
    _emit(metrics)
    return 0


def cmd_train_grpo(args, argv) -> int:
    from .encoder import Encoder
    from .evaluation import evaluate
    from .grpo import train
    from .policy import Policy
    cfg = override(_config(args), grpo__seed=args.seed, grpo__steps=args.steps, grpo__sem_mode=args.sem_mode)
    if args.no_contrastive:
        cfg = override(cfg, rewards__w_sem=0.0)
    train_ds, dev_ds = _datasets(args)
    out = _resolve(args, args.out)
    out.mkdir(parents=True, exist_ok=True)
    policy_path = _resolve(args, args.policy)
    pol, _ = Policy.load(policy_path)
    enc_path = None
    enc = None
    if cfg.rewards.w_sem > 0:
        enc_path = _resolve(args, args.encoder) / "encoder.ckpt"
        enc = Encoder.load(enc_path)
    arm = args.arm or ("GRPO-NC" if cfg.rewards.w_sem == 0 else "GRPO-C")
    fp = _fingerprint(cfg, stage="grpo", seed=cfg.grpo.seed, steps=cfg.grpo.steps)
    snaps = out / "snapshots"
    snap_metrics = {}

    def on_step(rec, trainer):
        n = rec["step"] + 1
        if args.eval_every and n % args.eval_every == 0 and n < cfg.grpo.steps:
            r = evaluate(trainer.policy, dev_ds, arm, cfg.eval, {**fp, "step": n})
            snaps.mkdir(exist_ok=True)
            r.save(snaps / f"step{n:05d}.json")
            snap_metrics[str(n)] = r.overall
            log.info("step %d dev %s", n, r.overall)

    t0 = time.perf_counter()
    pol, records = train(train_ds, pol, cfg.grpo, enc, out / "trainlog.jsonl", on_step, dump_dir=out)
    pol.save(out / "policy.ckpt", {"stage": "grpo", "arm": arm})
    rep = evaluate(pol, dev_ds, arm, cfg.eval, fp)
    rep.save(out / "eval.json")
    (out / "eval.md").write_text(_report_md([rep]), encoding="utf-8")
    metrics = {"dev": rep.overall, "snapshots": snap_metrics, "final_kl": records[-1]["kl"] if records else None}
    inputs = {"data": _resolve(args, args.data), "policy": policy_path, "encoder": enc_path}
    write_manifest(out, "train-grpo", argv, cfg, inputs, metrics,
                   {"encoder_path": str(enc_path) if enc_path else None, "arm": arm,
                    "seconds": round(time.perf_counter() - t0, 1)})
    _emit(metrics)
    return 0


def cmd_score(args, argv) -> int:
    from .encoder import Encoder
    from .rewards import SemanticScorer, score
    from .schema import load_schema, load_state
    from .executor import execute
    from .sql import SqlError, parse
    cfg = override(_config(args), grpo__sem_mode=args.sem_mode)
    schema = load_schema(_resolve(args, args.schema))
    state = load_state(_resolve(args, args.db), schema)
    weights = cfg.rewards
    try:
        gold_ast = parse(args.gold)
        execute(gold_ast, schema, state)
    except SqlError as e:
        raise ValueError(f"gold SQL: {e}") from None
    scorer = None
    if args.encoder:
        scorer = SemanticScorer(Encoder.load(_resolve(args, args.encoder) / "encoder.ckpt"))
    elif weights.w_sem > 0:
        weights = override(cfg, rewards__w_sem=0.0).rewards
        log.warning("no --encoder given; semantic weight set to 0")
    if scorer is not None and args.question is None:
        raise UsageError("--encoder needs --question")
    bundle = score(args.candidate, gold_ast, schema, state, weights, scorer, args.question,
                   args.ref_question, cfg.grpo.sem_mode)
    _emit(bundle.to_json())
    return 0


def cmd_eval(args, argv) -> int:
    from .evaluation import evaluate, gold_predictions, score_predictions
    from .policy import Policy
    cfg = _config(args)
    train_ds, dev_ds = _datasets(args)
    ds = dev_ds if args.split == "dev" else train_ds
    out = _resolve(args, args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.gold:
        rep = score_predictions(ds, gold_predictions(ds), args.arm or "gold", cfg.eval)
        inputs = {"data": _resolve(args, args.data)}
    else:
        if not args.policy:
            raise UsageError("eval needs --policy or --gold")
        ppath = _resolve(args, args.policy)
        pol, meta = Policy.load(ppath)
        rep = evaluate(pol, ds, args.arm or meta.get("arm", "model"), cfg.eval,
                       {k: meta[k] for k in ("stage", "arm") if k in meta})
        inputs = {"data": _resolve(args, args.data), "policy": ppath}
    rep.save(out / "eval.json")
    (out / "eval.md").write_text(_report_md([rep]), encoding="utf-8")
    write_manifest(out, "eval", argv, cfg, inputs, {"overall": rep.overall, "per_lang": rep.per_lang})
    _emit(rep.overall)
    return 0


def _report_md(reports) -> str:
    from .evaluation import report
    return report(reports)


def cmd_report(args, argv) -> int:
    from .evaluation import EvalReport
    reps = []
    for p in args.reports:
        path = _resolve(args, p)
        reps.append(EvalReport.load(path / "eval.json" if path.is_dir() else path))
    text = _report_md(reps)
    if args.out:
        _resolve(args, args.out).write_text(text, encoding="utf-8")
    print(text)
    return 0


def cmd_replay(args, argv) -> int:
    """Re-run the command recorded in a manifest into a new output directory and compare metrics."""
    mpath = _resolve(args, args.manifest)
    m = json.loads(mpath.read_text(encoding="utf-8"))
    old = list(m["argv"])
    out = str(_resolve(args, args.out))
    cfg_path = Path(out) / "replay_config.toml"
    Path(out).mkdir(parents=True, exist_ok=True)
    cfg_path.write_text(_toml(m["config"]), encoding="utf-8")
    new = _replace_flag(_replace_flag(old, "--out", out), "--config", str(cfg_path))
    new = _replace_flag(new, "--workdir", str(_wd(args)))
    code = main(new)
    if code:
        return code
    fresh = json.loads((Path(out) / "manifest.json").read_text(encoding="utf-8"))
    same = json.dumps(fresh["metrics"], sort_keys=True) == json.dumps(m["metrics"], sort_keys=True)
    inputs_same = {k: v["sha1"] for k, v in fresh["inputs"].items()} == {k: v["sha1"] for k, v in m["inputs"].items()}
    _emit({"identical": same, "inputs_identical": inputs_same, "original": m["metrics"], "replayed": fresh["metrics"]})
    return 0 if same else RUNTIME


def _replace_flag(argv: list[str], flag: str, value: str) -> list[str]:
    out = list(argv)
    for i, a in enumerate(out):
        if a == flag and i + 1 < len(out):
            out[i + 1] = value
            return out
        if a.startswith(flag + "="):
            out[i] = f"{flag}={value}"
            return out
    if flag == "--workdir":
        return [flag, value] + out
    return out + [flag, value]


def _toml(d: dict, prefix: str = "") -> str:
    """Minimal TOML writer for the nested dict produced by RunConfig.to_dict."""
    scalars = {k: v for k, v in d.items() if not isinstance(v, dict)}
    tables = {k: v for k, v in d.items() if isinstance(v, dict)}
    lines = []
    if prefix and scalars:
        lines.append(f"[{prefix}]")
    for k, v in scalars.items():
        lines.append(f"{k} = {json.dumps(list(v) if isinstance(v, tuple) else v)}")
    body = "\n".join(lines) + ("\n\n" if lines else "")
    for k, v in tables.items():
        body += _toml(v, f"{prefix}.{k}" if prefix else k)
    return body


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--workdir", default=".", help="base directory for relative paths")
    common.add_argument("--config", help="TOML run config (flags override it)")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="sqlgrpo", description="Multilingual text-to-SQL with contrastive-reward GRPO.")
    sub = p.add_subparsers(dest="verb", parser_class=_Parser)
    p.verbs = {}

    def verb(name, fn, help_):
        s = sub.add_parser(name, parents=[common], help=help_, description=help_)
        s.set_defaults(fn=fn)
        p.verbs[name] = s
        return s

    def data_flag(s):
        s.add_argument("--data", default="data", help="corpus directory (train.jsonl, dev.jsonl, schemas/)")

    s = verb("mkdata", cmd_mkdata, "generate the parallel mini-corpus")
    s.add_argument("--out", default="data")
    s.add_argument("--seed", type=int)
    s.add_argument("--questions", type=int, help="questions per schema")

    s = verb("mkstates", cmd_mkstates, "write the seeded random evaluation states")
    data_flag(s)
    s.add_argument("--out", default="states")
    s.add_argument("--seed", type=int)
    s.add_argument("--count", type=int, help="random states per schema (default K-1)")

    s = verb("train-encoder", cmd_train_encoder, "train the contrastive question encoder")
    data_flag(s)
    s.add_argument("--out", default="encoder")
    s.add_argument("--epochs", type=int)
    s.add_argument("--seed", type=int)

    s = verb("embed", cmd_embed, "print embeddings of texts")
    s.add_argument("--encoder", default="encoder")
    s.add_argument("--text", action="append")
    s.add_argument("--file")

    s = verb("sft", cmd_sft, "supervised warm start of the policy")
    data_flag(s)
    s.add_argument("--out", default="sft")
    s.add_argument("--epochs", type=int)
    s.add_argument("--seed", type=int)

    s = verb("train-grpo", cmd_train_grpo, "GRPO fine-tuning from an SFT checkpoint")
    data_flag(s)
    s.add_argument("--policy", default="sft/policy.ckpt")
    s.add_argument("--encoder", default="encoder")
    s.add_argument("--out", default="grpo")
    s.add_argument("--arm", help="label in reports")
    s.add_argument("--no-contrastive", action="store_true", help="set w_sem = 0; no encoder is loaded")
    s.add_argument("--sem-mode", choices=["question", "sql"])
    s.add_argument("--seed", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--eval-every", type=int, default=100, help="dev snapshot period in steps (0 = off)")

    s = verb("score", cmd_score, "reward bundle of one candidate")
    s.add_argument("--schema", required=True)
    s.add_argument("--db", required=True, help="state JSON")
    s.add_argument("--gold", required=True)
    s.add_argument("--candidate", required=True)
    s.add_argument("--question")
    s.add_argument("--ref-question")
    s.add_argument("--encoder")
    s.add_argument("--sem-mode", choices=["question", "sql"])

    s = verb("eval", cmd_eval, "ExecAcc / SemAcc of a policy (or of the gold SQL)")
    data_flag(s)
    s.add_argument("--policy")
    s.add_argument("--gold", action="store_true", help="score the gold SQL itself")
    s.add_argument("--split", choices=["train", "dev"], default="dev")
    s.add_argument("--arm")
    s.add_argument("--out", default="eval")

    s = verb("report", cmd_report, "merge eval JSON files into one table")
    s.add_argument("reports", nargs="+", help="eval.json files or directories holding one")
    s.add_argument("--out")

    s = verb("replay", cmd_replay, "re-execute a run from its manifest and compare metrics")
    s.add_argument("manifest")
    s.add_argument("--out", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            raise UsageError("missing verb", parser)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.fn(args, argv)
    except UsageError as e:
        # show the flag table of the verb being used when there is one
        verb = next((a for a in argv if a in parser.verbs), None)
        print(f"error: {e}", file=sys.stderr)
        print(parser.verbs[verb].format_help() if verb else (e.parser or parser).format_help(), file=sys.stderr)
        return VALIDATION
    except (ConfigError, ValueError, FileNotFoundError) as e:
        # IngestError, SchemaError and SqlError are ValueErrors
        print(f"error: {e}", file=sys.stderr)
        return VALIDATION
    except Exception as e:  # noqa: BLE001
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return RUNTIME


__all__ = ["build_parser", "content_hash", "main", "write_manifest"]
