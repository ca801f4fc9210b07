"""Command line entry point: ``ctxfuse {gen,decode,eval,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

from .context import ContextSpec, render_prompt
from .corpus import (
    CorpusGenConfig,
    gen_synthetic_corpus,
    load_dataset,
    load_entity_lists,
    save_entity_lists,
    write_dataset,
)
from .decoding import joint_beam_decode, joint_greedy_decode
from .evaluation import CONTEXT_SETS, DEFAULT_GRID, FORMATS, MetricsReport, SweepConfig, render_report, run_eval
from .exceptions import CtxFuseError
from .models import load_model, save_model

log = logging.getLogger("ctxfuse")

DATASET_FILE = "dataset.jsonl"
MODEL_FILE = "model.json"
ENTITIES_FILE = "entities.json"


def _alpha_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _resolve(args, name: str, default_file: str) -> Path:
    explicit = getattr(args, name)
    if explicit:
        return Path(explicit)
    if args.data_dir:
        return Path(args.data_dir) / default_file
    raise CtxFuseError(f"--{name} or --data-dir is required")


def cmd_gen(args) -> int:
    overrides = {}
    for f in fields(CorpusGenConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = tuple(val) if f.name == "entity_len" else val
    cfg = CorpusGenConfig(**overrides)
    records, lists, model = gen_synthetic_corpus(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(records, model.vocab, out / DATASET_FILE)
    save_model(model, out / MODEL_FILE)
    save_entity_lists(lists, model.vocab, out / ENTITIES_FILE)
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d records to %s", len(records), out)
    return 0


def _decode_context(args, model) -> ContextSpec:
    vocab = model.vocab
    if args.context:
        return ContextSpec.from_phrases(vocab.encode(p.split()) for p in args.context)
    name = args.context_set[0] if args.context_set else "none"
    if name == "none":
        return ContextSpec()
    if name == "gt":
        raise CtxFuseError("--context-set gt needs a dataset record; pass --context phrases instead")
    lists = load_entity_lists(_resolve(args, "entities", ENTITIES_FILE), vocab)
    return ContextSpec(entities=lists.get(name))


def cmd_decode(args) -> int:
    model = load_model(_resolve(args, "model", MODEL_FILE))
    vocab = model.vocab
    obs = vocab.encode(args.obs.split())
    ctx = _decode_context(args, model)
    max_len = args.max_len or len(obs) + 1
    print(f"prompt: {render_prompt(ctx, vocab.tokens)}")
    if args.mode == "beam":
        hyps = joint_beam_decode(model, obs, ctx, args.alpha, args.beam_width, max_len)
        for rank, h in enumerate(hyps[: args.beam_width]):
            status = "" if h.finished else " (truncated)"
            print(f"{rank}\t{h.cum_log_fused:.4f}\t{' '.join(vocab.decode(h.tokens))}{status}")
        return 0
    res = joint_greedy_decode(model, obs, ctx, args.alpha, max_len)
    print("step\ttoken\tp_ctx\tp_noctx\tfused")
    for t, st in enumerate(res.steps):
        v = st.chosen
        print(f"{t}\t{vocab.tokens[v]}\t{st.p_ctx[v]:.4f}\t{st.p_noctx[v]:.4f}\t{st.fused[v]:.4f}")
    print(f"hypothesis: {' '.join(vocab.decode(res.content))}")
    print(f"logprob_ctx={res.logprob_ctx:.4f} logprob_noctx={res.logprob_noctx:.4f} truncated={res.truncated}")
    return 0


def cmd_eval(args) -> int:
    model_path = _resolve(args, "model", MODEL_FILE)
    model = load_model(model_path)
    records = load_dataset(_resolve(args, "dataset", DATASET_FILE), model.vocab)
    needs_lists = any(c in ("common", "rare", "sensitive") for c in args.context_set or ("rare",))
    lists = None
    ent_path = args.entities or (Path(args.data_dir) / ENTITIES_FILE if args.data_dir else None)
    if ent_path is not None and Path(ent_path).exists():
        lists = load_entity_lists(ent_path, model.vocab)
    elif needs_lists:
        raise CtxFuseError("the requested context set needs --entities")
    if args.alpha is not None:
        grid = (args.alpha,)
    else:
        grid = args.alpha_grid or DEFAULT_GRID
    context_sets = tuple(args.context_set or ("rare",))
    score_sets = ("common", "rare") + (("sensitive",) if "sensitive" in context_sets else ())
    sweep = SweepConfig(
        alpha_grid=grid,
        mode=args.mode,
        beam_width=args.beam_width,
        context_sets=context_sets,
        score_sets=score_sets,
        seed=args.seed,
    )
    report = run_eval(records, model, sweep, lists, metadata={"model_file": model_path.name})
    _emit(render_report(report, args.format), args.out)
    if args.save:
        Path(args.save).write_text(render_report(report, "json"), encoding="utf-8")
    for cell in report.failed:
        log.error("cell (%s, %s) aborted: %s", cell.context_set, cell.alpha, cell.error)
    return 1 if report.failed else 0


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.results).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CtxFuseError(f"{args.results}: not valid JSON ({exc})") from None
    _emit(render_report(MetricsReport.from_dict(doc), args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxfuse", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic corpus, model and entity lists")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int)
    g.add_argument("--vocab-size", dest="vocab_size", type=int)
    g.add_argument("--n-utterances", dest="n_utterances", type=int)
    g.add_argument("--utterance-len", dest="utterance_len", type=int)
    g.add_argument("--n-common", dest="n_common", type=int)
    g.add_argument("--n-rare", dest="n_rare", type=int)
    g.add_argument("--entity-len", dest="entity_len", type=int, nargs=2, metavar=("MIN", "MAX"))
    g.add_argument("--injection-rate", dest="injection_rate", type=float)
    g.add_argument("--near-miss-rate", dest="near_miss_rate", type=float)
    g.add_argument("--n-distractors", dest="n_distractors", type=int)
    g.add_argument("--p-sub", dest="p_sub", type=float)
    g.add_argument("--n-confusable", dest="n_confusable", type=int)
    g.add_argument("--beta", type=float)
    g.set_defaults(func=cmd_gen)

    def common(p, with_dataset: bool):
        p.add_argument("--data-dir", help="directory written by `gen`")
        p.add_argument("--model")
        p.add_argument("--entities")
        if with_dataset:
            p.add_argument("--dataset")
        p.add_argument("--mode", choices=("greedy", "beam"), default="greedy")
        p.add_argument("--beam-width", type=int, default=4)
        p.add_argument("--context-set", action="append", choices=CONTEXT_SETS)
        p.add_argument("--seed", type=int, default=0)

    d = sub.add_parser("decode", help="decode one observation and print per-step diagnostics")
    common(d, with_dataset=False)
    d.add_argument("--obs", required=True, help="space-separated observation tokens")
    d.add_argument("--context", action="append", help="space-separated entity phrase (repeatable)")
    d.add_argument("--alpha", type=float, default=0.0)
    d.add_argument("--max-len", type=int)
    d.set_defaults(func=cmd_decode)

    e = sub.add_parser("eval", help="run an alpha sweep and print a report")
    common(e, with_dataset=True)
    e.add_argument("--alpha", type=float, help="single alpha (overrides --alpha-grid)")
    e.add_argument("--alpha-grid", type=_alpha_list, help="comma-separated alphas, e.g. 0,0.3,0.7,1")
    e.add_argument("--format", choices=FORMATS, default="csv")
    e.add_argument("--out", help="write the rendered report here instead of stdout")
    e.add_argument("--save", help="also save the full JSON results for `report`")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("report", help="re-render saved JSON results")
    r.add_argument("results")
    r.add_argument("--format", choices=FORMATS, default="markdown")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CtxFuseError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
