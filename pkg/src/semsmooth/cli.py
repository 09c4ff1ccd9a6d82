"""Command-line driver.

Subcommands: preprocess (text normalization), eval (train/test perplexity
with optional semantic smoothing and m-sweeps), synth (low-rank Markov
sweep), risk (Monte Carlo bound-check suites).

Exit codes: 0 success, 2 validation error, 3 bound-check failure, 4 I/O
error. Every run is deterministic under a fixed --seed; each report embeds
(or sits next to) a manifest recording the full configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

import semsmooth
from semsmooth import corpus, risklab, synthetic
from semsmooth.embeddings import ProximityConfig, SynonymFinder, load_embeddings
from semsmooth.estimators import AddBetaModel, JelinekMercerModel, KneserNeyModel
from semsmooth.kernels import BACKEND
from semsmooth.prob import TestSequence, decompose
from semsmooth.semantic import SemanticModel, WeightRule


def _manifest(subcommand, params):
    return {
        "subcommand": subcommand,
        "params": params,
        "version": semsmooth.__version__,
        "kernel_backend": BACKEND,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _read_sentences(path):
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f if line.split()]


def _normalize_sentence(tokens):
    # strip any existing padding, then wrap: eval always sees <bos> ... <eos>
    core = [t for t in tokens if t not in (corpus.BOS, corpus.EOS)]
    return [corpus.BOS, *core, corpus.EOS] if core else None


def cmd_preprocess(args):
    with open(args.infile, encoding="utf-8", errors="replace") as f:
        raw = f.read()
    if args.mode == "words":
        sentences = corpus.preprocess(raw)
    else:
        sentences = []
        for ln, line in enumerate(raw.splitlines(), start=1):
            tokens = line.split()
            if not tokens:
                continue
            if not all(t.lstrip("-").isdigit() for t in tokens):
                print(f"{args.infile}: line {ln}: non-integer token id", file=sys.stderr)
                return 2
            sentences.append(tokens)
    with open(args.outfile, "w", encoding="utf-8") as f:
        for sent in sentences:
            f.write(" ".join(sent) + "\n")
    return 0


def _float_or_none(x):
    return None if x is None or math.isinf(x) or math.isnan(x) else float(x)


def _eval_one(model, seq):
    rep = decompose(model, seq)
    unsmoothed = math.isinf(rep.log_ppl)
    return {
        "ppl": _float_or_none(math.exp(rep.log_ppl) if not unsmoothed else math.inf),
        "log_ppl": _float_or_none(rep.log_ppl),
        "entropy_term": _float_or_none(rep.entropy_term),
        "kl_term": _float_or_none(rep.kl_term),
        "unsmoothed": unsmoothed,
    }


def cmd_eval(args):
    m_values = args.sweep_m if args.sweep_m is not None else [args.synonyms]
    if any(m < 0 for m in m_values):
        print("synonym counts must be nonnegative", file=sys.stderr)
        return 2
    need_embeddings = max(m_values) > 0
    if need_embeddings and not args.embeddings:
        print("--embeddings is required when --synonyms > 0", file=sys.stderr)
        return 2

    train_sents = [s for s in map(_normalize_sentence, _read_sentences(args.train)) if s]
    test_sents = [s for s in map(_normalize_sentence, _read_sentences(args.test)) if s]
    if not train_sents or not test_sents:
        print("train and test files must contain sentences", file=sys.stderr)
        return 2
    vocab = corpus.Vocabulary.from_sentences(train_sents, test_sents)
    d = len(vocab)
    table = corpus.count_bigrams(vocab.encode_all(train_sents))
    seq = TestSequence(vocab.encode_all(test_sents))

    if args.model == "add_beta":
        base = AddBetaModel(table, d, args.beta)
    elif args.model == "kn":
        base = KneserNeyModel(table, d, args.discount)
    else:
        base = JelinekMercerModel(table, d, args.lam)

    finder = None
    if need_embeddings:
        emb = load_embeddings(args.embeddings, args.emb_format)
        cfg = ProximityConfig(lipschitz=args.lipschitz, norm=args.norm)
        finder = SynonymFinder(emb, table, cfg, beta=args.score_beta,
                               support=args.support, id_to_token=vocab.tokens)
    rule = WeightRule(phi="reciprocal" if args.phi == "recip" else "softmin", tau=args.tau)

    def run_m(m):
        if m == 0 or finder is None:
            model = base
            skipped = 0
        else:
            model = SemanticModel(base, finder, rule, m)
            skipped = None  # read after evaluation
        out = _eval_one(model, seq)
        out["skipped_contexts"] = model.skipped if isinstance(model, SemanticModel) else 0
        return out

    if len(m_values) > 1 and args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run_m, m_values))
    else:
        results = [run_m(m) for m in m_values]

    if args.dump_synonyms and finder is not None:
        ctxs = sorted({int(c) for c in seq.events()[0]})
        finder.dump_cache(ctxs, max(m_values), args.dump_synonyms)

    params = {
        "train": args.train, "test": args.test, "model": args.model,
        "beta": args.beta, "discount": args.discount, "lam": args.lam,
        "embeddings": args.embeddings, "emb_format": args.emb_format,
        "synonyms": m_values, "L": args.lipschitz, "norm": args.norm,
        "phi": args.phi, "tau": args.tau, "score_beta": args.score_beta,
        "support": args.support, "seed": args.seed,
    }
    manifest = _manifest("eval", params)
    if args.sweep_m is not None:
        with open(args.report, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["m", "model", "ppl", "log_ppl", "entropy_term", "kl_term",
                        "skipped_contexts"])
            for m, res in zip(m_values, results):
                w.writerow([m, args.model,
                            *(("" if res[k] is None else repr(res[k]))
                              for k in ("ppl", "log_ppl", "entropy_term", "kl_term")),
                            res["skipped_contexts"]])
        with open(args.report + ".manifest.json", "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
    else:
        report = dict(results[0])
        report["manifest"] = manifest
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
    return 0


def cmd_synth(args):
    spec = synthetic.MarkovSpec(states=args.states, classes=args.classes,
                                dim=args.dim, seed=args.seed)
    rule = WeightRule(phi="reciprocal" if args.phi == "recip" else "softmin", tau=args.tau)
    try:
        rows = synthetic.run_sweep(
            spec, args.ntrain_grid, args.ntest, args.reps, args.m_grid,
            beta=args.beta, rule=rule, score_beta=args.beta, support=args.support,
            discount=args.discount, lam=args.lam, threads=args.threads,
        )
    except synthetic.RankOverflow as exc:
        print(f"rank overflow: {exc}; rerun with --dim at least that rank or omit --dim",
              file=sys.stderr)
        return 2
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["n_train", "method", "m", "mean_ppl", "stderr_ppl"])
        for r in rows:
            w.writerow([r.n_train, r.method, r.m, repr(r.mean_ppl), repr(r.stderr_ppl)])
    params = {k: getattr(args, k) for k in
              ("states", "classes", "dim", "ntrain_grid", "ntest", "reps", "m_grid",
               "beta", "phi", "tau", "discount", "lam", "support", "seed", "threads")}
    with open(args.out + ".manifest.json", "w", encoding="utf-8") as f:
        json.dump(_manifest("synth", params), f, indent=2)
    return 0


def cmd_risk(args):
    suite = risklab.SUITES[args.suite]
    if args.suite == "assouad":
        rows = suite(seed=args.seed)
    else:
        rows = suite(trials=args.trials, seed=args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["d", "n", "n0", "delta", "estimator", "mean_risk", "stderr",
                    "bound", "violated"])
        for r in rows:
            w.writerow([
                r.d,
                "" if r.n is None else r.n,
                "" if r.n0 is None else r.n0,
                "" if r.delta is None else repr(r.delta),
                r.estimator, repr(r.mean_risk), repr(r.stderr), repr(r.bound),
                "true" if r.violated else "false",
            ])
    params = {"suite": args.suite, "trials": args.trials, "seed": args.seed}
    with open(args.out + ".manifest.json", "w", encoding="utf-8") as f:
        json.dump(_manifest("risk", params), f, indent=2)
    if any(r.violated for r in rows):
        print("bound violations detected; see rows with violated=true", file=sys.stderr)
        return 3
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="semsmooth",
                                description="semantic smoothing toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("preprocess", help="normalize raw text into token sentences")
    pp.add_argument("--in", dest="infile", required=True)
    pp.add_argument("--out", dest="outfile", required=True)
    pp.add_argument("--mode", choices=("words", "ids"), default="words")
    pp.set_defaults(func=cmd_preprocess)

    ev = sub.add_parser("eval", help="train a bigram model and report test perplexity")
    ev.add_argument("--train", required=True)
    ev.add_argument("--test", required=True)
    ev.add_argument("--model", choices=("add_beta", "kn", "jm"), default="add_beta")
    ev.add_argument("--beta", type=float, default=1.0)
    ev.add_argument("--discount", type=float, default=0.6)
    ev.add_argument("--lam", type=float, default=0.5)
    ev.add_argument("--embeddings")
    ev.add_argument("--emb-format", choices=("glove_text", "word2vec_text"),
                    default="glove_text")
    ev.add_argument("--synonyms", type=int, default=0, metavar="M")
    ev.add_argument("--sweep-m", type=_int_list, default=None,
                    help='comma-separated m values, e.g. "0,10,25,50"')
    ev.add_argument("--L", dest="lipschitz", type=float, default=5.0)
    ev.add_argument("--norm", choices=("l1", "l2"), default="l1")
    ev.add_argument("--phi", choices=("recip", "softmin"), default="recip")
    ev.add_argument("--tau", type=float, default=1.0)
    ev.add_argument("--score-beta", type=float, default=0.005)
    ev.add_argument("--support", choices=("chao1", "distinct"), default="chao1")
    ev.add_argument("--dump-synonyms", default=None, metavar="FILE")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--threads", type=int, default=1)
    ev.add_argument("--report", required=True)
    ev.set_defaults(func=cmd_eval)

    sy = sub.add_parser("synth", help="low-rank Markov perplexity sweep")
    sy.add_argument("--states", type=int, default=100)
    sy.add_argument("--classes", type=int, default=10)
    sy.add_argument("--dim", type=int, default=None)
    sy.add_argument("--ntrain-grid", type=_int_list, default=[1000, 3000, 10000])
    sy.add_argument("--ntest", type=int, default=100000)
    sy.add_argument("--reps", type=int, default=10)
    sy.add_argument("--m-grid", type=_int_list, default=[0, 5, 10])
    sy.add_argument("--beta", type=float, default=1.0)
    sy.add_argument("--phi", choices=("recip", "softmin"), default="softmin")
    sy.add_argument("--tau", type=float, default=1.0)
    sy.add_argument("--discount", type=float, default=0.6)
    sy.add_argument("--lam", type=float, default=0.5)
    sy.add_argument("--support", choices=("chao1", "distinct"), default="chao1")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--threads", type=int, default=1)
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)

    rk = sub.add_parser("risk", help="Monte Carlo bound-check suites")
    rk.add_argument("--suite", choices=sorted(risklab.SUITES), required=True)
    rk.add_argument("--trials", type=int, default=2000)
    rk.add_argument("--seed", type=int, default=0)
    rk.add_argument("--out", required=True)
    rk.set_defaults(func=cmd_risk)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
