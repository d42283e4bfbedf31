"""Command line entry point: ``wrgnn <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import compgraph as cg
from .datasets import DatasetLayoutError, SyntheticSpec, degree_bucket_features, generate
from .graph import GraphFormatError, LabeledGraph, file_digest, load_graph, read_features, read_labels, write_graph
from .mixing import UndefinedValue, assortativity_profile, feature_smoothness, label_smoothness, local_assortativity_all
from .model import NumericalError, WrgnnModel
from .training import PRESETS, Split, TrainConfig, accuracy_by_assortativity, evaluate, stratified_split, train

log = logging.getLogger("wrgnn")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    finished: float | None = None

    def add_input(self, path):
        if path:
            self.inputs[str(path)] = file_digest(path)

    def add_output(self, path):
        self.outputs[str(path)] = file_digest(path)

    def write(self, out_dir: Path):
        self.finished = time.time()
        with open(out_dir / f"manifest-{self.command}.json", "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))


# -- analyze -------------------------------------------------------------------


def cmd_analyze(args, man):
    if not args.labels:
        raise UsageError("analyze needs --labels")
    g = load_graph(args.input, args.labels, args.features)
    for p in (args.input, args.labels, args.features):
        man.add_input(p)
    prof = assortativity_profile(g, tol=args.tol)
    rows = []
    for u in range(g.num_nodes):
        if g.labels[u] < 0:
            continue
        eps = lam = None
        try:
            eps = label_smoothness(g, u)
        except UndefinedValue:
            pass
        if g.features is not None:
            try:
                lam = feature_smoothness(g, u)
            except UndefinedValue:
                pass
        rows.append([u, _fmt(prof.r_local[u]), _fmt(eps), _fmt(lam), int(prof.defined[u])])
    out = args.out_dir
    _write_csv(out / "local_assortativity.csv", ["node", "r_local", "epsilon", "lambda", "defined"], rows)
    _write_csv(out / "histogram.csv", ["bin_lo", "bin_hi", "count"],
               [[repr(float(lo)), repr(float(hi)), int(c)]
                for lo, hi, c in zip(prof.bin_edges[:-1], prof.bin_edges[1:], prof.counts)])
    summary = {
        "r_global": prof.r_global,
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "num_classes": g.num_classes,
        "defined_nodes": int(prof.defined.sum()),
        "mean_r_local": float(np.nanmean(prof.r_local)) if prof.defined.any() else None,
    }
    _dump_json(summary, out / "summary.json")
    for name in ("local_assortativity.csv", "histogram.csv", "summary.json"):
        man.add_output(out / name)
    print(f"r_global = {prof.r_global:.4f}")


# -- transform -----------------------------------------------------------------------


def shift_report(g: LabeledGraph, c: cg.ComputationGraph, tol: float = 1e-6):
    """Local assortativity on ``g`` and on the collapsed computation graph.

    Returns per-node ``(r_g, r_c)`` for nodes that are disassortative in
    ``g`` plus the means of both.
    """
    r_g, _ = local_assortativity_all(g, tol)
    sel = np.flatnonzero((r_g < 0) & (g.labels >= 0))
    r_c, _ = local_assortativity_all((c.union_adjacency(), g.labels), tol)
    pairs = [(int(u), float(r_g[u]), float(r_c[u])) for u in sel]
    ok = [p for p in pairs if not np.isnan(p[2])]
    mean_g = float(np.mean([p[1] for p in ok])) if ok else float("nan")
    mean_c = float(np.mean([p[2] for p in ok])) if ok else float("nan")
    return pairs, mean_g, mean_c


def cmd_transform(args, man):
    g = load_graph(args.input, args.labels if args.labels else None)
    man.add_input(args.input)
    if args.T < 0:
        raise UsageError("--T must be >= 0")
    if args.mode == "naive":
        c = cg.build_naive(g, args.T, weight_floor=args.floor)
    else:
        c = cg.build_practical(g, args.T, args.budget, weight_floor=args.floor)
    out = Path(args.out)
    cg.serialize(c, out)
    man.add_output(out)
    if args.shift_report:
        if g.labels is None:
            raise UsageError("--shift-report needs --labels")
        man.add_input(args.labels)
        pairs, mg, mc = shift_report(g, c, args.tol)
        path = args.out_dir / "shift.csv"
        _write_csv(path, ["node", "r_local_g", "r_local_c"], [[u, _fmt(a), _fmt(b)] for u, a, b in pairs])
        _dump_json({"nodes": len(pairs), "mean_r_local_g": mg, "mean_r_local_c": mc,
                    "mean_delta": mc - mg}, args.out_dir / "shift.json")
        man.add_output(path)
        man.add_output(args.out_dir / "shift.json")
        print(f"disassortative nodes: {len(pairs)}  mean r_local G={mg:.4f}  C={mc:.4f}")


# -- train / ablate ----------------------------------------------------------------


def _load_training_inputs(args, man):
    c = cg.deserialize(args.comp)
    man.add_input(args.comp)
    lab = read_labels(args.labels)
    man.add_input(args.labels)
    n = max(c.num_nodes, max(lab) + 1 if lab else 0)
    if n != c.num_nodes:
        raise GraphFormatError(f"labels mention node {n - 1} beyond the computation graph")
    y = np.full(n, -1)
    for u, v in lab.items():
        y[u] = v
    if args.features:
        feats = read_features(args.features)
        man.add_input(args.features)
        dim = len(next(iter(feats.values())))
        x = np.zeros((n, dim))
        for u, row in feats.items():
            x[u] = row
    else:
        prox = c.relations[cg.PROXIMITY]
        e = np.c_[prox.src, prox.dst]
        x = degree_bucket_features(LabeledGraph.from_edges(e[e[:, 0] < e[:, 1]], n))
    splits = []
    for p in args.splits:
        splits.append(Split.load(p))
        man.add_input(p)
    return c, x, y, splits


def _train_config(args, variant, seed):
    base = dict(PRESETS.get(args.preset, {})) if args.preset else {}
    for key in ("lr", "weight_decay", "dropout", "epochs", "patience", "hidden", "mlp_hidden"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    return TrainConfig(seed=seed, attention=(variant == "wrgat"), **base)


def run_cell(c, x, y, split, cfg, relations):
    sub = c.select(relations)
    model = WrgnnModel.init(cfg.model_config(x.shape[1], int(y.max()) + 1, sub.names), seed=cfg.seed)
    model, hist = train(model, sub, x, y, split, cfg)
    ev = evaluate(model, sub, x, y, split.test)
    return model, hist, ev


def _r_local_for(args, y):
    if not getattr(args, "input", None):
        return None
    e = load_graph(args.input).edges
    g = LabeledGraph.from_edges(e, len(y), y)
    return local_assortativity_all(g)[0]


def cmd_train(args, man):
    c, x, y, splits = _load_training_inputs(args, man)
    if len(splits) != 1:
        raise UsageError("train takes exactly one --splits file")
    cfg = _train_config(args, args.variant, args.seed)
    _, hist, ev = run_cell(c, x, y, splits[0], cfg, args.relations)
    out = args.out_dir
    report = {
        "variant": args.variant,
        "relations": args.relations,
        "config": asdict(cfg),
        "history": hist.as_dict(),
        "test_accuracy": ev.accuracy,
        "test_f1_micro": ev.f1_micro,
    }
    _dump_json(report, out / "train_report.json")
    _write_csv(out / "node_correctness.csv", ["node", "label", "prediction", "correct"],
               [[int(u), int(y[u]), int(p), int(k)] for u, p, k in zip(ev.nodes, ev.predictions, ev.correct)])
    man.add_output(out / "train_report.json")
    man.add_output(out / "node_correctness.csv")
    print(f"test accuracy = {ev.accuracy:.4f}")


VARIANTS = ("wrgcn", "wrgat")
RELATIONS = ("proximity", "structure", "all")


def cmd_ablate(args, man):
    c, x, y, splits = _load_training_inputs(args, man)
    if not splits:
        raise UsageError("ablate needs at least one --splits file")
    r_local = _r_local_for(args, y)
    if args.input:
        man.add_input(args.input)
    jobs = [(v, rel, i) for v in VARIANTS for rel in RELATIONS for i in range(len(splits))]

    def work(job):
        v, rel, i = job
        cfg = _train_config(args, v, args.seed + i)
        try:
            _, _, ev = run_cell(c, x, y, splits[i], cfg, rel)
        except NumericalError as exc:
            return job, None, str(exc)
        return job, ev, None

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(work, jobs))
    cells = {}
    failures = []
    for (v, rel, i), ev, err in results:
        cell = cells.setdefault(f"{v}/{rel}", {"variant": v, "relations": rel, "accuracy": []})
        if ev is None:
            failures.append({"cell": f"{v}/{rel}", "split": i, "error": err})
        else:
            cell["accuracy"].append(ev.accuracy)
    for cell in cells.values():
        acc = cell["accuracy"]
        cell["mean"] = float(np.mean(acc)) if acc else None
        cell["std"] = float(np.std(acc)) if acc else None
    for v in VARIANTS:
        base = cells[f"{v}/proximity"]["mean"]
        for rel in RELATIONS:
            cell = cells[f"{v}/{rel}"]
            cell["gain_over_proximity"] = (None if base is None or cell["mean"] is None
                                           else cell["mean"] - base)
    out = args.out_dir
    _dump_json({"cells": cells, "failures": failures, "splits": len(splits)}, out / "ablation.json")
    _write_csv(out / "ablation_gains.csv", ["variant", "relations", "mean_accuracy", "gain_over_proximity"],
               [[cells[k]["variant"], cells[k]["relations"], _fmt(cells[k]["mean"]),
                 _fmt(cells[k]["gain_over_proximity"])] for k in sorted(cells)])
    man.add_output(out / "ablation.json")
    man.add_output(out / "ablation_gains.csv")
    if r_local is not None:
        rows = []
        for (v, rel, i), ev, _ in results:
            if ev is None:
                continue
            for lo, hi, cnt, acc in accuracy_by_assortativity(r_local, ev.nodes, ev.correct):
                rows.append([v, rel, i, repr(lo), repr(hi), cnt, _fmt(acc)])
        _write_csv(out / "accuracy_vs_r_local.csv",
                   ["variant", "relations", "split", "bin_lo", "bin_hi", "count", "accuracy"], rows)
        man.add_output(out / "accuracy_vs_r_local.csv")
    for k in sorted(cells):
        m = cells[k]["mean"]
        print(f"{k:20s} {('%.4f' % m) if m is not None else 'failed'}")
    if failures:
        raise NumericalError(f"{len(failures)} grid cell run(s) diverged; partial results kept")


# -- splits / synthetic ---------------------------------------------------------------


def cmd_make_splits(args, man):
    lab = read_labels(args.labels)
    man.add_input(args.labels)
    n = max(lab) + 1
    y = np.full(n, -1)
    for u, v in lab.items():
        y[u] = v
    out = Path(args.out)
    for i in range(args.count):
        sp = stratified_split(y, args.train, args.val, seed=args.seed + i)
        path = out if args.count == 1 else out.with_name(f"{out.stem}_{i}{out.suffix}")
        sp.save(path)
        man.add_output(path)


def cmd_gen_synthetic(args, man):
    spec = SyntheticSpec.load(args.spec)
    man.add_input(args.spec)
    g = generate(spec)
    prefix = str(args.out_prefix)
    paths = (prefix + ".edges", prefix + ".labels", prefix + ".features")
    write_graph(g, *paths)
    for p in paths:
        if Path(p).exists():
            man.add_output(p)
    print(f"{spec.generator}: {g.num_nodes} nodes, {g.num_edges} edges")


# -- parser -------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _training_flags(p):
    p.add_argument("--comp", required=True)
    p.add_argument("--features")
    p.add_argument("--labels", required=True)
    p.add_argument("--preset", choices=sorted(PRESETS))
    for flag, typ in (("--lr", float), ("--weight-decay", float), ("--dropout", float),
                      ("--epochs", int), ("--patience", int), ("--hidden", int), ("--mlp-hidden", int)):
        p.add_argument(flag, type=typ)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wrgnn", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", type=Path, default=Path("."))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="local/global assortativity report")
    p.add_argument("--input", required=True)
    p.add_argument("--labels")
    p.add_argument("--features")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="build the computation graph")
    p.add_argument("--input", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--mode", choices=("practical", "naive"), default="practical")
    p.add_argument("--budget", type=int)
    p.add_argument("--floor", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels")
    p.add_argument("--shift-report", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("train", help="train one model configuration")
    _training_flags(p)
    p.add_argument("--splits", required=True, nargs=1)
    p.add_argument("--variant", choices=VARIANTS, default="wrgat")
    p.add_argument("--relations", choices=RELATIONS, default="all")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="{wrgcn,wrgat} x {proximity,structure,all} grid")
    _training_flags(p)
    p.add_argument("--splits", required=True, nargs="+")
    p.add_argument("--input", help="original edge list, enables accuracy-vs-r_local curves")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("make-splits", help="random stratified train/val/test splits")
    p.add_argument("--labels", required=True)
    p.add_argument("--train", type=float, default=0.6)
    p.add_argument("--val", type=float, default=0.2)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_splits)

    p = sub.add_parser("gen-synthetic", help="write a synthetic graph")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen_synthetic)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    man = RunManifest(args.command, config, args.seed)
    try:
        args.func(args, man)
    except UsageError as exc:
        print(f"wrgnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphFormatError, DatasetLayoutError, OSError, ValueError) as exc:
        print(f"wrgnn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"wrgnn: numerical failure: {exc}", file=sys.stderr)
        man.write(args.out_dir)
        return EXIT_NUMERIC
    man.write(args.out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
