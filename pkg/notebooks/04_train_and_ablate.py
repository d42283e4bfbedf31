"""
Training WRGCN / WRGAT and a small ablation
===========================================

Labels in the hub-and-fan graph depend on role, not on position, so
proximity alone should struggle. Structural relations fix that.
"""

from wrgnn.compgraph import build_practical
from wrgnn.datasets import gen_structural_twins
from wrgnn.model import WrgnnModel
from wrgnn.training import TrainConfig, evaluate, stratified_split, train

g = gen_structural_twins(seed=1)
c = build_practical(g, 2)
split = stratified_split(g.labels, 0.6, 0.2, seed=1)

# %%
# Fewer epochs than the default to keep this quick.
for attention in (False, True):
    for rel in ("proximity", "structure", "all"):
        cc = c.select(rel)
        cfg = TrainConfig(attention=attention, epochs=200, patience=50, seed=1)
        model = WrgnnModel.init(cfg.model_config(g.features.shape[1], g.num_classes, cc.names), cfg.seed)
        best, hist = train(model, cc, g.features, g.labels, split, cfg)
        acc = evaluate(best, cc, g.features, g.labels, split.test).accuracy
        name = "wrgat" if attention else "wrgcn"
        print(f"{name:6s} {rel:10s} test acc {acc:.3f} (best epoch {hist.best_epoch})")

# %%
# The same grid from the shell:
#
#   wrgnn gen-synthetic --spec twins.json --out-prefix data/twins
#   wrgnn transform --input data/twins.edges --labels data/twins.labels --T 2 --out comp.tsv --shift-report
#   wrgnn make-splits --labels data/twins.labels --count 5 --out splits.json
#   wrgnn ablate --comp comp.tsv --features data/twins.features --labels data/twins.labels \
#       --splits splits_*.json --input data/twins.edges
