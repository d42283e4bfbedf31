"""
Structural distance between nodes
=================================

Two nodes far apart can still look alike: same degree, neighbours of the
same degrees, and so on outwards. The distance below compares those
degree sequences ring by ring.
"""

from wrgnn.compgraph import build_naive
from wrgnn.graph import LabeledGraph
from wrgnn.structdist import DegreeSequences, dtw_exact, fastdtw, structural_distances

# %%
# Barbell: triangles {0,1,2} and {3,4,5} joined by 2-3.
g = LabeledGraph.from_edges([(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)], 6)
seqs = DegreeSequences(g, 3)
for u in (0, 2, 5):
    print(u, seqs(u))

# %%
# Nodes 0 and 5 are mirror images, 0 and 2 are not. The last level is
# missing for (0, 2) because node 2 has nothing three hops out.
print(structural_distances(g, (0, 5), 3).f)
print(structural_distances(g, (0, 2), 3).f)

# %%
# Long sequences go through FastDTW, which is an upper bound.
a = [9, 7, 7, 5, 4, 4, 3, 2, 2, 2, 1, 1] * 3
b = [8, 8, 6, 5, 3, 3, 3, 2, 1, 1] * 3
print(dtw_exact(a, b), fastdtw(a, b, radius=1))

# %%
# Weights in the computation graph are exp(-f).
c = build_naive(g, 2)
for name in c.names:
    print(name, c.num_edges(name))
