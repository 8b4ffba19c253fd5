"""Disjoint-union batching of gAAGs.

Inside a batch all real nodes come first (graph by graph, in face order),
followed by one virtual node per graph. Edges follow the same pattern: the
real directed edges of every graph, then the virtual edge pairs. Graph
layers never depend on this ordering because aggregation is order-free.
"""

from dataclasses import dataclass

import numpy as np

from .nn.functional import SegmentIndex


@dataclass(eq=False)
class Batch:
    graphs: list
    n_real: int
    node_graph: np.ndarray  # (n_real,) graph index of each real node
    real_offsets: np.ndarray  # (B + 1,) start of every graph's real block
    face_grid: np.ndarray
    face_attr: np.ndarray
    face_aabb: np.ndarray
    labels: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    n_real_edges: int
    edge_grid: np.ndarray
    edge_attr: np.ndarray
    seg: SegmentIndex

    @property
    def n_graphs(self):
        return len(self.graphs)

    @property
    def n_nodes(self):
        return self.n_real + self.n_graphs

    @property
    def n_virtual_edges(self):
        return len(self.src) - self.n_real_edges

    def graph_slice(self, i):
        return slice(int(self.real_offsets[i]), int(self.real_offsets[i + 1]))


def collate(graphs):
    graphs = list(graphs)
    sizes = np.array([g.n_real for g in graphs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    n_real = int(offsets[-1])
    virtual = n_real + np.arange(len(graphs))
    r_src, r_dst, v_src, v_dst = [], [], [], []
    for i, g in enumerate(graphs):
        real = slice(0, g.n_real_edges)
        virt = slice(g.n_real_edges, None)

        def remap(idx):
            return np.where(idx == g.virtual, virtual[i], idx + offsets[i])

        r_src.append(remap(g.src[real]))
        r_dst.append(remap(g.dst[real]))
        v_src.append(remap(g.src[virt]))
        v_dst.append(remap(g.dst[virt]))
    src = np.concatenate(r_src + v_src).astype(np.int64)
    dst = np.concatenate(r_dst + v_dst).astype(np.int64)
    return Batch(
        graphs=graphs,
        n_real=n_real,
        node_graph=np.repeat(np.arange(len(graphs)), sizes),
        real_offsets=offsets,
        face_grid=np.concatenate([g.face_grid for g in graphs]),
        face_attr=np.concatenate([g.face_attr for g in graphs]),
        face_aabb=np.concatenate([g.face_aabb for g in graphs]),
        labels=np.concatenate([g.labels for g in graphs]),
        src=src,
        dst=dst,
        n_real_edges=int(sum(g.n_real_edges for g in graphs)),
        edge_grid=np.concatenate([g.edge_grid for g in graphs]),
        edge_attr=np.concatenate([g.edge_attr for g in graphs]),
        seg=SegmentIndex(dst, n_real + len(graphs)),
    )
