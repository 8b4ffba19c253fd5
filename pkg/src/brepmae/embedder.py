"""Per-face and per-edge encoders fused into 256-wide node and edge embeddings."""

from .errors import ShapeError
from .nn import BatchNorm, Conv1d, Conv2d, LayerNorm, Linear, Module, Parameter
from .nn.functional import adaptive_avg_pool
from .nn.tensor import Tensor, concat, expand_rows, mish, relu

WIDTH = 256


def _norm(kind, width):
    return LayerNorm(width) if kind == "layer" else BatchNorm(width)


class FaceCNN(Module):
    """7 x K x K grid -> 128: three conv/batchnorm/mish blocks then mean pooling."""

    def __init__(self):
        super().__init__()
        self.conv1, self.bn1 = Conv2d(7, 32), BatchNorm(32)
        self.conv2, self.bn2 = Conv2d(32, 64), BatchNorm(64)
        self.conv3, self.bn3 = Conv2d(64, 128), BatchNorm(128)

    def forward(self, x):
        for conv, bn in ((self.conv1, self.bn1), (self.conv2, self.bn2), (self.conv3, self.bn3)):
            x = mish(bn(conv(x)))
        return adaptive_avg_pool(x)


class EdgeCNN(Module):
    """12 x S samples -> 64."""

    def __init__(self):
        super().__init__()
        self.conv1, self.bn1 = Conv1d(12, 32), BatchNorm(32)
        self.conv2, self.bn2 = Conv1d(32, 64), BatchNorm(64)

    def forward(self, x):
        x = relu(self.bn1(self.conv1(x)))
        x = relu(self.bn2(self.conv2(x)))
        return adaptive_avg_pool(x)


class BBoxMLP(Module):
    def __init__(self, norm="layer"):
        super().__init__()
        self.fc1 = Linear(6, 128)
        self.norm = _norm(norm, 128)
        self.fc2 = Linear(128, 64)

    def forward(self, x):
        return self.fc2(self.norm(relu(self.fc1(x))))


class AttrMLP(Module):
    def __init__(self, n_in, norm="layer"):
        super().__init__()
        self.fc = Linear(n_in, 64)
        self.norm = _norm(norm, 64)

    def forward(self, x):
        return self.norm(self.fc(x))


class Embedder(Module):
    """Shared-weight encoders; ``attr_norm`` picks layer or batch normalization
    inside the attribute and box encoders."""

    def __init__(self, attr_norm="layer"):
        super().__init__()
        self.face_cnn = FaceCNN()
        self.edge_cnn = EdgeCNN()
        self.bbox_mlp = BBoxMLP(attr_norm)
        self.face_attr_mlp = AttrMLP(10, attr_norm)
        self.edge_attr_mlp = AttrMLP(14, attr_norm)
        self.edge_fuse = Linear(128, WIDTH)
        self.virtual_node = Parameter((WIDTH,), ("uniform", WIDTH))
        self.virtual_edge = Parameter((WIDTH,), ("uniform", WIDTH))

    def embed_faces(self, grid, attr, aabb):
        if grid.shape[1] != 7 or attr.shape[-1] != 10 or aabb.shape[-1] != 6:
            raise ShapeError(f"face inputs {grid.shape}, {attr.shape}, {aabb.shape}")
        return concat(
            [self.face_cnn(Tensor(grid)), self.bbox_mlp(Tensor(aabb)), self.face_attr_mlp(Tensor(attr))],
            axis=1,
        )

    def embed_real_edges(self, grid, attr):
        if grid.shape[1] != 12 or attr.shape[-1] != 14:
            raise ShapeError(f"edge inputs {grid.shape}, {attr.shape}")
        return self.edge_fuse(concat([self.edge_cnn(Tensor(grid)), self.edge_attr_mlp(Tensor(attr))], axis=1))

    def embed_nodes(self, batch):
        """(n_real + n_graphs) x 256: real faces, then one virtual row per graph."""
        real = self.embed_faces(batch.face_grid, batch.face_attr, batch.face_aabb)
        return concat([real, expand_rows(self.virtual_node, batch.n_graphs)], axis=0)

    def embed_edges(self, batch):
        real = self.embed_real_edges(batch.edge_grid, batch.edge_attr)
        return concat([real, expand_rows(self.virtual_edge, batch.n_virtual_edges)], axis=0)

    def forward(self, batch):
        return self.embed_nodes(batch), self.embed_edges(batch)
