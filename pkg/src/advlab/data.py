"""Datasets: synthetic generation, IDX/CSV ingestion, and the three-way split.

The synthetic generator produces smooth random backgrounds with a
class-dependent number of low-contrast ring marks, so classes are learnable
but overlap enough that trained classifiers keep small margins. Splitting is
stratified 80/20 into Train and a test pool; misclassified pool samples are
optionally discarded before a 70/30 AdvTrain/AdvTest division. All sizes use
flooring (Train_c = floor(0.8 n_c), AdvTrain = floor(0.7 pool)) and every
leftover sample lands in the complementary subset, so splits are exact and
reproducible.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import AdvlabError, ParseError
from .rng import rng_for


@dataclass(frozen=True)
class LabeledSet:
    images: np.ndarray  # (N, C, H, W) float64 in [0, 1]
    labels: np.ndarray  # (N,) ints in [0, K)
    num_classes: int

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise AdvlabError("images and labels length mismatch")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "LabeledSet":
        idx = np.asarray(idx)
        return LabeledSet(self.images[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    advtrain_fraction_of_test: float = 0.7
    seed: int = 0

    def __post_init__(self):
        for f in (self.train_fraction, self.advtrain_fraction_of_test):
            if not (0.0 < f < 1.0):
                raise AdvlabError(f"split fraction {f} outside (0, 1)")


@dataclass
class SplitResult:
    train: LabeledSet
    advtrain: LabeledSet
    advtest: LabeledSet
    discarded: int = 0
    warnings: list = field(default_factory=list)
    per_class_train: dict = field(default_factory=dict)


def _smooth_field(rng, side, grid=4):
    """Low-frequency random surface in [0, 1]: bilinear upsampling of a coarse grid."""
    coarse = rng.random((grid, grid))
    xs = np.linspace(0, grid - 1, side)
    ix = np.floor(xs).astype(int)
    ix1 = np.minimum(ix + 1, grid - 1)
    fx = xs - ix
    rows = coarse[ix][:, ix] * np.outer(1 - fx, 1 - fx) \
        + coarse[ix][:, ix1] * np.outer(1 - fx, fx) \
        + coarse[ix1][:, ix] * np.outer(fx, 1 - fx) \
        + coarse[ix1][:, ix1] * np.outer(fx, fx)
    return rows


def gen_synthetic(classes: int, per_class: int, side: int, seed: int,
                  ring_contrast: float = 0.05, noise: float = 0.02) -> LabeledSet:
    """Deterministic toy image classes: backgrounds plus c ring marks for class c.

    Ring layouts are fixed per class (with small per-image jitter) and their
    intensity grows mildly with the class index, so the classes are learnable
    by a small network while the low contrast keeps pixel-space margins
    narrow. Backgrounds dominate the per-image variance, which is what makes
    the classes overlap.
    """
    if classes < 2 or per_class < 1 or side < 8:
        raise AdvlabError("need classes >= 2, per_class >= 1, side >= 8")
    images = np.empty((classes * per_class, 1, side, side))
    labels = np.repeat(np.arange(classes), per_class)
    yy, xx = np.mgrid[0:side, 0:side]

    layouts = {}
    for c in range(classes):
        lay_rng = rng_for(seed, "ring-layout", c)
        marks = []
        for k in range(c):
            r = side * (0.10 + 0.05 * lay_rng.random())
            cy = lay_rng.uniform(r + 2, side - r - 2)
            cx = lay_rng.uniform(r + 2, side - r - 2)
            marks.append((cy, cx, r))
        layouts[c] = marks

    i = 0
    for c in range(classes):
        amp = ring_contrast * (1.0 + 0.5 * c / max(classes - 1, 1))
        for j in range(per_class):
            rng = rng_for(seed, "synth", c, j)
            img = 0.25 + 0.5 * _smooth_field(rng, side)
            img += rng.normal(0.0, noise, size=(side, side))
            for (cy, cx, r) in layouts[c]:
                cy_j = cy + rng.uniform(-1.0, 1.0)
                cx_j = cx + rng.uniform(-1.0, 1.0)
                r_j = r * rng.uniform(0.95, 1.05)
                d = np.sqrt((yy - cy_j) ** 2 + (xx - cx_j) ** 2)
                img += amp * np.exp(-((d - r_j) ** 2) / (2 * (side * 0.03) ** 2))
            images[i, 0] = np.clip(img, 0.0, 1.0)
            i += 1
    return LabeledSet(images, labels, classes)


# ---------------------------------------------------------------------------
# IDX / CSV ingestion and export

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def _read_idx_images(path):
    raw = open(path, "rb").read()
    if len(raw) < 16:
        raise ParseError(f"{path}: truncated IDX header ({len(raw)} bytes, need 16)")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != _IDX_IMAGES_MAGIC:
        raise ParseError(f"{path}: bad IDX magic 0x{magic:08x} at byte 0 "
                         f"(expected 0x{_IDX_IMAGES_MAGIC:08x})")
    expect = 16 + n * rows * cols
    if len(raw) != expect:
        raise ParseError(f"{path}: expected {expect} bytes, found {len(raw)}")
    pix = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, 1, rows, cols)
    return pix.astype(np.float64) / 255.0


def _read_idx_labels(path):
    raw = open(path, "rb").read()
    if len(raw) < 8:
        raise ParseError(f"{path}: truncated IDX header ({len(raw)} bytes, need 8)")
    magic, n = struct.unpack(">II", raw[:8])
    if magic != _IDX_LABELS_MAGIC:
        raise ParseError(f"{path}: bad IDX magic 0x{magic:08x} at byte 0 "
                         f"(expected 0x{_IDX_LABELS_MAGIC:08x})")
    if len(raw) != 8 + n:
        raise ParseError(f"{path}: expected {8 + n} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, offset=8).astype(np.intp)


def _labels_path_for(path: str) -> str:
    for a, b in (("images", "labels"), ("idx3", "idx1")):
        if a in path:
            return path.replace(a, b).replace("idx3", "idx1")
    return path + ".labels"


def load_idx_or_csv(path, shape=None, labels_path=None) -> LabeledSet:
    """Load a dataset from an IDX image file (labels in a sibling file) or a CSV.

    CSV rows are ``label, pixel, pixel, ...``; an optional first line
    ``# shape=C,H,W`` pins the image shape, otherwise `shape` is used, and
    failing that a square single-channel shape is inferred. Byte-valued
    sources are rescaled to [0, 1] by dividing by 255.
    """
    path = str(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if len(head) == 4 and struct.unpack(">I", head)[0] in (_IDX_IMAGES_MAGIC, _IDX_LABELS_MAGIC):
        images = _read_idx_images(path)
        labels = _read_idx_labels(labels_path or _labels_path_for(path))
        if len(images) != len(labels):
            raise ParseError(f"{path}: {len(images)} images but {len(labels)} labels")
        return LabeledSet(images, labels, int(labels.max()) + 1 if len(labels) else 0)
    return _load_csv(path, shape)


def _load_csv(path, shape):
    labels, rows = [], []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "shape=" in line and shape is None:
                    shape = tuple(int(v) for v in line.split("shape=")[1].split(","))
                continue
            parts = line.split(",")
            try:
                values = [float(v) for v in parts]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(f"{path}:{lineno}: row has {len(values)} fields, expected {width}")
            labels.append(int(values[0]))
            rows.append(values[1:])
    if not rows:
        raise ParseError(f"{path}: no data rows")
    pix = np.asarray(rows, dtype=np.float64)
    if pix.max(initial=0.0) > 1.0:
        if not np.allclose(pix, np.round(pix)):
            raise ParseError(f"{path}: values above 1 must be byte-valued integers")
        pix = pix / 255.0
    d = pix.shape[1]
    if shape is None:
        s = int(round(np.sqrt(d)))
        if s * s != d:
            raise ParseError(f"{path}: cannot infer a square shape from {d} pixels")
        shape = (1, s, s)
    if int(np.prod(shape)) != d:
        raise ParseError(f"{path}: shape {shape} does not match {d} pixels per row")
    labels = np.asarray(labels, dtype=np.intp)
    return LabeledSet(pix.reshape(len(rows), *shape), labels, int(labels.max()) + 1)


def save_csv(data: LabeledSet, path) -> None:
    """Export as the same CSV format the loader reads (full-precision floats)."""
    c, h, w = data.images.shape[1:]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# shape={c},{h},{w}\n")
        for img, label in zip(data.images, data.labels):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in img.ravel()) + "\n")


# ---------------------------------------------------------------------------
# splitting

def split(data: LabeledSet, spec: SplitSpec, net=None) -> SplitResult:
    """Stratified Train/AdvTrain/AdvTest split, optionally discarding
    pool samples the supplied network misclassifies."""
    if len(data) == 0:
        raise AdvlabError("cannot split an empty dataset")
    rng = rng_for(spec.seed, "split")
    train_idx, pool_idx, per_class = [], [], {}
    for c in range(data.num_classes):
        members = np.flatnonzero(data.labels == c)
        members = members[rng.permutation(len(members))]
        n_train = int(np.floor(spec.train_fraction * len(members)))
        train_idx.append(members[:n_train])
        pool_idx.append(members[n_train:])
        per_class[c] = n_train
    train_idx = np.concatenate(train_idx)
    pool_idx = np.concatenate(pool_idx)
    result = SplitResult(train=data.subset(np.sort(train_idx)),
                         advtrain=None, advtest=None, per_class_train=per_class)

    if net is not None and len(pool_idx):
        from .nn.network import predict

        pred = predict(net, data.images[pool_idx])
        keep = pred == data.labels[pool_idx]
        result.discarded = int((~keep).sum())
        survivors = pool_idx[keep]
        for c in range(data.num_classes):
            if np.any(data.labels[pool_idx] == c) and not np.any(data.labels[survivors] == c):
                result.warnings.append(f"class {c} emptied from the test pool by discarding")
        pool_idx = survivors

    pool_idx = pool_idx[rng_for(spec.seed, "advsplit").permutation(len(pool_idx))]
    n_advtrain = int(np.floor(spec.advtrain_fraction_of_test * len(pool_idx)))
    result.advtrain = data.subset(np.sort(pool_idx[:n_advtrain]))
    result.advtest = data.subset(np.sort(pool_idx[n_advtrain:]))
    return result
