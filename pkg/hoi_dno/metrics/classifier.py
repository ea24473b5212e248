"""
Embedding classifier for evaluation

Input per frame: root-relative body and hand joint positions followed by the
object translation relative to the root and the object's cont6d rotation.
Two temporal convolutions (kernel 3, same padding, GELU) feed a mean pool
over frames; the pooled vector is the embedding and a linear head maps it
to verb logits.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from ..exceptions import ArtifactError, MetricError
from ..numerics import Adam, Tape, Tensor, backward, load_snapshot, no_grad, save_snapshot
from ..numerics import functional as F
from ..numerics import primitives as P
from ..representation import RootTransform, decode_features
from ..rig import RigDef, forward_kinematics_np, rotmat_to_cont6d_np
from .models import RealismMetrics
from .realism import ave, diversity, fid, multimodality

logger = logging.getLogger(__name__)

KERNEL = 3


def sequence_features(features: np.ndarray, root: RootTransform, rig: RigDef) -> np.ndarray:
    """(F, 3J + 9) classifier input of one encoded sequence"""
    tracks = decode_features(features, root, rig)
    n = len(tracks)
    joints, _ = forward_kinematics_np(rig, tracks.human.root_translation, tracks.human.rotations)
    origin = tracks.human.root_translation * np.array([1.0, 1.0, 0.0])
    rel = (joints - origin[:, None, :]).reshape(n, -1)
    obj = tracks.obj.translations - origin
    rot = rotmat_to_cont6d_np(tracks.obj.rotations)
    return np.concatenate([rel, obj, rot], axis=1)


def _unfold(x: Tensor) -> Tensor:
    """(F, C) -> (F, KERNEL * C) with zero padding at both ends"""
    n, c = x.shape
    pad = Tensor._wrap(np.zeros((KERNEL // 2, c)))
    padded = P.concat([pad, x, pad], axis=0)
    return P.concat([padded[k:k + n] for k in range(KERNEL)], axis=1)


class EmbedClassifier:
    """
    Small temporal-convolution classifier with a penultimate embedding

    Args:
        labels: Class names (verbs)
        in_dim: Per-frame input width
        width: Channel width of both convolutions (the embedding size)
        seed: Parameter init seed
    """

    def __init__(self, labels: Sequence[str], in_dim: int, width: int = 64, seed: int = 0):
        self.labels = list(labels)
        self.in_dim = in_dim
        self.width = width
        rng = np.random.default_rng(seed)
        self.params: Dict[str, np.ndarray] = {
            "conv1.w": rng.normal(0.0, 1.0 / np.sqrt(KERNEL * in_dim), (KERNEL * in_dim, width)),
            "conv1.b": np.zeros(width),
            "conv2.w": rng.normal(0.0, 1.0 / np.sqrt(KERNEL * width), (KERNEL * width, width)),
            "conv2.b": np.zeros(width),
            "head.w": rng.normal(0.0, 1.0 / np.sqrt(width), (width, len(self.labels))),
            "head.b": np.zeros(len(self.labels)),
            "input.mean": np.zeros(in_dim),
            "input.std": np.ones(in_dim),
        }
        self.frozen = False

    def _embed(self, params: Dict[str, Tensor], x: np.ndarray) -> Tensor:
        x = (np.asarray(x, dtype=np.float64) - self.params["input.mean"]) / self.params["input.std"]
        h = P.gelu(F.linear(_unfold(Tensor._wrap(x)), params["conv1.w"], params["conv1.b"]))
        h = P.gelu(F.linear(_unfold(h), params["conv2.w"], params["conv2.b"]))
        return h.mean(axis=0)

    def _logits(self, params: Dict[str, Tensor], x: np.ndarray) -> Tensor:
        return F.linear(self._embed(params, x), params["head.w"], params["head.b"])

    def _constants(self) -> Dict[str, Tensor]:
        return {k: Tensor._wrap(np.array(v)) for k, v in self.params.items()}

    def fit(
        self,
        inputs: Sequence[np.ndarray],
        labels: Sequence[str],
        steps: int = 300,
        lr: float = 1e-2,
        batch_size: int = 16,
        seed: int = 0,
        verbose: bool = False,
    ) -> List[float]:
        """
        Train on labeled sequences with cross-entropy, then freeze

        Returns:
            Per-step mean cross-entropy
        """
        if self.frozen:
            raise MetricError("classifier is frozen")
        if not inputs:
            raise MetricError("cannot fit a classifier on an empty set")
        stacked = np.concatenate([np.asarray(x) for x in inputs])
        self.params["input.mean"] = stacked.mean(axis=0)
        self.params["input.std"] = np.maximum(stacked.std(axis=0), 1e-3)
        targets = [self.labels.index(label) for label in labels]

        trainable = [k for k in self.params if not k.startswith("input.")]
        optimizer = Adam(lr=lr)
        rng = np.random.default_rng(seed)
        trace = []
        for _ in tqdm(range(steps), disable=not verbose, desc="classifier"):
            batch = rng.integers(len(inputs), size=min(batch_size, len(inputs)))
            leaves = {k: Tensor(self.params[k], requires_grad=True, name=k) for k in trainable}
            with Tape():
                loss = Tensor(0.0)
                for i in batch:
                    probs = P.softmax(self._logits(leaves, inputs[i]))
                    loss = loss - P.log(probs[targets[i]] + 1e-12)
                loss = loss * (1.0 / len(batch))
                grads = backward(loss)
            trace.append(loss.item())
            updated = optimizer.step({k: self.params[k] for k in trainable}, {k: grads[t] for k, t in leaves.items()})
            self.params.update(updated)
        self.frozen = True
        logger.info("classifier trained for %d steps, final loss %.4f", steps, trace[-1] if trace else float("nan"))
        return trace

    def embed(self, inputs: Sequence[np.ndarray]) -> np.ndarray:
        """(N, width) embeddings"""
        consts = self._constants()
        with no_grad():
            return np.stack([self._embed(consts, x).data for x in inputs]) if inputs else np.zeros((0, self.width))

    def predict(self, inputs: Sequence[np.ndarray]) -> List[str]:
        consts = self._constants()
        with no_grad():
            return [self.labels[int(np.argmax(self._logits(consts, x).data))] for x in inputs]

    def prototypes(self, inputs: Sequence[np.ndarray], labels: Sequence[str]) -> Dict[str, np.ndarray]:
        """Mean embedding per label"""
        emb = self.embed(inputs)
        labels = np.asarray(labels)
        return {label: emb[labels == label].mean(axis=0) for label in self.labels if np.any(labels == label)}

    def save(self, path: Union[str, Path]) -> None:
        tensors = dict(self.params)
        tensors["meta.shape"] = np.array([self.in_dim, self.width, len(self.labels)], dtype=np.float64)
        save_snapshot(str(path), tensors)
        Path(str(path) + ".labels").write_text("\n".join(self.labels) + "\n", encoding="utf-8")
        logger.info("✓ Saved classifier to %s", path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EmbedClassifier":
        labels_path = Path(str(path) + ".labels")
        if not Path(path).exists() or not labels_path.exists():
            raise FileNotFoundError(f"Classifier not found: {path}")
        tensors = load_snapshot(str(path))
        labels = [line for line in labels_path.read_text(encoding="utf-8").splitlines() if line]
        try:
            in_dim, width, n_labels = (int(v) for v in tensors.pop("meta.shape"))
        except KeyError:
            raise ArtifactError(f"{path}: missing classifier shape")
        if n_labels != len(labels):
            raise ArtifactError(f"{path}: {n_labels} classes but {len(labels)} labels")
        model = cls(labels, in_dim, width)
        model.params.update(tensors)
        model.frozen = True
        return model


def ira(classifier: EmbedClassifier, inputs: Sequence[np.ndarray], labels: Sequence[str]) -> float:
    """
    Intent recognition accuracy of the frozen classifier on a labeled set

    Raises:
        MetricError: Empty set
    """
    if not inputs:
        raise MetricError("ira: empty evaluation set")
    predicted = classifier.predict(inputs)
    return float(np.mean([p == t for p, t in zip(predicted, labels)]))


def r_prec(
    classifier: EmbedClassifier,
    inputs: Sequence[np.ndarray],
    labels: Sequence[str],
    prototypes: Optional[Dict[str, np.ndarray]] = None,
) -> float:
    """
    Top-1 retrieval precision

    Each embedding retrieves the label whose prototype (mean reference
    embedding) has the highest cosine similarity.
    """
    if not inputs:
        raise MetricError("r_prec: empty evaluation set")
    protos = prototypes or classifier.prototypes(inputs, labels)
    names = list(protos)
    matrix = np.stack([protos[n] for n in names])
    matrix = matrix / np.maximum(np.linalg.norm(matrix, axis=1, keepdims=True), 1e-12)
    emb = classifier.embed(inputs)
    emb = emb / np.maximum(np.linalg.norm(emb, axis=1, keepdims=True), 1e-12)
    hits = [names[int(np.argmax(matrix @ e))] == label for e, label in zip(emb, labels)]
    return float(np.mean(hits))


def _paired(reference_labels: Sequence[str], generated_labels: Sequence[str]) -> List[int]:
    """Index of a same-label reference for every generated sample, cycling through each label's references"""
    by_label: Dict[str, List[int]] = {}
    for i, label in enumerate(reference_labels):
        by_label.setdefault(label, []).append(i)
    used: Dict[str, int] = {}
    pairs = []
    for label in generated_labels:
        pool = by_label.get(label) or list(range(len(reference_labels)))
        k = used.get(label, 0)
        pairs.append(pool[k % len(pool)])
        used[label] = k + 1
    return pairs


def realism_suite(
    classifier: EmbedClassifier,
    reference: Sequence[np.ndarray],
    reference_labels: Sequence[str],
    generated: Sequence[np.ndarray],
    generated_labels: Sequence[str],
    reference_joints: Sequence[np.ndarray],
    generated_joints: Sequence[np.ndarray],
    seed: int = 0,
) -> RealismMetrics:
    """
    Embedding metrics of a generated set against a labeled reference set

    Prototypes for R_prec come from the reference embeddings. AVE pairs each
    generated track with a reference of the same label. Diversity and
    multimodality are NaN when the generated set is too small for them.
    """
    if not reference or not generated:
        raise MetricError("realism: reference and generated sets must be non-empty")
    real_emb = classifier.embed(reference)
    gen_emb = classifier.embed(generated)
    try:
        div = diversity(gen_emb, seed=seed)
    except MetricError as e:
        logger.warning("diversity skipped: %s", e)
        div = float("nan")
    groups: Dict[str, List[np.ndarray]] = {}
    for e, label in zip(gen_emb, generated_labels):
        groups.setdefault(label, []).append(e)
    try:
        mm = multimodality({k: np.stack(v) for k, v in groups.items()}, seed=seed)
    except MetricError as e:
        logger.warning("multimodality skipped: %s", e)
        mm = float("nan")
    pairs = _paired(reference_labels, generated_labels)
    return RealismMetrics(
        fid=fid(real_emb, gen_emb),
        diversity=div,
        multimodality=mm,
        ira=ira(classifier, generated, generated_labels),
        r_prec=r_prec(classifier, generated, generated_labels, classifier.prototypes(reference, reference_labels)),
        ave=ave([reference_joints[i] for i in pairs], generated_joints),
    )
