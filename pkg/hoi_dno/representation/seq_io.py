"""
Sequence files (.seq)

Layout (little-endian):
    b"DSEQ" | header length u64 | JSON header (sorted keys, utf-8) | tensor collection

The tensor collection holds at least `features` (N, D) and `root` (9,) and
uses the snapshot block format. The header records the format version, rig
name and hash, anchor and joint counts, length, fps and the object mesh path,
plus free-form metadata.
"""

import io
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import ArtifactError, EncodingError
from ..numerics.snapshot import read_tensors, write_tensors
from ..rig import RigDef, rig_hash
from .layout import FeatureLayout
from .models import RootTransform, SequenceFile

logger = logging.getLogger(__name__)

MAGIC = b"DSEQ"
_U64 = struct.Struct("<Q")


def _pack(header: Dict[str, Any], tensors: Dict[str, np.ndarray]) -> bytes:
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(_U64.pack(len(raw)))
    buf.write(raw)
    write_tensors(buf, tensors)
    return buf.getvalue()


def _unpack(buffer: bytes, path: Union[str, Path]) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    if buffer[:4] != MAGIC:
        raise ArtifactError(f"{path}: not a DSEQ file")
    (n,) = _U64.unpack_from(buffer, 4)
    try:
        header = json.loads(buffer[12:12 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ArtifactError(f"{path}: unreadable header ({e})")
    if header.get("version") != DefaultsConfig.SEQ_FORMAT_VERSION:
        raise ArtifactError(f"{path}: unsupported sequence version {header.get('version')}")
    tensors, end = read_tensors(buffer, 12 + n)
    if end != len(buffer):
        raise ArtifactError(f"{path}: {len(buffer) - end} trailing bytes")
    if "features" not in tensors or "root" not in tensors:
        raise ArtifactError(f"{path}: missing features or root tensor")
    return header, tensors


def save_sequence(
    path: Union[str, Path],
    features: np.ndarray,
    root: RootTransform,
    rig: RigDef,
    fps: int = DefaultsConfig.FPS,
    object_mesh: Optional[str] = None,
    meta: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, np.ndarray]] = None,
) -> None:
    """Write features and root transform with a self-describing header"""
    features = np.asarray(features, dtype=np.float64)
    FeatureLayout.for_rig(rig).check(features.shape[-1])
    header = {
        "version": DefaultsConfig.SEQ_FORMAT_VERSION,
        "rig": rig.name,
        "rig_hash": rig_hash(rig),
        "n_anchors": rig.n_anchors,
        "n_joints": rig.n_joints,
        "length": int(features.shape[0]),
        "fps": int(fps),
        "object_mesh": object_mesh,
        "meta": meta or {},
    }
    tensors = {"features": features, "root": root.to_vector()}
    for name, value in (extra or {}).items():
        if name in tensors:
            raise EncodingError(f"extra tensor name '{name}' is reserved")
        tensors[name] = np.asarray(value, dtype=np.float64)
    Path(path).write_bytes(_pack(header, tensors))


def load_sequence(path: Union[str, Path], rig: Optional[RigDef] = None) -> SequenceFile:
    """
    Read a .seq file

    Raises:
        FileNotFoundError: Missing file
        ArtifactError: Bad magic, version, truncated payload, or a rig whose
            hash differs from the recorded one
    """
    header, tensors = _unpack(Path(path).read_bytes(), path)
    features = tensors.pop("features")
    root = RootTransform.from_vector(tensors.pop("root"))
    if features.ndim != 2 or features.shape[0] != header["length"]:
        raise ArtifactError(f"{path}: header length {header['length']} != features {features.shape}")
    expected = FeatureLayout(header["n_anchors"], header["n_joints"]).dim
    if features.shape[1] != expected:
        raise ArtifactError(f"{path}: feature width {features.shape[1]} != {expected}")
    if rig is not None and header.get("rig_hash") != rig_hash(rig):
        raise ArtifactError(f"{path}: recorded rig hash does not match rig '{rig.name}'")
    return SequenceFile(features=features, root=root, header=header, extra=tensors or None)


def roundtrip_check(path: Union[str, Path], rig: Optional[RigDef] = None) -> SequenceFile:
    """Validate a file and check that re-encoding its parsed contents reproduces it byte for byte"""
    seq = load_sequence(path, rig=rig)
    original = Path(path).read_bytes()
    if _pack(*_unpack(original, path)) != original:
        raise ArtifactError(f"{path}: re-encoded bytes differ from the file")
    logger.debug("round trip ok for %s", path)
    return seq
