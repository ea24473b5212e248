"""
Model checkpoints (.ckpt)

Layout (little-endian):
    b"DNCK" | header length u64 | JSON header (sorted keys, utf-8) | tensor collection

The header carries the format version, the model config, the run config
that produced the model and its hash, the rig name and hash and the prompt
vocabulary. Tensors are the denoiser parameters under "param." and the
feature normalizer under "normalizer.".
"""

import io
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..config import DefaultsConfig
from ..exceptions import ArtifactError
from ..numerics.snapshot import read_tensors, write_tensors
from ..representation import FeatureNormalizer
from ..rig import RigDef, rig_hash
from .denoiser import Denoiser
from .models import DenoiserConfig

logger = logging.getLogger(__name__)

MAGIC = b"DNCK"
_U64 = struct.Struct("<Q")
PARAM_PREFIX = "param."


@dataclass
class Checkpoint:
    denoiser: Denoiser
    normalizer: FeatureNormalizer
    vocab: List[str]
    rig_name: str
    rig_hash: str
    run_config: Dict[str, Any] = field(default_factory=dict)
    config_hash: str = ""
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def config(self) -> DenoiserConfig:
        return self.denoiser.config

    def check_rig(self, rig: RigDef) -> None:
        if rig_hash(rig) != self.rig_hash:
            raise ArtifactError(f"checkpoint was trained on rig '{self.rig_name}', not '{rig.name}'")


def save_checkpoint(
    path: Union[str, Path],
    denoiser: Denoiser,
    normalizer: FeatureNormalizer,
    vocab: List[str],
    rig: RigDef,
    run_config: Optional[Dict[str, Any]] = None,
    config_hash: str = "",
    meta: Optional[Dict[str, Any]] = None,
) -> None:
    header = {
        "version": DefaultsConfig.CHECKPOINT_VERSION,
        "model": denoiser.config.to_dict(),
        "run_config": run_config or {},
        "config_hash": config_hash,
        "rig": rig.name,
        "rig_hash": rig_hash(rig),
        "vocab": list(vocab),
        "meta": meta or {},
    }
    tensors = {f"{PARAM_PREFIX}{k}": v for k, v in denoiser.params.items()}
    tensors.update(normalizer.to_tensors())
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(_U64.pack(len(raw)))
    buf.write(raw)
    write_tensors(buf, tensors)
    Path(path).write_bytes(buf.getvalue())
    logger.info("✓ Saved checkpoint to %s (%d parameters)", path, denoiser.n_parameters)


def load_checkpoint(path: Union[str, Path], rig: Optional[RigDef] = None) -> Checkpoint:
    """
    Read a checkpoint

    Raises:
        FileNotFoundError: Missing file
        ArtifactError: Bad magic or version, unreadable header, missing
            tensors, or a rig whose hash differs from the recorded one
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    buffer = path.read_bytes()
    if buffer[:4] != MAGIC:
        raise ArtifactError(f"{path}: not a DNCK checkpoint")
    (n,) = _U64.unpack_from(buffer, 4)
    try:
        header = json.loads(buffer[12:12 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ArtifactError(f"{path}: unreadable header ({e})")
    if header.get("version") != DefaultsConfig.CHECKPOINT_VERSION:
        raise ArtifactError(f"{path}: unsupported checkpoint version {header.get('version')}")
    tensors, end = read_tensors(buffer, 12 + n)
    if end != len(buffer):
        raise ArtifactError(f"{path}: {len(buffer) - end} trailing bytes")

    config = DenoiserConfig.from_dict(header["model"])
    params = {k[len(PARAM_PREFIX):]: v for k, v in tensors.items() if k.startswith(PARAM_PREFIX)}
    if not params:
        raise ArtifactError(f"{path}: no parameters")
    ckpt = Checkpoint(
        denoiser=Denoiser(config, params=params),
        normalizer=FeatureNormalizer.from_tensors(tensors),
        vocab=header["vocab"],
        rig_name=header["rig"],
        rig_hash=header["rig_hash"],
        run_config=header.get("run_config", {}),
        config_hash=header.get("config_hash", ""),
        meta=header.get("meta", {}),
    )
    if rig is not None:
        ckpt.check_rig(rig)
    logger.info("✓ Loaded checkpoint from %s", path)
    return ckpt
