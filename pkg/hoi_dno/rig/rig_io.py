"""
Rig Serializer - Save and load rig definitions as versioned JSON

The joint tree is stored in networkx node-link form; primitives and anchors
are plain records. rig_hash fingerprints the canonical encoding so artifacts
can record which rig produced them.
"""

import hashlib
import json
import logging
from dataclasses import asdict, fields
from typing import Any, Dict

import networkx as nx

from ..config import DefaultsConfig
from ..exceptions import ArtifactError, RigError
from .kinematics import joint_graph, validate_tree
from .models import JointDef, PrimitiveDef, RigDef

logger = logging.getLogger(__name__)

_PRIMITIVE_FIELDS = {f.name for f in fields(PrimitiveDef)}


class RigSerializer:
    """Handles serialization and deserialization of rig definitions"""

    @staticmethod
    def to_dict(rig: RigDef) -> Dict[str, Any]:
        graph = joint_graph(rig)
        for i, joint in enumerate(rig.joints):
            graph.nodes[i]["offset"] = list(joint.offset)
        return {
            "format": "hoi-dno-rig",
            "version": DefaultsConfig.RIG_FORMAT_VERSION,
            "name": rig.name,
            "rest_root": list(rig.rest_root),
            "toe_joints": list(rig.toe_joints),
            "wrist_joints": list(rig.wrist_joints),
            "joints": nx.node_link_data(graph),
            "primitives": [asdict(p) for p in rig.primitives],
            "anchors": {"left": list(rig.left_anchors), "right": list(rig.right_anchors)},
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> RigDef:
        if data.get("format") != "hoi-dno-rig":
            raise ArtifactError("not a rig definition (missing format tag)")
        if data.get("version") != DefaultsConfig.RIG_FORMAT_VERSION:
            raise ArtifactError(f"unsupported rig format version {data.get('version')}")
        try:
            graph = nx.node_link_graph(data["joints"], directed=True)
            parents = {child: parent for parent, child in graph.edges}
            joints = tuple(
                JointDef(
                    name=graph.nodes[i]["name"],
                    parent=parents.get(i, -1),
                    offset=tuple(graph.nodes[i]["offset"]),
                )
                for i in sorted(graph.nodes)
            )
            primitives = []
            for record in data["primitives"]:
                unknown = set(record) - _PRIMITIVE_FIELDS
                if unknown:
                    raise RigError(f"primitive has unknown keys {sorted(unknown)}")
                record = {k: tuple(v) if isinstance(v, list) else v for k, v in record.items()}
                primitives.append(PrimitiveDef(**record))
            rig = RigDef(
                name=data["name"],
                joints=joints,
                primitives=tuple(primitives),
                left_anchors=tuple(data["anchors"]["left"]),
                right_anchors=tuple(data["anchors"]["right"]),
                toe_joints=tuple(data["toe_joints"]),
                wrist_joints=tuple(data["wrist_joints"]),
                rest_root=tuple(data["rest_root"]),
                version=data["version"],
            )
        except (KeyError, TypeError) as e:
            raise ArtifactError(f"malformed rig definition: {e}")
        validate_tree(rig)
        return rig

    @staticmethod
    def save_json(rig: RigDef, path: str) -> None:
        """
        Save a rig definition

        Args:
            rig: Rig to write
            path: Output file path
        """
        with open(path, "w", encoding="utf-8") as f:
            json.dump(RigSerializer.to_dict(rig), f, indent=2, sort_keys=True)
        logger.info("✓ Saved rig '%s' to %s", rig.name, path)

    @staticmethod
    def load_json(path: str) -> RigDef:
        """
        Load a rig definition

        Raises:
            FileNotFoundError: Missing file
            ArtifactError: Wrong format tag/version or malformed content
        """
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ArtifactError(f"{path}: invalid JSON ({e})")
        rig = RigSerializer.from_dict(data)
        logger.info("✓ Loaded rig '%s' from %s", rig.name, path)
        return rig


def rig_hash(rig: RigDef) -> str:
    """sha256 of the canonical JSON encoding"""
    payload = json.dumps(RigSerializer.to_dict(rig), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
