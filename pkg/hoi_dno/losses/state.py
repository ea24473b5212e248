"""
Decoded world-space state of a feature sequence

decode_state is the single entry point that turns (L, D) features into
everything the objective terms, the metrics and the pipeline read: object
pose, contact channels, joint transforms, skinned meshes and anchors.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..config import DefaultsConfig
from ..geometry import TriMesh
from ..numerics import Tensor, as_tensor
from ..numerics import primitives as P
from ..representation import (
    FeatureLayout,
    RootTransform,
    contact_targets_tensor,
    decode_contacts,
    decode_human,
    decode_object,
    threshold_bits,
)
from ..rig import RigDef, SkinnedMeshes, Transforms, anchor_positions, forward_kinematics_rotmats, skin

ArrayLike = Union[np.ndarray, Tensor]


@dataclass
class DecodedState:
    """World-space view of one sequence; human fields are None for object-only decodes"""
    layout: FeatureLayout
    bits: Tensor  # (L, A) raw contact bits
    points: Tensor  # (L, A, 3) rest-frame contact points
    object_rotations: Tensor  # (L, 3, 3)
    object_translations: Tensor  # (L, 3)
    root_translation: Optional[Tensor] = None  # (L, 3)
    rotations: Optional[Tensor] = None  # (L, J, 3, 3), row 0 global
    transforms: Optional[Transforms] = None
    meshes: Optional[SkinnedMeshes] = None
    anchors: Optional[Tensor] = None  # (L, A, 3)

    def __len__(self) -> int:
        return self.object_translations.shape[0]

    @property
    def has_human(self) -> bool:
        return self.transforms is not None

    @property
    def joints(self) -> Tensor:
        """World joint positions (L, J, 3)"""
        if self.transforms is None:
            raise ValueError("state was decoded without the human channels")
        return self.transforms.positions

    def binary_bits(self, tau: float = DefaultsConfig.CONTACT_THRESHOLD) -> np.ndarray:
        return threshold_bits(self.bits.data, tau)

    def object_vertices(self, mesh: TriMesh) -> Tensor:
        """Posed object vertices (L, V, 3) from rest-frame mesh vertices"""
        n = len(self)
        rotated = P.matmul(Tensor._wrap(mesh.vertices), self.object_rotations.swap_last())
        return rotated + self.object_translations.reshape(n, 1, 3)

    def contact_targets(self) -> Tensor:
        """World contact targets (L, A, 3) from the live contact points and object pose"""
        return contact_targets_tensor(self.points, self.object_rotations, self.object_translations)


def decode_state(
    features: ArrayLike,
    root: RootTransform,
    rig: RigDef,
    human: bool = True,
    meshes: bool = True,
    check: bool = True,
) -> DecodedState:
    """
    Decode denormalized features into world space

    Args:
        features: (L, D) features (Tensor to keep gradients)
        root: World root transform of the first frame
        rig: Rig the features were encoded with
        human: Decode root, joint transforms and anchors
        meshes: Also skin the body and hand meshes (needs human)
        check: Validate cont6d blocks

    Returns:
        DecodedState
    """
    layout = FeatureLayout.for_rig(rig)
    features = as_tensor(features)
    layout.check(features.shape[-1])

    bits, points = decode_contacts(features, layout)
    obj_R, obj_t = decode_object(features, layout, check=check)
    state = DecodedState(
        layout=layout,
        bits=bits,
        points=points,
        object_rotations=obj_R,
        object_translations=obj_t,
    )
    if not human:
        return state

    t, rotations = decode_human(features, root, layout, check=check)
    transforms = forward_kinematics_rotmats(rig, t, rotations)
    state.root_translation = t
    state.rotations = rotations
    state.transforms = transforms
    state.anchors = anchor_positions(rig, transforms)
    if meshes:
        state.meshes = skin(rig, transforms)
    return state
