"""
Per-frame feature layout

    F = [F_CP | F_H | F_O]
    F_CP = [p_1..p_A (3A), b_1..b_A (A)]
    F_H  = [r_z, rdot_x, rdot_y, alphadot, theta (6J), j (3J)]
    F_O  = [theta_O (6), r_O (3), rdot_O (3)]

so D = 4A + 4 + 9J + 12.
"""

from dataclasses import dataclass
from typing import Dict

from ..exceptions import EncodingError


@dataclass(frozen=True)
class FeatureLayout:
    n_anchors: int
    n_joints: int

    @property
    def dim(self) -> int:
        return 4 * self.n_anchors + 4 + 9 * self.n_joints + 12

    # Contact block
    @property
    def contact_points(self) -> slice:
        return slice(0, 3 * self.n_anchors)

    @property
    def contact_bits(self) -> slice:
        return slice(3 * self.n_anchors, 4 * self.n_anchors)

    # Human block
    @property
    def human_start(self) -> int:
        return 4 * self.n_anchors

    @property
    def root_height(self) -> int:
        return self.human_start

    @property
    def root_velocity(self) -> slice:
        return slice(self.human_start + 1, self.human_start + 3)

    @property
    def root_angular_velocity(self) -> int:
        return self.human_start + 3

    @property
    def rotations(self) -> slice:
        start = self.human_start + 4
        return slice(start, start + 6 * self.n_joints)

    @property
    def joints(self) -> slice:
        start = self.rotations.stop
        return slice(start, start + 3 * self.n_joints)

    # Object block
    @property
    def object_start(self) -> int:
        return self.joints.stop

    @property
    def object_rotation(self) -> slice:
        return slice(self.object_start, self.object_start + 6)

    @property
    def object_translation(self) -> slice:
        return slice(self.object_start + 6, self.object_start + 9)

    @property
    def object_velocity(self) -> slice:
        return slice(self.object_start + 9, self.object_start + 12)

    # Blocks
    @property
    def cp_block(self) -> slice:
        return slice(0, self.human_start)

    @property
    def human_block(self) -> slice:
        return slice(self.human_start, self.object_start)

    @property
    def object_block(self) -> slice:
        return slice(self.object_start, self.dim)

    def blocks(self) -> Dict[str, slice]:
        return {"cp": self.cp_block, "human": self.human_block, "object": self.object_block}

    def check(self, dim: int) -> None:
        """Raise if a feature width disagrees with this layout"""
        if dim != self.dim:
            raise EncodingError(
                f"feature width {dim} != 4*{self.n_anchors} + 4 + 9*{self.n_joints} + 12 = {self.dim}"
            )

    @classmethod
    def for_rig(cls, rig) -> "FeatureLayout":
        return cls(n_anchors=rig.n_anchors, n_joints=rig.n_joints)
