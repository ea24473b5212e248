"""
Two-arm inverse kinematics by damped least squares

The solved degrees of freedom are rotation vectors of the chest, both
shoulders and both elbows (15 numbers); the pelvis stays at the rig's rest
transform. Only wrist positions are constrained: wrist orientation is set
afterwards by choosing the wrist's local rotation.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import UnreachableWaypointError
from ..rig import RigDef, chain_to_root, forward_kinematics_np
from ..rig.rotations import rotvec_to_rotmat

logger = logging.getLogger(__name__)

IK_JOINTS = ("chest", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow")
SIDES = ("left", "right")


class ArmSolver:
    """
    Damped least squares over a finite-difference Jacobian

    Args:
        rig: Rig providing the joint tree; must name the IK joints
        damping: Levenberg damping lambda
        tolerance: Stop once the stacked wrist residual is below this (m)
        max_iters: Iteration cap per solve
        accept: Residual above which the solve is reported unreachable
    """

    def __init__(
        self,
        rig: RigDef,
        damping: float = DefaultsConfig.IK_DAMPING,
        tolerance: float = DefaultsConfig.IK_TOLERANCE,
        max_iters: int = DefaultsConfig.IK_MAX_ITERS,
        accept: float = DefaultsConfig.IK_ACCEPT,
    ):
        self.rig = rig
        self.joint_ids = [rig.joint_index(name) for name in IK_JOINTS]
        self.wrists = list(rig.wrist_joints)
        self.damping = damping
        self.tolerance = tolerance
        self.max_iters = max_iters
        self.accept = accept
        self.root = np.asarray(rig.rest_root, dtype=np.float64)
        self.reach = [self._chain_length(w) for w in self.wrists]

    @property
    def n_dof(self) -> int:
        return 3 * len(self.joint_ids)

    def _chain_length(self, joint: int) -> float:
        chain = chain_to_root(self.rig, joint)
        return float(sum(np.linalg.norm(self.rig.offsets[j]) for j in chain[1:]))

    def local_rotations(self, q: np.ndarray) -> np.ndarray:
        """(J, 3, 3) local rotations with the solved joints set from q"""
        local = np.broadcast_to(np.eye(3), (self.rig.n_joints, 3, 3)).copy()
        local[self.joint_ids] = rotvec_to_rotmat(np.asarray(q).reshape(-1, 3))
        return local

    def forward(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return forward_kinematics_np(self.rig, self.root, self.local_rotations(q))

    def wrist_positions(self, q: np.ndarray) -> np.ndarray:
        positions, _ = self.forward(q)
        return positions[self.wrists]

    def jacobian(self, q: np.ndarray, step: float = DefaultsConfig.IK_FD_STEP) -> np.ndarray:
        """Central-difference Jacobian (6, n_dof) of the stacked wrist positions"""
        jac = np.zeros((3 * len(self.wrists), self.n_dof))
        for k in range(self.n_dof):
            dq = np.zeros(self.n_dof)
            dq[k] = step
            plus = self.wrist_positions(q + dq).reshape(-1)
            minus = self.wrist_positions(q - dq).reshape(-1)
            jac[:, k] = (plus - minus) / (2.0 * step)
        return jac

    def solve(self, targets: np.ndarray, q0: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Joint parameters placing both wrists on their targets

        Args:
            targets: (2, 3) left and right wrist targets
            q0: Warm start (zeros when omitted)

        Returns:
            q of shape (n_dof,)

        Raises:
            UnreachableWaypointError: If a target is beyond the chain length
                or the residual stays above the acceptance threshold
        """
        targets = np.asarray(targets, dtype=np.float64).reshape(len(self.wrists), 3)
        for side, target, reach in zip(SIDES, targets, self.reach):
            distance = float(np.linalg.norm(target - self.root))
            if distance > reach:
                raise UnreachableWaypointError(side, distance, reach)

        q = np.zeros(self.n_dof) if q0 is None else np.array(q0, dtype=np.float64)
        eye = np.eye(3 * len(self.wrists))
        lam2 = self.damping ** 2
        for _ in range(self.max_iters):
            error = (targets - self.wrist_positions(q)).reshape(-1)
            if np.linalg.norm(error) < self.tolerance:
                break
            jac = self.jacobian(q)
            q = q + jac.T @ np.linalg.solve(jac @ jac.T + lam2 * eye, error)

        residual = np.linalg.norm(targets - self.wrist_positions(q), axis=1)
        worst = int(np.argmax(residual))
        if residual[worst] > self.accept:
            distance = float(np.linalg.norm(targets[worst] - self.root))
            raise UnreachableWaypointError(SIDES[worst], distance, self.reach[worst])
        return q

    def wrist_local_rotations(self, q: np.ndarray, target_rotations: np.ndarray) -> np.ndarray:
        """
        Full (J, 3, 3) local rotations whose wrists reach the given global orientations

        The wrist's local rotation is R_parent^T R_target with R_parent the
        solved global rotation of its parent (the elbow).
        """
        local = self.local_rotations(q)
        _, glob = forward_kinematics_np(self.rig, self.root, local)
        for wrist, target in zip(self.wrists, np.asarray(target_rotations)):
            parent = self.rig.joints[wrist].parent
            local[wrist] = glob[parent].T @ target
        return local
