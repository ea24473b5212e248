"""
Custom exceptions for hoi_dno
"""
from typing import Optional, Sequence


class HoiDnoError(Exception):
    """Base exception for all hoi_dno errors"""
    pass


class ShapeError(HoiDnoError):
    """Operand shapes are incompatible with a primitive"""
    def __init__(self, op: str, shape_a: Sequence[int], shape_b: Sequence[int], detail: str = ""):
        self.op = op
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        message = f"[{op}] incompatible shapes {self.shape_a} and {self.shape_b}"
        super().__init__(message + (f": {detail}" if detail else ""))


class GradientError(HoiDnoError):
    """Backward pass requested on an invalid root or tape"""
    pass


class NonFiniteGradientError(GradientError):
    """A gradient handed to the optimizer contains NaN or Inf"""
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"non-finite gradient for parameter '{name}'")


class MeshError(HoiDnoError):
    """Invalid triangle mesh"""
    pass


class NotWatertightError(MeshError):
    """Mesh is required to be closed and consistently wound"""
    pass


class DegenerateRayError(MeshError):
    """Inside test could not find a non-grazing ray direction"""
    def __init__(self, point: Sequence[float], attempts: int):
        self.point = tuple(float(x) for x in point)
        self.attempts = attempts
        super().__init__(f"ray cast from {self.point} grazed an edge on all {attempts} attempts")


class MeshBudgetError(MeshError):
    """Mesh exceeds the face or vertex budget of its ingestion path"""
    pass


class RigError(HoiDnoError):
    """Invalid rig definition or pose"""
    pass


class DegenerateRotationError(RigError):
    """Cont6d columns are too short or parallel to define a rotation"""
    pass


class EncodingError(HoiDnoError):
    """Tracks or feature sequences are inconsistent"""
    pass


class ScheduleError(HoiDnoError):
    """Diffusion step outside the schedule"""
    pass


class UnreachableWaypointError(HoiDnoError):
    """A scripted hand target is out of reach for the rig's limbs"""
    def __init__(self, side: str, distance: float, reach: float):
        self.side = side
        self.distance = distance
        self.reach = reach
        super().__init__(f"{side} hand target at {distance:.3f} m exceeds reach {reach:.3f} m")


class TrainingDivergedError(HoiDnoError):
    """Training loss became NaN"""
    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"training loss is {loss} at step {step}")


class OptimizationDivergedError(HoiDnoError):
    """Noise optimization objective became NaN"""
    def __init__(self, iteration: int, dump_path: Optional[str] = None):
        self.iteration = iteration
        self.dump_path = dump_path
        super().__init__(
            f"objective is NaN at iteration {iteration}"
            + (f" (iterate dumped to {dump_path})" if dump_path else "")
        )


class ConfigError(HoiDnoError):
    """Invalid run configuration"""
    def __init__(self, key_path: str, message: str):
        self.key_path = key_path
        self.message = message
        super().__init__(f"{key_path}: {message}")


class ArtifactError(HoiDnoError):
    """Artifact file is malformed or was produced by a different config"""
    pass


class MetricError(HoiDnoError):
    """Metric inputs violate the metric's contract"""
    pass
