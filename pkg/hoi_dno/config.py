"""
Configuration constants for hoi_dno
"""


class DefaultsConfig:
    """Thresholds, tolerances and format versions shared across modules"""

    # Mesh validity and budgets
    MIN_FACE_AREA = 1e-12  # m², faces at or below this are degenerate
    OBJECT_FACE_BUDGET = 3000  # Max faces for an ingested object mesh
    HAND_VERTEX_BUDGET = 1100  # Max vertices per hand mesh

    # Ray casting
    RAY_GRAZE_EPS = 1e-9  # Barycentric distance to an edge that counts as grazing
    RAY_MAX_RETRIES = 8  # Fresh directions tried before giving up
    BVH_LEAF_SIZE = 8  # Faces per BVH leaf

    # SDF baking
    SDF_MIN_RESOLUTION = 16  # Nodes per axis
    SDF_MARGIN = 0.10  # Fraction of the mesh extent padded on each side
    SDF_CHUNK = 16384  # Grid nodes evaluated per batch
    SDF_RESOLUTION = 32  # Nodes along the longest axis of metric SDFs
    SDF_CACHE_NAME = "object-{digest}-{resolution}.sdf"  # Baked object SDF kept beside run artifacts

    # Rotations
    ROT6D_EPS = 1e-6  # Min column norm / cross norm for cont6d

    # Scene
    FLOOR_HEIGHT = 0.0
    TABLE_HEIGHT = 0.85
    TABLE_GATE = 0.01  # Object within this of table height counts as resting
    OBJECT_CLEARANCE = 1e-4  # Gap left under objects placed on the table

    # Contacts
    CONTACT_THRESHOLD = 0.5  # b_a > tau means contact
    CONTACT_LABEL_DISTANCE = 0.001  # Anchor-surface distance labeled as contact in synthesis
    CONTACT_GAP = 0.0002  # Palm offset from the object support plane in synthesis
    CONTACT_DETECT_DISTANCE = 0.005  # Anchor-surface distance counted as contact by metrics
    MIN_CONTACT_ANCHORS = 4  # Per engaged hand

    # Feet
    TOE_HEIGHT = 0.02  # h in the feet-floor contact term
    FOOT_SKATE_GATE = 2.0  # Foot loss applies below FOOT_SKATE_GATE * TOE_HEIGHT
    FS_HEIGHT_SCALE = 0.033  # Height scale of the foot-skate metric weight

    # Sequences
    FPS = 30
    PREFIX_FRAMES = 15
    GENERATED_FRAMES = 100

    # Diffusion
    COSINE_OFFSET = 0.008
    BETA_MAX = 0.999
    GUIDANCE_STEPS = 500

    # Normalization and statistics
    NORMALIZER_STD_FLOOR = 1e-2
    DECORR_EPS = 1e-8
    FID_EPS = 1e-6

    # Inverse kinematics
    IK_DAMPING = 1e-3
    IK_TOLERANCE = 1e-8  # m, wrist position residual
    IK_MAX_ITERS = 200
    IK_FD_STEP = 1e-6
    IK_ACCEPT = 1e-5  # m, residual above which a waypoint counts as unreachable

    # File format versions
    SEQ_FORMAT_VERSION = 1
    RIG_FORMAT_VERSION = 1
    CONFIG_VERSION = 1
    CHECKPOINT_VERSION = 1
    SDF_FORMAT_VERSION = 1
