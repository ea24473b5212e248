"""
Feature representation: contacts, relative-root human motion and object pose
"""

from .codec import (
    decode_contacts,
    decode_features,
    decode_human,
    decode_object,
    decode_sequence,
    encode_features,
    encode_sequence,
    joints_from_features,
)
from .contacts import contact_targets, contact_targets_tensor, count_flips, threshold_bits, threshold_contacts
from .layout import FeatureLayout
from .models import ContactFrame, HumanTrack, ObjectTrack, RootTransform, Segment, SequenceFile, WorldTracks
from .normalizer import FeatureNormalizer
from .seq_io import load_sequence, roundtrip_check, save_sequence

__all__ = [
    "ContactFrame",
    "FeatureLayout",
    "FeatureNormalizer",
    "HumanTrack",
    "ObjectTrack",
    "RootTransform",
    "Segment",
    "SequenceFile",
    "WorldTracks",
    "contact_targets",
    "contact_targets_tensor",
    "count_flips",
    "decode_contacts",
    "decode_features",
    "decode_human",
    "decode_object",
    "decode_sequence",
    "encode_features",
    "encode_sequence",
    "joints_from_features",
    "load_sequence",
    "roundtrip_check",
    "save_sequence",
    "threshold_bits",
    "threshold_contacts",
]
