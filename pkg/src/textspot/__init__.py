"""Mask-branch text spotting toolkit: decoding, label generation, losses, evaluation."""

from .alphabet import ALPHABET, EOS, DecodedText, normalize_word
from .evaluation import (
    EvalReport,
    GtInstance,
    SpotResult,
    detection_prf,
    end_to_end_eval,
    match_detections,
)
from .geometry import (
    CharBox,
    Polygon,
    ProposalRect,
    Rect,
    align_to_proposal,
    bounding_rect,
    generate_targets,
    polygon_iou,
    rasterize_instance,
    render_char_map,
    shrink_char_box,
)
from .lexicon import NO_LEXICON, Lexicon, edit_distance, fuse, match_lexicon, one_hot_probs, weighted_edit_distance
from .losses import LossConfig, char_seg_loss, instance_loss, mask_loss, seg_weights, seq_loss
from .sam import (
    SamConfig,
    SamWeights,
    attention_step,
    beam_decode,
    encode_features,
    greedy_decode,
    initial_state,
    position_embedding,
    random_weights,
)
from .seg_decoder import binarize_foreground, connected_regions, pixel_vote

__version__ = "0.1.0"
