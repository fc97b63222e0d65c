"""Instruction-driven photo recoloring for graphic designs."""

from .bundle import DesignBundle, DesignElement, PhotoObject, load_bundle, save_bundle
from .colorcore import (
    bin_index,
    classify_color_term,
    lab_to_rgb,
    rgb_to_lab,
)
from .errors import RecolorError
from .instructions import (
    InstructionAst,
    RegionDescriptor,
    SourceDescriptor,
    parse_instruction,
    recognize_granularity,
    split_multi_region,
)
from .palette import Decomposition, Palette, decompose_layers, extract_palette, reconstruct_image
from .recolor import (
    RecolorResult,
    compute_overlap_rates,
    recolor_instruction,
    recolor_with_source,
    select_target_layers,
)
from .regions import build_semantic_layers, initial_mask, refine_soft_mask
from .sourcecolor import SourceColorSet, predict_source_colors
from .synth import GeneratorConfig, degrade_design, generate_dataset, generate_design

__version__ = "0.1.0"

__all__ = [
    "DesignBundle",
    "DesignElement",
    "PhotoObject",
    "load_bundle",
    "save_bundle",
    "bin_index",
    "classify_color_term",
    "lab_to_rgb",
    "rgb_to_lab",
    "RecolorError",
    "InstructionAst",
    "RegionDescriptor",
    "SourceDescriptor",
    "parse_instruction",
    "recognize_granularity",
    "split_multi_region",
    "Decomposition",
    "Palette",
    "decompose_layers",
    "extract_palette",
    "reconstruct_image",
    "RecolorResult",
    "compute_overlap_rates",
    "recolor_instruction",
    "recolor_with_source",
    "select_target_layers",
    "build_semantic_layers",
    "initial_mask",
    "refine_soft_mask",
    "SourceColorSet",
    "predict_source_colors",
    "GeneratorConfig",
    "degrade_design",
    "generate_dataset",
    "generate_design",
    "__version__",
]
