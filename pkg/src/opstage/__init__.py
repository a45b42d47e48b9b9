"""Pneumoconiosis opacity grading from GLCM texture features.

Sub-region images are reduced to a 16-component co-occurrence texture vector
(:mod:`opstage.glcm`), classified by a class-weighted broad learning system
(:mod:`opstage.wbls`), and the six sub-region levels are combined into a final
stage by :mod:`opstage.staging`. :mod:`opstage.harness` runs the repeated
split/balance/evaluate protocol on synthetic or tabulated data.
"""

from .glcm import KERNEL, feature_vector
from .staging import ChestAssessment, FinalStage, OpacityLevel, SubRegion, determine_final_stage
from .wbls import WblsHyperParams, WblsModel, predict, train

__version__ = "0.1.0"

__all__ = [
    "KERNEL",
    "ChestAssessment",
    "FinalStage",
    "OpacityLevel",
    "SubRegion",
    "WblsHyperParams",
    "WblsModel",
    "determine_final_stage",
    "feature_vector",
    "predict",
    "train",
]
