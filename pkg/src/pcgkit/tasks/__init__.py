from .vocab import (
    DEFAULT_VOCABULARIES,
    PARAPHRASES,
    PARAPHRASE_VERSION,
    TASK_IDS,
    LabelVocabulary,
    task_feature,
    task_phase,
)
from .split import SplitManifest, stratified_split
from .build import (
    MCItem,
    N_OPTIONS,
    build_dataset,
    build_mc_item,
    read_dataset,
    write_dataset,
)

__all__ = [
    "DEFAULT_VOCABULARIES",
    "PARAPHRASES",
    "PARAPHRASE_VERSION",
    "TASK_IDS",
    "LabelVocabulary",
    "task_feature",
    "task_phase",
    "SplitManifest",
    "stratified_split",
    "MCItem",
    "N_OPTIONS",
    "build_dataset",
    "build_mc_item",
    "read_dataset",
    "write_dataset",
]
