from .params import Param, checksum, init_normal, trainable_count
from .store import WeightStore
from .lora import LoRAAdapter
from .encoder import BiScanLayer, SequenceEncoder
from .optim import Adam, SGD, make_optimizer
from .gradcheck import finite_difference_check

__all__ = [
    "Param",
    "checksum",
    "init_normal",
    "trainable_count",
    "WeightStore",
    "LoRAAdapter",
    "BiScanLayer",
    "SequenceEncoder",
    "Adam",
    "SGD",
    "make_optimizer",
    "finite_difference_check",
]
