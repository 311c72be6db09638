from .packed import PackedString
from .bitvector import BitVectorRS
from .bucketed import BucketedRank
from .eliasfano import EliasFano
from .levelanc import LevelAncestor

__all__ = ["PackedString", "BitVectorRS", "BucketedRank", "EliasFano", "LevelAncestor"]
