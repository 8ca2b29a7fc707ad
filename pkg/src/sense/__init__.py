"""Joint text+graph node embeddings and cyclic-shift node sequence vectors."""
from .codec import (
    EmbeddingTable,
    SequenceVector,
    cyclic_shift,
    decode,
    decode_position,
    encode,
    score,
)
from .graph import Graph, LabelSet, NodeDocs, load_edge_list, load_labels, load_node_texts
from .model import SenseModel, TrainConfig, Variant, node_embeddings, train
from .sampler import Mode, WalkConfig
from .vocab import Vocab, build_vocab

__version__ = "0.1.0"
