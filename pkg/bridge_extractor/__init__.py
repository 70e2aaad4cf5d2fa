from .relations import RelationVocab
from .kg_store import KnowledgeGraph, Triple, load_conceptnet
from .index_io import load_index, save_index
from .conceptnet_importer import fetch_conceptnet
from .alignment import align_concepts, load_stopwords
from .dataset import load_dataset, split_dataset
from .subgraph import (
    extract_supervision_paths,
    hop_requirements,
    label_bridge_concepts,
    make_example,
    retrieve_subgraph,
)
from .subgraph_cache import read_cache, write_cache
from .vocab import build_vocab
from .encoder import EncoderConfig, ModelParams, encode_concept, encode_concepts, encode_statement
from .extractor import (
    TrainConfig,
    concept_loss,
    deactivate,
    extract,
    prepare_sample,
    route_paths,
    score_triples,
    select_concepts,
    top_paths,
    total_loss,
    triple_loss,
)
from .training import train
from .checkpoint import load_checkpoint, save_checkpoint
from .evaluation import concept_f1, corpus_stats, pr_at_n
from .synthetic import generate_planted_corpus

__all__ = [
    "RelationVocab",
    "KnowledgeGraph",
    "Triple",
    "load_conceptnet",
    "load_index",
    "save_index",
    "fetch_conceptnet",
    "align_concepts",
    "load_stopwords",
    "load_dataset",
    "split_dataset",
    "extract_supervision_paths",
    "hop_requirements",
    "label_bridge_concepts",
    "make_example",
    "retrieve_subgraph",
    "read_cache",
    "write_cache",
    "build_vocab",
    "EncoderConfig",
    "ModelParams",
    "encode_concept",
    "encode_concepts",
    "encode_statement",
    "TrainConfig",
    "concept_loss",
    "deactivate",
    "extract",
    "prepare_sample",
    "route_paths",
    "score_triples",
    "select_concepts",
    "top_paths",
    "total_loss",
    "triple_loss",
    "train",
    "load_checkpoint",
    "save_checkpoint",
    "concept_f1",
    "corpus_stats",
    "pr_at_n",
    "generate_planted_corpus",
]
