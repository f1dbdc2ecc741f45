from ._core import (
    Block,
    Corpus,
    Document,
    MatePair,
    PlantedSpec,
    Rng,
    Vocabulary,
    build_corpus,
    dynamic_weight,
    esa,
    eval,
    generate_planted_corpus,
    lda,
    link,
    load_corpus,
    plsa,
    retrieval,
    save_corpus,
    tokenize,
)

__all__ = [
    "Block",
    "Corpus",
    "Document",
    "MatePair",
    "PlantedSpec",
    "Rng",
    "Vocabulary",
    "build_corpus",
    "dynamic_weight",
    "esa",
    "eval",
    "generate_planted_corpus",
    "lda",
    "link",
    "load_corpus",
    "plsa",
    "retrieval",
    "save_corpus",
    "tokenize",
]
