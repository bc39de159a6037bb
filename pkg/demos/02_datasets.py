"""
Datasets, splits and similarity pairs
=====================================

Datasets are JSONL files checked against one of four schemas. Shuffling
and splitting are seeded, so the same seed always gives the same files.
"""

from plpbench import datasets
from plpbench.datasets import data_file
from plpbench.datasets import Schema, SplitSpec

poj = datasets.load(data_file("toy_poj.jsonl"), Schema.CodeClassification)
print(datasets.stats(poj))

# Train and valid take floor(n * fraction); test takes what is left.
train, valid, test = datasets.split(poj, SplitSpec((0.5, 0.25, 0.25), seed=42))
print([r["id"] for r in train.records], [r["id"] for r in valid.records], [r["id"] for r in test.records])

# Two snippets are a positive pair when they solve the same problem.
pairs = datasets.make_similarity_pairs(poj, n_pairs=6, balance=0.5, seed=42)
for r in pairs.records:
    print(r["id"], r["label"])

# Graded similarity scores can be turned into labels with a threshold.
print(datasets.binarize_similarity_scores([{"id_1": "a", "id_2": "b", "score": 0.8},
                                           {"id_1": "a", "id_2": "c", "score": 0.2}]))
