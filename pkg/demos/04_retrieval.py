"""
Retrieval-augmented questions
=============================

Documents are cut into overlapping word windows, embedded and stored.
At question time the best chunks are prepended while the prompt fits the
token budget.
"""

from plpbench import models, retrieval
from plpbench.datasets import data_file
from plpbench.prompts import estimate_tokens

embedder = models.from_pretrained("mock:echo")  # deterministic hashed bag-of-words vectors
store = retrieval.ingest([data_file("openmp_notes.txt")], embedder, chunk_size=40, overlap=8)
print(len(store), "chunks of dimension", store.dim)

question = "Which clause combines private copies of a variable?"
for hit in retrieval.retrieve(store, question, embedder, k=3):
    print(f"{hit.score:+.3f}  {hit.chunk.text[:60]}...")

# With a tight budget only the leading chunks that fit are used.
for budget in (40, 120, 400):
    used, prompt = retrieval.augment(question, store, embedder, k=3, token_budget=budget)
    print(f"budget {budget:3}: {len(used)} chunks, prompt ~{estimate_tokens(prompt)} tokens")
