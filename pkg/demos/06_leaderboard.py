"""
Evaluating models and ranking them
==================================

``compute`` runs every model under one sampling config and seed; the
leaderboard ranks the resulting reports.
"""

from plpbench import evaluate
from plpbench.datasets import data_file

# mock:echo repeats the prompt, whose first marker is the "1" in "Code 1:",
# so it ties with mock:const:1 and the tie is broken by name.
reports = evaluate.compute("similarity", ["mock:const:1", "mock:const:0", "mock:echo"],
                           data_file("toy_similarity.jsonl"))
for r in reports:
    print(r.model, {k: r.aggregates[k] for k in ("tp", "fp", "fn", "tn")},
          f"{r.resources['wall_time_s'] * 1000:.1f} ms")

board = evaluate.leaderboard(reports)
print(board.to_markdown())
print(board.to_csv())
