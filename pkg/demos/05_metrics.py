"""
Scoring answers
===============

Classification tasks use precision, recall and F1. Free-text answers use
BLEU and ROUGE-L, and code answers also get CodeBLEU.
"""

import math

from plpbench import metrics
from plpbench.tokenizer import CodeSnippet, Language

print(metrics.classification_metrics([1, 1, 0, 0, 1, 0], [1, 0, 1, 0, 1, 1]))
# A model that never says yes scores zero on all three.
print(metrics.classification_metrics([0, 0, 0], [1, 0, 1]))

# Both precisions are perfect here; only the brevity penalty exp(1 - 3/2) bites.
print(metrics.bleu("the cat", "the cat sat", metrics.BleuConfig(max_n=2)), math.exp(-0.5))
print(metrics.rouge_l("use a reduction clause", "add a reduction clause to the loop"))

# Renaming variables lowers the n-gram parts but keeps syntax and data flow.
ref = CodeSnippet("int f(int n) { int s = 0; for (int i = 0; i < n; i++) s += i; return s; }", Language.C)
cand = CodeSnippet("int f(int m) { int t = 0; for (int j = 0; j < m; j++) t += j; return t; }", Language.C)
for name, value in metrics.codebleu_components(cand, ref).items():
    print(f"{name:15} {value:.3f}")
