"""Brute-force reference implementations used to check the library.

Written straight from the metric definitions with plain loops; none of
this imports plpbench.
"""

import math


def ngram_list(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def count_in(gram, grams):
    c = 0
    for g in grams:
        if g == gram:
            c += 1
    return c


def bleu(candidate, references, max_n=4, eps=1e-9):
    c = len(candidate)
    if c == 0:
        return 0.0
    orders = min(max_n, c)
    log_p = 0.0
    for n in range(1, orders + 1):
        cand = ngram_list(candidate, n)
        seen = []
        matched = 0
        for g in cand:
            if g in seen:
                continue
            seen.append(g)
            ref_max = max(count_in(g, ngram_list(r, n)) for r in references)
            matched += min(count_in(g, cand), ref_max)
        p = matched / len(cand)
        log_p += math.log(p if p > 0 else eps) / orders
    best = None
    for r in references:
        d = abs(len(r) - c)
        if best is None or d < best[0] or (d == best[0] and len(r) < best[1]):
            best = (d, len(r))
    r = best[1]
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return min(1.0, bp * math.exp(log_p))


def lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def rouge_l(candidate, reference):
    m = lcs(candidate, reference)
    r = m / len(reference) if reference else 0.0
    p = m / len(candidate) if candidate else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return r, p, f


def cosine(u, v):
    dot = math.fsum(x * y for x, y in zip(u, v))
    nu = math.sqrt(math.fsum(x * x for x in u))
    nv = math.sqrt(math.fsum(y * y for y in v))
    if nu == 0 or nv == 0:
        return 0.0
    return dot / (nu * nv)


def top_k(rows, query, k):
    """Indices of the k best rows; equal scores keep row order."""
    scored = [(cosine(r, query), i) for i, r in enumerate(rows)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [i for _, i in scored[:k]]


def confusion(predictions, labels):
    tp = fp = fn = tn = 0
    for p, y in zip(predictions, labels):
        if p == 1 and y == 1:
            tp += 1
        elif p == 1:
            fp += 1
        elif y == 1:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn
