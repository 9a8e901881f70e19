"""Independent reference implementations of the text-overlap metrics.

Deliberately written with different code structure than the library (explicit
loops, list-based n-grams, full DP table) so that agreement is evidence of
correctness rather than shared bugs. Pinned definitions: templates split on
whitespace after isolating "{}" placeholders; BLEU uses add-one smoothing on
zero higher-order precisions, skips orders beyond the candidate length, and
zeroes out on zero unigram overlap; ROUGE-1/L are F1 scores.
"""

import math


def oracle_tokens(text):
    spaced = ""
    i = 0
    while i < len(text):
        if text[i : i + 2] == "{}":
            spaced += " {} "
            i += 2
        else:
            spaced += text[i]
            i += 1
    return [t for t in spaced.split() if t]


def _ngrams(tokens, n):
    out = []
    for i in range(len(tokens) - n + 1):
        out.append(tuple(tokens[i : i + n]))
    return out


def oracle_bleu(candidate, reference, max_n):
    cand = oracle_tokens(candidate)
    ref = oracle_tokens(reference)
    if len(cand) == 0:
        return 0.0
    orders = max_n if max_n <= len(cand) else len(cand)
    logs = []
    for n in range(1, orders + 1):
        cand_grams = _ngrams(cand, n)
        ref_grams = _ngrams(ref, n)
        matched = 0
        used = [False] * len(ref_grams)
        for gram in cand_grams:
            for j, other in enumerate(ref_grams):
                if not used[j] and other == gram:
                    used[j] = True
                    matched += 1
                    break
        total = len(cand_grams)
        if n == 1:
            if matched == 0:
                return 0.0
            logs.append(math.log(matched / total))
        elif matched == 0:
            logs.append(math.log((matched + 1) / (total + 1)))
        else:
            logs.append(math.log(matched / total))
    mean = sum(logs) / len(logs)
    if len(cand) >= len(ref):
        bp = 1.0
    else:
        bp = math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(mean)


def oracle_rouge_1(candidate, reference):
    cand = oracle_tokens(candidate)
    ref = oracle_tokens(reference)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    remaining = list(ref)
    overlap = 0
    for token in cand:
        if token in remaining:
            remaining.remove(token)
            overlap += 1
    precision = overlap / len(cand)
    recall = overlap / len(ref)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def oracle_rouge_l(candidate, reference):
    cand = oracle_tokens(candidate)
    ref = oracle_tokens(reference)
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    table = [[0] * (len(ref) + 1) for _ in range(len(cand) + 1)]
    for i in range(1, len(cand) + 1):
        for j in range(1, len(ref) + 1):
            if cand[i - 1] == ref[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[len(cand)][len(ref)]
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
