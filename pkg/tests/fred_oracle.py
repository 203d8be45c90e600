"""Independent per-level metrics for the FRED oracle (own scaling, own formulas)."""

import numpy as np

from fredanon.anonymizer import basic_anonymization
from fredanon.fuzzy import fuse
from tests.oracles import discernibility, dissimilarity_elementwise


def level_table(p, q, fis, max_level):
    truth = np.asarray(p[fis.output.name], dtype=float)
    lo, hi = truth.min(), truth.max()
    rows = []
    for level in range(max_level + 1):
        k = level + 2
        if k > p.m:
            break
        rel = basic_anonymization(p, level)
        est = fuse(fis, rel, q)[:, 0]
        after = dissimilarity_elementwise(((truth - lo) / (hi - lo))[:, None], ((est - lo) / (hi - lo))[:, None])
        sizes = [len(c) for c in rel.partition.classes]
        U = 1.0 / discernibility(sizes, k, p.m)
        rows.append((level, after, U))
    return rows
