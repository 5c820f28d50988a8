#!/usr/bin/env python3
"""Freezes scipy/statsmodels/sklearn reference values used by the C++ tests.

  ttest_goldens.json   20 paired samples with scipy.stats.ttest_rel
  chi2_goldens.json    contingency tables with scipy chi2_contingency
  bh_goldens.json      p-vectors with statsmodels fdr_bh
  tfidf_golden.json    8 tokenized docs, cosine to the TF-IDF centroid
"""

import json
import pathlib

import numpy as np
from scipy import stats
from scipy.stats.contingency import association
from sklearn.feature_extraction.text import TfidfVectorizer
from statsmodels.stats.multitest import multipletests

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def dump(name, obj):
    (OUT / name).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def ttests():
    rng = np.random.default_rng(20240611)
    cases = [([2.0, 3.0, 4.0], [1.0, 1.0, 1.0])]  # d = [1, 2, 3]
    cases.append(([1.0, 2.0, 3.0, 4.0], [1.5, 1.5, 3.5, 3.0]))
    cases.append(([11.47, 12.5, 10.9, 13.2, 12.0], [16.91, 17.6, 15.2, 18.0, 16.4]))
    while len(cases) < 20:
        n = int(rng.integers(3, 40))
        x = rng.normal(10.0, 3.0, n)
        shift = rng.normal(0.0, 1.0)
        y = x + shift + rng.normal(0.0, rng.uniform(0.3, 4.0), n)
        cases.append(([round(float(v), 4) for v in x], [round(float(v), 4) for v in y]))
    out = []
    for x, y in cases:
        r = stats.ttest_rel(x, y)
        out.append({"x": x, "y": y, "t": float(r.statistic), "p": float(r.pvalue), "df": len(x) - 1,
                    "mean_diff": float(np.mean(np.array(x) - np.array(y)))})
    dump("ttest_goldens.json", out)


def chi2():
    rng = np.random.default_rng(7)
    tables = [
        [[10, 0], [0, 10]],
        [[5, 5], [5, 5]],
        [[19, 7, 25, 0, 0], [22, 0, 29, 0, 0]],
        [[19, 7, 25, 0, 0], [23, 7, 21, 0, 0]],
        [[12, 5, 30, 3, 0], [4, 9, 33, 2, 2]],
        [[3, 8, 1], [9, 2, 6]],
    ]
    while len(tables) < 12:
        tables.append(rng.integers(1, 40, size=(2, 5)).tolist())
    out = []
    for t in tables:
        arr = np.array(t)
        arr = arr[:, arr.sum(axis=0) > 0]
        c2, p, dof, _ = stats.chi2_contingency(arr, correction=False)
        v = float(association(arr, method="cramer")) if c2 > 0 else 0.0
        out.append({"table": t, "chi2": float(c2), "p": float(p), "dof": int(dof), "v": v})
    dump("chi2_goldens.json", out)


def bh():
    rng = np.random.default_rng(3)
    vecs = [[0.01, 0.04, 0.03, 0.005], [0.2], [0.5, 0.5, 0.5]]
    for _ in range(12):
        vecs.append([float(v) for v in rng.uniform(0, 0.2, int(rng.integers(1, 30)))])
    out = [{"p": v, "adj": multipletests(v, method="fdr_bh")[1].tolist()} for v in vecs]
    dump("bh_goldens.json", out)


def tfidf():
    docs = [
        "take ibuprofen with food to reduce stomach upset",
        "ibuprofen reduces pain and inflammation",
        "call emergency services if chest pain spreads to the arm",
        "rest and fluids help a common cold",
        "a common cold usually lasts a week",
        "stroke signs include facial drooping and arm weakness",
        "drink more water in hot weather",
        "pain pain pain",
    ]
    tokens = [d.split() for d in docs]
    vec = TfidfVectorizer(analyzer=lambda d: d, norm=None, smooth_idf=False, sublinear_tf=False)
    m = vec.fit_transform(tokens).toarray()
    centroid = m.mean(axis=0)
    sims = (m @ centroid) / (np.linalg.norm(m, axis=1) * np.linalg.norm(centroid))
    dump("tfidf_golden.json", {"docs": tokens, "similarity": sims.tolist()})


if __name__ == "__main__":
    ttests()
    chi2()
    bh()
    tfidf()
