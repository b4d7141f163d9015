"""Slow, independent reference implementations used only by the tests."""
import itertools

import numpy as np
import scipy.linalg


def cka_hsic(f, g):
    n = f.shape[0]
    h = np.eye(n) - np.ones((n, n)) / n
    kc = h @ (f @ f.T) @ h
    lc = h @ (g @ g.T) @ h
    return np.sum(kc * lc) / (np.linalg.norm(kc) * np.linalg.norm(lc))


def _u_center(a):
    # U-centering (zero diagonal, corrected row/column means)
    n = a.shape[0]
    a = a.copy()
    np.fill_diagonal(a, 0.0)
    r = a.sum(axis=1) / (n - 2)
    c = a.sum(axis=0) / (n - 2)
    tot = a.sum() / ((n - 1) * (n - 2))
    out = a - r[:, None] - c[None, :] + tot
    np.fill_diagonal(out, 0.0)
    return out


def unbiased_cka(f, g):
    n = f.shape[0]
    k = _u_center(f @ f.T)
    l = _u_center(g @ g.T)
    hxy = np.sum(k * l) / (n * (n - 3))
    hxx = np.sum(k * k) / (n * (n - 3))
    hyy = np.sum(l * l) / (n * (n - 3))
    return hxy / np.sqrt(hxx * hyy)


def svcca(f, g, c):
    def proj(m):
        m = m - m.mean(axis=0)
        u, s, _ = np.linalg.svd(m, full_matrices=False)
        return u[:, :c] * s[:c]

    x, y = proj(f), proj(g)
    x = x - x.mean(axis=0)
    y = y - y.mean(axis=0)
    sxx = x.T @ x
    syy = y.T @ y
    sxy = x.T @ y
    wx = np.linalg.inv(scipy.linalg.sqrtm(sxx).real)
    wy = np.linalg.inv(scipy.linalg.sqrtm(syy).real)
    rho = np.linalg.svd(wx @ sxy @ wy, compute_uv=False)
    return float(np.mean(np.clip(rho[:c], 0, 1)))


def knn_lists(x, k):
    s = x @ x.T
    n = x.shape[0]
    out = []
    for i in range(n):
        others = sorted((j for j in range(n) if j != i), key=lambda j: (-s[i, j], j))
        out.append(others[:k])
    return out


def knn_overlap(f, g, k):
    a, b = knn_lists(f, k), knn_lists(g, k)
    return float(np.mean([len(set(p) & set(q)) / k for p, q in zip(a, b)]))


def levenshtein(a, b):
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def knn_edit(f, g, k):
    a, b = knn_lists(f, k), knn_lists(g, k)
    return float(np.mean([levenshtein(p, q) / k for p, q in zip(a, b)]))


def best_permutation(w):
    """Lexicographically first maximizer among all permutations."""
    n = w.shape[0]
    best, best_p = None, None
    for p in itertools.permutations(range(n)):
        s = w[np.arange(n), list(p)].sum()
        if best is None or s > best:
            best, best_p = s, p
    return np.array(best_p, dtype=np.int64), best
