"""Reference ELA feature values for crates/ela/tests/data.

Uses pflacco for every feature group. Deviations from pflacco defaults, matching
the Rust implementation:
  * nbc ties between equally distant better points resolve to the first index;
  * the ic tour starts at sample 0 and the epsilon grid is {0} plus 1000
    log-spaced values from 1e-5 to the largest absolute slope of the tour;
  * number_of_peaks uses pflacco's mode-mass rule on a KDE with the
    Silverman bandwidth.
"""

import csv
import os

import numpy as np
import pandas as pd
from pflacco.classical_ela_features import (
    calculate_dispersion,
    calculate_ela_distribution,
    calculate_ela_meta,
    calculate_information_content,
    calculate_nbc,
    calculate_pca,
)
from scipy.stats import gaussian_kde

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "ela", "tests", "data")
N, D = 150, 5


def peaks_silverman(y):
    y = pd.Series(y)
    kernel = gaussian_kde(y, bw_method="silverman")
    low = y.min() - 3 * kernel.covariance_factor() * y.std()
    upp = y.max() + 3 * kernel.covariance_factor() * y.std()
    positions = np.mgrid[low:upp:512j]
    d = kernel(positions)
    n = len(d)
    index = np.arange(1, n - 2)
    min_index = np.array([x for x in index if d[x] < d[x - 1] and d[x] < d[x + 1]])
    min_index = np.insert(min_index, 0, 0)
    min_index = np.append(min_index, n)
    modemass = []
    for idx in range(len(min_index) - 1):
        a = int(min_index[idx])
        b = int(min_index[idx + 1] - 1)
        modemass.append(d[a:b].mean() + abs(positions[a] - positions[b]))
    return int((np.array(modemass) > 0.1).sum())


def max_tour_slope(X, y):
    """Greedy nearest-unvisited tour from sample 0; largest |dy|/dist."""
    n = len(X)
    visited = np.zeros(n, dtype=bool)
    cur = 0
    visited[0] = True
    best = 0.0
    for _ in range(n - 1):
        dist = np.sqrt(((X - X[cur]) ** 2).sum(axis=1))
        dist[visited] = np.inf
        nxt = int(np.argmin(dist))
        best = max(best, abs(y[nxt] - y[cur]) / dist[nxt])
        visited[nxt] = True
        cur = nxt
    return best


def sample_sets():
    rng = np.random.default_rng(20240611)
    sets = []

    def uniform():
        return rng.uniform(-5, 5, size=(N, D))

    X = uniform()
    sets.append(("sphere", X, (X**2).sum(axis=1)))
    X = uniform()
    sets.append(("shifted_ellipsoid", X, ((X - 1.0) ** 2 * 10 ** np.linspace(0, 3, D)).sum(axis=1)))
    X = uniform()
    sets.append(("rastrigin", X, 10 * D + (X**2 - 10 * np.cos(2 * np.pi * X)).sum(axis=1)))
    X = uniform()
    sets.append(("rosenbrock", X, (100 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (1 - X[:, :-1]) ** 2).sum(axis=1)))
    X = uniform()
    sets.append(("linear_plus_noise", X, X @ np.arange(1, D + 1) + rng.normal(0, 0.5, N)))
    X = uniform()
    sets.append(("abs_sum", X, np.abs(X).sum(axis=1)))
    X = uniform()
    sets.append(("schwefel_like", X, -(X * np.sin(np.sqrt(np.abs(X)))).sum(axis=1)))
    X = uniform()
    sets.append(("step", X, np.floor(X + 0.5).__pow__(2).sum(axis=1)))
    # a contracting cloud, like a CMA-ES trajectory
    centre = rng.uniform(-2, 2, D)
    scales = np.repeat(2.0 * 0.85 ** np.arange(N // 8 + 1), 8)[:N]
    X = np.clip(centre + scales[:, None] * rng.normal(size=(N, D)), -5, 5)
    sets.append(("contracting_sphere", X, ((X - 0.5) ** 2).sum(axis=1)))
    X = np.clip(centre + scales[:, None] * rng.normal(size=(N, D)), -5, 5)
    sets.append(("contracting_rastrigin", X, 10 * D + (X**2 - 10 * np.cos(2 * np.pi * X)).sum(axis=1)))
    return sets


def features(X, y):
    Xd = pd.DataFrame(X)
    ys = pd.Series(y)
    out = {}
    distr = calculate_ela_distribution(Xd, ys)
    out["ela_distr.skewness"] = distr["ela_distr.skewness"]
    out["ela_distr.kurtosis"] = distr["ela_distr.kurtosis"]
    out["ela_distr.number_of_peaks"] = peaks_silverman(y)
    out.update(calculate_ela_meta(Xd, ys))
    out.update(calculate_dispersion(Xd, ys))
    eps_max = max_tour_slope(X, y)
    grid = np.insert(np.logspace(-5, np.log10(max(eps_max, 1e-5)), 1000), 0, 0.0)
    out.update(calculate_information_content(Xd, ys, ic_epsilon=grid, ic_nn_start=0))
    out.update(calculate_nbc(Xd, ys, dist_tie_breaker="first"))
    out.update(calculate_pca(Xd, ys))
    return {k: float(v) for k, v in out.items() if not k.endswith("costs_runtime")}


def main():
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "ela_samples.csv"), "w", newline="") as fs, open(
        os.path.join(OUT, "ela_reference.csv"), "w", newline=""
    ) as ff:
        ws = csv.writer(fs)
        wf = csv.writer(ff)
        ws.writerow(["set", *[f"x{i}" for i in range(D)], "y"])
        wf.writerow(["set", "feature", "value"])
        for name, X, y in sample_sets():
            for row, v in zip(X, y):
                ws.writerow([name, *[repr(float(c)) for c in row], repr(float(v))])
            for k, v in features(X, y).items():
                wf.writerow([name, k, repr(v)])


if __name__ == "__main__":
    main()
