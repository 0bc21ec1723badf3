//! The six feature groups, each returning raw values (possibly NaN or
//! infinite) in schema order.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::stats::{adjusted_r2, distance, mean, median, ols, pearson, quantile, sd};
use crate::SampleSet;

pub fn distribution(s: &SampleSet) -> Vec<f64> {
    let y = s.y();
    let n = y.len() as f64;
    let m = mean(y);
    let m2: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    let m3: f64 = y.iter().map(|v| (v - m).powi(3)).sum();
    let m4: f64 = y.iter().map(|v| (v - m).powi(4)).sum();
    let skewness = n.sqrt() * m3 / m2.powf(1.5) * (1.0 - 1.0 / n).powf(1.5);
    let kurtosis = n * m4 / (m2 * m2) * (1.0 - 1.0 / n).powi(2) - 3.0;
    vec![skewness, kurtosis, number_of_peaks(y)]
}

/// Modes of a Gaussian KDE (Silverman bandwidth) of `y` on a 512-point grid,
/// counted by the mode-mass rule of the common ELA implementations.
fn number_of_peaks(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let sdev = sd(y);
    if !(sdev > 0.0) {
        return f64::NAN;
    }
    let factor = (n * 3.0 / 4.0).powf(-0.2);
    let h = factor * sdev;
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * factor * sdev;
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * factor * sdev;
    let grid = 512;
    let pos: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let norm = 1.0 / (n * h * (2.0 * PI).sqrt());
    let d: Vec<f64> = pos
        .iter()
        .map(|t| norm * y.iter().map(|v| (-0.5 * ((t - v) / h).powi(2)).exp()).sum::<f64>())
        .collect();
    let mut cuts = vec![0usize];
    cuts.extend((1..grid - 2).filter(|&i| d[i] < d[i - 1] && d[i] < d[i + 1]));
    cuts.push(grid);
    let mut peaks = 0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1] - 1);
        let mass = mean(&d[a..b]) + (pos[a] - pos[b]).abs();
        if mass > 0.1 {
            peaks += 1;
        }
    }
    peaks as f64
}

pub fn meta(s: &SampleSet) -> Vec<f64> {
    let (n, dim) = (s.len(), s.dim());
    let y = s.y();
    let lin = DMatrix::from_fn(n, dim, |i, j| s.x()[i][j]);
    let (intercept, coef, r2) = ols(&lin, y);
    let abs: Vec<f64> = coef.iter().map(|c| c.abs()).collect();
    let cmin = abs.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let pairs = |cols: &DMatrix<f64>| {
        let p = cols.ncols();
        let mut out: Vec<Vec<f64>> = (0..p).map(|j| cols.column(j).iter().copied().collect()).collect();
        for a in 0..p {
            for b in a + 1..p {
                out.push((0..n).map(|i| cols[(i, a)] * cols[(i, b)]).collect());
            }
        }
        DMatrix::from_fn(n, out.len(), |i, j| out[j][i])
    };

    let lin_int = pairs(&lin);
    let (_, _, r2_lin_int) = ols(&lin_int, y);

    let quad = DMatrix::from_fn(n, 2 * dim, |i, j| {
        let v = s.x()[i][j % dim];
        if j < dim {
            v
        } else {
            v * v
        }
    });
    let (_, qcoef, r2_quad) = ols(&quad, y);
    let qabs: Vec<f64> = qcoef[dim..].iter().map(|c| c.abs()).collect();
    let qmin = qabs.iter().copied().fold(f64::INFINITY, f64::min);
    let qmax = qabs.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let quad_int = pairs(&quad);
    let (_, _, r2_quad_int) = ols(&quad_int, y);

    vec![
        adjusted_r2(r2, n, dim),
        intercept,
        cmin,
        cmax,
        cmax / cmin,
        adjusted_r2(r2_lin_int, n, lin_int.ncols()),
        adjusted_r2(r2_quad, n, quad.ncols()),
        qmax / qmin,
        adjusted_r2(r2_quad_int, n, quad_int.ncols()),
    ]
}

pub const DISP_QUANTILES: [f64; 4] = [0.02, 0.05, 0.10, 0.25];

pub fn dispersion(s: &SampleSet) -> Vec<f64> {
    let y = s.y();
    let pair_dists = |rows: &[usize]| {
        let mut out = Vec::new();
        for (k, &i) in rows.iter().enumerate() {
            for &j in &rows[k + 1..] {
                let d = distance(&s.x()[i], &s.x()[j]);
                if d != 0.0 {
                    out.push(d);
                }
            }
        }
        out
    };
    let all: Vec<usize> = (0..s.len()).collect();
    let full = pair_dists(&all);
    let (full_mean, full_median) = (mean(&full), median(&full));
    let mut means = Vec::new();
    let mut medians = Vec::new();
    for q in DISP_QUANTILES {
        let thr = quantile(y, q);
        let best: Vec<usize> = all.iter().copied().filter(|&i| y[i] <= thr).collect();
        let d = pair_dists(&best);
        means.push(mean(&d));
        medians.push(median(&d));
    }
    let mut out = Vec::with_capacity(16);
    out.extend(means.iter().map(|m| m / full_mean));
    out.extend(medians.iter().map(|m| m / full_median));
    out.extend(means.iter().map(|m| m - full_mean));
    out.extend(medians.iter().map(|m| m - full_median));
    out
}

/// Duplicate decision vectors are merged: exact (x, y) repeats are dropped,
/// then rows sharing x move to the end with their mean y.
fn deduplicate(s: &SampleSet) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (x, y) = (s.x(), s.y());
    let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| u == v);
    let keep: Vec<usize> = (0..x.len())
        .filter(|&i| !(0..i).any(|j| same(&x[i], &x[j]) && y[i] == y[j]))
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &keep {
        let dup = keep.iter().any(|&j| j != i && same(&x[i], &x[j]));
        if !dup {
            xs.push(x[i].clone());
            ys.push(y[i]);
        } else if let Some(g) = groups.iter_mut().find(|g| same(&x[g[0]], &x[i])) {
            g.push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    for g in groups {
        xs.push(x[g[0]].clone());
        ys.push(mean(&g.iter().map(|&i| y[i]).collect::<Vec<_>>()));
    }
    (xs, ys)
}

pub const IC_GRID_SIZE: usize = 1000;
pub const IC_SETTLING: f64 = 0.05;
pub const IC_INFO_SENSITIVITY: f64 = 0.5;

pub fn information_content(s: &SampleSet) -> Vec<f64> {
    let (x, y) = deduplicate(s);
    let n = x.len();
    if n < 3 {
        return vec![f64::NAN; 5];
    }
    // greedy nearest-unvisited tour from the first sample
    let mut visited = vec![false; n];
    let mut cur = 0;
    visited[0] = true;
    let mut ratio = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if !visited[j] {
                let d = distance(&x[cur], &x[j]);
                if d < best {
                    best = d;
                    next = j;
                }
            }
        }
        ratio.push((y[next] - y[cur]) / best);
        visited[next] = true;
        cur = next;
    }
    let max_slope = ratio.iter().fold(0.0f64, |a, r| a.max(r.abs())).max(1e-5);
    let (lo, hi) = (-5.0f64, max_slope.log10());
    let mut eps = vec![0.0];
    eps.extend((0..IC_GRID_SIZE).map(|i| {
        let t = if i == IC_GRID_SIZE - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (IC_GRID_SIZE - 1) as f64
        };
        10f64.powf(t)
    }));

    let mut h = Vec::with_capacity(eps.len());
    let mut m = Vec::with_capacity(eps.len());
    let pairs = (ratio.len() - 1) as f64;
    for &e in &eps {
        let psi: Vec<i8> = ratio
            .iter()
            .map(|r| if r.abs() < e { 0 } else if *r > 0.0 { 1 } else { -1 })
            .collect();
        let mut counts = [0usize; 9];
        for w in psi.windows(2) {
            counts[((w[0] + 1) * 3 + (w[1] + 1)) as usize] += 1;
        }
        let entropy: f64 = [1usize, 2, 3, 5, 6, 7]
            .iter()
            .map(|&k| counts[k] as f64 / pairs)
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.ln() / 6f64.ln())
            .sum();
        h.push(entropy);
        let nonzero: Vec<i8> = psi.iter().copied().filter(|v| *v != 0).collect();
        let changes = nonzero.windows(2).filter(|w| w[0] != w[1]).count();
        m.push(changes as f64 / pairs);
    }
    let h_max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let eps_s = eps
        .iter()
        .zip(&h)
        .find(|(_, hv)| **hv < IC_SETTLING)
        .map_or(f64::NAN, |(e, _)| e.log10());
    let at_max: Vec<f64> = eps.iter().zip(&h).filter(|(_, hv)| **hv == h_max).map(|(e, _)| *e).collect();
    let m0 = m[0];
    let eps_ratio = eps
        .iter()
        .zip(&m)
        .filter(|(_, mv)| **mv > IC_INFO_SENSITIVITY * m0)
        .map(|(e, _)| *e)
        .fold(f64::NAN, f64::max)
        .log10();
    vec![h_max, eps_s, median(&at_max), eps_ratio, m0]
}

pub const NBC_FAST_K: f64 = 0.05;

pub fn nearest_better(s: &SampleSet) -> Vec<f64> {
    let (x, y) = (s.x(), s.y());
    let n = x.len();
    let k = ((NBC_FAST_K * n as f64).ceil() as usize).clamp(2, n);
    let dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| distance(&x[i], &x[j])).collect()).collect();
    let mut near = vec![0.0; n];
    let mut nb_dist = vec![f64::NAN; n];
    let mut nb_idx: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
        let hood = &order[..k - 1];
        near[i] = dist[i][hood[0]];
        if let Some(&j) = hood.iter().find(|&&j| y[j] < y[i]) {
            nb_idx[i] = Some(j);
            nb_dist[i] = dist[i][j];
            continue;
        }
        let rest: Vec<usize> = (0..n).filter(|&j| j != i && !hood.contains(&j)).collect();
        let better: Vec<usize> = rest.iter().copied().filter(|&j| y[j] < y[i]).collect();
        let pool = if better.is_empty() {
            rest.iter().copied().filter(|&j| y[j] == y[i]).collect()
        } else {
            better
        };
        // first index among the closest
        if let Some(&j) = pool.iter().min_by(|&&a, &&b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b))) {
            nb_idx[i] = Some(j);
            nb_dist[i] = dist[i][j];
        }
    }
    let counts: Vec<f64> = (0..n)
        .map(|own| nb_idx.iter().filter(|v| **v == Some(own)).count() as f64)
        .collect();
    let nb: Vec<f64> = nb_dist
        .iter()
        .zip(&near)
        .map(|(b, nn)| if b.is_nan() { *nn } else { *b })
        .collect();
    let ratio: Vec<f64> = near.iter().zip(&nb).map(|(a, b)| a / b).filter(|v| !v.is_nan()).collect();
    vec![
        sd(&near) / sd(&nb),
        mean(&near) / mean(&nb),
        pearson(&near, &nb),
        sd(&ratio) / mean(&ratio),
        pearson(&counts, y),
    ]
}

pub const PCA_PROPORTION: f64 = 0.9;

fn covariance(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let p = cols.len();
    let n = cols[0].len();
    let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
    DMatrix::from_fn(p, p, |a, b| {
        (0..n).map(|i| (cols[a][i] - means[a]) * (cols[b][i] - means[b])).sum::<f64>() / (n - 1) as f64
    })
}

fn standardize(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|c| {
            let (m, s) = (mean(c), sd(c));
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect()
}

/// `(components needed for the proportion / p, share of the first component)`.
fn pca_pair(cols: &[Vec<f64>]) -> (f64, f64) {
    let cov = covariance(cols);
    if cov.iter().any(|v| !v.is_finite()) {
        return (f64::NAN, f64::NAN);
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ev.iter().sum();
    let mut acc = 0.0;
    let mut needed = ev.len();
    for (i, v) in ev.iter().enumerate() {
        acc += v;
        if acc / total >= PCA_PROPORTION {
            needed = i + 1;
            break;
        }
    }
    (needed as f64 / ev.len() as f64, ev[0] / total)
}

pub fn pca(s: &SampleSet) -> Vec<f64> {
    let dim = s.dim();
    let xcols: Vec<Vec<f64>> = (0..dim).map(|j| s.x().iter().map(|r| r[j]).collect()).collect();
    let mut init = xcols.clone();
    init.push(s.y().to_vec());
    let (cov_x, pc1_cov_x) = pca_pair(&xcols);
    let (cor_x, pc1_cor_x) = pca_pair(&standardize(&xcols));
    let (cov_init, pc1_cov_init) = pca_pair(&init);
    let (cor_init, pc1_cor_init) = pca_pair(&standardize(&init));
    vec![cov_x, cor_x, cov_init, cor_init, pc1_cov_x, pc1_cor_x, pc1_cov_init, pc1_cor_init]
}
