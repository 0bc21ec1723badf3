//! Deterministic instance generator compatible with the legacy BBOB 2009 code.
//!
//! Everything here reproduces the reference C routines bit for bit: the
//! Park-Miller uniform generator with a 32-slot shuffle table, Box-Muller
//! normals, Gram-Schmidt rotations and the rounded optimum location/value.

use std::f64::consts::PI;

/// `n` uniform numbers in (0, 1] from the legacy shuffled Park-Miller stream.
pub fn uniform(n: usize, seed: i64) -> Vec<f64> {
    let mut seed = seed.abs().max(1);
    let mut table = [0i64; 32];
    for i in (0..40).rev() {
        seed = park_miller(seed);
        if i < 32 {
            table[i] = seed;
        }
    }
    let mut current = table[0];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        seed = park_miller(seed);
        let slot = (current as f64 / 67_108_865.0).floor() as usize;
        current = table[slot];
        table[slot] = seed;
        let mut r = current as f64 / 2.147_483_647e9;
        if r == 0.0 {
            r = 1e-99;
        }
        out.push(r);
    }
    out
}

fn park_miller(seed: i64) -> i64 {
    let tmp = (seed as f64 / 127_773.0).floor() as i64;
    let mut next = 16_807 * (seed - tmp * 127_773) - 2_836 * tmp;
    if next < 0 {
        next += 2_147_483_647;
    }
    next
}

/// `n` standard normals via Box-Muller over `2n` legacy uniforms.
pub fn gauss(n: usize, seed: i64) -> Vec<f64> {
    let u = uniform(2 * n, seed);
    (0..n)
        .map(|i| {
            let g = (-2.0 * u[i].ln()).sqrt() * (2.0 * PI * u[n + i]).cos();
            if g == 0.0 {
                1e-99
            } else {
                g
            }
        })
        .collect()
}

/// Row-major `dim x dim` orthogonal matrix, Gram-Schmidt over columns of a
/// column-major gaussian fill.
pub fn rotation(seed: i64, dim: usize) -> Vec<Vec<f64>> {
    let g = gauss(dim * dim, seed);
    let mut b = vec![vec![0.0; dim]; dim];
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = g[j * dim + i];
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let mut prod = 0.0;
            for row in b.iter() {
                prod += row[i] * row[j];
            }
            for row in b.iter_mut() {
                row[i] -= prod * row[j];
            }
        }
        let mut prod = 0.0;
        for row in b.iter() {
            prod += row[i] * row[i];
        }
        let norm = prod.sqrt();
        for row in b.iter_mut() {
            row[i] /= norm;
        }
    }
    b
}

/// Optimum location on the 1e-4 grid inside [-4, 4]; exact zeros are nudged.
pub fn xopt(seed: i64, dim: usize) -> Vec<f64> {
    uniform(dim, seed)
        .into_iter()
        .map(|u| {
            let x = 8.0 * (1e4 * u).floor() / 1e4 - 4.0;
            if x == 0.0 {
                -1e-5
            } else {
                x
            }
        })
        .collect()
}

/// Optimal value in [-1000, 1000] rounded to two decimals.
pub fn fopt(function: usize, instance: usize) -> f64 {
    let rseed: i64 = match function {
        4 => 3,
        18 => 17,
        f => f as i64,
    };
    let rrseed = rseed + 10_000 * instance as i64;
    let g1 = gauss(1, rrseed)[0];
    let g2 = gauss(1, rrseed + 1)[0];
    let v = (100.0 * 100.0 * g1 / g2 + 0.5).floor() / 100.0;
    v.clamp(-1000.0, 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_stays_in_unit_interval() {
        for seed in [1, 7, 10_001, 1_000_021] {
            for u in uniform(500, seed) {
                assert!(u > 0.0 && u <= 1.0);
            }
        }
    }

    #[test]
    fn rotation_is_orthonormal() {
        for dim in [2, 5, 10] {
            let r = rotation(10_005, dim);
            for i in 0..dim {
                for j in 0..dim {
                    let dot: f64 = (0..dim).map(|k| r[k][i] * r[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12, "{dim} {i} {j} {dot}");
                }
            }
        }
    }

    #[test]
    fn xopt_on_grid_inside_box() {
        for x in xopt(10_001, 40) {
            assert!((-4.0..=4.0).contains(&x));
        }
    }

    #[test]
    fn fopt_known_values() {
        // first instance values of the reference suite
        assert_eq!(fopt(1, 1), 79.48);
        assert_eq!(fopt(2, 1), -209.88);
        assert_eq!(fopt(4, 1), fopt(3, 1));
        assert_eq!(fopt(18, 1), fopt(17, 1));
    }
}
