//! The 24 noiseless functions and their per-instance transformations.
//!
//! Composition order follows the reference suite: variable transforms are
//! applied from the outermost (shift by `x_opt`) inwards, objective transforms
//! from the raw value outwards, then the `f_opt` shift and boundary penalty.

use std::f64::consts::PI;

use crate::legacy;

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub(crate) enum Landscape {
    Sphere,
    Ellipsoid,
    Rastrigin,
    BuecheRastrigin,
    LinearSlope,
    AttractiveSector { m: Matrix },
    StepEllipsoid { rot1: Matrix, rot2: Matrix },
    Rosenbrock { factor: f64 },
    RosenbrockRotated { m: Matrix },
    EllipsoidRotated { r: Matrix },
    Discus { r: Matrix },
    BentCigar { r: Matrix },
    SharpRidge { m: Matrix },
    DifferentPowers { r: Matrix },
    RastriginRotated { r: Matrix, m: Matrix },
    Weierstrass { r: Matrix, m: Matrix },
    Schaffers { r: Matrix, m: Matrix },
    GriewankRosenbrock { m: Matrix },
    Schwefel { diag: Vec<f64> },
    Gallagher(Box<GallagherPeaks>),
    Katsuura { m: Matrix },
    LunacekBiRastrigin { rot1: Matrix, rot2: Matrix },
}

#[derive(Debug, Clone)]
pub(crate) struct GallagherPeaks {
    rotation: Matrix,
    /// `dim x peaks`, already rotated
    local: Matrix,
    /// `peaks x dim`
    scales: Matrix,
    heights: Vec<f64>,
}

/// Built landscape plus the optimum location in the original search space.
pub(crate) struct Built {
    pub landscape: Landscape,
    pub x_opt: Vec<f64>,
}

fn matvec(m: &Matrix, x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn transpose_matvec(m: &Matrix, x: &[f64]) -> Vec<f64> {
    let dim = x.len();
    (0..dim)
        .map(|j| (0..dim).map(|i| m[i][j] * x[i]).sum())
        .collect()
}

fn exponent(i: usize, dim: usize) -> f64 {
    i as f64 / (dim as f64 - 1.0)
}

/// `rot1 * diag(base^(k/(D-1))) * rot2`
fn conditioned(rot1: &Matrix, base: f64, rot2: &Matrix) -> Matrix {
    let dim = rot1.len();
    let mut m = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                m[i][j] += rot1[i][k] * base.powf(exponent(k, dim)) * rot2[k][j];
            }
        }
    }
    m
}

fn shift(x: &[f64], by: &[f64]) -> Vec<f64> {
    x.iter().zip(by).map(|(a, b)| a - b).collect()
}

fn oscillate(x: &mut [f64]) {
    const ALPHA: f64 = 0.1;
    for v in x.iter_mut() {
        if *v > 0.0 {
            let t = v.ln() / ALPHA;
            *v = (t + 0.49 * (t.sin() + (0.79 * t).sin())).exp().powf(ALPHA);
        } else if *v < 0.0 {
            let t = (-*v).ln() / ALPHA;
            *v = -(t + 0.49 * ((0.55 * t).sin() + (0.31 * t).sin()))
                .exp()
                .powf(ALPHA);
        }
    }
}

fn oscillate_value(y: f64) -> f64 {
    let mut v = [y];
    oscillate(&mut v);
    v[0]
}

fn asymmetric(x: &mut [f64], beta: f64) {
    let dim = x.len();
    for (i, v) in x.iter_mut().enumerate() {
        if *v > 0.0 {
            let e = 1.0 + (beta * i as f64) / (dim as f64 - 1.0) * v.sqrt();
            *v = v.powf(e);
        }
    }
}

fn penalty(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| {
            let t = v.abs() - 5.0;
            if t > 0.0 {
                t * t
            } else {
                0.0
            }
        })
        .sum()
}

fn round(v: f64) -> f64 {
    (v + 0.5).floor()
}

fn sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn ellipsoid(z: &[f64]) -> f64 {
    let dim = z.len();
    let mut r = z[0] * z[0];
    for (i, v) in z.iter().enumerate().skip(1) {
        r += 1.0e6f64.powf(exponent(i, dim)) * v * v;
    }
    r
}

fn rastrigin(z: &[f64]) -> f64 {
    let (mut s1, mut s2) = (0.0, 0.0);
    for v in z {
        s1 += (2.0 * PI * v).cos();
        s2 += v * v;
    }
    10.0 * (z.len() as f64 - s1) + s2
}

fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2)
        .map(|w| {
            let s1 = w[0] * w[0] - w[1];
            let s2 = w[0] - 1.0;
            100.0 * s1 * s1 + s2 * s2
        })
        .sum()
}

const WEIERSTRASS_TERMS: usize = 12;

fn weierstrass(z: &[f64]) -> f64 {
    let mut f0 = 0.0;
    let ak: Vec<f64> = (0..WEIERSTRASS_TERMS).map(|k| 0.5f64.powi(k as i32)).collect();
    let bk: Vec<f64> = (0..WEIERSTRASS_TERMS).map(|k| 3f64.powi(k as i32)).collect();
    for k in 0..WEIERSTRASS_TERMS {
        f0 += ak[k] * (2.0 * PI * bk[k] * 0.5).cos();
    }
    let mut r = 0.0;
    for v in z {
        for k in 0..WEIERSTRASS_TERMS {
            r += (2.0 * PI * (v + 0.5) * bk[k]).cos() * ak[k];
        }
    }
    10.0 * (r / z.len() as f64 - f0).powi(3)
}

fn schaffers(z: &[f64]) -> f64 {
    let mut r = 0.0;
    for w in z.windows(2) {
        let t = w[0] * w[0] + w[1] * w[1];
        if t.is_infinite() {
            return t;
        }
        r += t.powf(0.25) * (1.0 + (50.0 * t.powf(0.1)).sin().powi(2));
    }
    (r / (z.len() as f64 - 1.0)).powi(2)
}

impl Landscape {
    /// Builds the landscape for `function` using the legacy seed `rseed`.
    pub(crate) fn build(function: usize, dim: usize, rseed: i64) -> Built {
        let sqrt10 = 10f64.sqrt();
        match function {
            1 => plain(Landscape::Sphere, legacy::xopt(rseed, dim)),
            2 => plain(Landscape::Ellipsoid, legacy::xopt(rseed, dim)),
            3 => plain(Landscape::Rastrigin, legacy::xopt(rseed, dim)),
            4 => {
                let mut x_opt = legacy::xopt(rseed, dim);
                for v in x_opt.iter_mut().step_by(2) {
                    *v = v.abs();
                }
                plain(Landscape::BuecheRastrigin, x_opt)
            }
            5 => {
                let x_opt = legacy::xopt(rseed, dim)
                    .into_iter()
                    .map(|v| if v < 0.0 { -5.0 } else { 5.0 })
                    .collect();
                plain(Landscape::LinearSlope, x_opt)
            }
            6 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let m = conditioned(&rot1, sqrt10, &rot2);
                plain(Landscape::AttractiveSector { m }, legacy::xopt(rseed, dim))
            }
            7 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                plain(Landscape::StepEllipsoid { rot1, rot2 }, legacy::xopt(rseed, dim))
            }
            8 => {
                let factor = 1f64.max((dim as f64).sqrt() / 8.0);
                let x_opt = legacy::xopt(rseed, dim)
                    .into_iter()
                    .map(|v| v * 0.75)
                    .collect();
                plain(Landscape::Rosenbrock { factor }, x_opt)
            }
            9 => {
                let factor = 1f64.max((dim as f64).sqrt() / 8.0);
                let rot = legacy::rotation(rseed, dim);
                let m: Matrix = rot
                    .iter()
                    .map(|row| row.iter().map(|v| factor * v).collect())
                    .collect();
                let x_opt = transpose_matvec(&rot, &vec![0.5 / factor; dim]);
                plain(Landscape::RosenbrockRotated { m }, x_opt)
            }
            10 => {
                let r = legacy::rotation(rseed + 1_000_000, dim);
                plain(Landscape::EllipsoidRotated { r }, legacy::xopt(rseed, dim))
            }
            11 => {
                let r = legacy::rotation(rseed + 1_000_000, dim);
                plain(Landscape::Discus { r }, legacy::xopt(rseed, dim))
            }
            12 => {
                let r = legacy::rotation(rseed + 1_000_000, dim);
                plain(Landscape::BentCigar { r }, legacy::xopt(rseed + 1_000_000, dim))
            }
            13 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let m = conditioned(&rot1, sqrt10, &rot2);
                plain(Landscape::SharpRidge { m }, legacy::xopt(rseed, dim))
            }
            14 => {
                let r = legacy::rotation(rseed + 1_000_000, dim);
                plain(Landscape::DifferentPowers { r }, legacy::xopt(rseed, dim))
            }
            15 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let m = conditioned(&rot1, sqrt10, &rot2);
                plain(Landscape::RastriginRotated { r: rot1, m }, legacy::xopt(rseed, dim))
            }
            16 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let m = conditioned(&rot1, 1.0 / 100f64.sqrt(), &rot2);
                plain(Landscape::Weierstrass { r: rot1, m }, legacy::xopt(rseed, dim))
            }
            17 | 18 => {
                let condition: f64 = if function == 17 { 10.0 } else { 1000.0 };
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let m: Matrix = (0..dim)
                    .map(|i| {
                        let c = condition.sqrt().powf(exponent(i, dim));
                        rot2[i].iter().map(|v| v * c).collect()
                    })
                    .collect();
                plain(Landscape::Schaffers { r: rot1, m }, legacy::xopt(rseed, dim))
            }
            19 => {
                let scale = 1f64.max((dim as f64).sqrt() / 8.0);
                let rot = legacy::rotation(rseed, dim);
                let m: Matrix = rot
                    .iter()
                    .map(|row| row.iter().map(|v| scale * v).collect())
                    .collect();
                let x_opt = transpose_matvec(&rot, &vec![0.5 / scale; dim]);
                plain(Landscape::GriewankRosenbrock { m }, x_opt)
            }
            20 => {
                let u = legacy::uniform(dim, rseed);
                let x_opt = u
                    .iter()
                    .map(|&v| {
                        let x = 0.5 * 4.209_687_463_7;
                        if v - 0.5 < 0.0 {
                            -x
                        } else {
                            x
                        }
                    })
                    .collect();
                let diag = (0..dim).map(|i| sqrt10.powf(exponent(i, dim))).collect();
                plain(Landscape::Schwefel { diag }, x_opt)
            }
            21 => gallagher(dim, rseed, 101),
            22 => gallagher(dim, rseed, 21),
            23 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let m = conditioned(&rot1, 100f64.sqrt(), &rot2);
                plain(Landscape::Katsuura { m }, legacy::xopt(rseed, dim))
            }
            24 => {
                let rot1 = legacy::rotation(rseed + 1_000_000, dim);
                let rot2 = legacy::rotation(rseed, dim);
                let x_opt = legacy::gauss(dim, rseed)
                    .into_iter()
                    .map(|g| if g < 0.0 { -1.25 } else { 1.25 })
                    .collect();
                plain(Landscape::LunacekBiRastrigin { rot1, rot2 }, x_opt)
            }
            _ => unreachable!("function id validated by caller"),
        }
    }

    /// Raw objective including objective transforms and penalties, without `f_opt`.
    pub(crate) fn value(&self, x: &[f64], x_opt: &[f64]) -> f64 {
        let dim = x.len();
        match self {
            Landscape::Sphere => sphere(&shift(x, x_opt)),
            Landscape::Ellipsoid => {
                let mut z = shift(x, x_opt);
                oscillate(&mut z);
                ellipsoid(&z)
            }
            Landscape::Rastrigin => {
                let mut z = shift(x, x_opt);
                oscillate(&mut z);
                asymmetric(&mut z, 0.2);
                for (i, v) in z.iter_mut().enumerate() {
                    *v *= 10f64.powf(0.5 * exponent(i, dim));
                }
                rastrigin(&z)
            }
            Landscape::BuecheRastrigin => {
                let mut z = shift(x, x_opt);
                oscillate(&mut z);
                for (i, v) in z.iter_mut().enumerate() {
                    let mut factor = 10f64.sqrt().powf(exponent(i, dim));
                    if *v > 0.0 && i % 2 == 0 {
                        factor *= 10.0;
                    }
                    *v *= factor;
                }
                rastrigin(&z) + 100.0 * penalty(x)
            }
            Landscape::LinearSlope => {
                let mut r = 0.0;
                for i in 0..dim {
                    let base = 100f64.sqrt().powf(exponent(i, dim));
                    let s = if x_opt[i] > 0.0 { base } else { -base };
                    if x[i] * x_opt[i] < 25.0 {
                        r += 5.0 * s.abs() - s * x[i];
                    } else {
                        r += 5.0 * s.abs() - s * x_opt[i];
                    }
                }
                r
            }
            Landscape::AttractiveSector { m } => {
                let z = matvec(m, &shift(x, x_opt));
                let raw: f64 = z
                    .iter()
                    .zip(x_opt)
                    .map(|(v, o)| if o * v > 0.0 { 1e4 * v * v } else { v * v })
                    .sum();
                oscillate_value(raw).powf(0.9)
            }
            Landscape::StepEllipsoid { rot1, rot2 } => {
                const CONDITION: f64 = 100.0;
                let d = shift(x, x_opt);
                let mut z: Vec<f64> = (0..dim)
                    .map(|i| {
                        let c = (CONDITION / 10.0).powf(exponent(i, dim)).sqrt();
                        (0..dim).map(|j| c * rot2[i][j] * d[j]).sum()
                    })
                    .collect();
                let x1 = z[0];
                for v in z.iter_mut() {
                    *v = if v.abs() > 0.5 {
                        round(*v)
                    } else {
                        round(10.0 * *v) / 10.0
                    };
                }
                let zz = matvec(rot1, &z);
                let r: f64 = zz
                    .iter()
                    .enumerate()
                    .map(|(i, v)| CONDITION.powf(exponent(i, dim)) * v * v)
                    .sum();
                0.1 * (x1.abs() / 1e4).max(r) + penalty(x)
            }
            Landscape::Rosenbrock { factor } => {
                let z: Vec<f64> = x
                    .iter()
                    .zip(x_opt)
                    .map(|(v, o)| factor * (v - o) + 1.0)
                    .collect();
                rosenbrock(&z)
            }
            Landscape::RosenbrockRotated { m } => {
                let z: Vec<f64> = matvec(m, x).into_iter().map(|v| v + 0.5).collect();
                rosenbrock(&z)
            }
            Landscape::EllipsoidRotated { r } => {
                let mut z = matvec(r, &shift(x, x_opt));
                oscillate(&mut z);
                ellipsoid(&z)
            }
            Landscape::Discus { r } => {
                let mut z = matvec(r, &shift(x, x_opt));
                oscillate(&mut z);
                1e6 * z[0] * z[0] + z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            Landscape::BentCigar { r } => {
                let mut z = matvec(r, &shift(x, x_opt));
                asymmetric(&mut z, 0.5);
                let z = matvec(r, &z);
                z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            Landscape::SharpRidge { m } => {
                let z = matvec(m, &shift(x, x_opt));
                let rest: f64 = z[1..].iter().map(|v| v * v).sum();
                100.0 * rest.sqrt() + z[0] * z[0]
            }
            Landscape::DifferentPowers { r } => {
                let z = matvec(r, &shift(x, x_opt));
                z.iter()
                    .enumerate()
                    .map(|(i, v)| v.abs().powf(2.0 + 4.0 * i as f64 / (dim as f64 - 1.0)))
                    .sum::<f64>()
                    .sqrt()
            }
            Landscape::RastriginRotated { r, m } => {
                let mut z = matvec(r, &shift(x, x_opt));
                oscillate(&mut z);
                asymmetric(&mut z, 0.2);
                rastrigin(&matvec(m, &z))
            }
            Landscape::Weierstrass { r, m } => {
                let mut z = matvec(r, &shift(x, x_opt));
                oscillate(&mut z);
                weierstrass(&matvec(m, &z)) + 10.0 / dim as f64 * penalty(x)
            }
            Landscape::Schaffers { r, m } => {
                let mut z = matvec(r, &shift(x, x_opt));
                asymmetric(&mut z, 0.5);
                schaffers(&matvec(m, &z)) + 10.0 * penalty(x)
            }
            Landscape::GriewankRosenbrock { m } => {
                let z: Vec<f64> = matvec(m, x).into_iter().map(|v| v + 0.5).collect();
                let mut r = 0.0;
                for w in z.windows(2) {
                    let c1 = w[0] * w[0] - w[1];
                    let c2 = 1.0 - w[0];
                    let t = 100.0 * c1 * c1 + c2 * c2;
                    r += t / 4000.0 - t.cos();
                }
                10.0 + 10.0 * r / (dim as f64 - 1.0)
            }
            Landscape::Schwefel { diag } => {
                // x_hat: sign flip so the optimum sits in the positive orthant
                let mut z: Vec<f64> = x
                    .iter()
                    .zip(x_opt)
                    .map(|(v, o)| if *o < 0.0 { -2.0 * v } else { 2.0 * v })
                    .collect();
                for i in (1..dim).rev() {
                    z[i] += 0.25 * (z[i - 1] - 2.0 * x_opt[i - 1].abs());
                }
                for i in 0..dim {
                    let two_opt = 2.0 * x_opt[i].abs();
                    z[i] = 100.0 * (diag[i] * (z[i] - two_opt) + two_opt);
                }
                let mut pen = 0.0;
                let mut sum = 0.0;
                for v in &z {
                    let t = v.abs() - 500.0;
                    if t > 0.0 {
                        pen += t * t;
                    }
                    sum += v * v.abs().sqrt().sin();
                }
                0.01 * (pen + 418.982_887_272_433_9 - sum / dim as f64)
            }
            Landscape::Gallagher(peaks) => peaks.value(x) + penalty(x),
            Landscape::Katsuura { m } => {
                let z = matvec(m, &shift(x, x_opt));
                let mut r = 1.0;
                for (i, v) in z.iter().enumerate() {
                    let mut t = 0.0;
                    for j in 1..33 {
                        let p = 2f64.powi(j);
                        t += (p * v - round(p * v)).abs() / p;
                    }
                    let t = 1.0 + (i as f64 + 1.0) * t;
                    r *= t.powf(10.0 / (dim as f64).powf(1.2));
                }
                10.0 / dim as f64 / dim as f64 * (r - 1.0) + penalty(x)
            }
            Landscape::LunacekBiRastrigin { rot1, rot2 } => {
                const MU0: f64 = 2.5;
                const D: f64 = 1.0;
                let n = dim as f64;
                let s = 1.0 - 0.5 / ((n + 20.0).sqrt() - 4.1);
                let mu1 = -((MU0 * MU0 - D) / s).sqrt();
                let x_hat: Vec<f64> = x
                    .iter()
                    .zip(x_opt)
                    .map(|(v, o)| if *o < 0.0 { -2.0 * v } else { 2.0 * v })
                    .collect();
                let tmp: Vec<f64> = (0..dim)
                    .map(|i| {
                        let c = 100f64.sqrt().powf(exponent(i, dim));
                        (0..dim).map(|j| c * rot2[i][j] * (x_hat[j] - MU0)).sum()
                    })
                    .collect();
                let z = matvec(rot1, &tmp);
                let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
                for i in 0..dim {
                    s1 += (x_hat[i] - MU0).powi(2);
                    s2 += (x_hat[i] - mu1).powi(2);
                    s3 += (2.0 * PI * z[i]).cos();
                }
                s1.min(D * n + s * s2) + 10.0 * (n - s3) + 1e4 * penalty(x)
            }
        }
    }
}

fn plain(landscape: Landscape, x_opt: Vec<f64>) -> Built {
    Built { landscape, x_opt }
}

fn sort_permutation(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

fn gallagher(dim: usize, rseed: i64, n_peaks: usize) -> Built {
    const MAX_CONDITION: f64 = 1000.0;
    let (first_condition, b, c) = if n_peaks == 101 {
        (MAX_CONDITION.sqrt(), 10.0, 5.0)
    } else {
        (MAX_CONDITION, 9.8, 4.9)
    };
    let rotation = legacy::rotation(rseed, dim);

    let order = sort_permutation(&legacy::uniform(n_peaks - 1, rseed));
    let mut conditions = vec![first_condition];
    let mut heights = vec![10.0];
    for i in 1..n_peaks {
        conditions.push(MAX_CONDITION.powf(order[i - 1] as f64 / (n_peaks as f64 - 2.0)));
        heights.push((i as f64 - 1.0) / (n_peaks as f64 - 2.0) * (9.1 - 1.1) + 1.1);
    }

    let scales: Matrix = (0..n_peaks)
        .map(|i| {
            let perm = sort_permutation(&legacy::uniform(dim, rseed + 1000 * i as i64));
            perm.iter()
                .map(|&p| conditions[i].powf(p as f64 / (dim as f64 - 1.0) - 0.5))
                .collect()
        })
        .collect();

    let u = legacy::uniform(dim * n_peaks, rseed);
    let mut local = vec![vec![0.0; n_peaks]; dim];
    let mut x_opt = vec![0.0; dim];
    for i in 0..dim {
        x_opt[i] = 0.8 * (b * u[i] - c);
        for j in 0..n_peaks {
            let mut v = 0.0;
            for k in 0..dim {
                v += rotation[i][k] * (b * u[j * dim + k] - c);
            }
            if j == 0 {
                v *= 0.8;
            }
            local[i][j] = v;
        }
    }
    Built {
        landscape: Landscape::Gallagher(Box::new(GallagherPeaks {
            rotation,
            local,
            scales,
            heights,
        })),
        x_opt,
    }
}

impl GallagherPeaks {
    fn value(&self, x: &[f64]) -> f64 {
        let dim = x.len();
        let fac = -0.5 / dim as f64;
        let tx = matvec(&self.rotation, x);
        let mut f: f64 = 0.0;
        for (i, height) in self.heights.iter().enumerate() {
            let mut t2 = 0.0;
            for j in 0..dim {
                let t = tx[j] - self.local[j][i];
                t2 += self.scales[i][j] * t * t;
            }
            f = f.max(height * (fac * t2).exp());
        }
        let f = 10.0 - f;
        let v = oscillate_value(f);
        v * v
    }
}
