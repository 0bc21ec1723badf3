use nalgebra::{DMatrix, DVector};

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (denominator n - 1).
pub fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    let frac = pos - lo as f64;
    s[lo] + frac * (s[hi] - s[lo])
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ordinary least squares with intercept. Returns `(intercept, coefficients,
/// r²)`; rank-deficient designs get the minimum-norm solution.
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> (f64, Vec<f64>, f64) {
    let (n, p) = x.shape();
    let y_mean = mean(y);
    let col_means: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - col_means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = xc.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let smax = svd.singular_values.max();
    let cutoff = smax * f64::EPSILON * n.max(p) as f64;
    let uty = u.transpose() * &yc;
    let scaled = DVector::from_iterator(
        uty.len(),
        uty.iter()
            .zip(svd.singular_values.iter())
            .map(|(c, s)| if *s > cutoff { c / s } else { 0.0 }),
    );
    let beta = vt.transpose() * scaled;
    let intercept = y_mean - beta.iter().zip(&col_means).map(|(b, m)| b * m).sum::<f64>();
    let fitted = &xc * &beta;
    let ss_res: f64 = fitted.iter().zip(yc.iter()).map(|(f, t)| (t - f) * (t - f)).sum();
    let ss_tot: f64 = yc.iter().map(|t| t * t).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { f64::NAN };
    (intercept, beta.as_slice().to_vec(), r2)
}

pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> f64 {
    if n <= p + 1 {
        return f64::NAN;
    }
    1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile(&v, 0.1) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_plane() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 2.0]);
        let y: Vec<f64> = (0..4).map(|i| 1.0 + 2.0 * x[(i, 0)] - 3.0 * x[(i, 1)]).collect();
        let (b0, b, r2) = ols(&x, &y);
        assert!((b0 - 1.0).abs() < 1e-12);
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] + 3.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_of_line() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0, 1.0], &[2.0, 4.0, 6.0]).is_nan());
    }
}
