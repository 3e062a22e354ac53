//! Measures of the unit ball and a Gauss-Legendre rule for smooth radial integrands.

use std::f64::consts::PI;

/// `|B_1|` in dimension `dim`, from `V_d = 2 pi / d * V_{d-2}`.
pub fn ball_volume(dim: u32) -> f64 {
    let (mut v, start) = if dim.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut d = start;
    while d <= dim {
        v *= 2.0 * PI / f64::from(d);
        d += 2;
    }
    v
}

/// Surface measure of the unit sphere `S^{dim-1}`.
pub fn sphere_area(dim: u32) -> f64 {
    f64::from(dim) * ball_volume(dim)
}

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub fn gauss_legendre(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre_rule(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}
