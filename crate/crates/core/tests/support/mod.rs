#![allow(dead_code)]

/// Convex envelope of `f` at `s` by a brute-force Legendre–Fenchel
/// biconjugate over a sample grid on `[-range, range]` and a slope grid.
pub fn biconjugate(f: impl Fn(f64) -> f64, s: f64, range: f64) -> f64 {
    const POINTS: usize = 2001;
    const SLOPES: usize = 4001;
    // s itself is a sample, so the result never exceeds f(s)
    let xs: Vec<f64> = (0..POINTS)
        .map(|i| -range + 2.0 * range * i as f64 / (POINTS - 1) as f64)
        .chain([s])
        .collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let max_slope = xs[..POINTS]
        .windows(2)
        .zip(fx[..POINTS].windows(2))
        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
        .fold(0.0, f64::max);
    (0..SLOPES)
        .map(|j| -max_slope + 2.0 * max_slope * j as f64 / (SLOPES - 1) as f64)
        .map(|xi| {
            let conj = xs
                .iter()
                .zip(&fx)
                .map(|(x, y)| xi * x - y)
                .fold(f64::NEG_INFINITY, f64::max);
            xi * s - conj
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn double_well(s: f64) -> f64 {
    (s * s - 1.0).powi(2)
}

/// `∫_0^1 x^α dx`.
pub fn power_moment(alpha: i32) -> f64 {
    1.0 / (alpha as f64 + 1.0)
}

/// `∫_{-1}^{1} u_k² sqrt(1 + w_k²)` for the ramp family, in closed form.
pub fn ramp_limit0_term(k: u64) -> f64 {
    let k = k as f64;
    (1.0 + k * k).sqrt() / (3.0 * k) + 1.0 - 1.0 / k
}

pub fn scenario_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
