//! Empirical check of the sign-hash collision probability `1 − θ/π`.

use std::f64::consts::PI;

use elmboost_core::projection::{
    collision_probability, estimate_collision_rate, mix64, ProjectionError, SplitMix64,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HashSimConfig {
    pub dim: usize,
    pub hashes: usize,
    pub trials: usize,
    /// Angles in degrees, each within [0, 180].
    pub angles_deg: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashSimRow {
    pub theta: f64,
    pub analytic: f64,
    pub empirical: f64,
    /// `3·sqrt(p(1−p)/(hashes·trials))`.
    pub sigma3: f64,
}

impl HashSimRow {
    pub fn deviation(&self) -> f64 {
        self.empirical - self.analytic
    }
}

/// Degrees to radians with the endpoints pinned to exactly 0 and π.
pub fn radians(deg: f64) -> f64 {
    if deg == 180.0 {
        PI
    } else {
        deg.to_radians()
    }
}

/// Two unit vectors in `R^dim` separated by `deg` degrees. At 0° the second
/// is a copy of the first and at 180° its exact negation.
pub fn pair_at_angle(deg: f64, dim: usize, rng: &mut SplitMix64) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    rng.fill_standard_normal(&mut u);
    rng.fill_standard_normal(&mut v);
    normalize(&mut u);
    let along: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(&u).for_each(|(b, a)| *b -= along * a);
    normalize(&mut v);

    let y = if deg == 0.0 {
        u.clone()
    } else if deg == 180.0 {
        u.iter().map(|a| -a).collect()
    } else {
        let (s, c) = radians(deg).sin_cos();
        u.iter().zip(&v).map(|(a, b)| c * a + s * b).collect()
    };
    (u, y)
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= n);
}

pub fn simulate(config: &HashSimConfig) -> Result<Vec<HashSimRow>, ProjectionError> {
    let mut rows = Vec::with_capacity(config.angles_deg.len());
    for (i, &deg) in config.angles_deg.iter().enumerate() {
        let mut analytic = 0.0;
        let mut empirical = 0.0;
        for trial in 0..config.trials {
            let tag = mix64(config.seed ^ ((i as u64) << 32 | trial as u64));
            let mut rng = SplitMix64::new(tag);
            let (x, y) = pair_at_angle(deg, config.dim, &mut rng);
            analytic += collision_probability(&x, &y)?;
            empirical += estimate_collision_rate(&x, &y, config.hashes, rng.next_u64())?;
        }
        let trials = config.trials as f64;
        let (analytic, empirical) = (analytic / trials, empirical / trials);
        let sigma3 = 3.0 * (analytic * (1.0 - analytic) / (config.hashes as f64 * trials)).sqrt();
        rows.push(HashSimRow {
            theta: radians(deg),
            analytic,
            empirical,
            sigma3,
        });
    }
    Ok(rows)
}
