//! Seed-derived random projections, activations and sign hashing.
//!
//! Every projection matrix `R` for boosting level `ℓ` and step `t` is a pure
//! function of `(master_seed, generator, J, M, ℓ, t)`, so a trained model
//! never stores its projections: prediction regenerates them bit for bit.
//!
//! Generator 1 (the only one so far) works as follows:
//!
//! 1. stream seed = one SplitMix64 step applied to
//!    `master_seed ^ (ℓ · 2³² + t)` (wrapping arithmetic);
//! 2. a SplitMix64 stream seeded with that value yields 64-bit words;
//! 3. consecutive words `(a, b)` become `u₁ = ((a >> 11) + 1) · 2⁻⁵³ ∈ (0, 1]`
//!    and `u₂ = (b >> 11) · 2⁻⁵³ ∈ [0, 1)`, and the Box–Muller transform
//!    emits `√(−2 ln u₁)·cos(2πu₂)` then `√(−2 ln u₁)·sin(2πu₂)`;
//! 4. deviates fill the J×M matrix in row-major order; for an odd element
//!    count the final sine deviate is dropped.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::linalg::{self, LinalgError, Matrix};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STEP_SPAN: u64 = 1 << 32;
const INV_2_POW_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("vector length {found} does not match projection width {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("angle is undefined for a zero vector")]
    ZeroVector,
    #[error("projection dimensions must be at least 1 (got J={j}, M={m})")]
    EmptySpec { j: usize, m: usize },
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The SplitMix64 generator. Output `i` is `mix64(seed + (i + 1)·γ)`, so the
/// stream is counter-based and trivially reproducible.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_POW_53
    }

    /// Uniform in `(0, 1]`.
    #[inline]
    pub fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * INV_2_POW_53
    }

    /// Unbiased uniform integer in `[0, bound)` (Lemire's method). `bound > 0`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal deviates via Box–Muller, written into `out` in order.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut pairs = out.chunks_exact_mut(2);
        for pair in &mut pairs {
            let (c, s) = self.box_muller();
            pair[0] = c;
            pair[1] = s;
        }
        if let [last] = pairs.into_remainder() {
            *last = self.box_muller().0;
        }
    }

    #[inline]
    fn box_muller(&mut self) -> (f64, f64) {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(2.0 * PI * u2);
        (radius * c, radius * s)
    }
}

/// Identifies the deviate-generation scheme. Persisted in model files, so an
/// existing id must never change meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorId {
    /// SplitMix64 sub-streams with Box–Muller normals (see module docs).
    SplitMixBoxMuller = 1,
}

impl GeneratorId {
    pub fn as_u32(self) -> u32 {
        self as u32
    }

    pub fn from_u32(id: u32) -> Option<Self> {
        match id {
            1 => Some(Self::SplitMixBoxMuller),
            _ => None,
        }
    }
}

/// Everything needed to regenerate any `R_t^ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSpec {
    master_seed: u64,
    j: usize,
    m: usize,
    generator: GeneratorId,
}

impl ProjectionSpec {
    pub fn new(master_seed: u64, j: usize, m: usize) -> Result<Self, ProjectionError> {
        Self::with_generator(master_seed, j, m, GeneratorId::SplitMixBoxMuller)
    }

    pub fn with_generator(
        master_seed: u64,
        j: usize,
        m: usize,
        generator: GeneratorId,
    ) -> Result<Self, ProjectionError> {
        if j == 0 || m == 0 {
            return Err(ProjectionError::EmptySpec { j, m });
        }
        Ok(Self {
            master_seed,
            j,
            m,
            generator,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn hidden(&self) -> usize {
        self.j
    }

    pub fn input_width(&self) -> usize {
        self.m
    }

    pub fn generator(&self) -> GeneratorId {
        self.generator
    }
}

/// Seed of the sub-stream for `(level, step)`.
pub fn stream_seed(master_seed: u64, level: usize, step: usize) -> u64 {
    let tag = (level as u64)
        .wrapping_mul(STEP_SPAN)
        .wrapping_add(step as u64);
    SplitMix64::new(master_seed ^ tag).next_u64()
}

/// The J×M projection matrix of standard normal deviates for `(level, step)`.
pub fn generate_projection(spec: &ProjectionSpec, level: usize, step: usize) -> Matrix {
    match spec.generator {
        GeneratorId::SplitMixBoxMuller => {
            let mut r = Matrix::zeros(spec.j, spec.m);
            SplitMix64::new(stream_seed(spec.master_seed, level, step))
                .fill_standard_normal(r.as_mut_slice());
            r
        }
    }
}

/// Elementwise hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    /// `sign(z)` with `sign(0) = +1`, so outputs are always ±1.
    Sign,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => libm::tanh(z),
            Activation::Sign => {
                if z >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// On-disk code: 0 = tanh, 1 = sign.
    pub fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Sign => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Sign),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sign => "sign",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activation {0:?} (expected \"tanh\" or \"sign\")")]
pub struct UnknownActivation(pub alloc::string::String);

impl FromStr for Activation {
    type Err = UnknownActivation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sign" => Ok(Activation::Sign),
            other => Err(UnknownActivation(other.into())),
        }
    }
}

/// `h(x Rᵀ)`: N×M samples against a J×M projection give an N×J encoding.
pub fn encode(x: &Matrix, r: &Matrix, act: Activation) -> Result<Matrix, ProjectionError> {
    let mut h = linalg::matmul_nt(x, r)?;
    h.map_in_place(|z| act.apply(z));
    Ok(h)
}

/// One sign bit per hyperplane (row of `r`), as ±1.
pub fn hash_signature(x: &[f64], r: &Matrix) -> Result<Vec<i8>, ProjectionError> {
    if x.len() != r.cols() {
        return Err(ProjectionError::LengthMismatch {
            expected: r.cols(),
            found: x.len(),
        });
    }
    Ok(r.row_iter()
        .map(|plane| {
            let d: f64 = plane.iter().zip(x).map(|(a, b)| a * b).sum();
            Activation::Sign.apply(d) as i8
        })
        .collect())
}

/// Analytic probability that a random hyperplane puts `x` and `y` on the same
/// side: `1 − θ/π`.
pub fn collision_probability(x: &[f64], y: &[f64]) -> Result<f64, ProjectionError> {
    if x.len() != y.len() {
        return Err(ProjectionError::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    if xx == 0.0 || yy == 0.0 {
        return Err(ProjectionError::ZeroVector);
    }
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let cos = (xy / libm::sqrt(xx * yy)).clamp(-1.0, 1.0);
    Ok(1.0 - libm::acos(cos) / PI)
}

/// Fraction of `hashes` seeded random hyperplanes on which `x` and `y` share
/// a sign.
pub fn estimate_collision_rate(
    x: &[f64],
    y: &[f64],
    hashes: usize,
    seed: u64,
) -> Result<f64, ProjectionError> {
    if x.len() != y.len() {
        return Err(ProjectionError::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let spec = ProjectionSpec::new(seed, hashes, x.len())?;
    let r = generate_projection(&spec, 0, 0);
    let hx = hash_signature(x, &r)?;
    let hy = hash_signature(y, &r)?;
    let agree = hx.iter().zip(&hy).filter(|(a, b)| a == b).count();
    Ok(agree as f64 / hashes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn unit_pair(theta: f64, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = SplitMix64::new(seed);
        let mut u = vec![0.0; m];
        let mut v = vec![0.0; m];
        rng.fill_standard_normal(&mut u);
        rng.fill_standard_normal(&mut v);
        let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        u.iter_mut().for_each(|a| *a /= nu);
        let proj: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&u).for_each(|(b, a)| *b -= proj * a);
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= nv);
        let y = u
            .iter()
            .zip(&v)
            .map(|(a, b)| theta.cos() * a + theta.sin() * b)
            .collect();
        (u, y)
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0, as published with the
        // reference C implementation.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn next_below_stays_in_range() {
        let mut rng = SplitMix64::new(42);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[rng.next_below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn projection_is_deterministic() {
        let spec = ProjectionSpec::new(99, 12, 9).unwrap();
        let a = generate_projection(&spec, 3, 4);
        let b = generate_projection(&spec, 3, 4);
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn distinct_steps_give_distinct_streams() {
        let spec = ProjectionSpec::new(99, 4, 4).unwrap();
        let a = generate_projection(&spec, 0, 0);
        let b = generate_projection(&spec, 0, 1);
        let c = generate_projection(&spec, 1, 0);
        assert_ne!(&a.as_slice()[..16], &b.as_slice()[..16]);
        assert_ne!(&a.as_slice()[..16], &c.as_slice()[..16]);
        assert_ne!(stream_seed(7, 1, 0), stream_seed(7, 0, 1));
    }

    #[test]
    fn projection_moments_match_standard_normal() {
        let spec = ProjectionSpec::new(2023, 784, 784).unwrap();
        let r = generate_projection(&spec, 0, 0);
        let n = r.as_slice().len() as f64;
        let mean = r.as_slice().iter().sum::<f64>() / n;
        let var = r.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn odd_length_fill_uses_cosine_deviate_last() {
        let mut a = [0.0; 3];
        SplitMix64::new(5).fill_standard_normal(&mut a);
        let mut b = [0.0; 4];
        SplitMix64::new(5).fill_standard_normal(&mut b);
        assert_eq!(a, b[..3]);
    }

    #[test]
    fn encode_examples() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let r = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let h = encode(&x, &r, Activation::Sign).unwrap();
        assert_eq!(h.row(0), &[1.0, 1.0]);
        assert_eq!(h.row(1), &[1.0, 1.0]);
        let t = encode(&Matrix::zeros(2, 2), &r, Activation::Tanh).unwrap();
        assert_eq!(t, Matrix::zeros(2, 2));
        assert!(encode(&Matrix::zeros(1, 3), &r, Activation::Tanh).is_err());
    }

    #[test]
    fn signature_examples() {
        let spec = ProjectionSpec::new(1, 8, 5).unwrap();
        let r = generate_projection(&spec, 0, 0);
        let x = r.row(0).to_vec();
        assert_eq!(hash_signature(&x, &r).unwrap()[0], 1);

        let mut rng = SplitMix64::new(77);
        let mut v = vec![0.0; 5];
        rng.fill_standard_normal(&mut v);
        let sig = hash_signature(&v, &r).unwrap();
        let neg: Vec<f64> = v.iter().map(|a| -a).collect();
        let neg_sig = hash_signature(&neg, &r).unwrap();
        assert!(sig.iter().zip(&neg_sig).all(|(a, b)| *a == -*b));

        let row = encode(&Matrix::from_rows(&[&v]).unwrap(), &r, Activation::Sign).unwrap();
        let as_f64: Vec<f64> = sig.iter().map(|&s| s as f64).collect();
        assert_eq!(row.row(0), as_f64.as_slice());

        assert_eq!(
            hash_signature(&[1.0], &r).unwrap_err(),
            ProjectionError::LengthMismatch { expected: 5, found: 1 }
        );
    }

    #[test]
    fn collision_probability_examples() {
        let x = [0.3, -1.2, 2.5, 0.7];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(collision_probability(&x, &x).unwrap(), 1.0);
        assert_eq!(collision_probability(&x, &neg).unwrap(), 0.0);
        assert_eq!(collision_probability(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert_eq!(
            collision_probability(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err(),
            ProjectionError::ZeroVector
        );
    }

    #[test]
    fn estimated_rate_examples() {
        let (x, _) = unit_pair(0.0, 50, 3);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(estimate_collision_rate(&x, &x, 500, 1).unwrap(), 1.0);
        assert_eq!(estimate_collision_rate(&x, &neg, 500, 1).unwrap(), 0.0);

        let (a, b) = unit_pair(PI / 2.0, 50, 4);
        let rate = estimate_collision_rate(&a, &b, 10_000, 8).unwrap();
        assert!((rate - 0.5).abs() <= 0.015, "rate {rate}");
        assert!(estimate_collision_rate(&a, &b, 0, 8).is_err());
    }

    #[test]
    fn activation_names_round_trip() {
        for act in [Activation::Tanh, Activation::Sign] {
            assert_eq!(act.name().parse::<Activation>().unwrap(), act);
            assert_eq!(Activation::from_code(act.code()), Some(act));
        }
        assert!("relu".parse::<Activation>().is_err());
        assert_eq!(Activation::from_code(2), None);
        assert_eq!(Activation::Sign.apply(0.0), 1.0);
        assert_eq!(Activation::Sign.apply(-0.0), 1.0);
    }

    #[test]
    fn estimate_within_three_sigma_on_most_trials() {
        let trials = 1000;
        let j = 1000;
        let mut misses = 0;
        for trial in 0..trials {
            let theta = PI * (trial as f64 + 0.5) / trials as f64;
            let (x, y) = unit_pair(theta, 20, trial);
            let p = collision_probability(&x, &y).unwrap();
            let est = estimate_collision_rate(&x, &y, j, trial ^ 0xABCD).unwrap();
            if (est - p).abs() > 3.0 * (p * (1.0 - p) / j as f64).sqrt() {
                misses += 1;
            }
        }
        assert!(misses * 100 <= trials, "{misses} of {trials} trials outside 3 sigma");
    }

    proptest! {
        #[test]
        fn activation_codomains(z in -15.0f64..15.0) {
            let s = Activation::Sign.apply(z);
            prop_assert!(s == 1.0 || s == -1.0);
            let t = Activation::Tanh.apply(z);
            prop_assert!(t > -1.0 && t < 1.0);
        }

        #[test]
        fn signature_ignores_positive_scale(seed: u64, scale in 1e-3f64..1e3) {
            let spec = ProjectionSpec::new(seed, 16, 6).unwrap();
            let r = generate_projection(&spec, 0, 0);
            let mut x = vec![0.0; 6];
            SplitMix64::new(seed ^ 1).fill_standard_normal(&mut x);
            let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
            prop_assert_eq!(hash_signature(&x, &r).unwrap(), hash_signature(&scaled, &r).unwrap());
        }
    }
}
