//! Seeded synthetic instances: low-tubal-rank ground truth from a t-product
//! of Gaussian factors, Bernoulli +/-1 sparse corruption, Gaussian noise.
//!
//! Each ingredient draws from its own counter-known substream of a ChaCha
//! generator, and normals come from a Box-Muller transform of uniforms (no
//! rejection), so the draw positions never depend on the values drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor_algebra::{t_product, Tensor3};

/// Instance description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Tubal rank of the ground truth (factor inner dimension).
    pub r: usize,
    /// Each entry of the sparse component is +1 or -1 with probability `rho`
    /// each, zero otherwise.
    pub rho: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

/// Generated instance: observation and its three ground-truth parts.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub x: Tensor3,
    pub l0: Tensor3,
    pub s0: Tensor3,
    pub e0: Tensor3,
}

/// Substream indices per ingredient.
const STREAM_P: u64 = 0;
const STREAM_Q: u64 = 1;
const STREAM_S_SUPPORT: u64 = 2;
const STREAM_S_SIGN: u64 = 3;
const STREAM_E: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Standard normals via Box-Muller; consumes exactly two uniforms per pair.
fn fill_gaussian(rng: &mut ChaCha8Rng, out: &mut [f64], std: f64) {
    let mut i = 0;
    while i < out.len() {
        let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let u2: f64 = rng.gen();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        out[i] = radius * angle.cos() * std;
        i += 1;
        if i < out.len() {
            out[i] = radius * angle.sin() * std;
            i += 1;
        }
    }
}

/// Generate one instance; identical seeds give identical bytes.
pub fn make_instance(spec: &SynthSpec) -> Result<SynthInstance> {
    let SynthSpec {
        n1,
        n2,
        n3,
        r,
        rho,
        sigma,
        seed,
    } = *spec;
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::BadSpec("dimensions must be positive".into()));
    }
    if r > n1.min(n2) {
        return Err(Error::BadSpec(format!(
            "rank {r} exceeds min(n1, n2) = {}",
            n1.min(n2)
        )));
    }
    if !(0.0..=0.5).contains(&rho) {
        return Err(Error::BadSpec(format!("rho = {rho} outside [0, 0.5]")));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::BadSpec(format!("sigma = {sigma} must be >= 0")));
    }

    let mut p = Tensor3::zeros(n1, r, n3);
    fill_gaussian(
        &mut stream(seed, STREAM_P),
        p.values_mut(),
        (1.0 / n1 as f64).sqrt(),
    );
    let mut q = Tensor3::zeros(r, n2, n3);
    fill_gaussian(
        &mut stream(seed, STREAM_Q),
        q.values_mut(),
        (1.0 / n2 as f64).sqrt(),
    );
    let l0 = if r == 0 {
        Tensor3::zeros(n1, n2, n3)
    } else {
        t_product(&p, &q)?
    };

    let n = n1 * n2 * n3;
    let mut s0 = Tensor3::zeros(n1, n2, n3);
    {
        // One support draw and one sign draw per entry, spent regardless of
        // the outcome, so positions stay entry-indexed.
        let mut support = stream(seed, STREAM_S_SUPPORT);
        let mut signs = stream(seed, STREAM_S_SIGN);
        for v in s0.values_mut() {
            let u: f64 = support.gen();
            let sign: f64 = if signs.gen::<f64>() < 0.5 { 1.0 } else { -1.0 };
            if u < 2.0 * rho {
                *v = sign;
            }
        }
    }

    let mut e0 = Tensor3::zeros(n1, n2, n3);
    if sigma > 0.0 {
        fill_gaussian(&mut stream(seed, STREAM_E), e0.values_mut(), sigma);
    }

    let mut x = Tensor3::zeros(n1, n2, n3);
    for i in 0..n {
        x.values_mut()[i] = l0.values()[i] + s0.values()[i] + e0.values()[i];
    }
    Ok(SynthInstance { x, l0, s0, e0 })
}

/// Relative Frobenius errors of recovered components against ground truth.
pub fn rel_errors(
    l_hat: &Tensor3,
    s_hat: &Tensor3,
    l0: &Tensor3,
    s0: &Tensor3,
) -> Result<(f64, f64)> {
    if l_hat.dims() != l0.dims() || s_hat.dims() != s0.dims() {
        return Err(Error::DimMismatch("rel_errors: shapes differ".into()));
    }
    let nl = l0.fro_norm();
    if nl == 0.0 {
        return Err(Error::ZeroGroundTruth("l0"));
    }
    let ns = s0.fro_norm();
    if ns == 0.0 {
        return Err(Error::ZeroGroundTruth("s0"));
    }
    Ok(((l_hat - l0).fro_norm() / nl, (s_hat - s0).fro_norm() / ns))
}
