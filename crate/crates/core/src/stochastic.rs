//! Samplers and closed forms for the clade process.
//!
//! Everything random takes a caller-owned [`SimRng`], so a seed replays a run
//! bit for bit.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;

/// The generator behind every sampler.
pub type SimRng = ChaCha8Rng;

/// Recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/seed_from_u64";

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws from Poisson(`lambda`) by sequential-search inversion.
pub fn poisson_sample<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.gen();
    let mut k = 0u32;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    // The floor on p stops the walk once the remaining mass is lost to rounding.
    while u > cdf && p > 0.0 {
        k += 1;
        p *= lambda / f64::from(k);
        cdf += p;
    }
    k
}

/// How a sorted parent list is cut into left and right options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitKind {
    Uniform,
    Binomial,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Uniform => "uniform",
            SplitKind::Binomial => "binomial",
        }
    }

    /// `P(s = k)` for `n_p` parents.
    pub fn probability(self, n_p: u32, k: u32) -> f64 {
        if k > n_p {
            return 0.0;
        }
        match self {
            SplitKind::Uniform => 1.0 / f64::from(n_p + 1),
            SplitKind::Binomial => {
                let mut c = 1.0;
                for i in 0..k {
                    c = c * f64::from(n_p - i) / f64::from(i + 1);
                }
                c * 0.5f64.powi(n_p as i32)
            }
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitKind {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(SplitKind::Uniform),
            "binomial" => Ok(SplitKind::Binomial),
            other => Err(CoreError::InvalidParameter(format!("unknown split kind `{other}`"))),
        }
    }
}

/// Split point `s` in `0..=n_p`.
pub fn split_sample<R: Rng + ?Sized>(kind: SplitKind, n_p: u32, rng: &mut R) -> u32 {
    if n_p == 0 {
        return 0;
    }
    match kind {
        SplitKind::Uniform => rng.gen_range(0..=n_p),
        SplitKind::Binomial => (0..n_p).filter(|_| rng.gen::<bool>()).count() as u32,
    }
}

/// The surreal distribution `Su(lambda, alpha)`, with CDF `exp(-lambda alpha^k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrealDist {
    lambda: f64,
    alpha: f64,
}

impl SurrealDist {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self, CoreError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CoreError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CoreError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(SurrealDist { lambda, alpha })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cdf(&self, k: u32) -> f64 {
        (-self.lambda * self.alpha.powi(k as i32)).exp()
    }

    pub fn pmf(&self, k: u32) -> f64 {
        if k == 0 {
            (-self.lambda).exp()
        } else {
            self.cdf(k) - self.cdf(k - 1)
        }
    }

    /// PMF over `0..=k` where `k` is the first index whose remaining mass
    /// falls below `1e-12`.
    pub fn pmf_table(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            out.push(self.pmf(k));
            if 1.0 - self.cdf(k) < 1e-12 {
                return out;
            }
            k += 1;
        }
    }

    /// Smallest `k` with `cdf(k) >= u` for a uniform `u`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.quantile(rng.gen())
    }

    pub fn quantile(&self, u: f64) -> u32 {
        let mut k = 0;
        while self.cdf(k) < u {
            k += 1;
        }
        k
    }

    /// Geometric approximation `lambda (1 - alpha) alpha^(k-1)` to the tail.
    pub fn geometric_tail(&self, k: u32) -> f64 {
        assert!(k >= 1, "the tail approximation starts at k = 1");
        self.lambda * (1.0 - self.alpha) * self.alpha.powi(k as i32 - 1)
    }

    pub fn mean(&self) -> f64 {
        let mut m = 0.0;
        let mut k = 0;
        loop {
            let tail = 1.0 - self.cdf(k);
            if tail < 1e-12 {
                return m;
            }
            m += tail;
            k += 1;
        }
    }
}

/// `P(child generation <= k + 1) = exp(lambda (Z_k - 1))`, where `Z_k` is the
/// cumulative sum of the parent-selection PMF `z` through `k`.
pub fn predict_next_cdf(z: &[f64], lambda: f64, k: usize) -> f64 {
    let zk: f64 = z.iter().take(k + 1).sum::<f64>().min(1.0);
    (lambda * (zk - 1.0)).exp()
}

/// Lower bound on the proportion of integers under the uniform split:
/// `(2 / lambda)(1 - e^-lambda) - e^-lambda`.
pub fn integer_lower_bound(lambda: f64) -> f64 {
    let e = (-lambda).exp();
    if lambda < 1e-8 {
        // series expansion near zero: 1 - lambda^2 / 6 + ...
        return 1.0 - lambda * lambda / 6.0;
    }
    2.0 / lambda * (1.0 - e) - e
}

/// Lower bound on `P(integer | n_p)` under the uniform split.
pub fn conditional_integer_bound(n_p: u32) -> f64 {
    if n_p <= 1 {
        1.0
    } else {
        2.0 / f64::from(n_p + 1)
    }
}
