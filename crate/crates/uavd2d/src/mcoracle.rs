//! Monte-Carlo estimators used to check the analytic link model.
//!
//! Trials are split into fixed-size chunks; chunk `c` draws from ChaCha8
//! stream `c` of the seed, and chunk sums are combined in chunk order. The
//! result is therefore identical for a given `(seed, count)` however many
//! threads run the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::channel::FadingSpec;
use crate::error::{domain, Result};
use crate::metrics::{epsilon_n, FblParams};
use crate::outage::{OutagePair, Zeta};

const CHUNK: u64 = 1 << 16;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√count`.
    pub std_err: f64,
    pub count: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|value − mean| ≤ k·SE`, with a floor for zero-variance estimates.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.std_err + 1e-12
    }
}

/// Pre-validated sampler for one fading law.
#[derive(Debug, Clone, Copy)]
pub enum FadingSampler {
    Rician { los: f64, scatter: f64 },
    Nakagami(Gamma<f64>),
}

impl FadingSampler {
    pub fn new(spec: FadingSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            FadingSpec::Los { k } => {
                FadingSampler::Rician { los: (k / (k + 1.0)).sqrt(), scatter: (1.0 / (2.0 * (k + 1.0))).sqrt() }
            }
            FadingSpec::Nlos { m } => {
                let m = f64::from(m);
                FadingSampler::Nakagami(Gamma::new(m, 1.0 / m).expect("validated Nakagami shape"))
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingSampler::Rician { los, scatter } => {
                let g1: f64 = StandardNormal.sample(rng);
                let g2: f64 = StandardNormal.sample(rng);
                let re = los + scatter * g1;
                let im = scatter * g2;
                re * re + im * im
            }
            FadingSampler::Nakagami(g) => g.sample(rng),
        }
    }
}

/// One unit-mean power gain of the given fading law.
pub fn sample_fading<R: Rng + ?Sized>(spec: FadingSpec, rng: &mut R) -> Result<f64> {
    Ok(FadingSampler::new(spec)?.sample(rng))
}

/// Substream of `seed` for chunk `chunk`.
pub fn substream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Means of `width` statistics of the same `n` trials (common random numbers).
pub fn mc_means<F>(n: u64, seed: u64, width: usize, trial: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if n == 0 {
        return domain("Monte-Carlo needs at least one trial");
    }
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let len = CHUNK.min(n - c * CHUNK);
            let (mut s, mut s2) = (vec![0.0; width], vec![0.0; width]);
            let mut out = vec![0.0; width];
            for _ in 0..len {
                trial(&mut rng, &mut out);
                for w in 0..width {
                    s[w] += out[w];
                    s2[w] += out[w] * out[w];
                }
            }
            (s, s2)
        })
        .collect();
    let (mut s, mut s2) = (vec![0.0; width], vec![0.0; width]);
    for (a, b) in &partial {
        for w in 0..width {
            s[w] += a[w];
            s2[w] += b[w];
        }
    }
    let nf = n as f64;
    Ok((0..width)
        .map(|w| {
            let mean = s[w] / nf;
            let var = if n > 1 { ((s2[w] - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
            McEstimate { mean, std_err: (var / nf).sqrt(), count: n, seed }
        })
        .collect())
}

/// Mean of one statistic.
pub fn mc_mean<F>(n: u64, seed: u64, trial: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    Ok(mc_means(n, seed, 1, |rng, out| out[0] = trial(rng))?[0])
}

/// `Pr{y < αx}` with `y` from `pair.main` and `x` from `pair.interferer`.
pub fn mc_outage(alpha: f64, pair: &OutagePair, n: u64, seed: u64) -> Result<McEstimate> {
    Ok(mc_outage_curve(&[alpha], pair, n, seed)?.remove(0))
}

/// `Pr{y < αx}` at every `α` from the same draws.
pub fn mc_outage_curve(alphas: &[f64], pair: &OutagePair, n: u64, seed: u64) -> Result<Vec<McEstimate>> {
    if alphas.iter().any(|a| !(*a >= 0.0)) {
        return domain("outage threshold must be >= 0");
    }
    let (main, intf) = (FadingSampler::new(pair.main)?, FadingSampler::new(pair.interferer)?);
    mc_means(n, seed, alphas.len(), |rng, out| {
        let y = main.sample(rng);
        let x = intf.sample(rng);
        for (o, &a) in out.iter_mut().zip(alphas) {
            *o = f64::from(u8::from(y < a * x));
        }
    })
}

/// Fading average of `ε_n(γ)` with `γ = y/(ζ x)`, `y` Nakagami(`m_cell`).
pub fn mc_decoding_error(
    zeta: Zeta,
    interferer: FadingSpec,
    m_cell: u32,
    fbl: &FblParams,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    fbl.validate()?;
    let main = FadingSampler::new(FadingSpec::Nlos { m: m_cell })?;
    let intf = FadingSampler::new(interferer)?;
    let z = zeta.value();
    mc_mean(n, seed, |rng| {
        let y = main.sample(rng);
        let x = intf.sample(rng);
        epsilon_n(y / (z * x), fbl)
    })
}

/// `E[log₂(1 + y/(ζx))]`.
pub fn mc_ergodic_capacity(zeta: Zeta, pair: &OutagePair, n: u64, seed: u64) -> Result<McEstimate> {
    let (main, intf) = (FadingSampler::new(pair.main)?, FadingSampler::new(pair.interferer)?);
    let z = zeta.value();
    mc_mean(n, seed, |rng| {
        let y = main.sample(rng);
        let x = intf.sample(rng);
        (y / (z * x)).ln_1p() / std::f64::consts::LN_2
    })
}

/// Decode-and-forward: `E[log₂(1 + min(γ_u, γ_d))]`.
pub fn mc_ergodic_capacity_relayed(
    zeta_u: Zeta,
    zeta_d: Zeta,
    pair_u: &OutagePair,
    pair_d: &OutagePair,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    let (mu, iu) = (FadingSampler::new(pair_u.main)?, FadingSampler::new(pair_u.interferer)?);
    let (md, id) = (FadingSampler::new(pair_d.main)?, FadingSampler::new(pair_d.interferer)?);
    let (zu, zd) = (zeta_u.value(), zeta_d.value());
    mc_mean(n, seed, |rng| {
        let gu = mu.sample(rng) / (zu * iu.sample(rng));
        let gd = md.sample(rng) / (zd * id.sample(rng));
        gu.min(gd).ln_1p() / std::f64::consts::LN_2
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u64 = 200_000;

    #[test]
    fn unit_mean_samples() {
        for spec in [FadingSpec::Los { k: 0.0 }, FadingSpec::Los { k: 15.85 }, FadingSpec::Nlos { m: 1 }, FadingSpec::Nlos { m: 3 }] {
            let s = FadingSampler::new(spec).unwrap();
            let e = mc_mean(N, 1, |rng| s.sample(rng)).unwrap();
            assert!(e.agrees(1.0, 4.0), "{spec:?}: {e:?}");
        }
    }

    #[test]
    fn degenerate_laws_are_exponential() {
        // Exp(1) has second moment 2 and tail e^{-1} at 1.
        for spec in [FadingSpec::Los { k: 0.0 }, FadingSpec::Nlos { m: 1 }] {
            let s = FadingSampler::new(spec).unwrap();
            let e = mc_mean(N, 2, |rng| s.sample(rng).powi(2)).unwrap();
            assert!(e.agrees(2.0, 4.0), "{spec:?}: {e:?}");
            let tail = mc_mean(N, 3, |rng| f64::from(u8::from(s.sample(rng) > 1.0))).unwrap();
            assert!(tail.agrees((-1.0f64).exp(), 4.0));
        }
    }

    #[test]
    fn outage_limits() {
        let ray = OutagePair::new(FadingSpec::Nlos { m: 1 }, FadingSpec::Nlos { m: 1 }).unwrap();
        assert_eq!(mc_outage(0.0, &ray, 1000, 1).unwrap().mean, 0.0);
        assert!(mc_outage(1.0, &ray, N, 4).unwrap().agrees(0.5, 4.0));
        assert!(mc_outage(-1.0, &ray, 10, 1).is_err());
        assert!(mc_outage(1.0, &ray, 0, 1).is_err());
    }

    #[test]
    fn reproducible_under_seed() {
        let ray = OutagePair::new(FadingSpec::Los { k: 3.0 }, FadingSpec::Nlos { m: 2 }).unwrap();
        let a = mc_outage(0.7, &ray, 150_000, 9).unwrap();
        assert_eq!(a, mc_outage(0.7, &ray, 150_000, 9).unwrap());
        assert_ne!(a.mean, mc_outage(0.7, &ray, 150_000, 10).unwrap().mean);
        let z = Zeta::new(0.1).unwrap();
        let one = mc_decoding_error(z, FadingSpec::Nlos { m: 2 }, 2, &FblParams::default(), 1, 5).unwrap();
        assert_eq!(one, mc_decoding_error(z, FadingSpec::Nlos { m: 2 }, 2, &FblParams::default(), 1, 5).unwrap());
        assert_eq!(one.count, 1);
        assert_eq!(one.std_err, 0.0);
    }

    #[test]
    fn capacity_limits() {
        let z = Zeta::new(1.0).unwrap();
        let ray = OutagePair::new(FadingSpec::Nlos { m: 1 }, FadingSpec::Nlos { m: 1 }).unwrap();
        assert!(mc_ergodic_capacity(z, &ray, N, 6).unwrap().agrees(1.0 / std::f64::consts::LN_2, 4.0));
        let hard = OutagePair::new(FadingSpec::Los { k: 1e6 }, FadingSpec::Los { k: 1e6 }).unwrap();
        let z = Zeta::new(0.25).unwrap();
        let c = mc_ergodic_capacity(z, &hard, 20_000, 7).unwrap();
        assert!((c.mean - 5f64.log2()).abs() < 1e-2);
        let single = mc_ergodic_capacity(z, &ray, N, 8).unwrap();
        let relayed = mc_ergodic_capacity_relayed(z, z, &ray, &ray, N, 8).unwrap();
        assert!(relayed.mean < single.mean);
        assert!(mc_decoding_error(Zeta::new(1e-9).unwrap(), FadingSpec::Nlos { m: 2 }, 2, &FblParams::default(), 10_000, 1)
            .unwrap()
            .mean
            < 1e-12);
    }
}
