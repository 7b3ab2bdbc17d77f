//! Outage kernels `O(α) = Pr{y < α x}` for unit-mean main (`y`) and
//! interfering (`x`) fading powers, their dispatch by LoS state, and the
//! per-role compositions used for cellular, direct and relayed links.
//!
//! Every kernel is available both as the outage probability and as its
//! complement; each is summed from positive terms so that deep tails on
//! either side stay accurate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use libm::lgamma;

use crate::channel::FadingSpec;
use crate::error::{domain, Error, Result};
use crate::numerics::{
    bessel_i0_scaled, gauss_2f1, integrate_with_breaks, marcum_p1, marcum_q1, Domain, QuadratureSpec,
};

/// Main-link and interfering-link fading laws of one outage event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePair {
    pub main: FadingSpec,
    pub interferer: FadingSpec,
}

impl OutagePair {
    pub fn new(main: FadingSpec, interferer: FadingSpec) -> Result<Self> {
        main.validate()?;
        interferer.validate()?;
        Ok(OutagePair { main, interferer })
    }
}

/// Interference-to-signal mean power ratio `p' E[ĥ] / (p E[h])`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Zeta(f64);

impl Zeta {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Zeta(value))
        } else {
            domain(format!("zeta must be positive and finite, got {value}"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Ratio of mean interference power to mean desired power.
pub fn zeta(p_interferer: f64, mean_interf_gain: f64, p_main: f64, mean_main_gain: f64) -> Result<Zeta> {
    if !(p_interferer > 0.0 && mean_interf_gain > 0.0 && p_main > 0.0 && mean_main_gain > 0.0) {
        return domain("zeta needs strictly positive powers and gains");
    }
    Zeta::new(p_interferer * mean_interf_gain / (p_main * mean_main_gain))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 {
        Ok(())
    } else {
        domain(format!("outage argument must be >= 0, got {alpha}"))
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// `(P[Bin(n, p) >= k], P[Bin(n, p) < k])` from log-probabilities of success and failure.
fn binomial_split(n: u64, k: u64, ln_p: f64, ln_q: f64) -> (f64, f64) {
    let (mut upper, mut lower) = (0.0, 0.0);
    for i in 0..=n {
        let t = (ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q).exp();
        if i >= k {
            upper += t;
        } else {
            lower += t;
        }
    }
    (upper, lower)
}

/// Nakagami main / Nakagami interferer: `(O, 1 - O)`.
pub fn outage_nn_pair(alpha: f64, m: u32, m_prime: u32) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if m == 0 || m_prime == 0 {
        return domain("Nakagami shapes must be >= 1");
    }
    if alpha == 0.0 {
        return Ok((0.0, 1.0));
    }
    if alpha.is_infinite() {
        return Ok((1.0, 0.0));
    }
    // y < α x  <=>  Bin(m + m' - 1, θ) >= m with θ = mα / (m' + mα).
    let (mf, mpf) = (m as f64, m_prime as f64);
    let denom = (mpf + mf * alpha).ln();
    let ln_p = (mf * alpha).ln() - denom;
    let ln_q = mpf.ln() - denom;
    Ok(binomial_split((m + m_prime - 1) as u64, m as u64, ln_p, ln_q))
}

/// Outage for Nakagami-`m` main and Nakagami-`m_prime` interfering links.
pub fn outage_nn(alpha: f64, m: u32, m_prime: u32) -> Result<f64> {
    Ok(outage_nn_pair(alpha, m, m_prime)?.0)
}

const POISSON_CAP: usize = 500;

/// Rician main / Nakagami interferer: `(O, 1 - O)`.
///
/// Poisson mixture over the Rician's non-central index `j ~ Poi(K)`: given
/// `j`, the outage is the survival function of a negative binomial with `m`
/// failures and success probability `θ = s/(m+s)`, `s = α(K+1)`.
pub fn outage_ln_pair(alpha: f64, k: f64, m: u32) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(k >= 0.0 && k.is_finite()) || m == 0 {
        return domain("need K >= 0 and m >= 1");
    }
    if alpha == 0.0 {
        return Ok((0.0, 1.0));
    }
    if alpha.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let s = alpha * (k + 1.0);
    let mf = m as f64;
    let denom = (mf + s).ln();
    let ln_th = s.ln() - denom; // success probability θ
    let ln_1m = mf.ln() - denom; // 1 - θ
    let ln_k = if k > 0.0 { k.ln() } else { f64::NEG_INFINITY };
    let (mut out, mut comp) = (0.0, 0.0);
    // Running negative-binomial CDF P[NB <= j].
    let mut cdf = 0.0;
    for j in 0..POISSON_CAP {
        let jf = j as f64;
        cdf += (ln_choose(j as u64 + m as u64 - 1, j as u64) + jf * ln_th + mf * ln_1m).exp();
        // P[NB >= j+1] = P[Bin(j+m, 1-θ) <= m-1].
        let mut sf = 0.0;
        let n = j as u64 + m as u64;
        for i in 0..m as u64 {
            sf += (ln_choose(n, i) + i as f64 * ln_1m + (n - i) as f64 * ln_th).exp();
        }
        let ln_w = if j == 0 { -k } else { -k + jf * ln_k - lgamma(jf + 1.0) };
        let w = ln_w.exp();
        out += w * sf;
        comp += w * cdf.min(1.0);
        if k == 0.0 {
            break;
        }
        if jf + 1.0 > k {
            let r = k / (jf + 2.0);
            let rem = w * r / (1.0 - r);
            let done_out = rem * sf <= 1e-16 * out || out == 0.0 && rem * sf == 0.0;
            let done_comp = rem <= 1e-16 * comp;
            if (done_out && done_comp) || rem < 1e-300 {
                return Ok((out.min(1.0), comp.min(1.0)));
            }
        }
        if j + 1 == POISSON_CAP {
            break;
        }
    }
    if k == 0.0 {
        return Ok((out.min(1.0), comp.min(1.0)));
    }
    Err(Error::NonConvergence { what: "Rician/Nakagami Poisson series", iterations: POISSON_CAP })
}

/// Outage for a Rician-`k` main link and Nakagami-`m` interfering link.
pub fn outage_ln(alpha: f64, k: f64, m: u32) -> Result<f64> {
    Ok(outage_ln_pair(alpha, k, m)?.0)
}

/// Nakagami main / Rician interferer: `(O, 1 - O)`, by the reciprocity
/// `O_NL(α) = 1 - O_LN(1/α)`.
pub fn outage_nl_pair(alpha: f64, m: u32, k: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok((0.0, 1.0));
    }
    let (o, c) = outage_ln_pair(1.0 / alpha, k, m)?;
    Ok((c, o))
}

/// Outage for a Nakagami-`m` main link and Rician-`k` interfering link.
pub fn outage_nl(alpha: f64, m: u32, k: f64) -> Result<f64> {
    Ok(outage_nl_pair(alpha, m, k)?.0)
}

/// Unit-mean Rician power density with shape `k`.
pub fn rician_pdf(x: f64, k: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let z = 2.0 * (k * (k + 1.0) * x).sqrt();
    (k + 1.0) * (-k - (k + 1.0) * x + z).exp() * bessel_i0_scaled(z)
}

/// Rician main / Rician interferer: `(O, 1 - O)` by quadrature of the main
/// link's CDF (a Marcum Q function) against the interferer's density.
pub fn outage_ll_pair(alpha: f64, k: f64, k_prime: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(k >= 0.0 && k.is_finite() && k_prime >= 0.0 && k_prime.is_finite()) {
        return domain("need K, K' >= 0");
    }
    if alpha == 0.0 {
        return Ok((0.0, 1.0));
    }
    if alpha.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let a = (2.0 * k).sqrt();
    let c = 2.0 * (k + 1.0) * alpha;
    let spread = 4.0 / (k_prime + 1.0).sqrt();
    let mut breaks = vec![1.0, 1.0 + spread];
    // The Marcum factor switches over near x ~ 1/α; a geometric ladder
    // around it keeps narrow features from slipping between GK nodes.
    for s in [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        breaks.push(s / alpha);
    }
    if spread < 1.0 {
        breaks.push(1.0 - spread);
    }
    let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-11, max_subdivisions: 2000, tail_transform: true };
    let o = integrate_with_breaks(
        |x| rician_pdf(x, k_prime) * marcum_p1(a, (c * x).sqrt()),
        Domain::SemiInfinite(0.0),
        &breaks,
        &spec,
    )?;
    if o <= 0.5 {
        return Ok((o.max(0.0), 1.0 - o));
    }
    let q = integrate_with_breaks(
        |x| rician_pdf(x, k_prime) * marcum_q1(a, (c * x).sqrt()),
        Domain::SemiInfinite(0.0),
        &breaks,
        &spec,
    )?;
    Ok((1.0 - q, q.max(0.0)))
}

/// Outage for Rician-`k` main and Rician-`k_prime` interfering links.
pub fn outage_ll(alpha: f64, k: f64, k_prime: f64) -> Result<f64> {
    Ok(outage_ll_pair(alpha, k, k_prime)?.0)
}

/// Independent double-series evaluation of the Rician/Rician outage.
///
/// Both powers are Poisson mixtures of gamma variables, so given the two
/// Poisson indices the event reduces to a regularized incomplete beta
/// function, here summed as a binomial tail:
/// `Σ_j Σ_n Poi(j;K) Poi(n;K') P[Bin(j+n+1, p) >= j+1]`,
/// `p = α(K+1) / (α(K+1) + K'+1)`.
pub fn outage_ll_series(alpha: f64, k: f64, k_prime: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let s = alpha * (k + 1.0);
    let denom = (s + k_prime + 1.0).ln();
    let (ln_p, ln_q) = (s.ln() - denom, (k_prime + 1.0).ln() - denom);
    let poisson = |lam: f64, j: usize| -> f64 {
        if lam == 0.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        (-lam + j as f64 * lam.ln() - lgamma(j as f64 + 1.0)).exp()
    };
    let jmax = (k + 12.0 * k.sqrt() + 40.0) as usize;
    let nmax = (k_prime + 12.0 * k_prime.sqrt() + 40.0) as usize;
    let mut total = 0.0;
    for j in 0..=jmax {
        let wj = poisson(k, j);
        if wj < 1e-300 {
            continue;
        }
        for n in 0..=nmax {
            let wn = poisson(k_prime, n);
            if wn < 1e-300 {
                continue;
            }
            let (upper, _) = binomial_split((j + n + 1) as u64, (j + 1) as u64, ln_p, ln_q);
            total += wj * wn * upper;
        }
    }
    Ok(total.min(1.0))
}

/// The Rician/Rician double series exactly as printed in the source
/// derivation (with its `αK / (2K'(K'+1))` hypergeometric argument).
///
/// Kept only for documentation and regression: it does **not** agree with the
/// probability it is meant to represent (checked against quadrature,
/// [`outage_ll_series`] and Monte-Carlo); see the crate README.
pub fn outage_ll_printed(alpha: f64, k: f64, k_prime: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(k_prime > 0.0) {
        return domain("printed series divides by K'");
    }
    let d = alpha * (k + 1.0) + k_prime + 1.0;
    let pref = (k_prime + 1.0) * (-k - k_prime).exp() / d;
    let r2 = k_prime * (k_prime + 1.0) / (d * d);
    let z = alpha * k / (2.0 * k_prime * (k_prime + 1.0));
    let mut total = 0.0;
    let mut wm = 1.0; // K^m / m!
    for m in 0..200usize {
        if m > 0 {
            wm *= k / m as f64;
        }
        let mut inner = 0.0;
        let mut wn = 1.0; // r2^n / n!
        for n in 0..400usize {
            if n > 0 {
                wn *= r2 / n as f64;
            }
            let t = wn * gauss_2f1(-(n as f64), -(n as f64), m as f64 + 1.0, z)?;
            inner += t;
            if n > 10 && t.abs() < 1e-17 * inner.abs() {
                break;
            }
        }
        let add = wm * inner;
        total += add;
        if m as f64 > k && add.abs() < 1e-17 * total.abs() {
            break;
        }
    }
    Ok(1.0 - pref * total)
}

/// `(O(α), 1 - O(α))` for the kernel selected by the pair's LoS states.
pub fn outage_pair(alpha: f64, pair: &OutagePair) -> Result<(f64, f64)> {
    match (pair.main, pair.interferer) {
        (FadingSpec::Los { k }, FadingSpec::Los { k: kp }) => outage_ll_pair(alpha, k, kp),
        (FadingSpec::Los { k }, FadingSpec::Nlos { m }) => outage_ln_pair(alpha, k, m),
        (FadingSpec::Nlos { m }, FadingSpec::Los { k }) => outage_nl_pair(alpha, m, k),
        (FadingSpec::Nlos { m }, FadingSpec::Nlos { m: mp }) => outage_nn_pair(alpha, m, mp),
    }
}

/// Outage probability dispatched on the LoS states of the pair.
pub fn outage(alpha: f64, pair: &OutagePair) -> Result<f64> {
    Ok(outage_pair(alpha, pair)?.0)
}

/// Complement `1 - O(α)`, accurate when the outage is close to one.
pub fn outage_complement(alpha: f64, pair: &OutagePair) -> Result<f64> {
    Ok(outage_pair(alpha, pair)?.1)
}

/// Outage of a cellular uplink (Nakagami-`m_cell` main link) under the given interferer.
pub fn outage_cellular(alpha: f64, interferer: FadingSpec, m_cell: u32) -> Result<f64> {
    outage(alpha, &OutagePair::new(FadingSpec::Nlos { m: m_cell }, interferer)?)
}

/// Decode-and-forward outage: either leg failing fails the link.
pub fn outage_relayed(alpha_u: f64, alpha_d: f64, pair_u: &OutagePair, pair_d: &OutagePair) -> Result<f64> {
    let su = outage_complement(alpha_u, pair_u)?;
    let sd = outage_complement(alpha_d, pair_d)?;
    Ok(1.0 - su * sd)
}

/// Tabulated outage curve for hot loops.
///
/// The logit of the outage is interpolated in `ln α` with a cubic Hermite
/// spline on a uniform grid (64 nodes per decade over `[1e-10, 1e10]`) and
/// extrapolated linearly, matching the leading power-law behaviour of every
/// kernel in both tails. Inside the grid the agreement with the direct kernels
/// is better than 1e-7 relative; outside it the tail probability itself is below ~1e-10.
#[derive(Debug, Clone)]
pub struct OutageTable {
    pair: OutagePair,
    x0: f64,
    h: f64,
    logit: Vec<f64>,
    slope: Vec<f64>,
}

const TABLE_DECADES: f64 = 10.0;
const TABLE_PER_DECADE: f64 = 64.0;

impl OutageTable {
    pub fn build(pair: OutagePair) -> Result<Self> {
        let x0 = -TABLE_DECADES * std::f64::consts::LN_10;
        let n = (2.0 * TABLE_DECADES * TABLE_PER_DECADE) as usize + 1;
        let h = std::f64::consts::LN_10 / TABLE_PER_DECADE;
        // Two extra nodes each side for the fourth-order slope stencil.
        let mut ext = Vec::with_capacity(n + 4);
        for i in 0..n + 4 {
            let x = x0 + (i as f64 - 2.0) * h;
            let (o, c) = outage_pair(x.exp(), &pair)?;
            if !(o > 0.0 && c > 0.0) {
                return domain(format!("outage table cannot represent O={o}, 1-O={c} at alpha={}", x.exp()));
            }
            ext.push(o.ln() - c.ln());
        }
        let mut slope = Vec::with_capacity(n);
        for i in 2..n + 2 {
            let d = (-ext[i + 2] + 8.0 * ext[i + 1] - 8.0 * ext[i - 1] + ext[i - 2]) / (12.0 * h);
            slope.push(d);
        }
        let logit: Vec<f64> = ext[2..n + 2].to_vec();
        // Fritsch–Carlson safeguard keeps the spline monotone.
        for i in 0..n - 1 {
            let sec = (logit[i + 1] - logit[i]) / h;
            if sec <= 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
                continue;
            }
            slope[i] = slope[i].clamp(0.0, 3.0 * sec);
            slope[i + 1] = slope[i + 1].clamp(0.0, 3.0 * sec);
        }
        Ok(OutageTable { pair, x0, h, logit, slope })
    }

    pub fn pair(&self) -> &OutagePair {
        &self.pair
    }

    fn logit_at(&self, alpha: f64) -> f64 {
        let x = alpha.ln();
        let n = self.logit.len();
        let t = (x - self.x0) / self.h;
        if t <= 0.0 {
            return self.logit[0] + self.slope[0] * (x - self.x0);
        }
        if t >= (n - 1) as f64 {
            return self.logit[n - 1] + self.slope[n - 1] * (x - (self.x0 + (n - 1) as f64 * self.h));
        }
        let i = (t.floor() as usize).min(n - 2);
        let s = t - i as f64;
        let (y0, y1) = (self.logit[i], self.logit[i + 1]);
        let (d0, d1) = (self.slope[i] * self.h, self.slope[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
    }

    /// `(O(α), 1 - O(α))` from the table.
    pub fn eval(&self, alpha: f64) -> (f64, f64) {
        if alpha <= 0.0 {
            return (0.0, 1.0);
        }
        if alpha.is_infinite() {
            return (1.0, 0.0);
        }
        let l = self.logit_at(alpha);
        if l > 0.0 {
            let e = (-l).exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = l.exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        }
    }

    pub fn outage(&self, alpha: f64) -> f64 {
        self.eval(alpha).0
    }

    pub fn survival(&self, alpha: f64) -> f64 {
        self.eval(alpha).1
    }
}

fn pair_key(pair: &OutagePair) -> [u64; 4] {
    let enc = |f: FadingSpec| match f {
        FadingSpec::Los { k } => (0u64, k.to_bits()),
        FadingSpec::Nlos { m } => (1u64, m as u64),
    };
    let (a, b) = enc(pair.main);
    let (c, d) = enc(pair.interferer);
    [a, b, c, d]
}

/// Process-wide memo of [`OutageTable`]s; each pair's table is built once.
pub fn tabulated(pair: &OutagePair) -> Result<Arc<OutageTable>> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 4], Arc<OutageTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = pair_key(pair);
    if let Some(t) = cache.lock().expect("outage table cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(OutageTable::build(*pair)?);
    cache.lock().expect("outage table cache poisoned").entry(key).or_insert(table.clone());
    Ok(table)
}
