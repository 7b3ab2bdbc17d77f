//! Link-quality functionals built on the outage kernels: ergodic capacity
//! from an outage curve, and the finite-blocklength decoding error with its
//! piecewise-linear average.

use libm::lgamma;

use crate::channel::FadingSpec;
use crate::error::{domain, Error, Result};
use crate::numerics::{
    gauss_2f1, gaussian_pdf, gaussian_q, gaussian_q_inverse, integrate_with_breaks, solve_monotone_with,
    Direction, Domain, QuadratureSpec, RootBracket, RootOptions,
};
use crate::outage::{tabulated, OutagePair, Zeta};

fn capacity_spec() -> QuadratureSpec {
    QuadratureSpec { abs_tol: 1e-11, rel_tol: 1e-9, max_subdivisions: 2000, tail_transform: true }
}

/// Shannon capacity `(1/ln 2) ∫₀^∞ S(ζγ)/(1+γ) dγ` from a survival curve `S = 1 - O`.
///
/// Integrated in `u = ln(1+γ)`, where the integrand becomes `S(ζ(e^u - 1))`
/// and decays exponentially instead of as a power law.
fn capacity_from_survival<F: Fn(f64) -> f64>(survival: F, breaks: &[f64]) -> Result<f64> {
    let g = |u: f64| {
        let gamma = u.exp_m1();
        survival(gamma)
    };
    let nats = integrate_with_breaks(g, Domain::SemiInfinite(0.0), breaks, &capacity_spec())?;
    Ok(nats / std::f64::consts::LN_2)
}

/// Ergodic capacity (bits/s/Hz) of a link whose SIR outage at threshold `γ`
/// is `outage_curve(ζγ)`.
pub fn ergodic_capacity<F: Fn(f64) -> f64>(outage_curve: F, zeta: Zeta) -> Result<f64> {
    let z = zeta.value();
    capacity_from_survival(|g| 1.0 - outage_curve(z * g), &[(1.0 / z).ln_1p()])
}

fn cellular_pair(interferer: FadingSpec, m_cell: u32) -> Result<OutagePair> {
    OutagePair::new(FadingSpec::Nlos { m: m_cell }, interferer)
}

/// Ergodic capacity of a cellular uplink sharing its subchannel.
pub fn capacity_cellular(zeta: Zeta, interferer: FadingSpec, m_cell: u32) -> Result<f64> {
    capacity_d2d_direct(zeta, &cellular_pair(interferer, m_cell)?)
}

/// Ergodic capacity of a direct D2D link.
pub fn capacity_d2d_direct(zeta: Zeta, pair: &OutagePair) -> Result<f64> {
    let table = tabulated(pair)?;
    let z = zeta.value();
    capacity_from_survival(|g| table.survival(z * g), &[(1.0 / z).ln_1p()])
}

/// Ergodic capacity of a decode-and-forward relayed D2D link; the two legs
/// use orthogonal subchannels at the same time, so no rate halving applies.
pub fn capacity_d2d_relayed(zeta_u: Zeta, zeta_d: Zeta, pair_u: &OutagePair, pair_d: &OutagePair) -> Result<f64> {
    let (tu, td) = (tabulated(pair_u)?, tabulated(pair_d)?);
    let (zu, zd) = (zeta_u.value(), zeta_d.value());
    capacity_from_survival(
        |g| tu.survival(zu * g) * td.survival(zd * g),
        &[(1.0 / zu).ln_1p(), (1.0 / zd).ln_1p()],
    )
}

/// Blocklength and rate back-off of the finite-blocklength model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblParams {
    pub n: u32,
    pub xi: f64,
}

impl FblParams {
    pub fn new(n: u32, xi: f64) -> Result<Self> {
        let p = FblParams { n, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain("blocklength must be >= 1");
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return domain(format!("back-off coefficient must lie in (0,1), got {}", self.xi));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        (1.0 - self.xi) * (self.n as f64).sqrt() / std::f64::consts::LN_2
    }
}

impl Default for FblParams {
    fn default() -> Self {
        FblParams { n: 50, xi: 0.8 }
    }
}

/// Channel dispersion `V = 1 - (1+γ)^-2`, accurate for small `γ`.
fn dispersion(gamma: f64) -> f64 {
    -(-2.0 * gamma.ln_1p()).exp_m1()
}

/// Normal-approximation achievable rate `log2(1+γ) - sqrt(V/n) Q^-1(ε)`.
pub fn normal_approx_rate(gamma: f64, n: u32, eps: f64) -> Result<f64> {
    if !(gamma >= 0.0) || n == 0 {
        return domain("need gamma >= 0 and n >= 1");
    }
    let c = gamma.ln_1p() / std::f64::consts::LN_2;
    Ok(c - (dispersion(gamma) / n as f64).sqrt() * gaussian_q_inverse(eps)?)
}

const GAMMA_FLOOR: f64 = 1e-12;

/// Argument `u(γ)` of the Gaussian tail in the decoding-error expression.
pub fn decoding_u(gamma: f64, fbl: &FblParams) -> f64 {
    if gamma < GAMMA_FLOOR {
        return 0.0;
    }
    fbl.scale() * gamma.ln_1p() / dispersion(gamma).sqrt()
}

/// Decoding error probability `ε_n(γ) = Q(u(γ))` at a fixed SINR `γ`.
pub fn epsilon_n(gamma: f64, fbl: &FblParams) -> f64 {
    if !(gamma >= GAMMA_FLOOR) {
        return 0.5;
    }
    gaussian_q(decoding_u(gamma, fbl))
}

/// `-dε_n/dγ`, the density of the "decoding threshold" implied by `ε_n`.
fn epsilon_density(gamma: f64, fbl: &FblParams) -> f64 {
    if gamma < GAMMA_FLOOR {
        return 0.0;
    }
    let l = gamma.ln_1p();
    let v = dispersion(gamma);
    let w = (1.0 + gamma).powi(-3);
    // d/dγ [ln(1+γ) V^{-1/2}] with dV/dγ = 2(1+γ)^-3.
    let du = fbl.scale() * (1.0 / ((1.0 + gamma) * v.sqrt()) - l * w / (v * v.sqrt()));
    gaussian_pdf(fbl.scale() * l / v.sqrt()) * du
}

/// SINR at which `ε_n` equals `eps`, for `eps` in `(0, 0.5)`.
pub fn epsilon_inverse(eps: f64, fbl: &FblParams) -> Result<f64> {
    fbl.validate()?;
    if !(eps > 0.0 && eps < 0.5) {
        return domain(format!("decoding error target must lie in (0, 0.5), got {eps}"));
    }
    let target = gaussian_q_inverse(eps)?;
    let opts = RootOptions { xtol_rel: 1e-14, xtol_abs: 1e-15, ..RootOptions::default() };
    let x = solve_monotone_with(
        |x: f64| decoding_u(x.exp(), fbl),
        RootBracket { lower: -20.0, upper: 5.0, target, direction: Direction::Increasing },
        &opts,
    )?;
    Ok(x.exp())
}

/// The L-level chordal approximation of `ε_n(γ)` through its quantile points.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseApprox {
    pub levels: usize,
    pub delta: f64,
    pub fbl: FblParams,
    /// `γ_0 = 0 < γ_1 < … < γ_L`.
    pub breakpoints: Vec<f64>,
    /// `ω_1 … ω_L` (stored zero-based): minus the slope on `[γ_{i-1}, γ_i]`.
    pub slopes: Vec<f64>,
}

/// Default tail threshold `Δ = 0.5 / (100 L)`.
pub fn default_delta(levels: usize) -> f64 {
    0.5 / (100.0 * levels as f64)
}

/// Build the L-level approximation with tail threshold `delta`.
pub fn build_piecewise(levels: usize, delta: f64, fbl: &FblParams) -> Result<PiecewiseApprox> {
    if levels < 2 {
        return domain("piecewise approximation needs L >= 2");
    }
    let top = 0.5 / levels as f64;
    if !(delta > 0.0 && delta < top) {
        return domain(format!("tail threshold must lie in (0, 0.5/L) = (0, {top}), got {delta}"));
    }
    let mut breakpoints = vec![0.0];
    for i in 1..levels {
        breakpoints.push(epsilon_inverse(0.5 * (1.0 - i as f64 / levels as f64), fbl)?);
    }
    breakpoints.push(epsilon_inverse(delta, fbl)?);
    let slopes = breakpoints.windows(2).map(|w| top / (w[1] - w[0])).collect();
    Ok(PiecewiseApprox { levels, delta, fbl: *fbl, breakpoints, slopes })
}

impl PiecewiseApprox {
    /// Value of the approximation at `γ` (0.5 at zero, 0 beyond `γ_L`).
    pub fn eval(&self, gamma: f64) -> f64 {
        let l = self.levels as f64;
        for i in 1..=self.levels {
            if gamma < self.breakpoints[i] {
                let w = self.slopes[i - 1];
                return w * (self.breakpoints[i] - gamma) + 0.5 * (1.0 - i as f64 / l);
            }
        }
        0.0
    }

    /// Coefficients `c_i` with `ε̄ = Σ_i c_i H(γ_i)`, `i = 1..L`.
    ///
    /// Integrating the chord by parts gives `ε̄ = Σ_i ω_i [H(γ_i) - H(γ_{i-1})]`,
    /// hence `c_i = ω_i - ω_{i+1}` for `i < L` and `c_L = ω_L`.
    pub fn coefficients(&self) -> Vec<f64> {
        let w = &self.slopes;
        (0..self.levels).map(|i| if i + 1 < self.levels { w[i] - w[i + 1] } else { w[i] }).collect()
    }
}

/// `∫₀^γ O_NN(αt) dt` for a Nakagami-`m` main and Nakagami-`m_prime` interfering link.
pub fn h_n(alpha: f64, gamma: f64, m: u32, m_prime: u32) -> Result<f64> {
    if !(alpha >= 0.0 && gamma >= 0.0) || m == 0 || m_prime == 0 {
        return domain("H_N needs alpha, gamma >= 0 and shapes >= 1");
    }
    if alpha == 0.0 || gamma == 0.0 {
        return Ok(0.0);
    }
    let (mf, mpf) = (m as f64, m_prime as f64);
    let z = mf * alpha * gamma / mpf;
    let mut sum = 0.0;
    for k in 0..m {
        let kf = k as f64;
        // Γ(k+m') (mα)^k γ^{k+1} m'^{m'} / (Γ(m') (k+1)! m'^{k+m'}) = γ Γ(k+m')/(Γ(m')(k+1)!) z^k
        let ln_c = lgamma(kf + mpf) - lgamma(mpf) - lgamma(kf + 2.0) + kf * z.ln();
        sum += ln_c.exp() * gauss_2f1(kf + 1.0, kf + mpf, kf + 2.0, -z)?;
    }
    Ok((gamma * (1.0 - sum)).clamp(0.0, gamma))
}

const POISSON_CAP: usize = 500;

/// `∫₀^γ O_NL(αt) dt` for a Nakagami-`m` main and Rician-`k` interfering link.
pub fn h_l(alpha: f64, gamma: f64, m: u32, k: f64) -> Result<f64> {
    if !(alpha >= 0.0 && gamma >= 0.0 && k >= 0.0 && k.is_finite()) || m == 0 {
        return domain("H_L needs alpha, gamma, K >= 0 and m >= 1");
    }
    if alpha == 0.0 || gamma == 0.0 {
        return Ok(0.0);
    }
    let mf = m as f64;
    let z = mf * alpha * gamma / (k + 1.0);
    // e^{-K} (mα)^m γ^{m+1} / (Γ(m) (K+1)^m (m+1)) = γ e^{-K} z^m / (Γ(m) (m+1))
    let ln_pref = -k + mf * z.ln() - lgamma(mf) - (mf + 1.0).ln();
    let mut inner = 0.0; // Σ_{k'≤j} Γ(k'+m)/k'! 2F1(...)
    let mut total = 0.0;
    let ln_k = if k > 0.0 { k.ln() } else { f64::NEG_INFINITY };
    for j in 0..POISSON_CAP {
        let jf = j as f64;
        let t = (lgamma(jf + mf) - lgamma(jf + 1.0)).exp() * gauss_2f1(mf + 1.0, mf + jf, mf + 2.0, -z)?;
        inner += t;
        let w = if j == 0 { 1.0 } else { (jf * ln_k - lgamma(jf + 1.0)).exp() };
        let add = w * inner;
        total += add;
        if k == 0.0 {
            break;
        }
        // The inner sum is non-decreasing in j while 2F1(m+1, m+j; m+2; -z)
        // decays in j, so once the Poisson weight is past its mode the
        // geometric tail bound w·r/(1-r)·inner (with the next inner term
        // bounded by the current one) is conservative.
        if jf + 1.0 > k {
            let r = k / (jf + 2.0);
            if w * r / (1.0 - r) * (inner + t) <= 1e-15 * total {
                return Ok((gamma * (ln_pref.exp() * total)).clamp(0.0, gamma));
            }
        }
    }
    if k == 0.0 {
        return Ok((gamma * (ln_pref.exp() * total)).clamp(0.0, gamma));
    }
    Err(Error::NonConvergence { what: "H_L Poisson series", iterations: POISSON_CAP })
}

/// `H(α, γ) = ∫₀^γ O^c(αt) dt` for a cellular link, dispatched on the interferer.
pub fn h_cellular(alpha: f64, gamma: f64, interferer: FadingSpec, m_cell: u32) -> Result<f64> {
    match interferer {
        FadingSpec::Nlos { m } => h_n(alpha, gamma, m_cell, m),
        FadingSpec::Los { k } => h_l(alpha, gamma, m_cell, k),
    }
}

/// Average decoding error of a cellular user under interference ratio `ζ`,
/// from the piecewise-linear approximation.
pub fn avg_decoding_error(zeta: Zeta, interferer: FadingSpec, m_cell: u32, approx: &PiecewiseApprox) -> Result<f64> {
    let z = zeta.value();
    let mut total = 0.0;
    for (c, &g) in approx.coefficients().iter().zip(&approx.breakpoints[1..]) {
        total += c * h_cellular(z, g, interferer, m_cell)?;
    }
    Ok(total.clamp(0.0, 0.5))
}

/// Fading average of the exact `ε_n`, by quadrature of `∫ O^c(ζγ)(-ε_n'(γ)) dγ`.
///
/// Not used by allocation; it separates the error of the chordal
/// approximation from Monte-Carlo noise in diagnostics.
pub fn avg_decoding_error_exact(zeta: Zeta, interferer: FadingSpec, m_cell: u32, fbl: &FblParams) -> Result<f64> {
    let table = tabulated(&cellular_pair(interferer, m_cell)?)?;
    let z = zeta.value();
    // In x = ln γ the weight e^x (-ε') is a smooth bump around the decoding threshold.
    let f = |x: f64| {
        let g = x.exp();
        table.outage(z * g) * epsilon_density(g, fbl) * g
    };
    let spec = QuadratureSpec { abs_tol: 1e-16, rel_tol: 1e-9, max_subdivisions: 2000, tail_transform: true };
    let lo = GAMMA_FLOOR.ln();
    let centre = epsilon_inverse(0.25, fbl)?.ln();
    let breaks = [centre - 4.0, centre - 2.0, centre, centre + 1.0, centre + 2.0, centre + 4.0];
    integrate_with_breaks(f, Domain::Finite(lo, centre + 60.0), &breaks, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::outage::{outage_nl, outage_nn};

    fn z(v: f64) -> Zeta {
        Zeta::new(v).unwrap()
    }

    #[test]
    fn capacity_closed_forms() {
        let step = ergodic_capacity(|g| if g >= 3.0 { 1.0 } else { 0.0 }, z(1.0)).unwrap();
        assert!((step - 2.0).abs() < 1e-8, "{step}");
        assert_eq!(ergodic_capacity(|_| 1.0, z(1.0)).unwrap(), 0.0);
        let ray = OutagePair::new(FadingSpec::Nlos { m: 1 }, FadingSpec::Nlos { m: 1 }).unwrap();
        let r = capacity_d2d_direct(z(1.0), &ray).unwrap();
        assert!((r - 1.0 / std::f64::consts::LN_2).abs() < 1e-7, "{r}");
        let rel = capacity_d2d_relayed(z(1.0), z(1.0), &ray, &ray).unwrap();
        assert!((rel - 0.5 / std::f64::consts::LN_2).abs() < 1e-7, "{rel}");
        let los0 = OutagePair::new(FadingSpec::Los { k: 0.0 }, FadingSpec::Los { k: 0.0 }).unwrap();
        let r0 = capacity_d2d_direct(z(1.0), &los0).unwrap();
        assert!((r0 - 1.0 / std::f64::consts::LN_2).abs() < 1e-6, "{r0}");
    }

    #[test]
    fn epsilon_limits_and_inverse() {
        let fbl = FblParams::default();
        assert_eq!(epsilon_n(0.0, &fbl), 0.5);
        assert_eq!(epsilon_n(1e-13, &fbl), 0.5);
        assert!(epsilon_n(1e6, &fbl) < 1e-100);
        for &e in &[1e-6, 1e-4, 0.01, 0.25, 0.49] {
            let g = epsilon_inverse(e, &fbl).unwrap();
            assert!((epsilon_n(g, &fbl) / e - 1.0).abs() < 1e-10, "{e}");
        }
        assert!(epsilon_inverse(0.5, &fbl).is_err());
        assert!(epsilon_inverse(0.0, &fbl).is_err());
    }

    #[test]
    fn epsilon_density_matches_finite_difference() {
        let fbl = FblParams::default();
        for &g in &[1e-3, 0.1, 1.0, 5.0, 30.0] {
            let h = g * 1e-6;
            let fd = (epsilon_n(g - h, &fbl) - epsilon_n(g + h, &fbl)) / (2.0 * h);
            assert!((epsilon_density(g, &fbl) / fd - 1.0).abs() < 1e-6, "{g}");
        }
    }

    #[test]
    fn piecewise_structure() {
        let fbl = FblParams::default();
        let ap = build_piecewise(4, default_delta(4), &fbl).unwrap();
        assert_eq!(ap.breakpoints.len(), 5);
        assert!(ap.breakpoints.windows(2).all(|w| w[0] < w[1]));
        assert!(ap.slopes.windows(2).all(|w| w[0] > w[1]));
        assert!(ap.coefficients().iter().all(|&c| c > 0.0));
        // The chord passes through the quantile points.
        for (i, &g) in ap.breakpoints.iter().enumerate().skip(1).take(3) {
            assert!((ap.eval(g * (1.0 - 1e-12)) - 0.5 * (1.0 - i as f64 / 4.0)).abs() < 1e-9);
        }
        let two = build_piecewise(2, default_delta(2), &fbl).unwrap();
        assert_eq!(two.breakpoints.len(), 3);
        assert!(build_piecewise(1, 0.01, &fbl).is_err());
        assert!(build_piecewise(4, 0.2, &fbl).is_err());
    }

    #[test]
    fn h_n_closed_forms() {
        assert_eq!(h_n(1.0, 0.0, 2, 2).unwrap(), 0.0);
        let v = h_n(1.0, 1.0, 1, 1).unwrap();
        assert!((v - (1.0 - 2f64.ln())).abs() < 1e-13, "{v}");
        let spec = QuadratureSpec::with_tolerances(1e-14, 1e-12);
        let q = integrate(|t| outage_nn(t, 2, 2).unwrap(), Domain::Finite(0.0, 5.0), &spec).unwrap();
        assert!((h_n(1.0, 5.0, 2, 2).unwrap() / q - 1.0).abs() < 1e-8);
    }

    #[test]
    fn h_l_degenerates_and_matches_quadrature() {
        let a = h_l(0.7, 3.0, 1, 0.0).unwrap();
        let b = h_n(0.7, 3.0, 1, 1).unwrap();
        assert!((a / b - 1.0).abs() < 1e-12, "{a} {b}");
        let spec = QuadratureSpec::with_tolerances(1e-14, 1e-12);
        let q = integrate(|t| outage_nl(t, 2, 15.85).unwrap(), Domain::Finite(0.0, 5.0), &spec).unwrap();
        assert!((h_l(1.0, 5.0, 2, 15.85).unwrap() / q - 1.0).abs() < 1e-6);
    }

    #[test]
    fn average_error_limits_and_order() {
        let fbl = FblParams::default();
        let ap = build_piecewise(4, default_delta(4), &fbl).unwrap();
        let intf = FadingSpec::Nlos { m: 2 };
        let lo = avg_decoding_error(z(1e-8), intf, 2, &ap).unwrap();
        let hi = avg_decoding_error(z(1e8), intf, 2, &ap).unwrap();
        assert!(lo < 1e-10 && hi > 0.49, "{lo} {hi}");
        let exact = avg_decoding_error_exact(z(0.05), intf, 2, &fbl).unwrap();
        let approx = avg_decoding_error(z(0.05), intf, 2, &ap).unwrap();
        // The chord lies above the convex ε_n, so the approximation is conservative.
        assert!(approx >= exact, "{approx} {exact}");
    }

    #[test]
    fn normal_approx_rate_inverts_epsilon() {
        let fbl = FblParams::default();
        let g = 4.0;
        let e = epsilon_n(g, &fbl);
        let r = normal_approx_rate(g, fbl.n, e).unwrap();
        assert!((r - fbl.xi * g.ln_1p() / std::f64::consts::LN_2).abs() < 1e-9);
    }
}
