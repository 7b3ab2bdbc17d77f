//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature on finite and
//! semi-infinite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Map `[a, inf)` onto `[0, 1)` through `x = a + t/(1-t)`. When unset,
    /// semi-infinite domains are instead summed over geometrically growing
    /// finite panels until the contributions die out.
    pub tail_transform: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            tail_transform: true,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec { abs_tol, rel_tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return domain("quadrature tolerances must be > 0 and subdivisions >= 1");
        }
        Ok(())
    }
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    SemiInfinite(f64),
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Kronrod panel: (estimate, error estimate).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut abs_k = kron.abs();
    let mut gauss = 0.0;
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[j] = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let ah = h.abs();
    let (res, res_abs, res_asc) = (kron * h, abs_k * ah, asc * ah);
    let mut err = ((kron - gauss) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration over `[breaks[0], breaks[last]]`, starting from the
/// panels delimited by `breaks` and always bisecting the worst panel.
fn adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let mut heap = BinaryHeap::with_capacity(2 * spec.max_subdivisions.min(4096) + breaks.len());
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21(f, w[0], w[1]);
            total += value;
            total_err += error;
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    if !total.is_finite() || !total_err.is_finite() {
        return domain("integrand is not finite on the integration domain");
    }
    let mut panels = heap.len();
    loop {
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            // Resum to shed accumulated cancellation in the running totals.
            return Ok(heap.iter().map(|p| p.value).sum());
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Ok(0.0),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if panels >= spec.max_subdivisions || mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let estimate: f64 = heap.iter().map(|p| p.value).sum();
            let error_bound: f64 = heap.iter().map(|p| p.error).sum();
            if error_bound <= spec.abs_tol.max(spec.rel_tol * estimate.abs()) {
                return Ok(estimate);
            }
            return Err(Error::Tolerance { estimate, error_bound });
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        if !(v1 + v2).is_finite() {
            return domain("integrand is not finite on the integration domain");
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
    }
}

/// Integrate `f` over `domain` to the requested tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, domain: Domain, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_breaks(f, domain, &[], spec)
}

/// Like [`integrate`], but seeds the subdivision with interior break points
/// (kinks, peaks, scale changes) that the caller knows about.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    dom: Domain,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    match dom {
        Domain::Finite(a, b) => {
            if !(a.is_finite() && b.is_finite()) {
                return domain("finite domain needs finite end points");
            }
            if a == b {
                return Ok(0.0);
            }
            let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
            let mut pts = vec![lo];
            pts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
            pts.push(hi);
            pts.sort_by(f64::total_cmp);
            Ok(sign * adaptive(&f, &pts, spec)?)
        }
        Domain::SemiInfinite(a) => {
            if !a.is_finite() {
                return domain("semi-infinite domain needs a finite lower limit");
            }
            let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x.is_finite()).collect();
            inner.sort_by(f64::total_cmp);
            if spec.tail_transform {
                let g = |t: f64| {
                    let s = 1.0 - t;
                    let x = a + t / s;
                    if x.is_finite() {
                        f(x) / (s * s)
                    } else {
                        0.0
                    }
                };
                let mut pts = vec![0.0];
                pts.extend(inner.iter().map(|&x| (x - a) / (1.0 + x - a)));
                pts.push(1.0);
                adaptive(&g, &pts, spec)
            } else {
                panel_sum(&f, a, &inner, spec)
            }
        }
    }
}

/// Semi-infinite integral as a sum of finite panels of doubling width.
fn panel_sum<F: Fn(f64) -> f64>(f: &F, a: f64, inner: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let mut lo = a;
    let mut total = 0.0;
    let mut width = inner.last().map_or(1.0, |&x| (x - a).max(1.0));
    let mut first = true;
    let mut quiet = 0;
    for _ in 0..1100 {
        let hi = lo + width;
        let mut pts = vec![lo];
        if first {
            pts.extend(inner.iter().copied().filter(|&x| x < hi));
        }
        pts.push(hi);
        let part = adaptive(f, &pts, spec)?;
        total += part;
        if part.abs() <= 0.1 * spec.abs_tol.max(spec.rel_tol * total.abs()) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        first = false;
        lo = hi;
        width *= 2.0;
        if !lo.is_finite() {
            break;
        }
    }
    Err(Error::Tolerance { estimate: total, error_bound: f64::INFINITY })
}
