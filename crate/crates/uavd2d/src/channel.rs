//! Path loss, line-of-sight probabilities, antenna directivity and per-link
//! statistical descriptors.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{domain, Error, Result};

/// Fast-fading law of a link's unit-mean power gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingSpec {
    /// Rician with linear shape factor `k` (line of sight).
    Los { k: f64 },
    /// Nakagami with integer shape `m` (no line of sight).
    Nlos { m: u32 },
}

impl FadingSpec {
    pub fn los(k: f64) -> Result<Self> {
        let spec = FadingSpec::Los { k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn nlos(m: u32) -> Result<Self> {
        let spec = FadingSpec::Nlos { m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingSpec::Los { k } if !(k >= 0.0 && k.is_finite()) => {
                domain(format!("Rician shape must be finite and >= 0, got {k}"))
            }
            FadingSpec::Nlos { m } if m == 0 => domain("Nakagami shape must be >= 1"),
            _ => Ok(()),
        }
    }

    pub fn is_los(&self) -> bool {
        matches!(self, FadingSpec::Los { .. })
    }
}

/// Linear value of a decibel quantity.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Close-in path-loss model `PL(d) = mu + 10 beta log10(d)` per LoS state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub mu_los_db: f64,
    pub beta_los: f64,
    pub mu_nlos_db: f64,
    pub beta_nlos: f64,
}

impl Default for PathLossParams {
    /// 28 GHz values: `61.4 + 20 log10 d` (LoS), `72 + 29.2 log10 d` (NLoS).
    fn default() -> Self {
        PathLossParams { mu_los_db: 61.4, beta_los: 2.0, mu_nlos_db: 72.0, beta_nlos: 2.92 }
    }
}

/// Elevation-angle LoS model constants for air-to-ground links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AerialLosParams {
    pub b: f64,
    pub c: f64,
}

impl Default for AerialLosParams {
    fn default() -> Self {
        AerialLosParams { b: 0.1396, c: 11.95 }
    }
}

/// Distance-based LoS model constants for ground-to-ground links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundLosParams {
    pub d1: f64,
    pub d2: f64,
}

impl Default for GroundLosParams {
    fn default() -> Self {
        GroundLosParams { d1: 18.0, d2: 63.0 }
    }
}

/// Gaussian-like main lobe with a flat side-lobe floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    /// Boresight gain (linear).
    pub a_max: f64,
    /// Side-lobe floor (linear).
    pub a_min: f64,
    /// Half-power beamwidth in radians.
    pub theta_3db: f64,
}

impl AntennaPattern {
    pub fn new(a_max: f64, a_min: f64, theta_3db: f64) -> Result<Self> {
        if !(a_min > 0.0 && a_max >= a_min) {
            return domain(format!("antenna gains need a_max >= a_min > 0, got {a_max}, {a_min}"));
        }
        if !(theta_3db > 0.0 && theta_3db < PI) {
            return domain(format!("beamwidth must lie in (0, pi), got {theta_3db}"));
        }
        Ok(AntennaPattern { a_max, a_min, theta_3db })
    }
}

impl Default for AntennaPattern {
    /// 25 dB boresight, 15° beamwidth, floor 30 dB below boresight.
    fn default() -> Self {
        AntennaPattern { a_max: db_to_linear(25.0), a_min: db_to_linear(-5.0), theta_3db: 15f64.to_radians() }
    }
}

/// Everything needed to turn geometry into link statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelParams {
    pub path_loss: PathLossParams,
    pub aerial: AerialLosParams,
    pub ground: GroundLosParams,
    pub antenna: AntennaPattern,
}

/// Point in metres; `z` is the height above ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Angle (radians, in `[0, pi]`) at `from` between the directions to `a` and `b`.
pub fn offset_angle(from: &Position, a: &Position, b: &Position) -> f64 {
    let u = [a.x - from.x, a.y - from.y, a.z - from.z];
    let v = [b.x - from.x, b.y - from.y, b.z - from.z];
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// How a link's LoS state is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    /// Ground-to-ground: distance-based LoS probability.
    Terrestrial,
    /// Air-to-ground: elevation-angle LoS probability.
    Aerial,
    /// Link modelled as always obstructed (e.g. ground users towards the base station).
    Obstructed,
}

/// Statistics of one directed link in one network realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Mean power gain including path loss and transmit directivity.
    pub mean_gain: f64,
    /// Mean path gain alone (no antenna gain).
    pub path_gain: f64,
    pub is_los: bool,
    pub fading: FadingSpec,
    pub distance: f64,
    /// Elevation in degrees for aerial links.
    pub elevation_deg: Option<f64>,
}

impl LinkStats {
    /// Same physical link (same LoS realization) seen through a different beam direction.
    pub fn with_directivity(&self, antenna_gain: f64) -> LinkStats {
        LinkStats { mean_gain: self.path_gain * antenna_gain, ..*self }
    }
}

/// Mean path gain `10^(-PL/10)`.
pub fn mean_path_gain(d: f64, is_los: bool, params: &PathLossParams) -> Result<f64> {
    if !(d > 0.0) {
        return domain(format!("path loss needs d > 0, got {d}"));
    }
    let pl = if is_los {
        params.mu_los_db + 10.0 * params.beta_los * d.log10()
    } else {
        params.mu_nlos_db + 10.0 * params.beta_nlos * d.log10()
    };
    Ok(db_to_linear(-pl))
}

/// Air-to-ground LoS probability at elevation `theta_deg` (degrees).
pub fn los_probability_aerial(theta_deg: f64, params: &AerialLosParams) -> Result<f64> {
    if !(0.0..=90.0).contains(&theta_deg) {
        return domain(format!("elevation must lie in [0, 90] degrees, got {theta_deg}"));
    }
    Ok(1.0 / (1.0 + params.c * (-params.b * (theta_deg - params.c)).exp()))
}

/// Ground-to-ground LoS probability at horizontal distance `d`.
pub fn los_probability_ground(d: f64, params: &GroundLosParams) -> Result<f64> {
    if !(d > 0.0) {
        return domain(format!("LoS probability needs d > 0, got {d}"));
    }
    let e = (-d / params.d2).exp();
    Ok((params.d1 / d).min(1.0) * (1.0 - e) + e)
}

/// Directivity gain at angular offset `theta` from boresight.
pub fn antenna_gain(theta: f64, pattern: &AntennaPattern) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    let g = pattern.a_max * (-0.69 * wrapped * wrapped / (pattern.theta_3db * pattern.theta_3db)).exp();
    g.max(pattern.a_min)
}

/// Fading shapes assigned by LoS state: Nakagami `m` (NLoS) and linear Rician `k` (LoS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingShapes {
    pub m: u32,
    pub k: f64,
}

/// Elevation angle in degrees between two points.
pub fn elevation_deg(a: &Position, b: &Position) -> f64 {
    let dz = (a.z - b.z).abs();
    let h = a.horizontal_distance(b);
    if h == 0.0 {
        90.0
    } else {
        (dz / h).atan().to_degrees()
    }
}

/// Draw the LoS state of a link and assemble its statistics.
///
/// `beam_offset` is the angle between the transmitter's boresight and the
/// direction of `rx`; the transmit gain at that angle multiplies the path
/// gain. The receive side is omnidirectional unless `rx_offset` is given.
#[allow(clippy::too_many_arguments)]
pub fn build_link_stats<R: Rng + ?Sized>(
    tx: &Position,
    rx: &Position,
    class: LinkClass,
    beam_offset: f64,
    rx_offset: Option<f64>,
    shapes: FadingShapes,
    rng: &mut R,
    params: &ChannelParams,
) -> Result<LinkStats> {
    let distance = tx.distance(rx);
    if distance == 0.0 {
        return Err(Error::Domain("link end points coincide".into()));
    }
    let (p_los, elevation) = match class {
        LinkClass::Terrestrial => {
            let h = tx.horizontal_distance(rx).max(f64::MIN_POSITIVE);
            (los_probability_ground(h, &params.ground)?, None)
        }
        LinkClass::Aerial => {
            let el = elevation_deg(tx, rx);
            (los_probability_aerial(el, &params.aerial)?, Some(el))
        }
        LinkClass::Obstructed => (0.0, None),
    };
    let u: f64 = rng.gen();
    let is_los = u < p_los;
    let fading = if is_los { FadingSpec::los(shapes.k)? } else { FadingSpec::nlos(shapes.m)? };
    let path_gain = mean_path_gain(distance, is_los, &params.path_loss)?;
    let mut gain = antenna_gain(beam_offset, &params.antenna);
    if let Some(off) = rx_offset {
        gain *= antenna_gain(off, &params.antenna);
    }
    Ok(LinkStats { mean_gain: path_gain * gain, path_gain, is_los, fading, distance, elevation_deg: elevation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_table_values() {
        let p = PathLossParams::default();
        let nlos = mean_path_gain(100.0, false, &p).unwrap();
        assert!((-10.0 * nlos.log10() - 130.4).abs() < 1e-9);
        let los = mean_path_gain(100.0, true, &p).unwrap();
        assert!((-10.0 * los.log10() - 101.4).abs() < 1e-9);
        assert!((-10.0 * mean_path_gain(1.0, true, &p).unwrap().log10() - 61.4).abs() < 1e-12);
        assert!(mean_path_gain(0.0, true, &p).is_err());
    }

    #[test]
    fn aerial_los_values() {
        let p = AerialLosParams::default();
        assert!((los_probability_aerial(11.95, &p).unwrap() - 1.0 / 12.95).abs() < 1e-15);
        let direct = 1.0 / (1.0 + 11.95 * (-0.1396f64 * (90.0 - 11.95)).exp());
        assert!((los_probability_aerial(90.0, &p).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.99978).abs() < 1e-5);
        assert!(los_probability_aerial(91.0, &p).is_err());
    }

    #[test]
    fn ground_los_values() {
        let p = GroundLosParams::default();
        assert_eq!(los_probability_ground(10.0, &p).unwrap(), 1.0);
        assert_eq!(los_probability_ground(18.0, &p).unwrap(), 1.0);
        let e = (-1.0f64).exp();
        assert!((los_probability_ground(63.0, &p).unwrap() - ((18.0 / 63.0) * (1.0 - e) + e)).abs() < 1e-15);
        assert!(los_probability_ground(1e5, &p).unwrap() < 1e-3);
    }

    #[test]
    fn antenna_values() {
        let a = AntennaPattern::default();
        assert_eq!(antenna_gain(0.0, &a), a.a_max);
        assert!((antenna_gain(a.theta_3db, &a) - a.a_max * (-0.69f64).exp()).abs() < 1e-12);
        assert!((antenna_gain(a.theta_3db, &a) / (a.a_max / 2.0) - 1.0).abs() < 0.01);
        assert_eq!(antenna_gain(PI, &a), a.a_min);
        assert!((antenna_gain(0.3, &a) - antenna_gain(0.3 + 2.0 * PI, &a)).abs() < 1e-12);
    }

    #[test]
    fn link_stats_contract() {
        let params = ChannelParams::default();
        let shapes = FadingShapes { m: 2, k: db_to_linear(12.0) };
        let tx = Position::new(0.0, 0.0, 0.0);
        let rx = Position::new(10.0, 0.0, 0.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a = build_link_stats(&tx, &rx, LinkClass::Terrestrial, 0.0, None, shapes, &mut r1, &params).unwrap();
        let b = build_link_stats(&tx, &rx, LinkClass::Terrestrial, 0.0, None, shapes, &mut r2, &params).unwrap();
        assert_eq!(a, b);
        assert!(a.is_los);
        assert!((a.mean_gain / a.path_gain - params.antenna.a_max).abs() < 1e-9);
        assert!(build_link_stats(&tx, &tx, LinkClass::Aerial, 0.0, None, shapes, &mut r1, &params).is_err());
        let blocked = build_link_stats(&tx, &rx, LinkClass::Obstructed, 0.0, None, shapes, &mut r1, &params).unwrap();
        assert_eq!(blocked.fading, FadingSpec::Nlos { m: 2 });
    }
}
