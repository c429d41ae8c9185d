//! Slope-dependent cost of transport for the two foot types, power
//! accounting and the optimal angle of attack on a uniform slope.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::num::Real;

pub const SLOPE_DOMAIN_DEG: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnergyError {
    #[error("slope {0} deg outside the model domain [-25, 25]")]
    SlopeOutOfDomain(f64),
    #[error("velocity must be positive, got {0} m/s")]
    NonPositiveVelocity(f64),
    #[error("unknown foot type `{0}` (expected point or planar)")]
    UnknownFoot(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FootType {
    Point,
    Planar,
}

impl fmt::Display for FootType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FootType::Point => "point",
            FootType::Planar => "planar",
        })
    }
}

impl FromStr for FootType {
    type Err = EnergyError;
    fn from_str(s: &str) -> Result<Self, EnergyError> {
        match s.to_ascii_lowercase().as_str() {
            "point" => Ok(FootType::Point),
            "planar" => Ok(FootType::Planar),
            other => Err(EnergyError::UnknownFoot(other.to_string())),
        }
    }
}

/// `a exp(b x) + c exp(d x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTermExp<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> TwoTermExp<T> {
    pub fn eval(&self, x: T) -> T {
        self.a * (self.b * x).exp() + self.c * (self.d * x).exp()
    }
}

/// Energy per meter [J/m] as a function of heading slope [deg].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel<T> {
    pub foot: FootType,
    pub planar_ascent: TwoTermExp<T>,
    pub planar_descent: TwoTermExp<T>,
    /// `p1 x^4 + p2 x^3 + p3 x^2 + p4 x + p5`, highest order first.
    pub point_poly: [T; 5],
}

impl<T: Real> EnergyModel<T> {
    pub fn new(foot: FootType) -> Self {
        Self {
            foot,
            planar_ascent: TwoTermExp {
                a: T::lit(737.7),
                b: T::lit(0.02979),
                c: T::lit(0.0233),
                d: T::lit(0.5126),
            },
            planar_descent: TwoTermExp {
                a: T::lit(139.3),
                b: T::lit(-0.1333),
                c: T::lit(634.7),
                d: T::lit(0.0479),
            },
            point_poly: [
                T::lit(0.003763),
                T::lit(0.01768),
                T::lit(0.9459),
                T::lit(-9.302),
                T::lit(825.0),
            ],
        }
    }

    pub fn point() -> Self {
        Self::new(FootType::Point)
    }

    pub fn planar() -> Self {
        Self::new(FootType::Planar)
    }

    pub fn domain() -> (T, T) {
        (T::lit(-SLOPE_DOMAIN_DEG), T::lit(SLOPE_DOMAIN_DEG))
    }

    /// Cost of transport [J/m] at heading slope `slope_deg`.
    pub fn energy_per_meter(&self, slope_deg: T) -> Result<T, EnergyError> {
        let (lo, hi) = Self::domain();
        if !(slope_deg >= lo && slope_deg <= hi) {
            return Err(EnergyError::SlopeOutOfDomain(slope_deg.to_f64_lossy()));
        }
        Ok(match self.foot {
            FootType::Planar if slope_deg >= T::zero() => self.planar_ascent.eval(slope_deg),
            FootType::Planar => self.planar_descent.eval(slope_deg),
            FootType::Point => horner(&self.point_poly, slope_deg),
        })
    }

    /// Checks positivity on a 0.1 deg grid across the domain.
    pub fn validate(&self) -> Result<(), EnergyError> {
        for k in -250..=250 {
            let x = T::lit(f64::from(k) * 0.1);
            let e = self.energy_per_meter(x)?;
            if !(e > T::zero()) || !e.is_finite() {
                return Err(EnergyError::Invalid(format!("non-positive energy {e} J/m at {x} deg")));
            }
        }
        Ok(())
    }
}

/// Evaluates a polynomial given highest-order coefficient first.
pub fn horner<T: Real>(coeffs: &[T], x: T) -> T {
    coeffs.iter().fold(T::zero(), |acc, c| acc * x + *c)
}

/// Walking speed [m/s] as a function of heading slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityModel<T> {
    pub foot: FootType,
    pub ascent: T,
    pub descent: T,
    /// Optional `(slope_deg, m/s)` breakpoints, sorted by slope. Overrides
    /// the constants when present; clamped at the ends.
    #[serde(default)]
    pub table: Vec<(T, T)>,
}

impl<T: Real> VelocityModel<T> {
    pub fn new(foot: FootType) -> Self {
        let (ascent, descent) = match foot {
            FootType::Point => (0.28, 0.25),
            FootType::Planar => (0.27, 0.26),
        };
        Self {
            foot,
            ascent: T::lit(ascent),
            descent: T::lit(descent),
            table: Vec::new(),
        }
    }

    pub fn with_table(mut self, mut table: Vec<(T, T)>) -> Result<Self, EnergyError> {
        table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        if table.iter().any(|(s, v)| !s.is_finite() || !(*v > T::zero())) {
            return Err(EnergyError::Invalid(
                "velocity table needs finite slopes and positive speeds".into(),
            ));
        }
        self.table = table;
        Ok(self)
    }

    pub fn velocity(&self, slope_deg: T) -> T {
        match self.table.as_slice() {
            [] => {
                if slope_deg >= T::zero() {
                    self.ascent
                } else {
                    self.descent
                }
            }
            [(_, v)] => *v,
            t => {
                let first = t[0];
                let last = t[t.len() - 1];
                if slope_deg <= first.0 {
                    return first.1;
                }
                if slope_deg >= last.0 {
                    return last.1;
                }
                let i = t.partition_point(|(s, _)| *s <= slope_deg).max(1) - 1;
                let (s0, v0) = t[i];
                let (s1, v1) = t[i + 1];
                if s1 == s0 {
                    return v1;
                }
                v0 + (v1 - v0) * (slope_deg - s0) / (s1 - s0)
            }
        }
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.ascent > T::zero() && self.descent > T::zero()) {
            return Err(EnergyError::Invalid("default speeds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAccounting<T> {
    pub standby_power: T,
    pub mars_divisor: T,
}

impl<T: Real> Default for PowerAccounting<T> {
    fn default() -> Self {
        Self {
            standby_power: T::lit(100.0),
            mars_divisor: T::lit(3.0),
        }
    }
}

/// Locomotion energy per meter from measured electrical power.
pub fn energy_from_power<T: Real>(i_rms: T, v_rms: T, v_act: T, acct: &PowerAccounting<T>) -> Result<T, EnergyError> {
    if !(v_act > T::zero()) {
        return Err(EnergyError::NonPositiveVelocity(v_act.to_f64_lossy()));
    }
    Ok((i_rms * v_rms - acct.standby_power) / v_act)
}

pub fn mars_scale<T: Real>(e: T, acct: &PowerAccounting<T>) -> T {
    e / acct.mars_divisor
}

/// How the angle of attack maps to heading slope on a uniform incline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoaConvention {
    /// Angle measured on the slope surface: `sin b = sin g cos a`.
    #[default]
    Surface,
    /// Angle measured in horizontal projection: `tan b = tan g cos a`.
    Projected,
}

/// Heading slope [deg] when crossing a `gamma` incline at angle of attack
/// `aoa` (0 = straight up the fall line).
pub fn heading_slope_on_plane<T: Real>(gamma_deg: T, aoa_deg: T, conv: AoaConvention) -> T {
    let g = gamma_deg.to_radians();
    let c = aoa_deg.to_radians().cos();
    match conv {
        AoaConvention::Surface => (g.sin() * c).asin().to_degrees(),
        AoaConvention::Projected => (g.tan() * c).atan().to_degrees(),
    }
}

/// Energy to gain a unit of along-fall-line distance: `E(beta(a)) / cos a`.
pub fn aoa_objective<T: Real>(
    model: &EnergyModel<T>,
    gamma_deg: T,
    aoa_deg: T,
    conv: AoaConvention,
) -> Result<T, EnergyError> {
    let beta = heading_slope_on_plane(gamma_deg, aoa_deg, conv);
    Ok(model.energy_per_meter(beta)? / aoa_deg.to_radians().cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoaOptimum<T> {
    pub aoa_deg: T,
    pub objective: T,
}

const AOA_MAX_DEG: f64 = 89.9;

/// Minimizes [`aoa_objective`] over `[0, 89.9]` deg: 0.1 deg grid search
/// refined by golden section.
pub fn optimal_aoa<T: Real>(
    model: &EnergyModel<T>,
    gamma_deg: T,
    conv: AoaConvention,
) -> Result<AoaOptimum<T>, EnergyError> {
    let f = |a: T| aoa_objective(model, gamma_deg, a, conv);
    let step = T::lit(0.1);
    let n = (AOA_MAX_DEG * 10.0).round() as usize;
    let mut best = (T::zero(), f(T::zero())?);
    for k in 1..=n {
        let a = step * T::lit(k as f64);
        let v = f(a)?;
        if v < best.1 {
            best = (a, v);
        }
    }
    let mut lo = (best.0 - step).max(T::zero());
    let mut hi = (best.0 + step).min(T::lit(AOA_MAX_DEG));
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
        if hi - lo < T::lit(1e-6) {
            break;
        }
    }
    let (a, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(if v < best.1 {
        AoaOptimum {
            aoa_deg: a,
            objective: v,
        }
    } else {
        AoaOptimum {
            aoa_deg: best.0,
            objective: best.1,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_point(x: f64) -> f64 {
        0.003763 * x.powi(4) + 0.01768 * x.powi(3) + 0.9459 * x.powi(2) - 9.302 * x + 825.0
    }

    fn naive_exp(a: f64, b: f64, c: f64, d: f64, x: f64) -> f64 {
        a * (b * x).exp() + c * (d * x).exp()
    }

    #[test]
    fn point_values() {
        let m = EnergyModel::<f64>::point();
        assert_eq!(m.energy_per_meter(0.0).unwrap(), 825.0);
        let e25 = m.energy_per_meter(25.0).unwrap();
        assert!((e25 - naive_point(25.0)).abs() < 1e-9 * e25);
        assert!((e25 - 2929.81).abs() < 0.01);
        assert!((m.energy_per_meter(-25.0).unwrap() - 2842.41).abs() < 0.01);
    }

    #[test]
    fn planar_values_and_branch_jump() {
        let m = EnergyModel::<f64>::planar();
        let up = m.energy_per_meter(25.0).unwrap();
        assert!((up - naive_exp(737.7, 0.02979, 0.0233, 0.5126, 25.0)).abs() < 1e-9 * up);
        assert!((up - 10120.75).abs() < 0.01);
        assert!((m.energy_per_meter(-25.0).unwrap() - 4093.20).abs() < 0.01);
        let at0 = m.energy_per_meter(0.0).unwrap();
        assert!((at0 - 737.7233).abs() < 1e-9);
        let below = m.energy_per_meter(-1e-12).unwrap();
        assert!((below - at0 - 36.28).abs() < 0.01);
    }

    #[test]
    fn out_of_domain_errors() {
        let m = EnergyModel::<f64>::point();
        assert!(m.energy_per_meter(25.0001).is_err());
        assert!(m.energy_per_meter(f64::NAN).is_err());
        assert!(m.validate().is_ok() && EnergyModel::<f64>::planar().validate().is_ok());
    }

    #[test]
    fn monotone_regimes() {
        let planar = EnergyModel::<f64>::planar();
        let point = EnergyModel::<f64>::point();
        let sweep = |m: &EnergyModel<f64>, a: i32, b: i32| {
            (a..=b * 100)
                .map(|k| m.energy_per_meter(k as f64 / 100.0).unwrap())
                .collect::<Vec<_>>()
        };
        assert!(sweep(&planar, 0, 25).windows(2).all(|w| w[1] > w[0]));
        assert!(sweep(&point, 500, 25).windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn power_accounting() {
        let acct = PowerAccounting::<f64>::default();
        assert_eq!(energy_from_power(10.0, 10.0, 0.25, &acct).unwrap(), 0.0);
        assert_eq!(energy_from_power(35.0, 10.0, 0.25, &acct).unwrap(), 1000.0);
        assert!(energy_from_power(35.0, 10.0, 0.0, &acct).is_err());
        assert!((mars_scale(340.0, &acct) - 113.333).abs() < 1e-3);
        assert_eq!(mars_scale(234.0, &acct), 78.0);
        assert_eq!(mars_scale(0.0, &acct), 0.0);
    }

    #[test]
    fn heading_slope_conventions() {
        let s = AoaConvention::Surface;
        assert!((heading_slope_on_plane(25.0f64, 0.0, s) - 25.0).abs() < 1e-12);
        assert!(heading_slope_on_plane(25.0f64, 90.0, s).abs() < 1e-12);
        assert!((heading_slope_on_plane(25.0f64, 60.0, s) - 12.20).abs() < 0.005);
        assert!(heading_slope_on_plane(25.0, 120.0, s) < 0.0);
        let p = heading_slope_on_plane(25.0f64, 60.0, AoaConvention::Projected);
        assert!((p - 13.12).abs() < 0.005);
    }

    fn dense_argmin(m: &EnergyModel<f64>, gamma: f64, conv: AoaConvention) -> f64 {
        (0..8990)
            .map(|k| k as f64 * 0.01)
            .map(|a| (a, aoa_objective(m, gamma, a, conv).unwrap()))
            .fold((0.0, f64::MAX), |b, c| if c.1 < b.1 { c } else { b })
            .0
    }

    #[test]
    fn optimal_aoa_matches_dense_sweep() {
        for m in [EnergyModel::<f64>::planar(), EnergyModel::point()] {
            for conv in [AoaConvention::Surface, AoaConvention::Projected] {
                let opt = optimal_aoa(&m, 25.0, conv).unwrap();
                assert!((opt.aoa_deg - dense_argmin(&m, 25.0, conv)).abs() < 0.02);
            }
        }
        let planar = optimal_aoa(&EnergyModel::<f64>::planar(), 25.0, AoaConvention::Surface).unwrap();
        let point = optimal_aoa(&EnergyModel::<f64>::point(), 25.0, AoaConvention::Surface).unwrap();
        assert!((48.0..=52.0).contains(&planar.aoa_deg), "{}", planar.aoa_deg);
        assert!((52.0..=56.0).contains(&point.aoa_deg), "{}", point.aoa_deg);
    }

    #[test]
    fn flat_limit_prefers_head_on() {
        for m in [EnergyModel::<f64>::planar(), EnergyModel::point()] {
            let opt = optimal_aoa(&m, 0.1, AoaConvention::Surface).unwrap();
            assert!(opt.aoa_deg < 0.5, "{}", opt.aoa_deg);
        }
    }

    #[test]
    fn velocity_table_interpolates() {
        let v = VelocityModel::<f64>::new(FootType::Point);
        assert_eq!(v.velocity(10.0), 0.28);
        assert_eq!(v.velocity(-10.0), 0.25);
        let v = v.with_table(vec![(10.0, 0.2), (-10.0, 0.4)]).unwrap();
        assert_eq!(v.velocity(-20.0), 0.4);
        assert!((v.velocity(0.0) - 0.3).abs() < 1e-12);
        assert_eq!(v.velocity(30.0), 0.2);
    }

    #[test]
    fn f32_model() {
        let m = EnergyModel::<f32>::point();
        assert_eq!(m.energy_per_meter(0.0).unwrap(), 825.0);
    }

    proptest! {
        #[test]
        fn horner_matches_naive(x in -25.0..25.0f64) {
            let m = EnergyModel::<f64>::point();
            let h = m.energy_per_meter(x).unwrap();
            prop_assert!((h - naive_point(x)).abs() <= 1e-9 * h);
            prop_assert!(h > 0.0);
        }
    }
}
