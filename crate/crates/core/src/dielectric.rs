//! Debye and Cole-Cole relaxation models of tissue permittivity.
//!
//! Time convention is `e^{+jωt}`, so lossy media have `Im ε ≤ 0`:
//!
//! ```text
//! ε(ω) = ε_∞ + Σ_n Δε_n / (1 + (jωτ_n)^{1-α_n}) + σ_s / (jωε_0)
//! ```
//!
//! The Debye model is the `α_n = 0` case.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationModel {
    Debye,
    ColeCole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub delta_eps: f64,
    /// Relaxation time [s].
    pub tau: f64,
    /// Broadening in `[0, 1)`; ignored by the Debye model.
    #[serde(default)]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DielectricParams {
    pub model: RelaxationModel,
    pub eps_inf: f64,
    pub poles: Vec<Pole>,
    /// Static ionic conductivity [S/m].
    #[serde(default)]
    pub sigma: f64,
}

impl DielectricParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_inf >= 0.0) {
            return Err(invalid("eps_inf", "must be >= 0"));
        }
        if !(self.sigma >= 0.0) {
            return Err(invalid("sigma", "must be >= 0"));
        }
        for p in &self.poles {
            if !(p.delta_eps >= 0.0) || !(p.tau >= 0.0) {
                return Err(invalid("poles", "delta_eps and tau must be >= 0"));
            }
            if !(0.0..1.0).contains(&p.alpha) {
                return Err(invalid("poles", format!("alpha must lie in [0, 1), got {}", p.alpha)));
            }
        }
        Ok(())
    }

    /// Parses the key-value parameter format:
    ///
    /// ```text
    /// model = "cole-cole"     # or "debye"
    /// eps_inf = 4.0
    /// sigma = 0.0002          # S/m
    ///
    /// [[poles]]
    /// delta_eps = 32.0
    /// tau = 7.234e-12         # s
    /// alpha = 0.0
    /// ```
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let p: Self = toml::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config {
            field: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("params serialize")
    }

    /// Same parameters evaluated with the other relaxation model.
    pub fn with_model(&self, model: RelaxationModel) -> Self {
        Self { model, ..self.clone() }
    }

    /// Four-pole Cole-Cole fit for dry skin.
    pub fn skin_cole_cole() -> Self {
        Self {
            model: RelaxationModel::ColeCole,
            eps_inf: 4.0,
            poles: vec![
                Pole { delta_eps: 32.0, tau: 7.234e-12, alpha: 0.0 },
                Pole { delta_eps: 1100.0, tau: 32.481e-9, alpha: 0.20 },
                Pole { delta_eps: 0.0, tau: 159.155e-6, alpha: 0.20 },
                Pole { delta_eps: 0.0, tau: 15.915e-3, alpha: 0.20 },
            ],
            sigma: 0.0002,
        }
    }

    /// Single-pole Debye model for skin at millimetre-wave frequencies.
    pub fn skin_debye() -> Self {
        Self {
            model: RelaxationModel::Debye,
            eps_inf: 4.0,
            poles: vec![Pole { delta_eps: 32.0, tau: 7.234e-12, alpha: 0.0 }],
            sigma: 0.0002,
        }
    }

    /// Subcutaneous fat (not infiltrated).
    pub fn fat() -> Self {
        Self {
            model: RelaxationModel::ColeCole,
            eps_inf: 2.5,
            poles: vec![
                Pole { delta_eps: 3.0, tau: 7.958e-12, alpha: 0.2 },
                Pole { delta_eps: 15.0, tau: 15.915e-9, alpha: 0.1 },
                Pole { delta_eps: 3.3e4, tau: 159.155e-6, alpha: 0.05 },
                Pole { delta_eps: 1e7, tau: 7.958e-3, alpha: 0.01 },
            ],
            sigma: 0.01,
        }
    }

    pub fn muscle() -> Self {
        Self {
            model: RelaxationModel::ColeCole,
            eps_inf: 4.0,
            poles: vec![
                Pole { delta_eps: 50.0, tau: 7.234e-12, alpha: 0.1 },
                Pole { delta_eps: 7000.0, tau: 353.678e-9, alpha: 0.1 },
                Pole { delta_eps: 1.2e6, tau: 318.31e-6, alpha: 0.1 },
                Pole { delta_eps: 2.5e7, tau: 2.274e-3, alpha: 0.0 },
            ],
            sigma: 0.2,
        }
    }

    /// Built-in parameter sets by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "skin" | "skin-cole-cole" => Some(Self::skin_cole_cole()),
            "skin-debye" => Some(Self::skin_debye()),
            "fat" => Some(Self::fat()),
            "muscle" => Some(Self::muscle()),
            _ => None,
        }
    }
}

fn relaxation_denominator(pole: &Pole, omega: f64, model: RelaxationModel) -> Complex64 {
    let x = omega * pole.tau;
    match model {
        RelaxationModel::ColeCole if pole.alpha != 0.0 => {
            let e = 1.0 - pole.alpha;
            Complex64::from_polar(x.powf(e), e * PI / 2.0) + 1.0
        }
        // α = 0 takes the Debye path so both models agree bit for bit
        _ => Complex64::new(1.0, x),
    }
}

pub fn complex_permittivity(params: &DielectricParams, frequency: f64) -> Result<Complex64> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(invalid("frequency", format!("must be > 0, got {frequency}")));
    }
    let omega = 2.0 * PI * frequency;
    let relax: Complex64 = params
        .poles
        .iter()
        .map(|p| p.delta_eps / relaxation_denominator(p, omega, params.model))
        .sum();
    let conduction = Complex64::new(0.0, -params.sigma / (omega * EPSILON_0));
    Ok(params.eps_inf + relax + conduction)
}

/// Field penetration depth `1/α` [m]; power falls as `exp(-2z/δ)`.
pub fn penetration_depth(params: &DielectricParams, frequency: f64) -> Result<f64> {
    let eps = complex_permittivity(params, frequency)?;
    let k0 = 2.0 * PI * frequency / SPEED_OF_LIGHT;
    let attenuation = k0 * eps.sqrt().im.abs();
    if attenuation == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / attenuation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_relaxation_is_constant() {
        let p = DielectricParams {
            model: RelaxationModel::ColeCole,
            eps_inf: 7.5,
            poles: vec![Pole { delta_eps: 0.0, tau: 1e-11, alpha: 0.3 }],
            sigma: 0.0,
        };
        for f in [1e3, 1e9, 3e10, 1e12] {
            assert_eq!(complex_permittivity(&p, f).unwrap(), Complex64::new(7.5, 0.0));
        }
    }

    #[test]
    fn low_frequency_limit() {
        // Σ Δε/(1+jωτ) → ΣΔε as ωτ → 0; the conductivity term is purely imaginary
        let p = DielectricParams::skin_debye();
        let eps = complex_permittivity(&p, 1e-3).unwrap();
        assert!((eps.re - 36.0).abs() < 1e-12);
    }

    #[test]
    fn skin_at_30ghz() {
        let eps = complex_permittivity(&DielectricParams::skin_cole_cole(), 30e9).unwrap();
        assert!(eps.im < 0.0);
        assert!((14.0..18.0).contains(&eps.re), "{eps}");
        assert!((-18.0..-14.0).contains(&eps.im), "{eps}");
        let d = penetration_depth(&DielectricParams::skin_cole_cole(), 30e9).unwrap();
        assert!((0.7e-3..1.0e-3).contains(&d), "{d}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(complex_permittivity(&DielectricParams::fat(), 0.0).is_err());
        assert!(complex_permittivity(&DielectricParams::fat(), -1.0).is_err());
        let mut p = DielectricParams::fat();
        p.poles[0].alpha = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let p = DielectricParams::muscle();
        let back = DielectricParams::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(p, back);
        assert!(DielectricParams::from_toml_str("model = \"debye\"\neps_inf = 1.0\npoles = []\nbogus = 1\n").is_err());
        assert!(DielectricParams::builtin("skin").is_some());
        assert!(DielectricParams::builtin("bone").is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cole_cole_reduces_to_debye(
            eps_inf in 1.0f64..10.0,
            d in proptest::collection::vec((0.0f64..1e4, 1e-13f64..1e-3), 1..5),
            sigma in 0.0f64..2.0,
            f in 1e3f64..1e12,
        ) {
            let poles: Vec<Pole> = d.iter().map(|&(delta_eps, tau)| Pole { delta_eps, tau, alpha: 0.0 }).collect();
            let debye = DielectricParams { model: RelaxationModel::Debye, eps_inf, poles, sigma };
            let cole = debye.with_model(RelaxationModel::ColeCole);
            prop_assert_eq!(complex_permittivity(&debye, f).unwrap(), complex_permittivity(&cole, f).unwrap());
        }

        #[test]
        fn lossy_imaginary_part_non_positive(f in 1e6f64..1e12) {
            for p in [DielectricParams::skin_cole_cole(), DielectricParams::fat(), DielectricParams::muscle()] {
                prop_assert!(complex_permittivity(&p, f).unwrap().im <= 0.0);
            }
        }
    }
}
