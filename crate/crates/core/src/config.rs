//! Model documents, resolved run configurations and built-in presets.
//!
//! A model document is JSON:
//!
//! ```json
//! {
//!   "hbar": 1.0,
//!   "mass": { "kind": "exponential", "amplitude": 1.0, "rate": 2.0 },
//!   "frequency": { "kind": "constant", "value": 1.0 },
//!   "y": { "kind": "constant", "value": 1.0 },
//!   "window": [0.0, 3.0]
//! }
//! ```
//!
//! Kinds: `constant {value}`, `exponential {amplitude, rate}`,
//! `polynomial {coefficients}` (increasing powers), `tabulated {times, values}`.
//! `y` and `window` are optional; `hbar` defaults to 1. Unknown fields are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ermakov::{solve_rho_default, ErmakovSolution, ErmakovTolerance};
use crate::error::{Error, Result};
use crate::operators::{GridSpec, StencilOrder};
use crate::params::{CaldirolaKanaiParams, OscillatorModel, TimeFunction, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TimeFunctionConfig {
    Constant { value: f64 },
    Exponential { amplitude: f64, rate: f64 },
    Polynomial { coefficients: Vec<f64> },
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl TimeFunctionConfig {
    pub fn build(&self) -> Result<TimeFunction> {
        Ok(match self {
            Self::Constant { value } => TimeFunction::constant(*value),
            Self::Exponential { amplitude, rate } => TimeFunction::exponential(*amplitude, *rate),
            Self::Polynomial { coefficients } => TimeFunction::polynomial(coefficients.clone()),
            Self::Tabulated { times, values } => TimeFunction::tabulated(times.clone(), values.clone())?,
        })
    }
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub mass: TimeFunctionConfig,
    pub frequency: TimeFunctionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<TimeFunctionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model document: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn caldirola_kanai(ck: &CaldirolaKanaiParams) -> Self {
        Self {
            hbar: ck.hbar,
            mass: TimeFunctionConfig::Exponential { amplitude: ck.m, rate: ck.gamma },
            frequency: TimeFunctionConfig::Constant { value: ck.omega0 },
            y: Some(TimeFunctionConfig::Constant { value: ck.y0 }),
            window: None,
        }
    }

    pub fn build(&self) -> Result<OscillatorModel> {
        let with = |f: TimeFunction, what: &str| -> Result<TimeFunction> {
            match self.window {
                Some([a, b]) => f
                    .with_window(Window::new(a, b)?)
                    .map_err(|e| Error::Config(format!("{what}: {e}"))),
                None => Ok(f),
            }
        };
        let mass = with(self.mass.build().map_err(|e| Error::Config(format!("mass: {e}")))?, "mass")?;
        let freq = with(self.frequency.build().map_err(|e| Error::Config(format!("frequency: {e}")))?, "frequency")?;
        let y = match &self.y {
            Some(c) => Some(with(c.build().map_err(|e| Error::Config(format!("y: {e}")))?, "y")?),
            None => None,
        };
        OscillatorModel::new(self.hbar, mass, freq, y).map_err(|e| Error::Config(format!("hbar: {e}")))
    }

    /// The exponential-mass parameters when the document has that form:
    /// exponential mass, constant frequency, constant or absent y.
    pub fn as_caldirola_kanai(&self) -> Option<CaldirolaKanaiParams> {
        let (m, gamma) = match self.mass {
            TimeFunctionConfig::Exponential { amplitude, rate } => (amplitude, rate),
            TimeFunctionConfig::Constant { value } => (value, 0.0),
            _ => return None,
        };
        let omega0 = match self.frequency {
            TimeFunctionConfig::Constant { value } => value,
            _ => return None,
        };
        let y0 = match self.y {
            None => 0.0,
            Some(TimeFunctionConfig::Constant { value }) => value,
            Some(_) => return None,
        };
        Some(CaldirolaKanaiParams::new(m, gamma, omega0, y0).with_hbar(self.hbar))
    }

    /// ρ for `model` on `[t0, t1]`: the closed form when the document has
    /// the exponential-mass form with Ω₁² > 0, otherwise a numerical solve
    /// seeded with the default initial data at `t0`.
    pub fn ermakov(&self, model: &OscillatorModel, t0: f64, t1: f64) -> Result<ErmakovSolution> {
        if let Some(ck) = self.as_caldirola_kanai() {
            if ck.omega1_sq() > 0.0 {
                let window = model.window().intersect(&Window::new(t0, t1)?)?;
                return ErmakovSolution::closed_form(model.clone(), ck, window);
            }
        }
        solve_rho_default(model, (t0, t1), ErmakovTolerance::default())
    }

    /// A short stable identifier for reports.
    pub fn id(&self) -> String {
        match self.as_caldirola_kanai() {
            Some(ck) => format!("ck(m={}, gamma={}, omega0={}, y0={}, hbar={})", ck.m, ck.gamma, ck.omega0, ck.y0, ck.hbar),
            None => "custom".into(),
        }
    }
}

/// One named configuration with everything a subcommand may need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub model: ModelConfig,
    pub grid: GridSpec,
    pub dt: f64,
}

pub const PRESET_NAMES: &[&str] = &["ck-reference"];

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "ck-reference" => {
            let ck = CaldirolaKanaiParams::new(1.0, 2.0, 1.0, 1.0);
            Ok(Preset {
                name: name.into(),
                model: ModelConfig::caldirola_kanai(&ck),
                grid: GridSpec::new(-30.0, 30.0, 4096)?.with_order(StencilOrder::Second),
                dt: 1e-4,
            })
        }
        other => Err(Error::Config(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CK_DOC: &str = r#"{
        "hbar": 1.0,
        "mass": {"kind": "exponential", "amplitude": 1.0, "rate": 2.0},
        "frequency": {"kind": "constant", "value": 1.0},
        "y": {"kind": "constant", "value": 1.0},
        "window": [0.0, 3.0]
    }"#;

    #[test]
    fn parses_and_builds() {
        let c = ModelConfig::from_json(CK_DOC).unwrap();
        let m = c.build().unwrap();
        assert_eq!(m.gamma(1.0).unwrap(), 2.0);
        assert_eq!(m.modified_frequency_sq(0.5).unwrap(), 4.0);
        assert!(m.check_time(3.5).is_err());
        let ck = c.as_caldirola_kanai().unwrap();
        assert_eq!((ck.m, ck.gamma, ck.omega0, ck.y0), (1.0, 2.0, 1.0, 1.0));
    }

    #[test]
    fn unknown_fields_name_the_field() {
        let bad = CK_DOC.replace("\"hbar\"", "\"hbarr\"");
        let e = ModelConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("hbarr"), "{e}");
        let bad = CK_DOC.replace("\"rate\"", "\"rat\"");
        let e = ModelConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("rat"), "{e}");
        let bad = CK_DOC.replace("exponential", "sinusoid");
        assert!(ModelConfig::from_json(&bad).is_err());
    }

    #[test]
    fn tabulated_and_polynomial() {
        let doc = r#"{
            "mass": {"kind": "polynomial", "coefficients": [1.0, 0.1]},
            "frequency": {"kind": "tabulated", "times": [0, 1, 2, 3, 4], "values": [1, 1, 1, 1, 1]}
        }"#;
        let c = ModelConfig::from_json(doc).unwrap();
        assert!(c.as_caldirola_kanai().is_none());
        let m = c.build().unwrap();
        assert!((m.gamma(1.0).unwrap() - 0.1 / 1.1).abs() < 1e-15);
        assert!(m.check_time(4.5).is_err());
        let short = doc.replace("[0, 1, 2, 3, 4], \"values\": [1, 1, 1, 1, 1]", "[0, 1, 2], \"values\": [1, 1, 1]");
        assert!(ModelConfig::from_json(&short).unwrap().build().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let p = preset("ck-reference").unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: Preset = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        assert_eq!(p.grid.n_points, 4096);
        assert!(preset("nope").is_err());
    }
}
