//! Problem instance: user geometry, flight limits, radio constants and the
//! horizon discretization.
//!
//! The on-disk format is TOML. Linear quantities that are conventionally
//! quoted in logarithmic units (`noise_psd_dbm_hz`, `ref_gain_db`) are stored
//! as given and converted once on load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizontal position in meters.
pub type Point = [f64; 2];

/// Constants of the logistic elevation-angle fading approximation
/// `f(θ) = c1 + c2 / (1 + exp(-(b1 + b2 θ)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianParams {
    pub c1: f64,
    pub c2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl RicianParams {
    /// Constants used throughout the reference numerical setup.
    pub const REFERENCE: RicianParams = RicianParams {
        c1: 0.0,
        c2: 1.0,
        b1: -4.3221,
        b2: 6.0750,
    };
}

/// Serialized form of a [`Scenario`]: exactly the fields found in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Ground user positions `[x, y]` in meters.
    pub users: Vec<Point>,
    pub q_initial: Point,
    pub q_final: Point,
    /// Flight altitude in meters.
    pub altitude: f64,
    /// Maximum horizontal speed in m/s.
    pub v_max: f64,
    /// Flight period in seconds.
    pub horizon: f64,
    /// Number of time slots.
    pub slots: usize,
    /// Total bandwidth in Hz.
    pub bandwidth_total: f64,
    /// Total transmit power in watts.
    pub power_total: f64,
    pub noise_psd_dbm_hz: f64,
    pub ref_gain_db: f64,
    pub rician: RicianParams,
}

/// Validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    noise_psd: f64,
    ref_gain: f64,
    gamma0: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts a power spectral density in dBm/Hz to W/Hz.
pub fn dbm_hz_to_watts_hz(dbm_hz: f64) -> f64 {
    db_to_linear(dbm_hz - 30.0)
}

pub fn watts_hz_to_dbm_hz(watts_hz: f64) -> f64 {
    linear_to_db(watts_hz) + 30.0
}

/// Reference SNR `γ₀ = P·h₀ / (B·N₀)`.
pub fn compute_gamma0(power: f64, ref_gain: f64, bandwidth: f64, noise_psd: f64) -> Result<f64> {
    ensure_positive("power_total", power)?;
    ensure_positive("ref_gain", ref_gain)?;
    ensure_positive("bandwidth_total", bandwidth)?;
    ensure_positive("noise_psd", noise_psd)?;
    Ok(power * ref_gain / (bandwidth * noise_psd))
}

fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value <= 0.0 {
        return Err(Error::NonPositiveConstant { name, value });
    }
    Ok(())
}

fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::MalformedConfig(format!("`{name}` must be finite")));
    }
    Ok(())
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        if config.users.is_empty() {
            return Err(Error::MalformedConfig("at least one user is required".into()));
        }
        if config.slots < 2 {
            return Err(Error::MalformedConfig(format!(
                "`slots` must be at least 2 (got {})",
                config.slots
            )));
        }
        for (i, u) in config.users.iter().enumerate() {
            ensure_finite(&format!("users[{i}]"), u[0])?;
            ensure_finite(&format!("users[{i}]"), u[1])?;
        }
        for (name, p) in [("q_initial", config.q_initial), ("q_final", config.q_final)] {
            ensure_finite(name, p[0])?;
            ensure_finite(name, p[1])?;
        }
        for (name, v) in [
            ("noise_psd_dbm_hz", config.noise_psd_dbm_hz),
            ("ref_gain_db", config.ref_gain_db),
            ("rician.c1", config.rician.c1),
            ("rician.c2", config.rician.c2),
            ("rician.b1", config.rician.b1),
            ("rician.b2", config.rician.b2),
        ] {
            ensure_finite(name, v)?;
        }
        ensure_positive("altitude", config.altitude)?;
        ensure_positive("v_max", config.v_max)?;
        ensure_positive("horizon", config.horizon)?;
        ensure_positive("bandwidth_total", config.bandwidth_total)?;
        ensure_positive("power_total", config.power_total)?;
        for (name, v) in [
            ("altitude", config.altitude),
            ("v_max", config.v_max),
            ("horizon", config.horizon),
            ("bandwidth_total", config.bandwidth_total),
            ("power_total", config.power_total),
        ] {
            ensure_finite(name, v)?;
        }

        // The fading factor must stay positive and the slack lower bound relies
        // on f being nondecreasing in the elevation ratio.
        let r = config.rician;
        if r.c1 < 0.0 || r.c2 < 0.0 || r.c1 + r.c2 <= 0.0 || r.b2 < 0.0 {
            return Err(Error::MalformedConfig(
                "rician constants require c1 >= 0, c2 >= 0, c1 + c2 > 0 and b2 >= 0".into(),
            ));
        }

        let noise_psd = dbm_hz_to_watts_hz(config.noise_psd_dbm_hz);
        let ref_gain = db_to_linear(config.ref_gain_db);
        ensure_positive("noise_psd", noise_psd)?;
        ensure_positive("ref_gain", ref_gain)?;
        let gamma0 = compute_gamma0(config.power_total, ref_gain, config.bandwidth_total, noise_psd)?;

        let distance = (config.q_final[0] - config.q_initial[0])
            .hypot(config.q_final[1] - config.q_initial[1]);
        let slot_length = config.horizon / config.slots as f64;
        let reach = (config.slots - 1) as f64 * config.v_max * slot_length;
        if distance > reach {
            return Err(Error::InfeasibleEndpoints { distance, reach });
        }

        Ok(Self {
            config,
            noise_psd,
            ref_gain,
            gamma0,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::MalformedConfig(e.to_string()))?;
        Self::from_config(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.config).expect("scenario config always serializes")
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn users(&self) -> &[Point] {
        &self.config.users
    }

    pub fn num_users(&self) -> usize {
        self.config.users.len()
    }

    pub fn num_slots(&self) -> usize {
        self.config.slots
    }

    pub fn q_initial(&self) -> Point {
        self.config.q_initial
    }

    pub fn q_final(&self) -> Point {
        self.config.q_final
    }

    pub fn altitude(&self) -> f64 {
        self.config.altitude
    }

    pub fn v_max(&self) -> f64 {
        self.config.v_max
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    /// `δt = T / N`; always derived, never stored.
    pub fn slot_length(&self) -> f64 {
        self.config.horizon / self.config.slots as f64
    }

    /// Largest horizontal displacement allowed between consecutive slots.
    pub fn max_step(&self) -> f64 {
        self.config.v_max * self.slot_length()
    }

    pub fn bandwidth_total(&self) -> f64 {
        self.config.bandwidth_total
    }

    pub fn power_total(&self) -> f64 {
        self.config.power_total
    }

    /// Noise power spectral density in W/Hz.
    pub fn noise_psd(&self) -> f64 {
        self.noise_psd
    }

    /// Channel power gain at the 1 m reference distance (linear).
    pub fn ref_gain(&self) -> f64 {
        self.ref_gain
    }

    pub fn rician(&self) -> RicianParams {
        self.config.rician
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}
