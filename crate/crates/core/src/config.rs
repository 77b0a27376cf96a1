//! Scenario configuration: every physical, constellation, reward, and
//! training constant in one validated record.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Mean Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH: f64 = 398600.4418;
/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RAD_S: f64 = 7.2921159e-5;

/// Constellation geometry parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstellationConfig {
    pub num_satellites: usize,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Common in-plane phase of all satellites at t = 0, degrees. Campaigns
    /// re-draw this per episode from the episode seed.
    pub initial_phase_deg: f64,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            num_satellites: 10,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            initial_phase_deg: 0.0,
        }
    }
}

impl ConstellationConfig {
    /// RAAN separation between adjacent satellites, degrees.
    pub fn raan_spacing_deg(&self) -> f64 {
        360.0 / self.num_satellites as f64
    }

    /// Circular orbital radius, km.
    pub fn orbital_radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Mean motion n = sqrt(mu / r^3), rad/s.
    pub fn mean_motion_rad_s(&self) -> f64 {
        (MU_EARTH / self.orbital_radius_km().powi(3)).sqrt()
    }

    /// Orbital period 2*pi*sqrt(r^3/mu), seconds.
    pub fn period_s(&self) -> f64 {
        std::f64::consts::TAU / self.mean_motion_rad_s()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.num_satellites < 1 {
            return Err(Error::Config("num_satellites must be >= 1".into()));
        }
        if self.altitude_km <= 0.0 {
            return Err(Error::Config("altitude must be positive".into()));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(Error::Config("inclination must be in [0, 180] deg".into()));
        }
        Ok(())
    }
}

/// Weather condition driving attenuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherKind {
    Nominal,
    Extreme,
}

impl std::fmt::Display for WeatherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeatherKind::Nominal => write!(f, "nominal"),
            WeatherKind::Extreme => write!(f, "extreme"),
        }
    }
}

impl std::str::FromStr for WeatherKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "nominal" => Ok(WeatherKind::Nominal),
            "extreme" => Ok(WeatherKind::Extreme),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Parameterized attenuation model for one weather scenario. Stands in for
/// the full ITU-R rain/gas recommendations with two configurable knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatherScenario {
    pub kind: WeatherKind,
    /// Uniform rain attenuation range, dB, redrawn per link per 30 s update.
    pub rain_atten_db: (f64, f64),
    /// Zenith gaseous absorption, dB, scaled by cosecant of elevation.
    pub gas_atten_db: f64,
}

impl WeatherScenario {
    pub fn nominal() -> Self {
        Self {
            kind: WeatherKind::Nominal,
            rain_atten_db: (0.0, 3.0),
            gas_atten_db: 0.5,
        }
    }

    pub fn extreme() -> Self {
        Self {
            kind: WeatherKind::Extreme,
            rain_atten_db: (8.0, 20.0),
            gas_atten_db: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let (lo, hi) = self.rain_atten_db;
        if lo > hi {
            return Err(Error::Config("rain attenuation range is empty".into()));
        }
        let bounds = match self.kind {
            WeatherKind::Nominal => (0.0, 4.0),
            WeatherKind::Extreme => (6.0, 25.0),
        };
        if lo < bounds.0 || hi > bounds.1 {
            return Err(Error::Config(format!(
                "{} rain range [{lo}, {hi}] outside [{}, {}] dB",
                self.kind, bounds.0, bounds.1
            )));
        }
        if self.gas_atten_db < 0.0 {
            return Err(Error::Config("gas attenuation must be >= 0".into()));
        }
        Ok(())
    }
}

/// Reward weights and shaping coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub lambda_r: f64,
    pub lambda_j: f64,
    pub lambda_o: f64,
    /// Sum-rate normalizer, bits/s. When absent it defaults to
    /// `N_u * B_max * log2(1 + sinr_threshold) * 0.5`.
    pub r_ref: Option<f64>,
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_c: f64,
    pub epsilon: f64,
    pub discount: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda_r: 1.0,
            lambda_j: 0.5,
            lambda_o: 1.0,
            r_ref: None,
            eta_a: 0.2,
            eta_b: 0.2,
            eta_c: 0.2,
            epsilon: 1e-6,
            discount: 0.99,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.lambda_r < 0.0 || self.lambda_j < 0.0 || self.lambda_o < 0.0 {
            return Err(Error::Config("reward weights must be >= 0".into()));
        }
        if let Some(r) = self.r_ref {
            if r <= 0.0 {
                return Err(Error::Config("r_ref must be positive".into()));
            }
        }
        if self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.discount) || self.discount == 0.0 {
            return Err(Error::Config("discount must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Full scenario configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub constellation: ConstellationConfig,

    pub num_users: usize,
    /// Fractions of users in (equatorial, northern high, southern high) zones.
    pub zone_fractions: [f64; 3],

    pub frequency_ghz: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub implementation_margin_db: f64,
    pub min_elevation_deg: f64,
    /// Co-channel overlap factor for inter-satellite interference, in [0, 1].
    pub kappa: f64,

    pub p_max_dbm: f64,
    pub b_max_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub sinr_threshold_db: f64,

    pub reward: RewardConfig,

    pub step_seconds: f64,
    /// Episode horizon in decision steps.
    pub horizon: usize,

    /// Total power budget for water-filling and max-min, as a fraction of
    /// `num_users * P_max` (watts).
    pub budget_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            constellation: ConstellationConfig::default(),
            num_users: 50,
            zone_fractions: [0.70, 0.15, 0.15],
            frequency_ghz: 12.0,
            tx_gain_dbi: 30.0,
            rx_gain_dbi: 25.0,
            implementation_margin_db: 3.0,
            min_elevation_deg: 10.0,
            kappa: 0.1,
            p_max_dbm: 40.0,
            b_max_hz: 20e6,
            noise_density_dbm_hz: -174.0,
            sinr_threshold_db: -3.0,
            reward: RewardConfig::default(),
            step_seconds: 30.0,
            horizon: 20,
            budget_fraction: 0.5,
        }
    }
}

impl ScenarioConfig {
    /// Desk-scale profile: small enough for minutes-scale training runs.
    pub fn desk() -> Self {
        Self {
            constellation: ConstellationConfig {
                num_satellites: 4,
                ..ConstellationConfig::default()
            },
            num_users: 10,
            ..Self::default()
        }
    }

    /// Paper-scale profile: 10 satellites, 50 users.
    pub fn paper_scale() -> Self {
        Self::default()
    }

    /// Per-user power cap in watts.
    pub fn p_max_watts(&self) -> f64 {
        crate::kpi::dbm_to_watts(self.p_max_dbm)
    }

    /// Noise spectral density in W/Hz.
    pub fn noise_density_w_hz(&self) -> f64 {
        crate::kpi::dbm_to_watts(self.noise_density_dbm_hz)
    }

    /// Linear SINR decoding threshold.
    pub fn sinr_threshold_linear(&self) -> f64 {
        crate::kpi::db_to_linear(self.sinr_threshold_db)
    }

    /// Total power budget for budgeted allocators, watts.
    pub fn power_budget_watts(&self) -> f64 {
        self.budget_fraction * self.num_users as f64 * self.p_max_watts()
    }

    /// Sum-rate normalizer: configured value or the mid-scale default.
    pub fn r_ref(&self) -> f64 {
        self.reward.r_ref.unwrap_or_else(|| {
            0.5 * self.num_users as f64
                * self.b_max_hz
                * (1.0 + self.sinr_threshold_linear()).log2()
        })
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.constellation.validate()?;
        self.reward.validate()?;
        if self.num_users < 1 {
            return Err(Error::Config("num_users must be >= 1".into()));
        }
        let fsum: f64 = self.zone_fractions.iter().sum();
        if (fsum - 1.0).abs() > 1e-9 || self.zone_fractions.iter().any(|f| *f < 0.0) {
            return Err(Error::Config("zone fractions must be >= 0 and sum to 1".into()));
        }
        if self.frequency_ghz <= 0.0 {
            return Err(Error::Config("carrier frequency must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::Config("kappa must be in [0, 1]".into()));
        }
        if self.b_max_hz <= 0.0 {
            return Err(Error::Config("b_max must be positive".into()));
        }
        if self.sinr_threshold_linear() <= 0.0 {
            return Err(Error::Config("sinr threshold must be positive".into()));
        }
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.step_seconds <= 0.0 {
            return Err(Error::Config("step_seconds must be positive".into()));
        }
        if self.budget_fraction < 0.0 {
            return Err(Error::Config("budget_fraction must be >= 0".into()));
        }
        Ok(())
    }

    /// Weather scenario record for a given kind, using the built-in
    /// parameterization.
    pub fn weather(&self, kind: WeatherKind) -> WeatherScenario {
        match kind {
            WeatherKind::Nominal => WeatherScenario::nominal(),
            WeatherKind::Extreme => WeatherScenario::extreme(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
        ScenarioConfig::desk().validate().unwrap();
    }

    #[test]
    fn bad_altitude_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.constellation.altitude_km = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn weather_ranges_validate() {
        WeatherScenario::nominal().validate().unwrap();
        WeatherScenario::extreme().validate().unwrap();
        let bad = WeatherScenario {
            kind: WeatherKind::Nominal,
            rain_atten_db: (0.0, 10.0),
            gas_atten_db: 0.5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn period_matches_kepler() {
        let c = ConstellationConfig::default();
        // 2*pi*sqrt(6921^3 / 398600.4418) ~ 5730 s
        let closed_form = std::f64::consts::TAU * (6921f64.powi(3) / MU_EARTH).sqrt();
        assert!((c.period_s() - closed_form).abs() < 1e-9);
        assert!((c.period_s() - 5730.1).abs() < 1.0);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::desk();
        let text = toml::to_string(&cfg).unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.num_users, cfg.num_users);
        assert_eq!(back.constellation.num_satellites, 4);
    }
}
