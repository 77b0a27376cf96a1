//! Link-budget components: free-space loss, gaseous absorption, rain
//! attenuation, and a fixed implementation margin.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ScenarioConfig, WeatherScenario};
use crate::geometry::{elevation_deg, slant_distance, SatelliteState, UserTerminal};
use crate::Error;

/// Per-link loss and gain figures for one (satellite, user, time) triple.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub sat_id: usize,
    pub user_id: usize,
    pub distance_km: f64,
    pub elevation_deg: f64,
    pub fspl_db: f64,
    pub gas_db: f64,
    pub rain_db: f64,
    pub margin_db: f64,
    pub total_loss_db: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl LinkState {
    /// Effective linear power gain 10^((G_t + G_r - L)/10).
    pub fn linear_gain(&self) -> f64 {
        crate::kpi::db_to_linear(self.tx_gain_dbi + self.rx_gain_dbi - self.total_loss_db)
    }
}

/// Free-space path loss: 92.45 + 20 log10(d_km) + 20 log10(f_GHz) dB.
pub fn free_space_loss(distance_km: f64, frequency_ghz: f64) -> Result<f64, Error> {
    if distance_km <= 0.0 || frequency_ghz <= 0.0 {
        return Err(Error::Domain(
            "free-space loss needs positive distance and frequency".into(),
        ));
    }
    Ok(92.45 + 20.0 * distance_km.log10() + 20.0 * frequency_ghz.log10())
}

/// Zenith gas absorption scaled by the cosecant of elevation, floored at the
/// minimum elevation mask.
pub fn gas_attenuation(zenith_db: f64, elevation: f64, min_elevation_deg: f64) -> f64 {
    let el = elevation.max(min_elevation_deg).to_radians();
    zenith_db / el.sin()
}

/// Loss components for one link at one geometry update. Rain is drawn
/// uniformly from the scenario range and held constant until the next update.
pub fn total_loss(
    distance_km: f64,
    elevation: f64,
    scenario: &WeatherScenario,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64, f64), Error> {
    let fspl = free_space_loss(distance_km, cfg.frequency_ghz)?;
    let gas = gas_attenuation(scenario.gas_atten_db, elevation, cfg.min_elevation_deg);
    let (lo, hi) = scenario.rain_atten_db;
    let rain = if hi > lo { rng.random_range(lo..hi) } else { lo };
    Ok((fspl, gas, rain, cfg.implementation_margin_db))
}

/// Build the full satellite x user link matrix for one geometry update.
/// Draw order is fixed (satellite-major) so rain realizations are
/// reproducible from the stream state.
pub fn build_links(
    sats: &[SatelliteState],
    users: &[UserTerminal],
    scenario: &WeatherScenario,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<LinkState>>, Error> {
    scenario.validate()?;
    let mut matrix = Vec::with_capacity(sats.len());
    for sat in sats {
        let mut row = Vec::with_capacity(users.len());
        for user in users {
            let d = slant_distance(sat, user);
            let el = elevation_deg(sat, user);
            let (fspl, gas, rain, margin) = total_loss(d, el, scenario, cfg, rng)?;
            row.push(LinkState {
                sat_id: sat.id,
                user_id: user.id,
                distance_km: d,
                elevation_deg: el,
                fspl_db: fspl,
                gas_db: gas,
                rain_db: rain,
                margin_db: margin,
                total_loss_db: fspl + gas + rain + margin,
                tx_gain_dbi: cfg.tx_gain_dbi,
                rx_gain_dbi: cfg.rx_gain_dbi,
            });
        }
        matrix.push(row);
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::WeatherKind;
    use crate::seeds;

    #[test]
    fn fspl_reference_points() {
        assert!((free_space_loss(1.0, 1.0).unwrap() - 92.45).abs() < 1e-12);
        let l550 = free_space_loss(550.0, 12.0).unwrap();
        assert!((l550 - 168.85).abs() < 0.01, "got {l550}");
        let doubled = free_space_loss(1100.0, 12.0).unwrap();
        assert!((doubled - l550 - 6.0206).abs() < 1e-3);
        assert!(free_space_loss(0.0, 12.0).is_err());
        assert!(free_space_loss(550.0, -1.0).is_err());
    }

    #[test]
    fn degenerate_scenario_reduces_to_fspl() {
        let mut cfg = ScenarioConfig::desk();
        cfg.implementation_margin_db = 0.0;
        let scen = WeatherScenario {
            kind: WeatherKind::Nominal,
            rain_atten_db: (0.0, 0.0),
            gas_atten_db: 0.0,
        };
        let mut rng = seeds::rng(1, &[seeds::stream::RAIN]);
        let (fspl, gas, rain, margin) =
            total_loss(800.0, 45.0, &scen, &cfg, &mut rng).unwrap();
        assert_eq!(gas + rain + margin, 0.0);
        assert!((fspl + gas + rain + margin - free_space_loss(800.0, 12.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn extreme_dominates_nominal_with_matched_geometry() {
        let cfg = ScenarioConfig::desk();
        let mut rng_n = seeds::rng(3, &[seeds::stream::RAIN]);
        let mut rng_e = seeds::rng(3, &[seeds::stream::RAIN]);
        let n = total_loss(900.0, 30.0, &WeatherScenario::nominal(), &cfg, &mut rng_n).unwrap();
        let e = total_loss(900.0, 30.0, &WeatherScenario::extreme(), &cfg, &mut rng_e).unwrap();
        let tot = |c: (f64, f64, f64, f64)| c.0 + c.1 + c.2 + c.3;
        assert!(tot(e) > tot(n));
    }

    #[test]
    fn rain_draws_are_deterministic_per_seed() {
        let cfg = ScenarioConfig::desk();
        let scen = WeatherScenario::nominal();
        let draw = |seed| {
            let mut rng = seeds::rng(seed, &[seeds::stream::RAIN]);
            total_loss(700.0, 50.0, &scen, &cfg, &mut rng).unwrap().2
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn gas_scales_with_cosecant() {
        let zenith = gas_attenuation(2.0, 90.0, 10.0);
        assert!((zenith - 2.0).abs() < 1e-12);
        let low = gas_attenuation(2.0, 10.0, 10.0);
        assert!(low > zenith);
        // Elevation below the mask is floored at the mask angle.
        assert_eq!(gas_attenuation(2.0, 1.0, 10.0), low);
    }
}
