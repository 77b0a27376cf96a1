//! Per-step KPIs: SINR, rate, sum rate, Jain fairness, outage probability,
//! region aggregates, and the co-channel interference closure.

use serde::{Deserialize, Serialize};

use crate::channel::LinkState;
use crate::config::ScenarioConfig;
use crate::geometry::Region;

/// dB value to linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear ratio to dB.
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Per-user normalized power/bandwidth fractions with their physical caps.
///
/// Fractions scale linear watts: `power_watts(u) = fraction * 10^((P_max_dBm-30)/10)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Allocation {
    pub power_fraction: Vec<f64>,
    pub bandwidth_fraction: Vec<f64>,
    pub p_max_dbm: f64,
    pub b_max_hz: f64,
}

impl Allocation {
    pub fn new(
        power_fraction: Vec<f64>,
        bandwidth_fraction: Vec<f64>,
        p_max_dbm: f64,
        b_max_hz: f64,
    ) -> Self {
        let clamp = |v: Vec<f64>| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        Self {
            power_fraction: clamp(power_fraction),
            bandwidth_fraction: clamp(bandwidth_fraction),
            p_max_dbm,
            b_max_hz,
        }
    }

    /// Build from a flat action vector: first N entries are power fractions,
    /// last N are bandwidth fractions. Out-of-range values are clamped.
    pub fn from_action(action: &[f64], p_max_dbm: f64, b_max_hz: f64) -> Self {
        let n = action.len() / 2;
        Self::new(
            action[..n].to_vec(),
            action[n..].to_vec(),
            p_max_dbm,
            b_max_hz,
        )
    }

    pub fn num_users(&self) -> usize {
        self.power_fraction.len()
    }

    pub fn p_cap_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn power_watts(&self, user: usize) -> f64 {
        self.power_fraction[user] * self.p_cap_watts()
    }

    pub fn bandwidth_hz(&self, user: usize) -> f64 {
        self.bandwidth_fraction[user] * self.b_max_hz
    }
}

/// Instantaneous SINR (linear) of one link.
///
/// Zero bandwidth makes the noise term vanish; by convention the SINR is then
/// reported as 0 so the user is counted in outage instead of dividing by zero.
pub fn sinr(link: &LinkState, p_tx_watts: f64, b_hz: f64, interference_w: f64, n0_w_hz: f64) -> f64 {
    if b_hz <= 0.0 {
        return 0.0;
    }
    p_tx_watts * link.linear_gain() / (interference_w + n0_w_hz * b_hz)
}

/// Shannon rate B * log2(1 + sinr), bits/s.
pub fn rate(b_hz: f64, sinr: f64) -> f64 {
    b_hz * (1.0 + sinr).log2()
}

/// Jain's fairness index (sum R)^2 / (N * sum R^2).
///
/// All-zero rate vectors return 1 (vacuous equality) so NaNs never reach the
/// reward.
pub fn jain(rates: &[f64]) -> f64 {
    let n = rates.len() as f64;
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        return 1.0;
    }
    (sum * sum) / (n * sq)
}

/// Fraction of users whose SINR falls strictly below the threshold.
pub fn outage(sinrs: &[f64], threshold_linear: f64) -> f64 {
    let below = sinrs.iter().filter(|&&g| g < threshold_linear).count();
    below as f64 / sinrs.len() as f64
}

/// Aggregate co-channel interference at each user: leakage from non-serving
/// visible satellites, each radiating its mean allocated transmit power,
/// scaled by the overlap factor kappa.
pub fn interference(
    links: &[Vec<LinkState>],
    assoc: &[usize],
    alloc: &Allocation,
    kappa: f64,
    min_elevation_deg: f64,
) -> Vec<f64> {
    let num_sats = links.len();
    let num_users = assoc.len();
    // Mean allocated transmit power per satellite over the users it serves.
    let mut mean_power = vec![0.0f64; num_sats];
    let mut served = vec![0usize; num_sats];
    for (u, &s) in assoc.iter().enumerate() {
        mean_power[s] += alloc.power_watts(u);
        served[s] += 1;
    }
    for s in 0..num_sats {
        if served[s] > 0 {
            mean_power[s] /= served[s] as f64;
        }
    }
    (0..num_users)
        .map(|u| {
            let mut total = 0.0;
            for s in 0..num_sats {
                if s == assoc[u] || served[s] == 0 {
                    continue;
                }
                let link = &links[s][u];
                if link.elevation_deg < min_elevation_deg {
                    continue;
                }
                total += mean_power[s] * link.linear_gain();
            }
            kappa * total
        })
        .collect()
}

/// Region rate sums and the population variance of the rate vector.
#[derive(Debug, Clone, Copy)]
pub struct RegionAggregates {
    pub r_eq: f64,
    pub r_hl: f64,
    pub variance: f64,
    pub mean: f64,
}

pub fn region_aggregates(rates: &[f64], regions: &[Region]) -> RegionAggregates {
    assert_eq!(rates.len(), regions.len());
    let n = rates.len() as f64;
    let mut r_eq = 0.0;
    let mut r_hl = 0.0;
    for (r, region) in rates.iter().zip(regions) {
        match region {
            Region::Equatorial => r_eq += r,
            Region::NorthHigh | Region::SouthHigh => r_hl += r,
        }
    }
    let mean = (r_eq + r_hl) / n;
    let variance = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    RegionAggregates { r_eq, r_hl, variance, mean }
}

/// All KPIs for one decision step.
#[derive(Debug, Clone)]
pub struct KpiFrame {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
    pub sum_rate: f64,
    pub jain: f64,
    pub outage: f64,
    pub r_eq: f64,
    pub r_hl: f64,
    pub rate_variance: f64,
    pub rate_mean: f64,
    pub interference: Vec<f64>,
    pub noise_density_w_hz: f64,
    pub sinr_threshold: f64,
}

/// Evaluate the KPI frame for one geometry update under a given allocation.
pub fn compute_frame(
    links: &[Vec<LinkState>],
    assoc: &[usize],
    regions: &[Region],
    alloc: &Allocation,
    cfg: &ScenarioConfig,
) -> KpiFrame {
    let n0 = cfg.noise_density_w_hz();
    let threshold = cfg.sinr_threshold_linear();
    let interf = interference(links, assoc, alloc, cfg.kappa, cfg.min_elevation_deg);
    let num_users = assoc.len();
    let mut sinrs = Vec::with_capacity(num_users);
    let mut rates = Vec::with_capacity(num_users);
    for u in 0..num_users {
        let link = &links[assoc[u]][u];
        let b = alloc.bandwidth_hz(u);
        let g = sinr(link, alloc.power_watts(u), b, interf[u], n0);
        sinrs.push(g);
        rates.push(rate(b, g));
    }
    let sum_rate: f64 = rates.iter().sum();
    let agg = region_aggregates(&rates, regions);
    KpiFrame {
        jain: jain(&rates),
        outage: outage(&sinrs, threshold),
        sinr: sinrs,
        rate: rates,
        sum_rate,
        r_eq: agg.r_eq,
        r_hl: agg.r_hl,
        rate_variance: agg.variance,
        rate_mean: agg.mean,
        interference: interf,
        noise_density_w_hz: n0,
        sinr_threshold: threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_link(total_loss_db: f64) -> LinkState {
        LinkState {
            sat_id: 0,
            user_id: 0,
            distance_km: 550.0,
            elevation_deg: 90.0,
            fspl_db: total_loss_db,
            gas_db: 0.0,
            rain_db: 0.0,
            margin_db: 0.0,
            total_loss_db,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
        }
    }

    #[test]
    fn sinr_unit_cancellation() {
        // 0 dB net gain, 1 W transmit, 0.5 W noise -> gamma = 2.
        let link = unit_link(0.0);
        let g = sinr(&link, 1.0, 1.0, 0.0, 0.5);
        assert!((g - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_power_and_zero_bandwidth_conventions() {
        let link = unit_link(100.0);
        assert_eq!(sinr(&link, 0.0, 1e6, 0.0, 1e-20), 0.0);
        assert_eq!(sinr(&link, 1.0, 0.0, 0.0, 1e-20), 0.0);
        assert_eq!(rate(0.0, 5.0), 0.0);
    }

    #[test]
    fn rate_reference_points() {
        assert!((rate(20e6, 1.0) - 20e6).abs() < 1e-6);
        assert!((rate(10e6, 3.0) - 2e7).abs() < 1e-6);
        assert_eq!(rate(20e6, 0.0), 0.0);
    }

    #[test]
    fn jain_reference_points() {
        assert!((jain(&[5.0; 8]) - 1.0).abs() < 1e-12);
        let mut one = vec![0.0; 50];
        one[7] = 3.0;
        assert!((jain(&one) - 0.02).abs() < 1e-12);
        assert!((jain(&[1.0, 2.0, 3.0]) - 36.0 / 42.0).abs() < 1e-12);
        assert_eq!(jain(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn outage_strict_inequality_at_threshold() {
        assert_eq!(outage(&[1.0, 2.0], 0.5), 0.0);
        assert_eq!(outage(&[0.1, 2.0], 0.5), 0.5);
        // A user exactly at the threshold is not in outage.
        assert_eq!(outage(&[0.5], 0.5), 0.0);
    }

    #[test]
    fn region_aggregates_reference() {
        use Region::*;
        let agg = region_aggregates(&[0.0, 4.0], &[Equatorial, NorthHigh]);
        assert_eq!(agg.mean, 2.0);
        assert_eq!(agg.variance, 4.0);
        assert_eq!(agg.r_eq, 0.0);
        assert_eq!(agg.r_hl, 4.0);

        let all_eq = region_aggregates(&[1.0, 2.0], &[Equatorial, Equatorial]);
        assert_eq!(all_eq.r_hl, 0.0);
        assert_eq!(all_eq.r_eq, 3.0);
    }

    #[test]
    fn single_satellite_has_no_interference() {
        let cfg = ScenarioConfig::desk();
        let links = vec![vec![unit_link(160.0), unit_link(165.0)]];
        let alloc = Allocation::new(vec![1.0, 1.0], vec![1.0, 1.0], 40.0, 20e6);
        let i = interference(&links, &[0, 0], &alloc, cfg.kappa, 10.0);
        assert_eq!(i, vec![0.0, 0.0]);
    }

    #[test]
    fn kappa_zero_kills_interference() {
        let links = vec![
            vec![unit_link(160.0), unit_link(165.0)],
            vec![unit_link(161.0), unit_link(162.0)],
        ];
        let alloc = Allocation::new(vec![1.0, 1.0], vec![1.0, 1.0], 40.0, 20e6);
        let i = interference(&links, &[0, 1], &alloc, 0.0, 10.0);
        assert_eq!(i, vec![0.0, 0.0]);
        let i = interference(&links, &[0, 1], &alloc, 0.1, 10.0);
        assert!(i[0] > 0.0 && i[1] > 0.0);
    }

    #[test]
    fn action_clamping() {
        let a = Allocation::from_action(&[-0.5, 1.7, 0.3, 0.4], 40.0, 20e6);
        assert_eq!(a.power_fraction, vec![0.0, 1.0]);
        assert_eq!(a.bandwidth_fraction, vec![0.3, 0.4]);
        assert!((a.p_cap_watts() - 10.0).abs() < 1e-12);
    }
}
