//! Heuristic allocation baselines: equal split, water-filling, max-min
//! fairness, and proportional capacity. All operate on a noise-limited
//! channel estimate (kappa = 0) under the same per-user caps as the agent.

use serde::{Deserialize, Serialize};

use crate::kpi::{self, Allocation};
use crate::Error;

/// Water-filling bisection tolerance on the spent budget, relative.
pub const WF_TOLERANCE: f64 = 1e-9;
/// Max-min progressive filling granularity: budget / MMF_STEPS per grant.
pub const MMF_STEPS: usize = 10_000;

/// Which allocation policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocatorKind {
    Equal,
    Wf,
    Mmf,
    Pc,
    Drl,
    LamDrl,
}

impl AllocatorKind {
    pub fn is_learning(&self) -> bool {
        matches!(self, AllocatorKind::Drl | AllocatorKind::LamDrl)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AllocatorKind::Equal => "equal",
            AllocatorKind::Wf => "wf",
            AllocatorKind::Mmf => "mmf",
            AllocatorKind::Pc => "pc",
            AllocatorKind::Drl => "drl",
            AllocatorKind::LamDrl => "lamdrl",
        }
    }
}

impl std::fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AllocatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "equal" => Ok(AllocatorKind::Equal),
            "wf" => Ok(AllocatorKind::Wf),
            "mmf" => Ok(AllocatorKind::Mmf),
            "pc" => Ok(AllocatorKind::Pc),
            "drl" => Ok(AllocatorKind::Drl),
            "lamdrl" => Ok(AllocatorKind::LamDrl),
            other => Err(Error::Config(format!("unknown allocator '{other}'"))),
        }
    }
}

/// Noise-limited channel estimate the heuristics operate on.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot {
    /// Effective linear power gain g_u = 10^((G_t + G_r - L_u)/10) on the
    /// serving link.
    pub gains: Vec<f64>,
    /// Noise power at full bandwidth, watts: N_0 * B_max.
    pub noise_floor: Vec<f64>,
    pub p_max_dbm: f64,
    pub b_max_hz: f64,
    /// Total power budget for budgeted variants, watts.
    pub budget_watts: Option<f64>,
}

impl ChannelSnapshot {
    pub fn num_users(&self) -> usize {
        self.gains.len()
    }

    pub fn p_cap_watts(&self) -> f64 {
        kpi::dbm_to_watts(self.p_max_dbm)
    }

    /// Rate of user `u` at power `p` and full bandwidth, noise-limited.
    pub fn rate_at(&self, u: usize, p: f64) -> f64 {
        kpi::rate(self.b_max_hz, self.gains[u] * p / self.noise_floor[u])
    }

    fn validate(&self) -> Result<(), Error> {
        if self.gains.is_empty() {
            return Err(Error::Domain("snapshot has no users".into()));
        }
        if self.gains.iter().any(|g| !g.is_finite() || *g <= 0.0) {
            return Err(Error::Domain("gains must be positive and finite".into()));
        }
        if self.p_cap_watts() <= 0.0 || self.b_max_hz <= 0.0 {
            return Err(Error::Domain("caps must be positive".into()));
        }
        Ok(())
    }
}

/// Equal allocation: every beam at its per-user cap, or `budget / N_u` each
/// when a total budget is configured.
pub fn equal_allocation(snapshot: &ChannelSnapshot) -> Result<Allocation, Error> {
    snapshot.validate()?;
    let n = snapshot.num_users();
    let frac = match snapshot.budget_watts {
        None => 1.0,
        Some(budget) => (budget / n as f64 / snapshot.p_cap_watts()).clamp(0.0, 1.0),
    };
    Ok(Allocation::new(
        vec![frac; n],
        vec![1.0; n],
        snapshot.p_max_dbm,
        snapshot.b_max_hz,
    ))
}

/// Water-filling result, including the converged water level and any budget
/// that could not be spent because all per-user caps were hit.
#[derive(Debug, Clone)]
pub struct WaterFill {
    pub allocation: Allocation,
    pub water_level: f64,
    pub unspent_watts: f64,
}

/// Classical water-filling: p_u = clamp(mu - n_u/g_u, 0, cap) with the water
/// level mu found by bisection so the budget is met to [`WF_TOLERANCE`].
pub fn water_filling(snapshot: &ChannelSnapshot, total_power: f64) -> Result<WaterFill, Error> {
    snapshot.validate()?;
    if total_power <= 0.0 {
        return Err(Error::Domain("water-filling needs a positive budget".into()));
    }
    let n = snapshot.num_users();
    let cap = snapshot.p_cap_watts();
    let floors: Vec<f64> = (0..n)
        .map(|u| snapshot.noise_floor[u] / snapshot.gains[u])
        .collect();

    let spent = |mu: f64| -> f64 {
        floors
            .iter()
            .map(|f| (mu - f).clamp(0.0, cap))
            .sum::<f64>()
    };

    let max_spend = cap * n as f64;
    if total_power >= max_spend {
        // Infeasible budget: everyone at cap, report the unspent remainder.
        let level = floors.iter().cloned().fold(f64::MIN, f64::max) + cap;
        return Ok(WaterFill {
            allocation: Allocation::new(
                vec![1.0; n],
                vec![1.0; n],
                snapshot.p_max_dbm,
                snapshot.b_max_hz,
            ),
            water_level: level,
            unspent_watts: total_power - max_spend,
        });
    }

    let mut lo = floors.iter().cloned().fold(f64::MAX, f64::min);
    let mut hi = floors.iter().cloned().fold(f64::MIN, f64::max) + cap;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spent(mid) < total_power {
            lo = mid;
        } else {
            hi = mid;
        }
        if (spent(hi) - total_power).abs() / total_power < WF_TOLERANCE {
            break;
        }
    }
    let mu = hi;
    let powers: Vec<f64> = floors.iter().map(|f| (mu - f).clamp(0.0, cap)).collect();
    Ok(WaterFill {
        allocation: Allocation::new(
            powers.iter().map(|p| p / cap).collect(),
            vec![1.0; n],
            snapshot.p_max_dbm,
            snapshot.b_max_hz,
        ),
        water_level: mu,
        unspent_watts: 0.0,
    })
}

/// Max-min fairness by progressive filling: repeatedly grant a small power
/// increment to the user with the lowest achievable rate until the budget or
/// every cap is exhausted.
pub fn max_min_fairness(snapshot: &ChannelSnapshot, total_power: f64) -> Result<Allocation, Error> {
    snapshot.validate()?;
    if total_power <= 0.0 {
        return Err(Error::Domain("max-min needs a positive budget".into()));
    }
    let n = snapshot.num_users();
    let cap = snapshot.p_cap_watts();
    let delta = total_power / MMF_STEPS as f64;
    let mut powers = vec![0.0f64; n];
    let mut remaining = total_power;
    while remaining >= delta * 0.5 {
        // Lowest-rate user that still has cap headroom.
        let mut pick: Option<(usize, f64)> = None;
        for u in 0..n {
            if powers[u] >= cap {
                continue;
            }
            let r = snapshot.rate_at(u, powers[u]);
            match pick {
                Some((_, best)) if r >= best => {}
                _ => pick = Some((u, r)),
            }
        }
        let Some((u, _)) = pick else { break };
        let grant = delta.min(cap - powers[u]).min(remaining);
        powers[u] += grant;
        remaining -= grant;
    }
    Ok(Allocation::new(
        powers.iter().map(|p| p / cap).collect(),
        vec![1.0; n],
        snapshot.p_max_dbm,
        snapshot.b_max_hz,
    ))
}

/// Proportional capacity: fractions proportional to each user's estimated
/// full-cap capacity, normalized so the best user runs at cap.
pub fn proportional_capacity(snapshot: &ChannelSnapshot) -> Result<Allocation, Error> {
    snapshot.validate()?;
    let n = snapshot.num_users();
    let cap = snapshot.p_cap_watts();
    let capacities: Vec<f64> = (0..n).map(|u| snapshot.rate_at(u, cap)).collect();
    let best = capacities.iter().cloned().fold(0.0f64, f64::max);
    if best <= 0.0 {
        return equal_allocation(snapshot);
    }
    let fracs: Vec<f64> = capacities.iter().map(|c| c / best).collect();
    Ok(Allocation::new(
        fracs.clone(),
        fracs,
        snapshot.p_max_dbm,
        snapshot.b_max_hz,
    ))
}

/// Run one heuristic on a snapshot. The total budget applies to the
/// budgeted variants (equal split, water-filling, max-min) so they compete
/// under the same aggregate power; proportional capacity is defined by its
/// max-normalization and runs under per-user caps.
pub fn run_heuristic(kind: AllocatorKind, snapshot: &ChannelSnapshot) -> Result<Allocation, Error> {
    let budget = snapshot
        .budget_watts
        .unwrap_or_else(|| snapshot.num_users() as f64 * snapshot.p_cap_watts());
    let uncapped = ChannelSnapshot {
        budget_watts: None,
        ..snapshot.clone()
    };
    match kind {
        AllocatorKind::Equal => equal_allocation(snapshot),
        AllocatorKind::Wf => Ok(water_filling(snapshot, budget)?.allocation),
        AllocatorKind::Mmf => max_min_fairness(snapshot, budget),
        AllocatorKind::Pc => proportional_capacity(&uncapped),
        AllocatorKind::Drl | AllocatorKind::LamDrl => Err(Error::Config(
            "learning allocators are driven by the agent, not run_heuristic".into(),
        )),
    }
}
