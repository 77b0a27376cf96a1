//! The decision environment: state assembly, action application, reward
//! computation, and episode stepping on the 30 s geometry cadence.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::allocators::ChannelSnapshot;
use crate::channel::{build_links, LinkState};
use crate::config::{RewardConfig, ScenarioConfig, WeatherKind, WeatherScenario};
use crate::geometry::{propagate, sample_users, Region, SatelliteState, UserTerminal};
use crate::kpi::{compute_frame, Allocation, KpiFrame};
use crate::seeds::{self, stream};
use crate::strategy::{
    build_prompt, query_provider, EpisodeAggregates, EpisodePrompt, Intent, StrategyDecision,
    StrategyLabel, StrategyProvider,
};
use crate::Error;

/// Per-user feature width: latitude, longitude, slant distance, path loss,
/// region one-hot (3), previous rate, previous SINR.
pub const D_F: usize = 9;

/// Fixed affine feature scalings, chosen a priori from physical ranges so the
/// state is deterministic and bounded.
pub mod scaling {
    pub const LATITUDE: f64 = 1.0 / 90.0;
    pub const LONGITUDE: f64 = 1.0 / 180.0;
    pub const DISTANCE_KM: f64 = 1.0 / 3000.0;
    pub const PATH_LOSS_DB: f64 = 1.0 / 250.0;
    pub const RATE_BPS: f64 = 1.0 / 2e8;
    pub const SINR_LINEAR: f64 = 1.0 / 500.0;
    pub const SUM_RATE_PER_USER_BPS: f64 = 1.0 / 2e8;
}

/// Observation: per-user feature matrix plus the global KPI triple.
#[derive(Debug, Clone)]
pub struct StateVector {
    /// N_u x D_F.
    pub features: Array2<f64>,
    /// (scaled sum rate, Jain, outage) from the previous step; zeros at reset.
    pub global: [f64; 3],
}

impl StateVector {
    pub fn num_users(&self) -> usize {
        self.features.nrows()
    }
}

/// Episode strategy context: the label in force, how it was obtained, and the
/// prompt that produced it.
#[derive(Debug, Clone)]
pub struct StrategyContext {
    pub decision: StrategyDecision,
    pub prompt: EpisodePrompt,
}

impl StrategyContext {
    pub fn label(&self) -> StrategyLabel {
        self.decision.label
    }
}

/// Reward split into its additive parts.
#[derive(Debug, Clone, Copy)]
pub struct RewardBreakdown {
    pub base: f64,
    pub shaping: f64,
    pub total: f64,
}

/// Base reward lambda_R * R_sum/R_ref + lambda_J * J - lambda_O * P_out.
pub fn base_reward(frame: &KpiFrame, cfg: &RewardConfig, r_ref: f64) -> f64 {
    cfg.lambda_r * frame.sum_rate / r_ref + cfg.lambda_j * frame.jain - cfg.lambda_o * frame.outage
}

/// Strategy-dependent shaping term.
pub fn shaping(frame: &KpiFrame, sigma: StrategyLabel, cfg: &RewardConfig) -> f64 {
    match sigma {
        StrategyLabel::A => cfg.eta_a * frame.r_eq / (frame.sum_rate + cfg.epsilon),
        StrategyLabel::B => {
            -cfg.eta_b * frame.rate_variance / (frame.rate_mean * frame.rate_mean + cfg.epsilon)
        }
        StrategyLabel::C => cfg.eta_c * frame.r_hl / (frame.sum_rate + cfg.epsilon),
        StrategyLabel::D => 0.0,
    }
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: StateVector,
    pub reward: RewardBreakdown,
    pub frame: KpiFrame,
    pub done: bool,
}

/// One episode-serial NTN downlink environment.
pub struct NtnEnv {
    cfg: ScenarioConfig,
    weather: WeatherScenario,
    provider: Box<dyn StrategyProvider>,

    // Episode state.
    users: Vec<UserTerminal>,
    regions: Vec<Region>,
    sats: Vec<SatelliteState>,
    links: Vec<Vec<LinkState>>,
    assoc: Vec<usize>,
    rain_rng: ChaCha8Rng,
    phase_deg: f64,
    sigma: Option<StrategyContext>,
    prev_frame: Option<KpiFrame>,
    step_idx: usize,
    done: bool,
    started: bool,

    // Mean KPIs of the finished episode, feeding the next prompt.
    episode_kpi_sum: (f64, f64, f64),
    last_episode_kpis: Option<(f64, f64, f64)>,
}

impl NtnEnv {
    pub fn new(
        cfg: ScenarioConfig,
        weather_kind: WeatherKind,
        provider: Box<dyn StrategyProvider>,
    ) -> Result<Self, Error> {
        cfg.validate()?;
        let weather = cfg.weather(weather_kind);
        weather.validate()?;
        Ok(Self {
            cfg,
            weather,
            provider,
            users: Vec::new(),
            regions: Vec::new(),
            sats: Vec::new(),
            links: Vec::new(),
            assoc: Vec::new(),
            rain_rng: seeds::rng(0, &[stream::RAIN]),
            phase_deg: 0.0,
            sigma: None,
            prev_frame: None,
            step_idx: 0,
            done: false,
            started: false,
            episode_kpi_sum: (0.0, 0.0, 0.0),
            last_episode_kpis: None,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn weather_kind(&self) -> WeatherKind {
        self.weather.kind
    }

    pub fn users(&self) -> &[UserTerminal] {
        &self.users
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn strategy(&self) -> Option<&StrategyContext> {
        self.sigma.as_ref()
    }

    /// Start a fresh episode: sample the user layout and orbital phase from
    /// the episode seed, build the prompt, and query the provider exactly
    /// once.
    pub fn reset(
        &mut self,
        episode_seed: u64,
        intent: Intent,
    ) -> Result<(StateVector, StrategyContext), Error> {
        let mut user_rng = seeds::rng(episode_seed, &[stream::USERS]);
        let mut phase_rng = seeds::rng(episode_seed, &[stream::PHASE]);
        self.rain_rng = seeds::rng(episode_seed, &[stream::RAIN]);

        self.users = sample_users(self.cfg.num_users, self.cfg.zone_fractions, &mut user_rng)?;
        self.regions = self.users.iter().map(|u| u.region).collect();
        self.phase_deg = phase_rng.random_range(0.0..360.0);
        self.step_idx = 0;
        self.done = false;
        self.started = true;
        self.prev_frame = None;
        self.episode_kpi_sum = (0.0, 0.0, 0.0);

        self.update_geometry(0.0)?;

        let losses: Vec<f64> = self
            .assoc
            .iter()
            .enumerate()
            .map(|(u, &s)| self.links[s][u].total_loss_db)
            .collect();
        let n = losses.len() as f64;
        let mean = losses.iter().sum::<f64>() / n;
        let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
        let counts = count_regions(&self.regions);
        let prompt = build_prompt(
            &EpisodeAggregates {
                weather: self.weather.kind,
                user_counts: counts,
                pathloss_mean_db: mean,
                pathloss_var_db2: var,
                last_kpis: self.last_episode_kpis,
            },
            intent,
        );
        let decision = query_provider(&prompt, self.provider.as_ref());
        let context = StrategyContext { decision, prompt };
        self.sigma = Some(context.clone());

        Ok((self.observe(), context))
    }

    /// Advance one 30 s decision step under the given action.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome, Error> {
        if !self.started {
            return Err(Error::Episode("step before reset".into()));
        }
        if self.done {
            return Err(Error::Episode("step after episode end".into()));
        }
        if action.len() != 2 * self.cfg.num_users {
            return Err(Error::Episode(format!(
                "action length {} != 2 * {}",
                action.len(),
                self.cfg.num_users
            )));
        }
        self.step_idx += 1;
        let t = self.step_idx as f64 * self.cfg.step_seconds;
        self.update_geometry(t)?;

        let alloc = Allocation::from_action(action, self.cfg.p_max_dbm, self.cfg.b_max_hz);
        let frame = compute_frame(&self.links, &self.assoc, &self.regions, &alloc, &self.cfg);

        let sigma = self.sigma.as_ref().expect("episode started").label();
        let base = base_reward(&frame, &self.cfg.reward, self.cfg.r_ref());
        let shape = shaping(&frame, sigma, &self.cfg.reward);
        let reward = RewardBreakdown { base, shaping: shape, total: base + shape };

        self.episode_kpi_sum.0 += frame.sum_rate;
        self.episode_kpi_sum.1 += frame.jain;
        self.episode_kpi_sum.2 += frame.outage;

        self.prev_frame = Some(frame.clone());
        self.done = self.step_idx >= self.cfg.horizon;
        if self.done {
            let n = self.cfg.horizon as f64;
            self.last_episode_kpis = Some((
                self.episode_kpi_sum.0 / n,
                self.episode_kpi_sum.1 / n,
                self.episode_kpi_sum.2 / n,
            ));
        }

        Ok(StepOutcome {
            state: self.observe(),
            reward,
            frame,
            done: self.done,
        })
    }

    /// Current simulation time, seconds.
    pub fn time_s(&self) -> f64 {
        self.step_idx as f64 * self.cfg.step_seconds
    }

    /// Noise-limited channel estimate on the serving links at the current
    /// geometry, for the heuristic allocators.
    pub fn snapshot(&self) -> ChannelSnapshot {
        let n0b = self.cfg.noise_density_w_hz() * self.cfg.b_max_hz;
        ChannelSnapshot {
            gains: self
                .assoc
                .iter()
                .enumerate()
                .map(|(u, &s)| self.links[s][u].linear_gain())
                .collect(),
            noise_floor: vec![n0b; self.cfg.num_users],
            p_max_dbm: self.cfg.p_max_dbm,
            b_max_hz: self.cfg.b_max_hz,
            budget_watts: Some(self.cfg.power_budget_watts()),
        }
    }

    fn update_geometry(&mut self, t: f64) -> Result<(), Error> {
        let constellation = crate::config::ConstellationConfig {
            initial_phase_deg: self.phase_deg,
            ..self.cfg.constellation.clone()
        };
        self.sats = propagate(&constellation, t)?;
        self.links = build_links(&self.sats, &self.users, &self.weather, &self.cfg, &mut self.rain_rng)?;
        let losses: Vec<Vec<f64>> = self
            .links
            .iter()
            .map(|row| row.iter().map(|l| l.total_loss_db).collect())
            .collect();
        let visible: Vec<Vec<bool>> = self
            .links
            .iter()
            .map(|row| {
                row.iter()
                    .map(|l| l.elevation_deg >= self.cfg.min_elevation_deg)
                    .collect()
            })
            .collect();
        self.assoc = crate::geometry::associate(
            self.sats.len(),
            self.users.len(),
            &losses,
            &visible,
        )?;
        Ok(())
    }

    fn observe(&self) -> StateVector {
        let n = self.cfg.num_users;
        let mut features = Array2::zeros((n, D_F));
        for u in 0..n {
            let user = &self.users[u];
            let link = &self.links[self.assoc[u]][u];
            let (prev_rate, prev_sinr) = match &self.prev_frame {
                Some(f) => (f.rate[u], f.sinr[u]),
                None => (0.0, 0.0),
            };
            let onehot = user.region.one_hot();
            let row = [
                user.latitude_deg * scaling::LATITUDE,
                user.longitude_deg * scaling::LONGITUDE,
                // A user with no visible satellite can see ranges past the
                // nominal scale; keep the feature bounded.
                (link.distance_km * scaling::DISTANCE_KM).clamp(0.0, 1.0),
                (link.total_loss_db * scaling::PATH_LOSS_DB).clamp(0.0, 1.0),
                onehot[0],
                onehot[1],
                onehot[2],
                (prev_rate * scaling::RATE_BPS).clamp(0.0, 1.0),
                (prev_sinr * scaling::SINR_LINEAR).clamp(0.0, 1.0),
            ];
            for (j, v) in row.iter().enumerate() {
                features[(u, j)] = *v;
            }
        }
        let global = match &self.prev_frame {
            Some(f) => [
                (f.sum_rate / n as f64 * scaling::SUM_RATE_PER_USER_BPS).clamp(0.0, 1.0),
                f.jain,
                f.outage,
            ],
            None => [0.0, 0.0, 0.0],
        };
        StateVector { features, global }
    }
}

fn count_regions(regions: &[Region]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for r in regions {
        match r {
            Region::Equatorial => counts[0] += 1,
            Region::NorthHigh => counts[1] += 1,
            Region::SouthHigh => counts[2] += 1,
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocators::{equal_allocation, ChannelSnapshot};
    use crate::strategy::MockProvider;

    fn env(kappa: f64) -> NtnEnv {
        let mut cfg = ScenarioConfig::desk();
        cfg.kappa = kappa;
        NtnEnv::new(cfg, WeatherKind::Nominal, Box::new(MockProvider)).unwrap()
    }

    #[test]
    fn reset_is_deterministic_and_shaped() {
        let mut e1 = env(0.1);
        let mut e2 = env(0.1);
        let (s1, c1) = e1.reset(77, Intent::Fairness).unwrap();
        let (s2, c2) = e2.reset(77, Intent::Fairness).unwrap();
        assert_eq!(s1.features, s2.features);
        assert_eq!(s1.global, s2.global);
        assert_eq!(c1.label(), c2.label());
        assert_eq!(s1.features.dim(), (10, D_F));
        assert_eq!(c1.label(), StrategyLabel::B);

        // Fresh reset gives an independent episode.
        let (s3, _) = e1.reset(78, Intent::Fairness).unwrap();
        assert_ne!(s3.features, s1.features);
    }

    #[test]
    fn identical_actions_reproduce_frames() {
        let action = vec![0.7; 20];
        let run = || {
            let mut e = env(0.1);
            e.reset(5, Intent::Efficiency).unwrap();
            let a = e.step(&action).unwrap();
            let b = e.step(&action).unwrap();
            (a.frame.sum_rate, b.frame.sum_rate, a.frame.jain)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn all_zero_action_hits_documented_reward() {
        let mut e = env(0.1);
        e.reset(3, Intent::Efficiency).unwrap();
        let out = e.step(&vec![0.0; 20]).unwrap();
        assert_eq!(out.frame.sum_rate, 0.0);
        assert_eq!(out.frame.outage, 1.0);
        // Base reward = lambda_J * 1 - lambda_O under the all-zero Jain
        // convention.
        let cfg = e.config().reward.clone();
        assert!((out.reward.base - (cfg.lambda_j - cfg.lambda_o)).abs() < 1e-12);
        assert_eq!(out.reward.total, out.reward.base + out.reward.shaping);
    }

    #[test]
    fn all_ones_action_matches_equal_baseline_at_kappa_zero() {
        let mut e = env(0.0);
        e.reset(11, Intent::Efficiency).unwrap();
        let out = e.step(&vec![1.0; 20]).unwrap();

        // Recompute the equal-allocation frame on the same serving links.
        let snap = ChannelSnapshot {
            budget_watts: None,
            ..e.snapshot()
        };
        let alloc = equal_allocation(&snap).unwrap();
        for u in 0..10 {
            let g = snap.gains[u] * alloc.power_watts(u) / snap.noise_floor[u];
            assert!((g - out.frame.sinr[u]).abs() / g.max(1e-30) < 1e-12);
        }
    }

    #[test]
    fn episode_ends_after_horizon_and_rejects_extra_steps() {
        let mut e = env(0.1);
        e.reset(1, Intent::Fairness).unwrap();
        let horizon = e.config().horizon;
        let mut last_done = false;
        for k in 1..=horizon {
            let out = e.step(&vec![0.5; 20]).unwrap();
            last_done = out.done;
            assert_eq!(e.time_s(), 30.0 * k as f64);
        }
        assert!(last_done);
        assert!(e.step(&vec![0.5; 20]).is_err());
    }

    #[test]
    fn reward_is_additive_and_shaping_cases_hold() {
        let mut e = env(0.1);
        e.reset(9, Intent::Fairness).unwrap();
        let out = e.step(&vec![0.8; 20]).unwrap();
        let cfg = e.config().reward.clone();
        let frame = &out.frame;

        assert_eq!(
            shaping(frame, StrategyLabel::D, &cfg),
            0.0,
            "sigma D never shapes"
        );
        let a = shaping(frame, StrategyLabel::A, &cfg);
        let c = shaping(frame, StrategyLabel::C, &cfg);
        let b = shaping(frame, StrategyLabel::B, &cfg);
        assert!(a.abs() <= cfg.eta_a + 1e-12);
        assert!(c.abs() <= cfg.eta_c + 1e-12);
        assert!(b <= 0.0);
        // A/C antisymmetry: shares of the sum rate.
        let ratio = a / cfg.eta_a + c / cfg.eta_c;
        assert!((ratio - frame.sum_rate / (frame.sum_rate + cfg.epsilon)).abs() < 1e-12);
    }

    #[test]
    fn state_features_are_bounded() {
        let mut e = env(0.1);
        e.reset(21, Intent::Efficiency).unwrap();
        for _ in 0..5 {
            let out = e.step(&vec![1.0; 20]).unwrap();
            for v in out.state.features.iter() {
                assert!(v.is_finite() && (-1.0..=1.0).contains(v), "feature {v}");
            }
            for v in out.state.global {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
