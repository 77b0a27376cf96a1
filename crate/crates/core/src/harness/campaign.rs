//! Campaign execution: per-(weather, seed, allocator) training and
//! evaluation, with raw CSV emission and derived summary files.

use std::fmt::Write as _;
use std::path::Path;

use crate::agent::{Agent, AgentConfig, ReplayBuffer, Transition};
use crate::allocators::{run_heuristic, AllocatorKind, ChannelSnapshot};
use crate::config::WeatherKind;
use crate::env::NtnEnv;
use crate::harness::records::{
    AttentionRow, EpisodeRow, StepRow, StrategyRow, ATTENTION_FILE, ATTENTION_HEADER,
    EPISODES_FILE, EPISODES_HEADER, STEPS_FILE, STEPS_HEADER, STRATEGIES_FILE, STRATEGIES_HEADER,
};
use crate::harness::{
    allocator_tag, make_provider, summary, weather_tag, CampaignConfig, CampaignReport,
};
use crate::kpi::Allocation;
use crate::seeds::{self, stream};
use crate::geometry::Region;
use crate::strategy::{Intent, StrategyLabel};
use crate::Error;

/// Raw per-run records before they are written out.
#[derive(Default)]
pub struct RawRecords {
    pub episodes: Vec<EpisodeRow>,
    pub steps: Vec<StepRow>,
    pub strategies: Vec<StrategyRow>,
    pub attention: Vec<AttentionRow>,
}

/// Run a full campaign: train learning allocators, evaluate everything on
/// identical realizations, write the raw CSVs, and derive the summary and
/// plot files.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport, Error> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    // Fail on an unwritable output directory before any computation.
    let probe = config.output_dir.join(".write_probe");
    std::fs::write(&probe, b"ok")?;
    std::fs::remove_file(&probe)?;

    let mut raw = RawRecords::default();
    for &weather in &config.weathers {
        for &seed in &config.seeds {
            for &allocator in &config.allocators {
                if allocator.is_learning() {
                    run_learning_cell(config, weather, seed, allocator, &mut raw)?;
                } else {
                    run_heuristic_cell(config, weather, seed, allocator, &mut raw)?;
                }
            }
        }
    }

    write_raw(config, &raw)?;
    let report = summary::summarize_dir(&config.output_dir)?;
    std::fs::write(
        config.output_dir.join(crate::harness::records::SUMMARY_FILE),
        report.to_summary_csv(),
    )?;
    crate::harness::plots::emit_plot_data(&report, &config.output_dir)?;
    Ok(report)
}

/// Per-step trace of one finished episode.
struct EpisodeTrace {
    intent: Intent,
    label: String,
    fallback: bool,
    prompt_hash: String,
    steps: Vec<StepTrace>,
    attention: Vec<[f64; 7]>,
}

struct StepTrace {
    sum_rate: f64,
    jain: f64,
    outage: f64,
    base: f64,
    shaping: f64,
    total: f64,
}

impl EpisodeTrace {
    fn mean(&self, f: impl Fn(&StepTrace) -> f64) -> f64 {
        self.steps.iter().map(&f).sum::<f64>() / self.steps.len() as f64
    }
}

fn record_episode(
    raw: &mut RawRecords,
    trace: &EpisodeTrace,
    allocator: AllocatorKind,
    weather: WeatherKind,
    seed: u64,
    phase: &str,
    episode: usize,
) {
    let alloc = allocator.to_string();
    let w = weather.to_string();
    raw.episodes.push(EpisodeRow {
        allocator: alloc.clone(),
        weather: w.clone(),
        seed,
        phase: phase.to_string(),
        episode,
        intent: trace.intent.to_string(),
        label: trace.label.clone(),
        fallback: trace.fallback,
        sum_rate_bps: trace.mean(|s| s.sum_rate),
        jain: trace.mean(|s| s.jain),
        outage: trace.mean(|s| s.outage),
        reward: trace.mean(|s| s.total),
    });
    for (k, s) in trace.steps.iter().enumerate() {
        raw.steps.push(StepRow {
            allocator: alloc.clone(),
            weather: w.clone(),
            seed,
            phase: phase.to_string(),
            episode,
            step: k + 1,
            sum_rate_bps: s.sum_rate,
            jain: s.jain,
            outage: s.outage,
            reward_base: s.base,
            reward_shaping: s.shaping,
            reward_total: s.total,
        });
    }
    if allocator.is_learning() {
        raw.strategies.push(StrategyRow {
            allocator: alloc.clone(),
            weather: w.clone(),
            seed,
            phase: phase.to_string(),
            episode,
            intent: trace.intent.to_string(),
            label: trace.label.clone(),
            fallback: trace.fallback,
            prompt_hash: trace.prompt_hash.clone(),
            sum_rate_bps: trace.mean(|s| s.sum_rate),
        });
    }
    if phase == "eval" && allocator.is_learning() {
        for (k, weights) in trace.attention.iter().enumerate() {
            raw.attention.push(AttentionRow {
                allocator: alloc.clone(),
                weather: w.clone(),
                seed,
                episode,
                step: k + 1,
                weights: *weights,
            });
        }
    }
}

/// Strategy-informed exploration prior: during training the guided agent's
/// exploration is mean-shifted toward generous allocation for the strategy's
/// focus group (A: equatorial users, C: high-latitude users, B/D: everyone),
/// so its replay data concentrates where the advised strategy operates.
fn exploration_bias(label: StrategyLabel, regions: &[Region]) -> Vec<f64> {
    let n = regions.len();
    let mut bias = vec![0.0; 2 * n];
    for (u, region) in regions.iter().enumerate() {
        let focus = match label {
            StrategyLabel::A => matches!(region, Region::Equatorial),
            StrategyLabel::C => !matches!(region, Region::Equatorial),
            StrategyLabel::B | StrategyLabel::D => true,
        };
        if focus {
            bias[u] = 0.1;
            bias[n + u] = 0.1;
        }
    }
    bias
}

/// Flat action vector for a heuristic allocation.
fn heuristic_action(allocator: AllocatorKind, snapshot: &ChannelSnapshot) -> Result<Vec<f64>, Error> {
    let alloc: Allocation = run_heuristic(allocator, snapshot)?;
    let mut action = alloc.power_fraction.clone();
    action.extend_from_slice(&alloc.bandwidth_fraction);
    Ok(action)
}

fn run_heuristic_cell(
    config: &CampaignConfig,
    weather: WeatherKind,
    seed: u64,
    allocator: AllocatorKind,
    raw: &mut RawRecords,
) -> Result<(), Error> {
    let mut env = NtnEnv::new(config.scenario.clone(), weather, make_provider(config.provider))?;
    let wtag = weather_tag(weather);
    for episode in 0..config.episodes_eval {
        let episode_seed = seeds::derive(seed, &[stream::EVAL_EPISODE, wtag, episode as u64]);
        // Evaluation measures the operator's throughput objective; the
        // intent diversity lives in the training schedule.
        let intent = Intent::Efficiency;
        let (_, ctx) = env.reset(episode_seed, intent)?;
        let mut trace = EpisodeTrace {
            intent,
            label: ctx.label().to_string(),
            fallback: ctx.decision.fallback,
            prompt_hash: ctx.prompt.hash(),
            steps: Vec::new(),
            attention: Vec::new(),
        };
        loop {
            let action = heuristic_action(allocator, &env.snapshot())?;
            let out = env.step(&action)?;
            trace.steps.push(StepTrace {
                sum_rate: out.frame.sum_rate,
                jain: out.frame.jain,
                outage: out.frame.outage,
                base: out.reward.base,
                shaping: out.reward.shaping,
                total: out.reward.total,
            });
            if out.done {
                break;
            }
        }
        record_episode(raw, &trace, allocator, weather, seed, "eval", episode);
    }
    Ok(())
}

fn run_learning_cell(
    config: &CampaignConfig,
    weather: WeatherKind,
    seed: u64,
    allocator: AllocatorKind,
    raw: &mut RawRecords,
) -> Result<(), Error> {
    let guided = allocator == AllocatorKind::LamDrl;
    let wtag = weather_tag(weather);
    let atag = allocator_tag(allocator);
    let agent_seed = seeds::derive(seed, &[wtag, atag]);
    let mut agent = Agent::new(AgentConfig::new(config.scenario.num_users, guided), agent_seed);
    let mut buffer = ReplayBuffer::new(agent.cfg.buffer_capacity);
    let mut explore_rng = seeds::rng(seed, &[stream::EXPLORATION, wtag, atag]);
    let mut replay_rng = seeds::rng(seed, &[stream::REPLAY, wtag, atag]);

    let mut env = NtnEnv::new(config.scenario.clone(), weather, make_provider(config.provider))?;

    // Model selection: validate the deterministic policy periodically and
    // keep the best checkpoint, so a late training collapse cannot destroy
    // an already-good policy. The pre-training policy is the baseline.
    const VALIDATE_EVERY: usize = 25;
    const VALIDATION_EPISODES: usize = 5;
    let mut best_score = validate_policy(&mut env, &agent, seed, wtag, VALIDATION_EPISODES)?;
    let mut best_ckpt = agent.checkpoint("campaign");

    // Training.
    for episode in 0..config.episodes_train {
        let episode_seed = seeds::derive(seed, &[stream::TRAIN_EPISODE, wtag, episode as u64]);
        let intent = Intent::round_robin(episode);
        let (mut state, ctx) = env.reset(episode_seed, intent)?;
        let label = ctx.label();
        let mut trace = EpisodeTrace {
            intent,
            label: label.to_string(),
            fallback: ctx.decision.fallback,
            prompt_hash: ctx.prompt.hash(),
            steps: Vec::new(),
            attention: Vec::new(),
        };
        // Linear exploration-noise decay to a 20% floor over the training run.
        let progress = episode as f64 / config.episodes_train.max(1) as f64;
        let noise_std = agent.cfg.exploration_noise_std * (1.0 - progress).max(0.2);
        let bias = if guided {
            Some(exploration_bias(label, env.regions()))
        } else {
            None
        };
        loop {
            let mut action = agent.act(&state, label, noise_std, &mut explore_rng);
            if let Some(bias) = &bias {
                for (a, b) in action.iter_mut().zip(bias) {
                    *a = (*a + b).clamp(0.0, 1.0);
                }
            }
            let out = env.step(&action)?;
            // The guided agent treats shaping as a curriculum: the term is
            // annealed to zero over training so the final policy optimizes
            // the unmodified objective. The unguided ablation never sees it.
            let reward = if guided {
                out.reward.base + (1.0 - progress) * out.reward.shaping
            } else {
                out.reward.base
            };
            buffer.push(Transition {
                state,
                action,
                reward,
                next_state: out.state.clone(),
                label,
            });
            agent.train_step(&buffer, &mut replay_rng);
            trace.steps.push(StepTrace {
                sum_rate: out.frame.sum_rate,
                jain: out.frame.jain,
                outage: out.frame.outage,
                base: out.reward.base,
                shaping: out.reward.shaping,
                total: out.reward.total,
            });
            state = out.state;
            if out.done {
                break;
            }
        }
        record_episode(raw, &trace, allocator, weather, seed, "train", episode);

        if (episode + 1) % VALIDATE_EVERY == 0 || episode + 1 == config.episodes_train {
            let score = validate_policy(&mut env, &agent, seed, wtag, VALIDATION_EPISODES)?;
            if score > best_score {
                best_score = score;
                best_ckpt = agent.checkpoint("campaign");
            }
        }
    }
    agent.restore(&best_ckpt)?;

    // Evaluation with zero exploration noise on the shared realizations.
    let mut zero_rng = seeds::rng(seed, &[stream::EXPLORATION, wtag, atag, 1]);
    for episode in 0..config.episodes_eval {
        let episode_seed = seeds::derive(seed, &[stream::EVAL_EPISODE, wtag, episode as u64]);
        let intent = Intent::Efficiency;
        let (mut state, ctx) = env.reset(episode_seed, intent)?;
        let label = ctx.label();
        let mut trace = EpisodeTrace {
            intent,
            label: label.to_string(),
            fallback: ctx.decision.fallback,
            prompt_hash: ctx.prompt.hash(),
            steps: Vec::new(),
            attention: Vec::new(),
        };
        loop {
            trace.attention.push(agent.attention_summary(&state, label));
            let action = agent.act(&state, label, 0.0, &mut zero_rng);
            let out = env.step(&action)?;
            trace.steps.push(StepTrace {
                sum_rate: out.frame.sum_rate,
                jain: out.frame.jain,
                outage: out.frame.outage,
                base: out.reward.base,
                shaping: out.reward.shaping,
                total: out.reward.total,
            });
            state = out.state;
            if out.done {
                break;
            }
        }
        record_episode(raw, &trace, allocator, weather, seed, "eval", episode);
    }
    Ok(())
}

/// Mean sum rate of the deterministic policy on held-out validation
/// episodes (disjoint from both the training and evaluation seed indices).
fn validate_policy(
    env: &mut NtnEnv,
    agent: &Agent,
    seed: u64,
    wtag: u64,
    episodes: usize,
) -> Result<f64, Error> {
    let mut zero_rng = seeds::rng(seed, &[stream::EXPLORATION, wtag, 2]);
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 0..episodes {
        let episode_seed =
            seeds::derive(seed, &[stream::EVAL_EPISODE, wtag, 1_000_000 + k as u64]);
        let (mut state, ctx) = env.reset(episode_seed, Intent::Efficiency)?;
        let label = ctx.label();
        loop {
            let action = agent.act(&state, label, 0.0, &mut zero_rng);
            let out = env.step(&action)?;
            total += out.frame.sum_rate;
            count += 1;
            state = out.state;
            if out.done {
                break;
            }
        }
    }
    Ok(total / count as f64)
}

/// Evaluate a trained agent outside a campaign; used by the acceptance
/// checks. Returns the mean eval sum rate in bits/s.
pub fn eval_mean_sum_rate(
    env: &mut NtnEnv,
    agent: &Agent,
    seed: u64,
    weather: WeatherKind,
    episodes: usize,
) -> Result<f64, Error> {
    let wtag = weather_tag(weather);
    let mut zero_rng = seeds::rng(seed, &[stream::EXPLORATION, 1]);
    let mut total = 0.0;
    let mut count = 0usize;
    for episode in 0..episodes {
        let episode_seed = seeds::derive(seed, &[stream::EVAL_EPISODE, wtag, episode as u64]);
        let (mut state, ctx) = env.reset(episode_seed, Intent::Efficiency)?;
        let label = ctx.label();
        loop {
            let action = agent.act(&state, label, 0.0, &mut zero_rng);
            let out = env.step(&action)?;
            total += out.frame.sum_rate;
            count += 1;
            state = out.state;
            if out.done {
                break;
            }
        }
    }
    Ok(total / count as f64)
}

fn write_raw(config: &CampaignConfig, raw: &RawRecords) -> Result<(), Error> {
    let budget_note = format!(
        "# power budget (equal, wf, mmf): budget_fraction {} * num_users {} * p_max {:.3} W = {:.3} W; pc runs at per-user caps",
        config.scenario.budget_fraction,
        config.scenario.num_users,
        config.scenario.p_max_watts(),
        config.scenario.power_budget_watts(),
    );
    write_csv(
        &config.output_dir.join(EPISODES_FILE),
        &budget_note,
        EPISODES_HEADER,
        raw.episodes.iter().map(EpisodeRow::to_csv),
    )?;
    write_csv(
        &config.output_dir.join(STEPS_FILE),
        &budget_note,
        STEPS_HEADER,
        raw.steps.iter().map(StepRow::to_csv),
    )?;
    write_csv(
        &config.output_dir.join(STRATEGIES_FILE),
        "# one row per episode of a learning allocator, training and evaluation phases",
        STRATEGIES_HEADER,
        raw.strategies.iter().map(StrategyRow::to_csv),
    )?;
    write_csv(
        &config.output_dir.join(ATTENTION_FILE),
        "# per-step attention attribution over the seven feature categories",
        ATTENTION_HEADER,
        raw.attention.iter().map(AttentionRow::to_csv),
    )?;
    std::fs::write(config.output_dir.join("campaign.toml"), config.to_toml())?;
    Ok(())
}

fn write_csv(
    path: &Path,
    comment: &str,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<(), Error> {
    let mut out = String::new();
    writeln!(out, "{comment}").unwrap();
    writeln!(out, "{header}").unwrap();
    for row in rows {
        writeln!(out, "{row}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}
