//! Per-episode strategy guidance: prompt construction, provider query with
//! fallback, the deterministic mock provider, and the learnable strategy
//! embedding table.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::WeatherKind;
use crate::Error;

/// Prompt template version; bump when the rendered text changes.
pub const PROMPT_VERSION: &str = "strategy-prompt/v1";

/// Default embedding width.
pub const D_STR: usize = 16;

/// The four episode strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyLabel {
    /// Equatorial priority.
    A,
    /// Fairness focused.
    B,
    /// High-latitude priority.
    C,
    /// Opportunistic efficiency.
    D,
}

impl StrategyLabel {
    pub const ALL: [StrategyLabel; 4] =
        [StrategyLabel::A, StrategyLabel::B, StrategyLabel::C, StrategyLabel::D];

    pub fn index(&self) -> usize {
        match self {
            StrategyLabel::A => 0,
            StrategyLabel::B => 1,
            StrategyLabel::C => 2,
            StrategyLabel::D => 3,
        }
    }

    pub fn from_index(i: usize) -> StrategyLabel {
        Self::ALL[i]
    }
}

impl std::fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = match self {
            StrategyLabel::A => 'A',
            StrategyLabel::B => 'B',
            StrategyLabel::C => 'C',
            StrategyLabel::D => 'D',
        };
        write!(f, "{c}")
    }
}

impl std::str::FromStr for StrategyLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "A" => Ok(StrategyLabel::A),
            "B" => Ok(StrategyLabel::B),
            "C" => Ok(StrategyLabel::C),
            "D" => Ok(StrategyLabel::D),
            other => Err(Error::Provider(format!("invalid strategy label '{other}'"))),
        }
    }
}

/// Operator objective included in each episode prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intent {
    Fairness,
    Efficiency,
    ChallengingCoverage,
}

impl Intent {
    /// Round-robin schedule over episodes.
    pub fn round_robin(episode: usize) -> Intent {
        match episode % 3 {
            0 => Intent::Fairness,
            1 => Intent::Efficiency,
            _ => Intent::ChallengingCoverage,
        }
    }
}

impl std::fmt::Display for Intent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Intent::Fairness => write!(f, "fairness"),
            Intent::Efficiency => write!(f, "efficiency"),
            Intent::ChallengingCoverage => write!(f, "challenging_coverage"),
        }
    }
}

/// Aggregates summarizing the upcoming episode's initial conditions.
#[derive(Debug, Clone)]
pub struct EpisodeAggregates {
    pub weather: WeatherKind,
    /// Users per (equatorial, north-high, south-high) zone.
    pub user_counts: [usize; 3],
    pub pathloss_mean_db: f64,
    pub pathloss_var_db2: f64,
    /// (sum_rate, jain, outage) from the previous episode, absent on the first.
    pub last_kpis: Option<(f64, f64, f64)>,
}

/// The rendered per-episode prompt.
#[derive(Debug, Clone)]
pub struct EpisodePrompt {
    pub weather: WeatherKind,
    pub user_counts: [usize; 3],
    pub pathloss_mean_db: f64,
    pub pathloss_var_db2: f64,
    pub last_kpis: Option<(f64, f64, f64)>,
    pub operator_intent: Intent,
    pub rendered_text: String,
}

impl EpisodePrompt {
    /// FNV-1a hash of the rendered text, hex-encoded; used for episode logs.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.rendered_text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Render the deterministic prompt text from the episode aggregates.
pub fn build_prompt(aggregates: &EpisodeAggregates, intent: Intent) -> EpisodePrompt {
    let total: usize = aggregates.user_counts.iter().sum();
    let kpi_block = match aggregates.last_kpis {
        Some((sum_rate, jain, outage)) => format!(
            "Previous-episode KPIs: sum rate {:.3} Mbps, Jain index {:.4}, outage {:.4}.",
            sum_rate / 1e6,
            jain,
            outage
        ),
        None => "Previous-episode KPIs: no history.".to_string(),
    };
    let intent_line = match intent {
        Intent::Fairness => "Operator intent: fairness - balance user rates across all regions.",
        Intent::Efficiency => "Operator intent: efficiency - maximize total delivered throughput.",
        Intent::ChallengingCoverage => {
            "Operator intent: challenging coverage - protect hard-to-serve users."
        }
    };
    let rendered_text = format!(
        "[{PROMPT_VERSION}] LEO downlink resource-allocation planning.\n\
         Weather scenario: {}.\n\
         User distribution: {} total ({} equatorial, {} northern high-latitude, {} southern high-latitude).\n\
         Path loss: mean {:.2} dB, variance {:.2} dB^2.\n\
         {}\n\
         {}\n\
         Strategies: A = equatorial priority; B = fairness focused; C = high-latitude priority; D = opportunistic efficiency.\n\
         Respond with exactly one letter: A, B, C, or D",
        aggregates.weather,
        total,
        aggregates.user_counts[0],
        aggregates.user_counts[1],
        aggregates.user_counts[2],
        aggregates.pathloss_mean_db,
        aggregates.pathloss_var_db2,
        kpi_block,
        intent_line,
    );
    EpisodePrompt {
        weather: aggregates.weather,
        user_counts: aggregates.user_counts,
        pathloss_mean_db: aggregates.pathloss_mean_db,
        pathloss_var_db2: aggregates.pathloss_var_db2,
        last_kpis: aggregates.last_kpis,
        operator_intent: intent,
        rendered_text,
    }
}

/// A strategy source: either the deterministic mock or a remote endpoint.
pub trait StrategyProvider {
    fn choose(&self, prompt: &EpisodePrompt) -> Result<StrategyLabel, Error>;
}

/// Deterministic rule-table provider; keeps entire campaigns reproducible.
///
/// Rules: fairness intent -> B; challenging coverage -> C; efficiency under
/// nominal weather -> D; efficiency under extreme weather -> A when at least
/// 60% of users are equatorial, else C.
#[derive(Debug, Clone, Default)]
pub struct MockProvider;

impl StrategyProvider for MockProvider {
    fn choose(&self, prompt: &EpisodePrompt) -> Result<StrategyLabel, Error> {
        Ok(mock_strategy(prompt))
    }
}

pub fn mock_strategy(prompt: &EpisodePrompt) -> StrategyLabel {
    match prompt.operator_intent {
        Intent::Fairness => StrategyLabel::B,
        Intent::ChallengingCoverage => StrategyLabel::C,
        Intent::Efficiency => match prompt.weather {
            WeatherKind::Nominal => StrategyLabel::D,
            WeatherKind::Extreme => {
                let total: usize = prompt.user_counts.iter().sum();
                if (prompt.user_counts[0] as f64) >= 0.6 * total as f64 {
                    StrategyLabel::A
                } else {
                    StrategyLabel::C
                }
            }
        },
    }
}

/// Remote text-completion provider. Sends the prompt as a plain-text POST and
/// parses the reply with [`parse_label`].
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    pub endpoint: String,
    pub model: String,
    pub timeout_s: u64,
}

impl RemoteProvider {
    /// Configure from `LAM_ENDPOINT`, `LAM_MODEL`, `LAM_TIMEOUT_S`.
    pub fn from_env() -> Result<Self, Error> {
        let endpoint = std::env::var("LAM_ENDPOINT")
            .map_err(|_| Error::Provider("LAM_ENDPOINT is not set".into()))?;
        let model = std::env::var("LAM_MODEL").unwrap_or_else(|_| "default".into());
        let timeout_s = std::env::var("LAM_TIMEOUT_S")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(10);
        Ok(Self { endpoint, model, timeout_s })
    }
}

impl StrategyProvider for RemoteProvider {
    fn choose(&self, prompt: &EpisodePrompt) -> Result<StrategyLabel, Error> {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(self.timeout_s)))
            .build();
        let agent: ureq::Agent = config.into();
        let body = agent
            .post(&self.endpoint)
            .header("content-type", "text/plain")
            .header("x-lam-model", &self.model)
            .send(prompt.rendered_text.as_str())
            .map_err(|e| Error::Provider(format!("request failed: {e}")))?
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Provider(format!("reading response failed: {e}")))?;
        parse_label(&body)
            .ok_or_else(|| Error::Provider(format!("no strategy label in reply: {body:?}")))
    }
}

/// Extract the first standalone A/B/C/D character (neighbours must not be
/// alphanumeric) from an opaque reply.
pub fn parse_label(text: &str) -> Option<StrategyLabel> {
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !matches!(c, 'A' | 'B' | 'C' | 'D') {
            continue;
        }
        let prev_ok = i == 0 || !chars[i - 1].is_alphanumeric();
        let next_ok = i + 1 == chars.len() || !chars[i + 1].is_alphanumeric();
        if prev_ok && next_ok {
            return c.to_string().parse().ok();
        }
    }
    None
}

/// Outcome of a provider query, recording whether the mock fallback fired.
#[derive(Debug, Clone, Copy)]
pub struct StrategyDecision {
    pub label: StrategyLabel,
    pub fallback: bool,
}

/// Query the provider with one retry; on repeated failure fall back to the
/// mock label so a campaign never aborts.
pub fn query_provider(
    prompt: &EpisodePrompt,
    provider: &dyn StrategyProvider,
) -> StrategyDecision {
    for _ in 0..2 {
        if let Ok(label) = provider.choose(prompt) {
            return StrategyDecision { label, fallback: false };
        }
    }
    StrategyDecision {
        label: mock_strategy(prompt),
        fallback: true,
    }
}

/// The 4 x d_str learnable strategy embedding table.
#[derive(Debug, Clone)]
pub struct StrategyEmbeddingTable {
    pub table: Array2<f64>,
}

impl StrategyEmbeddingTable {
    /// Seeded init, uniform in [-0.1, 0.1].
    pub fn new(d_str: usize, rng: &mut ChaCha8Rng) -> Self {
        let table =
            Array2::from_shape_fn((StrategyLabel::ALL.len(), d_str), |_| rng.random_range(-0.1..0.1));
        Self { table }
    }

    pub fn zeros(d_str: usize) -> Self {
        Self {
            table: Array2::zeros((StrategyLabel::ALL.len(), d_str)),
        }
    }

    pub fn d_str(&self) -> usize {
        self.table.ncols()
    }

    pub fn embed(&self, label: StrategyLabel) -> Array1<f64> {
        self.table.row(label.index()).to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    fn aggregates(weather: WeatherKind, counts: [usize; 3]) -> EpisodeAggregates {
        EpisodeAggregates {
            weather,
            user_counts: counts,
            pathloss_mean_db: 180.0,
            pathloss_var_db2: 12.0,
            last_kpis: None,
        }
    }

    #[test]
    fn prompt_is_deterministic_and_versioned() {
        let agg = aggregates(WeatherKind::Nominal, [7, 2, 1]);
        let a = build_prompt(&agg, Intent::Fairness);
        let b = build_prompt(&agg, Intent::Fairness);
        assert_eq!(a.rendered_text, b.rendered_text);
        assert_eq!(a.hash(), b.hash());
        assert!(a.rendered_text.contains(PROMPT_VERSION));
        assert!(a.rendered_text.contains("no history"));
        assert!(a.rendered_text.contains("balance user rates"));
        assert!(a.rendered_text.contains("Respond with exactly one letter: A, B, C, or D"));
    }

    #[test]
    fn prompt_kpi_block_switches_with_history() {
        let mut agg = aggregates(WeatherKind::Nominal, [7, 2, 1]);
        agg.last_kpis = Some((1.2e8, 0.8, 0.3));
        let p = build_prompt(&agg, Intent::Efficiency);
        assert!(p.rendered_text.contains("sum rate 120.000 Mbps"));
        assert!(!p.rendered_text.contains("no history"));
    }

    #[test]
    fn mock_rule_table() {
        let n = |intent| build_prompt(&aggregates(WeatherKind::Nominal, [35, 8, 7]), intent);
        let e = |intent, counts| build_prompt(&aggregates(WeatherKind::Extreme, counts), intent);
        assert_eq!(mock_strategy(&n(Intent::Fairness)), StrategyLabel::B);
        assert_eq!(mock_strategy(&n(Intent::ChallengingCoverage)), StrategyLabel::C);
        assert_eq!(mock_strategy(&n(Intent::Efficiency)), StrategyLabel::D);
        assert_eq!(
            mock_strategy(&e(Intent::Efficiency, [35, 8, 7])),
            StrategyLabel::A
        );
        assert_eq!(
            mock_strategy(&e(Intent::Efficiency, [4, 3, 3])),
            StrategyLabel::C
        );
        assert_eq!(mock_strategy(&e(Intent::Fairness, [35, 8, 7])), StrategyLabel::B);
    }

    #[test]
    fn label_parser_handles_prose_and_garbage() {
        assert_eq!(
            parse_label("Strategy: C - prioritize high latitudes"),
            Some(StrategyLabel::C)
        );
        assert_eq!(parse_label("B"), Some(StrategyLabel::B));
        assert_eq!(parse_label("the answer is (D)."), Some(StrategyLabel::D));
        assert_eq!(parse_label("maybe"), None);
        assert_eq!(parse_label("CAB"), None); // embedded in a word
        assert_eq!(parse_label(""), None);
    }

    struct FailingProvider;
    impl StrategyProvider for FailingProvider {
        fn choose(&self, _: &EpisodePrompt) -> Result<StrategyLabel, Error> {
            Err(Error::Provider("down".into()))
        }
    }

    #[test]
    fn fallback_after_retry_uses_mock_label() {
        let p = build_prompt(&aggregates(WeatherKind::Extreme, [35, 8, 7]), Intent::Fairness);
        let d = query_provider(&p, &FailingProvider);
        assert!(d.fallback);
        assert_eq!(d.label, StrategyLabel::B);

        let d = query_provider(&p, &MockProvider);
        assert!(!d.fallback);
        assert_eq!(d.label, StrategyLabel::B);
    }

    #[test]
    fn embedding_lookup_is_row_lookup() {
        let mut rng = seeds::rng(5, &[seeds::stream::EMBEDDING]);
        let table = StrategyEmbeddingTable::new(8, &mut rng);
        assert_eq!(table.d_str(), 8);
        for label in StrategyLabel::ALL {
            let e = table.embed(label);
            assert_eq!(e.len(), 8);
            for (a, b) in e.iter().zip(table.table.row(label.index())) {
                assert_eq!(a, b);
            }
            assert!(e.iter().all(|v| (-0.1..0.1).contains(v)));
        }
        // Stable across a second lookup.
        assert_eq!(table.embed(StrategyLabel::A), table.embed(StrategyLabel::A));
    }
}
