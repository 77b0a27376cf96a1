//! Derived statistics: per-cell means and sample standard deviations,
//! strategy-usage histograms, moving averages, and attention confidence
//! intervals. Everything here is recomputable from the raw CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::agent::FEATURE_CATEGORY_NAMES;
use crate::harness::records::{
    data_lines, AttentionRow, EpisodeRow, StrategyRow, ATTENTION_FILE, ATTENTION_HEADER,
    EPISODES_FILE, EPISODES_HEADER, STRATEGIES_FILE, STRATEGIES_HEADER,
};
use crate::Error;

/// Mean and sample standard deviation of the evaluation KPIs for one
/// (allocator, weather) cell, pooled across seeds.
#[derive(Debug, Clone)]
pub struct CellStats {
    pub allocator: String,
    pub weather: String,
    pub episodes: usize,
    pub mean_sum_rate_bps: f64,
    pub std_sum_rate_bps: f64,
    pub mean_jain: f64,
    pub std_jain: f64,
    pub mean_outage: f64,
    pub std_outage: f64,
}

/// Strategy-label histogram for one (allocator, weather) cell.
#[derive(Debug, Clone)]
pub struct StrategyUsage {
    pub allocator: String,
    pub weather: String,
    /// Counts for labels A, B, C, D.
    pub counts: [usize; 4],
    pub fallbacks: usize,
}

/// Per-episode sum-rate trace with its 10-episode moving average.
#[derive(Debug, Clone)]
pub struct EpisodeTraceStats {
    pub allocator: String,
    pub weather: String,
    pub seed: u64,
    /// "train" or "eval".
    pub phase: String,
    pub labels: Vec<String>,
    pub intents: Vec<String>,
    pub sum_rates_bps: Vec<f64>,
    pub moving_avg_bps: Vec<f64>,
}

/// Mean attention weight with a 95% normal-approximation confidence
/// half-width for one feature category.
#[derive(Debug, Clone)]
pub struct AttentionStats {
    pub allocator: String,
    pub weather: String,
    pub category: String,
    pub mean: f64,
    pub ci95: f64,
    pub samples: usize,
}

/// Derived campaign report; never primary, always recomputable from raw.
#[derive(Debug, Clone, Default)]
pub struct CampaignReport {
    pub cells: Vec<CellStats>,
    pub strategy_usage: Vec<StrategyUsage>,
    pub traces: Vec<EpisodeTraceStats>,
    pub attention: Vec<AttentionStats>,
}

impl CampaignReport {
    /// The summary table as CSV.
    pub fn to_summary_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# evaluation-phase statistics pooled across seeds").unwrap();
        writeln!(
            out,
            "allocator,weather,episodes,mean_sum_rate_bps,std_sum_rate_bps,mean_jain,std_jain,mean_outage,std_outage"
        )
        .unwrap();
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.allocator,
                c.weather,
                c.episodes,
                super::records::fmt_float(c.mean_sum_rate_bps),
                super::records::fmt_float(c.std_sum_rate_bps),
                super::records::fmt_float(c.mean_jain),
                super::records::fmt_float(c.std_jain),
                super::records::fmt_float(c.mean_outage),
                super::records::fmt_float(c.std_outage),
            )
            .unwrap();
        }
        out
    }

    pub fn cell(&self, allocator: &str, weather: &str) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.allocator == allocator && c.weather == weather)
    }
}

/// Sample mean and sample (n-1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Trailing moving average with the given window; the first entries average
/// over however many points exist so far.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0);
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let lo = (i + 1).saturating_sub(window);
        let slice = &values[lo..=i];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    out
}

/// Parse the raw CSVs in a directory and compute the derived report.
pub fn summarize_dir(dir: &Path) -> Result<CampaignReport, Error> {
    let episodes = read_rows(dir, EPISODES_FILE, EPISODES_HEADER, EpisodeRow::parse)?;
    let strategies = read_rows(dir, STRATEGIES_FILE, STRATEGIES_HEADER, StrategyRow::parse)?;
    let attention = read_rows(dir, ATTENTION_FILE, ATTENTION_HEADER, AttentionRow::parse)?;
    Ok(summarize_rows(&episodes, &strategies, &attention))
}

fn read_rows<T>(
    dir: &Path,
    file: &str,
    header: &str,
    parse: impl Fn(&str, usize) -> Result<T, Error>,
) -> Result<Vec<T>, Error> {
    let text = std::fs::read_to_string(dir.join(file))?;
    data_lines(&text, header)?
        .into_iter()
        .map(|(line_no, line)| parse(&line, line_no))
        .collect()
}

/// Compute the report from in-memory rows.
pub fn summarize_rows(
    episodes: &[EpisodeRow],
    strategies: &[StrategyRow],
    attention: &[AttentionRow],
) -> CampaignReport {
    // Per-cell KPI statistics over evaluation episodes.
    let mut by_cell: BTreeMap<(String, String), Vec<&EpisodeRow>> = BTreeMap::new();
    for row in episodes.iter().filter(|r| r.phase == "eval") {
        by_cell
            .entry((row.allocator.clone(), row.weather.clone()))
            .or_default()
            .push(row);
    }
    let cells = by_cell
        .iter()
        .map(|((allocator, weather), rows)| {
            let col = |f: &dyn Fn(&EpisodeRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (m_r, s_r) = mean_std(&col(&|r| r.sum_rate_bps));
            let (m_j, s_j) = mean_std(&col(&|r| r.jain));
            let (m_o, s_o) = mean_std(&col(&|r| r.outage));
            CellStats {
                allocator: allocator.clone(),
                weather: weather.clone(),
                episodes: rows.len(),
                mean_sum_rate_bps: m_r,
                std_sum_rate_bps: s_r,
                mean_jain: m_j,
                std_jain: s_j,
                mean_outage: m_o,
                std_outage: s_o,
            }
        })
        .collect();

    // Strategy-usage histogram.
    let mut usage: BTreeMap<(String, String), ([usize; 4], usize)> = BTreeMap::new();
    for row in strategies {
        let entry = usage
            .entry((row.allocator.clone(), row.weather.clone()))
            .or_default();
        match row.label.as_str() {
            "A" => entry.0[0] += 1,
            "B" => entry.0[1] += 1,
            "C" => entry.0[2] += 1,
            _ => entry.0[3] += 1,
        }
        if row.fallback {
            entry.1 += 1;
        }
    }
    let strategy_usage = usage
        .into_iter()
        .map(|((allocator, weather), (counts, fallbacks))| StrategyUsage {
            allocator,
            weather,
            counts,
            fallbacks,
        })
        .collect();

    // Per-(allocator, weather, seed, phase) episode traces with moving
    // averages.
    let mut by_trace: BTreeMap<(String, String, u64, String), Vec<&StrategyRow>> = BTreeMap::new();
    for row in strategies {
        by_trace
            .entry((
                row.allocator.clone(),
                row.weather.clone(),
                row.seed,
                row.phase.clone(),
            ))
            .or_default()
            .push(row);
    }
    let traces = by_trace
        .into_iter()
        .map(|((allocator, weather, seed, phase), mut rows)| {
            rows.sort_by_key(|r| r.episode);
            let sum_rates: Vec<f64> = rows.iter().map(|r| r.sum_rate_bps).collect();
            EpisodeTraceStats {
                allocator,
                weather,
                seed,
                phase,
                labels: rows.iter().map(|r| r.label.clone()).collect(),
                intents: rows.iter().map(|r| r.intent.clone()).collect(),
                moving_avg_bps: moving_average(&sum_rates, 10),
                sum_rates_bps: sum_rates,
            }
        })
        .collect();

    // Attention means with 95% normal-approximation CIs.
    let mut by_att: BTreeMap<(String, String), Vec<&AttentionRow>> = BTreeMap::new();
    for row in attention {
        by_att
            .entry((row.allocator.clone(), row.weather.clone()))
            .or_default()
            .push(row);
    }
    let mut attention_stats = Vec::new();
    for ((allocator, weather), rows) in by_att {
        for (c, name) in FEATURE_CATEGORY_NAMES.iter().enumerate() {
            let values: Vec<f64> = rows.iter().map(|r| r.weights[c]).collect();
            let (mean, std) = mean_std(&values);
            let n = values.len();
            attention_stats.push(AttentionStats {
                allocator: allocator.clone(),
                weather: weather.clone(),
                category: name.to_string(),
                mean,
                ci95: if n > 0 { 1.96 * std / (n as f64).sqrt() } else { 0.0 },
                samples: n,
            });
        }
    }

    CampaignReport {
        cells,
        strategy_usage,
        traces,
        attention: attention_stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_of_known_fixture() {
        // Hand-computed: mean 3, sample variance 2.5, std sqrt(2.5).
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m, 3.0);
        assert!((s - 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_column_has_zero_std() {
        let (m, s) = mean_std(&[7.0; 20]);
        assert_eq!(m, 7.0);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn moving_average_of_constant_is_constant() {
        let ma = moving_average(&[4.2; 25], 10);
        assert!(ma.iter().all(|v| (v - 4.2).abs() < 1e-12));
    }

    #[test]
    fn moving_average_warms_up_then_windows() {
        let xs: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let ma = moving_average(&xs, 10);
        assert_eq!(ma[0], 1.0);
        assert_eq!(ma[1], 1.5);
        // Last window: mean of 3..=12 = 7.5.
        assert_eq!(ma[11], 7.5);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "# comment\nallocator,weather,seed,phase,episode,intent,label,fallback,prompt_hash,sum_rate_bps\nequal,nominal,0,eval,0,fairness,B,false,abc,not_a_number\n";
        let rows = data_lines(text, crate::harness::records::STRATEGIES_HEADER).unwrap();
        let err = crate::harness::records::StrategyRow::parse(&rows[0].1, rows[0].0).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("not_a_number"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
