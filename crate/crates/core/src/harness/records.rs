//! Raw CSV row schemas with fixed column order and float formatting, so two
//! identical runs diff byte-for-byte.

use crate::Error;

pub const EPISODES_FILE: &str = "episodes.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const STRATEGIES_FILE: &str = "strategies.csv";
pub const ATTENTION_FILE: &str = "attention.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub const EPISODES_HEADER: &str =
    "allocator,weather,seed,phase,episode,intent,label,fallback,sum_rate_bps,jain,outage,reward";
pub const STEPS_HEADER: &str = "allocator,weather,seed,phase,episode,step,sum_rate_bps,jain,outage,reward_base,reward_shaping,reward_total";
pub const STRATEGIES_HEADER: &str =
    "allocator,weather,seed,phase,episode,intent,label,fallback,prompt_hash,sum_rate_bps";
pub const ATTENTION_HEADER: &str = "allocator,weather,seed,episode,step,latitude,longitude,distance,path_loss,region,prev_rate,prev_sinr";

/// Fixed float rendering used in every raw CSV cell.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.9e}")
}

/// KPI means of one episode, as logged to `episodes.csv`.
#[derive(Debug, Clone)]
pub struct EpisodeRow {
    pub allocator: String,
    pub weather: String,
    pub seed: u64,
    /// "train" or "eval".
    pub phase: String,
    pub episode: usize,
    pub intent: String,
    pub label: String,
    pub fallback: bool,
    pub sum_rate_bps: f64,
    pub jain: f64,
    pub outage: f64,
    pub reward: f64,
}

impl EpisodeRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.allocator,
            self.weather,
            self.seed,
            self.phase,
            self.episode,
            self.intent,
            self.label,
            self.fallback,
            fmt_float(self.sum_rate_bps),
            fmt_float(self.jain),
            fmt_float(self.outage),
            fmt_float(self.reward),
        )
    }

    pub fn parse(line: &str, line_no: usize) -> Result<Self, Error> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(parse_err(line_no, "expected 12 fields"));
        }
        Ok(Self {
            allocator: f[0].to_string(),
            weather: f[1].to_string(),
            seed: parse_u64(f[2], line_no)?,
            phase: f[3].to_string(),
            episode: parse_u64(f[4], line_no)? as usize,
            intent: f[5].to_string(),
            label: f[6].to_string(),
            fallback: parse_bool(f[7], line_no)?,
            sum_rate_bps: parse_f64(f[8], line_no)?,
            jain: parse_f64(f[9], line_no)?,
            outage: parse_f64(f[10], line_no)?,
            reward: parse_f64(f[11], line_no)?,
        })
    }
}

/// One decision step, as logged to `steps.csv`.
#[derive(Debug, Clone)]
pub struct StepRow {
    pub allocator: String,
    pub weather: String,
    pub seed: u64,
    pub phase: String,
    pub episode: usize,
    pub step: usize,
    pub sum_rate_bps: f64,
    pub jain: f64,
    pub outage: f64,
    pub reward_base: f64,
    pub reward_shaping: f64,
    pub reward_total: f64,
}

impl StepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.allocator,
            self.weather,
            self.seed,
            self.phase,
            self.episode,
            self.step,
            fmt_float(self.sum_rate_bps),
            fmt_float(self.jain),
            fmt_float(self.outage),
            fmt_float(self.reward_base),
            fmt_float(self.reward_shaping),
            fmt_float(self.reward_total),
        )
    }

    pub fn parse(line: &str, line_no: usize) -> Result<Self, Error> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(parse_err(line_no, "expected 12 fields"));
        }
        Ok(Self {
            allocator: f[0].to_string(),
            weather: f[1].to_string(),
            seed: parse_u64(f[2], line_no)?,
            phase: f[3].to_string(),
            episode: parse_u64(f[4], line_no)? as usize,
            step: parse_u64(f[5], line_no)? as usize,
            sum_rate_bps: parse_f64(f[6], line_no)?,
            jain: parse_f64(f[7], line_no)?,
            outage: parse_f64(f[8], line_no)?,
            reward_base: parse_f64(f[9], line_no)?,
            reward_shaping: parse_f64(f[10], line_no)?,
            reward_total: parse_f64(f[11], line_no)?,
        })
    }
}

/// One episode of a learning allocator (both phases), as logged to
/// `strategies.csv`.
#[derive(Debug, Clone)]
pub struct StrategyRow {
    pub allocator: String,
    pub weather: String,
    pub seed: u64,
    /// "train" or "eval".
    pub phase: String,
    pub episode: usize,
    pub intent: String,
    pub label: String,
    pub fallback: bool,
    pub prompt_hash: String,
    pub sum_rate_bps: f64,
}

impl StrategyRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.allocator,
            self.weather,
            self.seed,
            self.phase,
            self.episode,
            self.intent,
            self.label,
            self.fallback,
            self.prompt_hash,
            fmt_float(self.sum_rate_bps),
        )
    }

    pub fn parse(line: &str, line_no: usize) -> Result<Self, Error> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(parse_err(line_no, "expected 10 fields"));
        }
        Ok(Self {
            allocator: f[0].to_string(),
            weather: f[1].to_string(),
            seed: parse_u64(f[2], line_no)?,
            phase: f[3].to_string(),
            episode: parse_u64(f[4], line_no)? as usize,
            intent: f[5].to_string(),
            label: f[6].to_string(),
            fallback: parse_bool(f[7], line_no)?,
            prompt_hash: f[8].to_string(),
            sum_rate_bps: parse_f64(f[9], line_no)?,
        })
    }
}

/// Per-step attention attribution over the seven feature categories, as
/// logged to `attention.csv` for learning allocators.
#[derive(Debug, Clone)]
pub struct AttentionRow {
    pub allocator: String,
    pub weather: String,
    pub seed: u64,
    pub episode: usize,
    pub step: usize,
    pub weights: [f64; 7],
}

impl AttentionRow {
    pub fn to_csv(&self) -> String {
        let w: Vec<String> = self.weights.iter().map(|v| fmt_float(*v)).collect();
        format!(
            "{},{},{},{},{},{}",
            self.allocator,
            self.weather,
            self.seed,
            self.episode,
            self.step,
            w.join(","),
        )
    }

    pub fn parse(line: &str, line_no: usize) -> Result<Self, Error> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(parse_err(line_no, "expected 12 fields"));
        }
        let mut weights = [0.0; 7];
        for (i, w) in weights.iter_mut().enumerate() {
            *w = parse_f64(f[5 + i], line_no)?;
        }
        Ok(Self {
            allocator: f[0].to_string(),
            weather: f[1].to_string(),
            seed: parse_u64(f[2], line_no)?,
            episode: parse_u64(f[3], line_no)? as usize,
            step: parse_u64(f[4], line_no)? as usize,
            weights,
        })
    }
}

fn parse_err(line_no: usize, message: &str) -> Error {
    Error::Parse {
        line: line_no,
        message: message.to_string(),
    }
}

fn parse_u64(s: &str, line_no: usize) -> Result<u64, Error> {
    s.parse()
        .map_err(|_| parse_err(line_no, &format!("invalid integer '{s}'")))
}

fn parse_f64(s: &str, line_no: usize) -> Result<f64, Error> {
    s.parse()
        .map_err(|_| parse_err(line_no, &format!("invalid float '{s}'")))
}

fn parse_bool(s: &str, line_no: usize) -> Result<bool, Error> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(parse_err(line_no, &format!("invalid bool '{s}'"))),
    }
}

/// Read the data lines of a raw CSV: skips `#` comments and the header,
/// yields (1-based line number, line).
pub fn data_lines(text: &str, header: &str) -> Result<Vec<(usize, String)>, Error> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != header {
                return Err(parse_err(line_no, &format!("unexpected header '{line}'")));
            }
            saw_header = true;
            continue;
        }
        out.push((line_no, line.to_string()));
    }
    if !saw_header {
        return Err(parse_err(1, "missing header"));
    }
    Ok(out)
}
