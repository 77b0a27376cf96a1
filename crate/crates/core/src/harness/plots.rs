//! Plot-ready data files derived from the campaign report: one tabular file
//! per figure analog (KPI comparison, strategy usage, attention weights).

use std::fmt::Write as _;
use std::path::Path;

use crate::harness::records::fmt_float;
use crate::harness::summary::CampaignReport;
use crate::Error;

pub const FIG_KPI_FILE: &str = "fig_kpi_comparison.csv";
pub const FIG_STRATEGY_FILE: &str = "fig_strategy_usage.csv";
pub const FIG_STRATEGY_NOTE_FILE: &str = "fig_strategy_usage_omitted.txt";
pub const FIG_ATTENTION_FILE: &str = "fig_attention.csv";

/// Write the three figure-data files. A heuristic-only campaign has no
/// strategy trace; the strategy file is then replaced by a note.
pub fn emit_plot_data(report: &CampaignReport, dir: &Path) -> Result<(), Error> {
    // (i) Grouped-bar KPI comparison.
    let mut kpi = String::new();
    writeln!(kpi, "# grouped bar data: one row per (allocator, weather) cell").unwrap();
    writeln!(
        kpi,
        "allocator,weather,mean_sum_rate_bps,std_sum_rate_bps,mean_jain,std_jain,mean_outage,std_outage"
    )
    .unwrap();
    for c in &report.cells {
        writeln!(
            kpi,
            "{},{},{},{},{},{},{},{}",
            c.allocator,
            c.weather,
            fmt_float(c.mean_sum_rate_bps),
            fmt_float(c.std_sum_rate_bps),
            fmt_float(c.mean_jain),
            fmt_float(c.std_jain),
            fmt_float(c.mean_outage),
            fmt_float(c.std_outage),
        )
        .unwrap();
    }
    std::fs::write(dir.join(FIG_KPI_FILE), kpi)?;

    // (ii) Per-episode strategy scatter with the 10-episode moving average.
    if report.traces.is_empty() {
        std::fs::write(
            dir.join(FIG_STRATEGY_NOTE_FILE),
            "no strategy-conditioned allocator in this campaign; strategy-usage plot data omitted\n",
        )?;
        let _ = std::fs::remove_file(dir.join(FIG_STRATEGY_FILE));
    } else {
        let mut strat = String::new();
        writeln!(strat, "# per-episode label and sum rate with 10-episode moving average").unwrap();
        writeln!(
            strat,
            "allocator,weather,seed,phase,episode,intent,label,sum_rate_bps,moving_avg_bps"
        )
        .unwrap();
        for t in &report.traces {
            for i in 0..t.sum_rates_bps.len() {
                writeln!(
                    strat,
                    "{},{},{},{},{},{},{},{},{}",
                    t.allocator,
                    t.weather,
                    t.seed,
                    t.phase,
                    i,
                    t.intents[i],
                    t.labels[i],
                    fmt_float(t.sum_rates_bps[i]),
                    fmt_float(t.moving_avg_bps[i]),
                )
                .unwrap();
            }
        }
        std::fs::write(dir.join(FIG_STRATEGY_FILE), strat)?;
        let _ = std::fs::remove_file(dir.join(FIG_STRATEGY_NOTE_FILE));
    }

    // (iii) Attention means with 95% CIs, seven rows per cell.
    let mut att = String::new();
    writeln!(att, "# mean attention attribution per feature category with 95% CI").unwrap();
    writeln!(att, "allocator,weather,category,mean,ci95,samples").unwrap();
    for a in &report.attention {
        writeln!(
            att,
            "{},{},{},{},{},{}",
            a.allocator,
            a.weather,
            a.category,
            fmt_float(a.mean),
            fmt_float(a.ci95),
            a.samples,
        )
        .unwrap();
    }
    std::fs::write(dir.join(FIG_ATTENTION_FILE), att)?;
    Ok(())
}
