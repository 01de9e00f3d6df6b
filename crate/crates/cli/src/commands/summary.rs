use std::path::PathBuf;

use anyhow::Context;
use cellist_core::session::{SessionRecord, SessionSummary};
use clap::Args;

use crate::CliError;

#[derive(Debug, Args)]
pub struct SummaryArgs {
    /// A `summary.json` from replay or a stored session record.
    pub file: PathBuf,
}

pub fn render(summary: &SessionSummary) -> String {
    let mut out = format!(
        "{} frames over {:.1} s\n",
        summary.total_frames,
        summary.duration_ms as f64 / 1000.0
    );
    for section in &summary.sections {
        let name = serde_json::to_value(section.section).expect("sections serialize");
        out.push_str(&format!("\n{}\n", name.as_str().unwrap_or_default()));
        for c in &section.classes {
            let normalized = c.normalized_pct.map_or_else(|| "-".to_string(), |p| format!("{p:.1}%"));
            let at = c.representative_t_ms.map_or_else(|| "-".to_string(), |t| format!("{t} ms"));
            out.push_str(&format!(
                "  {:<16} {:>7} {:>7.1}% {:>8}  at {}\n",
                c.class, c.count, c.raw_pct, normalized, at
            ));
        }
    }
    out
}

pub fn run(args: &SummaryArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.file).with_context(|| format!("cannot read {}", args.file.display()))?;
    let summary = match serde_json::from_str::<SessionRecord>(&text) {
        Ok(record) => record.summary,
        Err(_) => serde_json::from_str::<SessionSummary>(&text)
            .map_err(|e| CliError::user(format!("{}: not a summary or session record: {e}", args.file.display())))?,
    };
    print!("{}", render(&summary));
    Ok(())
}
