use std::path::PathBuf;

use cellist_core::session::SessionStore;
use clap::Args;

use crate::CliError;

#[derive(Debug, Args)]
pub struct HistoryArgs {
    #[arg(long, env = "CELLIST_STORE", default_value = "cellist-store")]
    pub store: PathBuf,
    #[arg(long)]
    pub user: String,
    /// Print the full records as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(args: &HistoryArgs) -> Result<(), CliError> {
    let store = SessionStore::open(&args.store).map_err(CliError::user)?;
    let records = store.list_history(&args.user).map_err(CliError::user)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&records).expect("records serialize"));
        return Ok(());
    }
    if records.is_empty() {
        println!("no sessions for {}", args.user);
        return Ok(());
    }
    println!("{:<32} {:<38} {:>8} {:>10}", "started", "session", "frames", "seconds");
    for r in &records {
        println!(
            "{:<32} {:<38} {:>8} {:>10.1}",
            r.started_at.to_rfc3339(),
            r.session_id,
            r.summary.total_frames,
            r.summary.duration_ms as f64 / 1000.0
        );
    }
    Ok(())
}
