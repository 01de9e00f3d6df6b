use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use cellist_core::session::SessionStore;
use cellist_service::SessionManager;
use clap::Args;

use crate::inputs::load_engine;
use crate::{CliError, EngineArgs};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, env = "CELLIST_LISTEN", default_value = "127.0.0.1:8765")]
    pub listen: SocketAddr,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Session history directory.
    #[arg(long, env = "CELLIST_STORE", default_value = "cellist-store")]
    pub store: PathBuf,
}

pub fn run(args: &ServeArgs) -> Result<(), CliError> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    // everything that can fail on bad input happens before binding
    let loaded = load_engine(&args.engine)?;
    let store = SessionStore::open(&args.store).map_err(CliError::user)?;
    let manager = Arc::new(SessionManager::new(loaded.models, loaded.config, loaded.catalog, store));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start async runtime")
        .map_err(CliError::Internal)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .with_context(|| format!("cannot listen on {}", args.listen))?;
        let addr = listener.local_addr().context("listener has no address")?;
        let shutdown = shutdown_signal()?;
        // scripts wait for this line to learn the port
        eprintln!("listening on ws://{addr}/ws");
        tracing::info!(store = %args.store.display(), "serving");
        cellist_service::serve(listener, manager, shutdown)
        .await
        .context("server failed")?;
        Ok::<_, anyhow::Error>(())
    })?;
    eprintln!("stopped");
    Ok(())
}

/// Handlers are installed before the listening line is printed, so an
/// interrupt sent right after it is never lost.
#[cfg(unix)]
fn shutdown_signal() -> anyhow::Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut interrupt = signal(SignalKind::interrupt()).context("cannot install SIGINT handler")?;
    let mut terminate = signal(SignalKind::terminate()).context("cannot install SIGTERM handler")?;
    Ok(async move {
        tokio::select! {
            _ = interrupt.recv() => {}
            _ = terminate.recv() => {}
        }
        tracing::info!("shutting down");
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> anyhow::Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    })
}
