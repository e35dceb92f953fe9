//! The tutoring service: sessions, problems, attempts, hints and mastery over
//! HTTP/JSON, backed by an append-only transaction log.
//!
//! ```no_run
//! # async fn run() -> Result<(), apprentice_service::BoxError> {
//! let config = apprentice_service::config::Config::load(None)?;
//! apprentice_service::serve(config).await?;
//! # Ok(()) }
//! ```

pub mod clock;
pub mod config;
pub mod http;
pub mod platform;
pub mod simulate;
pub mod storage;

use std::net::SocketAddr;
use std::sync::Arc;

use apprentice_core::domains::Catalog;
use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio::net::TcpListener;

use crate::clock::SystemClock;
use crate::config::Config;
use crate::http::{router, AppState};
use crate::platform::{Platform, PlatformOptions};
use crate::storage::{DirStorage, Storage};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

pub fn load_catalog(config: &Config) -> Result<Catalog, BoxError> {
    Ok(match &config.catalog_dir {
        Some(dir) => Catalog::from_dir(dir)?,
        None => Catalog::builtin(),
    })
}

/// A platform over `storage` with the wall clock and an entropy-seeded RNG.
pub fn open_platform(config: &Config, storage: Box<dyn Storage>) -> Result<Platform, BoxError> {
    let options = PlatformOptions {
        catalog: Arc::new(load_catalog(config)?),
        mastery: config.mastery.clone(),
        session_ttl: Duration::hours(config.session_ttl_hours),
        clock: Box::new(SystemClock),
        rng: Box::new(ChaCha8Rng::from_entropy()),
    };
    Ok(Platform::open(options, storage)?)
}

/// Serves on a bound listener until `shutdown` resolves, then saves state.
pub async fn serve_on(
    listener: TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), BoxError> {
    axum::serve(listener, router(state.clone())).with_graceful_shutdown(shutdown).await?;
    let mut p = state.platform.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    p.save()?;
    Ok(())
}

/// Opens the storage directory and serves until Ctrl-C.
pub async fn serve(config: Config) -> Result<(), BoxError> {
    let storage = DirStorage::open(&config.storage_dir)?;
    let platform = open_platform(&config, Box::new(storage))?;
    let listener = TcpListener::bind((config.bind.as_str(), config.port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let state = AppState::new(platform, config.admin_token.clone());
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    })
    .await
}

/// [`serve`] on a fresh multi-threaded runtime, for synchronous callers.
pub fn serve_blocking(config: Config) -> Result<(), BoxError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()?.block_on(serve(config))
}

/// Serves `state` on an ephemeral loopback port in the background.
pub async fn spawn(state: AppState) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router(state)).await {
            log::error!("server stopped: {e}");
        }
    });
    Ok(addr)
}
