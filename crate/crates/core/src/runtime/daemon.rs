use std::sync::Arc;

use crate::know::{last_closed_week, next_anchor};
use crate::Result;

use super::{serve, Runtime};

fn catch_up_know(rt: &Runtime) {
    let week = last_closed_week(rt.harness.now());
    match rt.know_tick(week, false) {
        Ok(s) => {
            for o in &s.stages {
                tracing::info!(%week, stage = %o.stage, status = ?o.status, "{}", o.detail);
            }
        }
        Err(e) => tracing::warn!(%week, "know tick not run: {e}"),
    }
}

/// Serve the API and run Notice on its interval and Know at every weekly
/// anchor, until interrupted. On start the last closed week is caught up,
/// so a restart never skips a Know run.
pub async fn run_daemon(rt: Arc<Runtime>, bind: &str) -> Result<()> {
    let server = tokio::spawn({
        let rt = rt.clone();
        let bind = bind.to_string();
        async move { serve(rt, &bind).await }
    });

    let notice = tokio::spawn({
        let rt = rt.clone();
        async move {
            let period = rt.notice_interval.to_std().unwrap_or(std::time::Duration::from_secs(1800));
            let mut every = tokio::time::interval(period);
            every.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
            loop {
                every.tick().await;
                let rt = rt.clone();
                match tokio::task::spawn_blocking(move || rt.notice_tick()).await {
                    Ok(Ok(s)) if !s.noop => {
                        tracing::info!(episodes = s.episodes.len(), claims = s.claims, "notice tick")
                    }
                    Ok(Ok(_)) => {}
                    Ok(Err(e)) => tracing::warn!("notice tick failed: {e}"),
                    Err(e) => tracing::error!("notice worker panicked: {e}"),
                }
            }
        }
    });

    let know = tokio::spawn({
        let rt = rt.clone();
        async move {
            loop {
                let r = rt.clone();
                let _ = tokio::task::spawn_blocking(move || catch_up_know(&r)).await;
                let now = rt.harness.now();
                let wait = (next_anchor(now) - now).to_std().unwrap_or_default();
                tokio::time::sleep(wait).await;
            }
        }
    });

    tokio::select! {
        r = server => {
            notice.abort();
            know.abort();
            r.unwrap_or_else(|e| Err(crate::Error::Invalid(format!("server task failed: {e}"))))
        }
        _ = tokio::signal::ctrl_c() => {
            tracing::info!("shutting down");
            notice.abort();
            know.abort();
            Ok(())
        }
    }
}
