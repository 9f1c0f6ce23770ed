use std::sync::Arc;

use ccrm_core::corpus::StaticTables;
use ccrm_ingest::{
    build_snapshot, builtin_static_tables, read_seeds, BuildConfig, Endpoints, FetchPolicy,
    IngestError, LiveTransport, RecordingTransport, ReplayTransport, Transport,
};

use crate::args::IngestArgs;
use crate::error::{ctx, CliError, CliResult};

pub fn run(a: &IngestArgs) -> CliResult<()> {
    if !(0.0..=1.0).contains(&a.failure_threshold) {
        return Err(CliError::Input(
            "--failure-threshold must be between 0 and 1".into(),
        ));
    }
    let seeds = read_seeds(&a.seeds).map_err(|e| CliError::Input(e.to_string()))?;
    let policy = FetchPolicy {
        max_concurrent_requests: a.max_concurrent,
        min_request_interval_ms: a.min_interval_ms.unwrap_or(if a.replay.is_some() {
            0
        } else {
            100
        }),
        retries: a.retries,
        backoff_base_ms: a.backoff_ms,
        timeout_ms: a.timeout_ms,
    };
    policy
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let static_tables = match &a.static_dir {
        Some(dir) => StaticTables::load(dir).map_err(ctx(dir.display()))?,
        None => builtin_static_tables(),
    };
    let transport: Arc<dyn Transport> = match (&a.replay, &a.record) {
        (Some(dir), _) => {
            Arc::new(ReplayTransport::from_dir(dir).map_err(|e| CliError::Input(e.to_string()))?)
        }
        (None, Some(dir)) => Arc::new(
            RecordingTransport::new(LiveTransport::new(policy.timeout()), dir)
                .map_err(ctx(dir.display()))?,
        ),
        (None, None) => Arc::new(LiveTransport::new(policy.timeout())),
    };
    let config = BuildConfig {
        months: a.months,
        policy,
        endpoints: Endpoints::from_env(),
        static_tables,
        failure_threshold: a.failure_threshold,
    };
    match build_snapshot(&seeds, &config, &transport, &a.out) {
        Ok(outcome) => {
            println!(
                "wrote {}: {} articles from {} seeds, {} failed",
                a.out.display(),
                outcome.snapshot.concept_sets().count(),
                seeds.len(),
                outcome.failures.len()
            );
            Ok(())
        }
        Err(IngestError::BuildFailed { failed, total, .. }) => Err(CliError::Partial(format!(
            "{failed} of {total} seeds failed; no snapshot written"
        ))),
        Err(e) => Err(CliError::Input(e.to_string())),
    }
}
