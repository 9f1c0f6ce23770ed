//! Prints one PASS/FAIL/SKIP line per acceptance criterion and exits non-zero
//! if any criterion fails.

mod common;

use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ccrm_core::corpus::{AttentionMatrix, AttentionSource, OwnershipMap};
use ccrm_core::measures::{self_focus, BiasMatrix};
use ccrm_core::sim::{
    best_row, generate_attention, replication_seed, sweep, synthetic_bias_sample, Model, SimConfig,
    SweepParameter, DEFAULT_LAMBDA_GRID, DEFAULT_SIGMA_GRID,
};
use ccrm_core::stats::{js_divergence, HistogramSpec, RankedPairList};
use ccrm_core::validate::generate_crowd_tasks;
use ccrm_testkit::{bias_identities, oracle_max_error, spearman_max_error};
use common::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::*;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    let detail = format!(
        "{detail}, {:.2}s (limit {}s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    check(elapsed < limit, detail)
}

fn measure_oracle() -> Outcome {
    let start = Instant::now();
    match oracle_max_error(50, 2024) {
        Ok(r) => {
            let counts: Vec<String> = r.compared.iter().map(|(k, v)| format!("{k}={v}")).collect();
            if r.max_error > 1e-12 {
                return Fail(format!("max error {:e}", r.max_error));
            }
            within(
                start.elapsed(),
                Duration::from_secs(10),
                format!("max error {:e} ({})", r.max_error, counts.join(" ")),
            )
        }
        Err(e) => Fail(e),
    }
}

fn bias_identity_suite() -> Outcome {
    let start = Instant::now();
    let r = bias_identities(200, 7);
    let detail = format!(
        "max |column sum| {:e}, range [{:.3}, {:.3}], max rescale change {:e}",
        r.max_abs_column_sum, r.min_value, r.max_value, r.max_rescale_change
    );
    if r.max_abs_column_sum > 1e-9
        || r.min_value < -1.0
        || r.max_value > 1.0
        || r.max_rescale_change > 1e-12
    {
        return Fail(detail);
    }
    within(start.elapsed(), Duration::from_secs(5), detail)
}

fn self_focus_extremes() -> Outcome {
    let labels = || vec!["l0".to_owned(), "l1".to_owned()];
    let mut own = OwnershipMap::new();
    own.insert("l0".to_owned(), "l0".to_owned());
    own.insert("l1".to_owned(), "l1".to_owned());
    let sfb = |rows: Vec<Vec<f64>>| {
        let att =
            AttentionMatrix::from_rows(AttentionSource::Simulated, labels(), labels(), rows, None)
                .unwrap();
        let b = BiasMatrix::compute(&att);
        (self_focus(&b, &own, "l0", 1), self_focus(&b, &own, "l1", 1))
    };
    let diagonal = sfb(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    let uniform = sfb(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    let ok = diagonal == (Some(2.0), Some(2.0))
        && [uniform.0, uniform.1]
            .iter()
            .all(|v| v.is_some_and(|v| v.abs() < 1e-12));
    check(ok, format!("diagonal {diagonal:?}, uniform {uniform:?}"))
}

fn stats_kernel() -> Outcome {
    let rho_err = spearman_max_error(100, 11);
    let same = js_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap();
    let disjoint = js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
    let mixed = js_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
    let ok = rho_err <= 1e-9 && same == 0.0 && disjoint == 1.0 && (mixed - 0.0488).abs() < 1e-4;
    check(
        ok,
        format!("spearman max error {rho_err:e}, jsd {same} / {disjoint} / {mixed:.5}"),
    )
}

fn simulation_self_consistency() -> Outcome {
    let start = Instant::now();
    let base = SimConfig {
        n_communities: 30,
        replications: 20,
        seed: 0,
        ..SimConfig::default()
    };
    let spec = HistogramSpec::new(-0.1, 0.1, 6, 1e-6).unwrap();
    let truth = SimConfig {
        affinity_sigma: 30.0,
        ..base.clone()
    };
    let run = || -> Result<(f64, f64, f64), String> {
        let empirical = synthetic_bias_sample(&truth, Model::PopularityPlusAffinity, 20)
            .map_err(|e| e.to_string())?;
        let m1 = sweep(
            &base,
            Model::PopularityOnly,
            SweepParameter::Lambda,
            &DEFAULT_LAMBDA_GRID,
            &empirical,
            &spec,
        )
        .map_err(|e| e.to_string())?;
        let m1 = best_row(&m1)
            .ok_or("popularity model never calibrated")?
            .clone();
        let at = SimConfig {
            lambda: m1.param,
            ..base.clone()
        };
        let m2 = sweep(
            &at,
            Model::PopularityPlusAffinity,
            SweepParameter::Sigma,
            &DEFAULT_SIGMA_GRID,
            &empirical,
            &spec,
        )
        .map_err(|e| e.to_string())?;
        let m2 = best_row(&m2)
            .ok_or("affinity model never calibrated")?
            .clone();
        Ok((m1.mean_jsd.unwrap(), m2.param, m2.mean_jsd.unwrap()))
    };
    match run() {
        Ok((m1, sigma, m2)) => {
            let nearest = DEFAULT_SIGMA_GRID
                .iter()
                .copied()
                .min_by(|a, b| (a - 30.0).abs().total_cmp(&(b - 30.0).abs()));
            let detail = format!(
                "best sigma {sigma}, min JSD popularity {m1:.4} vs popularity+affinity {m2:.4}"
            );
            if nearest != Some(sigma) || m2 >= m1 {
                return Fail(detail);
            }
            within(start.elapsed(), Duration::from_secs(60), detail)
        }
        Err(e) => Fail(e),
    }
}

fn self_focus_calibration() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in [0.5, 1.0, 4.0] {
        for sigma in [0.0, 10.0, 30.0] {
            let c = SimConfig {
                lambda,
                affinity_sigma: sigma,
                n_communities: 27,
                ..SimConfig::default()
            };
            for rep in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(1, rep));
                match generate_attention(&c, Model::PopularityPlusAffinity, &mut rng) {
                    Ok(r) => worst = worst.max((r.achieved_self_focus - 0.242).abs()),
                    Err(e) => return Fail(format!("lambda {lambda}, sigma {sigma}: {e}")),
                }
            }
        }
    }
    check(
        worst <= 0.005,
        format!("max |achieved - 0.242| = {worst:e} over 9 configs x 5 seeds"),
    )
}

fn crowd_tasks() -> Outcome {
    let ranking = RankedPairList::from_tsv("fixture", &ranking_tsv(450)).unwrap();
    let tasks = match generate_crowd_tasks(&ranking, 15) {
        Ok(t) => t,
        Err(e) => return Fail(e.to_string()),
    };
    let high: std::collections::BTreeSet<_> = tasks.iter().map(|t| t.pair_high.clone()).collect();
    let low: std::collections::BTreeSet<_> = tasks.iter().map(|t| t.pair_low.clone()).collect();
    let ok = tasks.len() == 225 && high.len() == 15 && low.len() == 15 && high.is_disjoint(&low);
    check(
        ok,
        format!(
            "{} tasks, {} high and {} low pairs, disjoint {}",
            tasks.len(),
            high.len(),
            low.len(),
            high.is_disjoint(&low)
        ),
    )
}

fn end_to_end_replay() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for w in [&a, &b] {
        fs::create_dir_all(w).unwrap();
        let codes = replay_and_analyze(w);
        if codes != (0, 0) {
            return Fail(format!("exit codes {codes:?}"));
        }
    }
    let (ta, tb) = (tree(&a), tree(&b));
    let differing: Vec<&String> = ta.keys().filter(|k| ta.get(*k) != tb.get(*k)).collect();
    check(
        ta.len() == tb.len() && differing.is_empty() && ta.len() > 11,
        format!("{} files compared, {} differ", ta.len(), differing.len()),
    )
}

fn archived_regression() -> Outcome {
    let vars = [
        "CCRM_ARCHIVED_SNAPSHOT",
        "CCRM_ARCHIVED_ESS",
        "CCRM_ARCHIVED_MIGRATION",
    ];
    let Ok(values) = vars.iter().map(env::var).collect::<Result<Vec<_>, _>>() else {
        return Skip(format!("set {} to run", vars.join(", ")));
    };
    let paths: Vec<PathBuf> = values.into_iter().map(PathBuf::from).collect();
    let [snapshot, ess, migration]: [PathBuf; 3] = paths.try_into().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let analyze = run(&[
        "analyze",
        "--snapshot",
        path(&snapshot),
        "--out",
        path(&out),
    ]);
    if code(&analyze) != 0 {
        return Fail(format!(
            "analyze failed: {}",
            String::from_utf8_lossy(&analyze.stderr)
        ));
    }
    let validate = run(&[
        "validate",
        "--snapshot",
        path(&snapshot),
        "--analysis",
        path(&out),
        "--out",
        path(&out),
        "--external",
        path(&ess),
        "--external",
        path(&migration),
    ]);
    if code(&validate) != 0 {
        return Fail(format!(
            "validate failed: {}",
            String::from_utf8_lossy(&validate.stderr)
        ));
    }
    let read = |p: PathBuf| serde_json::from_str::<Value>(&fs::read_to_string(p).unwrap()).unwrap();
    let summary = read(out.join("summary.json"));
    let report = read(out.join("validation/report.json"));
    let comparisons = &report["external"]["comparisons"];
    let checks = [
        (
            "neighbor ratio",
            summary["neighbor_ratio"]["mean"].as_f64(),
            1.52,
            0.15,
        ),
        (
            "views self-focus",
            summary["self_focus"]["views"]["mean"].as_f64(),
            0.242,
            0.05,
        ),
        (
            "coverage rho",
            summary["coverage"]["spearman_rho"].as_f64(),
            0.82,
            0.1,
        ),
        ("wiki-ess rho", comparisons[0]["rho"].as_f64(), 0.18, 0.1),
        (
            "wiki-migration rho",
            comparisons[1]["rho"].as_f64(),
            0.36,
            0.1,
        ),
        (
            "ess-migration rho",
            comparisons[2]["rho"].as_f64(),
            0.22,
            0.1,
        ),
    ];
    let mut ok = true;
    let parts: Vec<String> = checks
        .iter()
        .map(|(name, got, want, tol)| {
            let hit = got.is_some_and(|g| (g - want).abs() <= *tol);
            ok &= hit;
            format!(
                "{name} {} (want {want}±{tol})",
                got.map_or("undefined".into(), |g| format!("{g:.3}"))
            )
        })
        .collect();
    check(ok, parts.join(", "))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("measure oracle equivalence", measure_oracle),
        ("bias identities", bias_identity_suite),
        ("self-focus extremes", self_focus_extremes),
        ("stats kernel", stats_kernel),
        ("simulation self-consistency", simulation_self_consistency),
        ("self-focus calibration", self_focus_calibration),
        ("crowd-task construction", crowd_tasks),
        ("end-to-end replay", end_to_end_replay),
        ("archived-data regression", archived_regression),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {}: {tag} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
