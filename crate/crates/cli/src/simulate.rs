use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ccrm_core::report::{render_line_chart, write_file, LineChart, Series};
use ccrm_core::sim::{
    best_row, sweep, synthetic_bias_sample, Model, SimConfig, SweepParameter, SweepRow,
};
use ccrm_core::stats::HistogramSpec;
use serde_json::json;

use crate::analyze::EMPIRICAL_HEADER;
use crate::args::SimulateArgs;
use crate::error::{ctx, CliError, CliResult};

fn read_empirical(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(ctx(path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some(EMPIRICAL_HEADER) {
        return Err(CliError::Input(format!(
            "{}: expected header {EMPIRICAL_HEADER:?}",
            path.display()
        )));
    }
    let mut values = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let field = line.rsplit('\t').next().unwrap_or_default();
        let v: f64 = field.parse().map_err(|_| {
            CliError::Input(format!(
                "{}:{}: bad bias value {field:?}",
                path.display(),
                i + 2
            ))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no bias values",
            path.display()
        )));
    }
    Ok(values)
}

fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param\tmean_jsd\tstd_jsd\tn_ok\n");
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.param,
            opt(r.mean_jsd),
            opt(r.std_jsd),
            r.n_ok
        );
    }
    out
}

fn chart(title: &str, x_label: &str, label: &str, rows: &[SweepRow]) -> String {
    let points = rows
        .iter()
        .filter_map(|r| r.mean_jsd.map(|m| (r.param, m)))
        .collect();
    render_line_chart(&LineChart {
        title: title.to_owned(),
        x_label: x_label.to_owned(),
        y_label: "JS divergence".to_owned(),
        series: vec![Series {
            label: label.to_owned(),
            points,
        }],
        y_range: None,
    })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    write_file(path, contents).map_err(|e| CliError::Input(e.to_string()))
}

pub fn run(a: &SimulateArgs, seed: u64) -> CliResult<()> {
    let input = |e: ccrm_core::sim::SimError| CliError::Input(e.to_string());
    let spec = HistogramSpec::new(a.hist_lower, a.hist_upper, a.hist_bins, a.hist_epsilon)
        .map_err(|e| CliError::Input(format!("histogram: {e}")))?;
    let base = SimConfig {
        n_communities: a.communities,
        affinity_mu: a.mu,
        self_focus_target: a.target,
        seed,
        replications: a.replications,
        ..SimConfig::default()
    };
    base.validate().map_err(input)?;

    let (empirical, empirical_source) = if a.synthetic {
        if a.synthetic_draws == 0 {
            return Err(CliError::Input("--synthetic-draws must be positive".into()));
        }
        let truth = SimConfig {
            affinity_sigma: a.sigma_star,
            ..base.clone()
        };
        let values =
            synthetic_bias_sample(&truth, Model::PopularityPlusAffinity, a.synthetic_draws)
                .map_err(input)?;
        (
            values,
            json!({ "synthetic": { "sigma": a.sigma_star, "draws": a.synthetic_draws } }),
        )
    } else {
        let path = a
            .empirical
            .as_ref()
            .ok_or_else(|| CliError::Input("missing --empirical".into()))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned());
        (read_empirical(path)?, json!({ "file": name }))
    };

    let lambda_rows = sweep(
        &base,
        Model::PopularityOnly,
        SweepParameter::Lambda,
        &a.lambda_grid,
        &empirical,
        &spec,
    )
    .map_err(input)?;
    let best_lambda = best_row(&lambda_rows)
        .ok_or_else(|| CliError::Input("no popularity rate could be calibrated".into()))?
        .clone();
    let at_best = SimConfig {
        lambda: best_lambda.param,
        ..base.clone()
    };
    let sigma_rows = sweep(
        &at_best,
        Model::PopularityPlusAffinity,
        SweepParameter::Sigma,
        &a.sigma_grid,
        &empirical,
        &spec,
    )
    .map_err(input)?;
    let best_sigma = best_row(&sigma_rows).cloned();

    let dir = a.out.join("simulation");
    write(&dir.join("lambda_sweep.tsv"), &sweep_tsv(&lambda_rows))?;
    write(&dir.join("sigma_sweep.tsv"), &sweep_tsv(&sigma_rows))?;
    write(
        &dir.join("lambda_sweep.svg"),
        &chart(
            "Popularity model",
            "popularity rate",
            "popularity",
            &lambda_rows,
        ),
    )?;
    write(
        &dir.join("sigma_sweep.svg"),
        &chart(
            "Popularity + affinity model",
            "affinity spread",
            "popularity + affinity",
            &sigma_rows,
        ),
    )?;
    let summary = json!({
        "empirical": { "values": empirical.len(), "source": empirical_source },
        "histogram": spec,
        "config": base,
        "popularity_only": { "best_lambda": best_lambda.param, "min_jsd": best_lambda.mean_jsd },
        "popularity_plus_affinity": {
            "lambda": best_lambda.param,
            "best_sigma": best_sigma.as_ref().map(|r| r.param),
            "min_jsd": best_sigma.as_ref().and_then(|r| r.mean_jsd),
        },
    });
    write(
        &dir.join("summary.json"),
        &(serde_json::to_string_pretty(&summary).expect("serializes") + "\n"),
    )?;
    println!(
        "best popularity rate {} (JSD {}), best affinity spread {} (JSD {})",
        best_lambda.param,
        best_lambda.mean_jsd.unwrap_or(f64::NAN),
        best_sigma.as_ref().map_or(f64::NAN, |r| r.param),
        best_sigma
            .as_ref()
            .and_then(|r| r.mean_jsd)
            .unwrap_or(f64::NAN),
    );
    Ok(())
}
