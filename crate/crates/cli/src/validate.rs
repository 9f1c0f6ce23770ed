use std::fs;
use std::path::{Path, PathBuf};

use ccrm_core::corpus::{load_snapshot, AttentionSource};
use ccrm_core::measures::{BiasMatrix, Perspective, SimilarityMatrix, UnderstandingMatrix};
use ccrm_core::report::{write_file, LabeledMatrix};
use ccrm_core::stats::{PermutationTest, RankedPairList};
use ccrm_core::validate::{
    correlate_with_external, cross_measure_correlations, crowd_tasks_to_tsv, generate_crowd_tasks,
    similarity_ranking, understanding_country_ranking, ExternalRanking, ValidateError,
};
use serde_json::{json, Value};

use crate::args::{Source, ValidateArgs};
use crate::error::{ctx, CliError, CliResult};

/// Reads `<analysis>/<stem>.tsv` or, failing that, `<stem>.json`.
fn read_matrix(analysis: &Path, stem: &str) -> CliResult<LabeledMatrix> {
    let tsv = analysis.join(format!("{stem}.tsv"));
    let json = analysis.join(format!("{stem}.json"));
    let (path, parsed): (PathBuf, _) = if tsv.is_file() {
        let text = fs::read_to_string(&tsv).map_err(ctx(tsv.display()))?;
        (tsv.clone(), LabeledMatrix::from_tsv(&text))
    } else if json.is_file() {
        let text = fs::read_to_string(&json).map_err(ctx(json.display()))?;
        (json.clone(), LabeledMatrix::from_json(&text))
    } else {
        return Err(CliError::Input(format!(
            "{} not found (run analyze first)",
            tsv.display()
        )));
    };
    parsed.map_err(ctx(path.display()))
}

fn flatten(m: &LabeledMatrix) -> Vec<Option<f64>> {
    m.values.iter().flatten().copied().collect()
}

pub fn run(a: &ValidateArgs, seed: u64) -> CliResult<()> {
    if a.externals.is_empty() && a.crowd_tasks.is_none() {
        return Err(CliError::Input(
            "nothing to do: give at least one --external or --crowd-tasks".into(),
        ));
    }
    let snapshot = load_snapshot(&a.snapshot).map_err(ctx(a.snapshot.display()))?;
    let test = PermutationTest {
        permutations: a.permutations,
        seed,
    };

    let und = read_matrix(&a.analysis, "understanding/understanding")?;
    let understanding =
        UnderstandingMatrix::from_entries(und.rows.clone(), und.cols.clone(), flatten(&und));
    let sim = read_matrix(&a.analysis, "similarity/global")?;
    if sim.rows != sim.cols {
        return Err(CliError::Input("similarity matrix is not square".into()));
    }
    let similarity =
        SimilarityMatrix::from_entries(Perspective::Global, sim.cols.clone(), flatten(&sim));

    let mut report = serde_json::Map::new();
    if !a.externals.is_empty() {
        let externals = a
            .externals
            .iter()
            .map(|p| ExternalRanking::load(p).map_err(|e| CliError::Input(e.to_string())))
            .collect::<CliResult<Vec<_>>>()?;
        let wiki = understanding_country_ranking(&understanding, &snapshot, "understanding")
            .map_err(|e| CliError::Input(e.to_string()))?;
        let external = correlate_with_external(&wiki, &externals, &test).map_err(|e| match e {
            ValidateError::EmptyIntersection => CliError::Input(
                "no external ranking shares any key with the understanding ranking".into(),
            ),
            e => CliError::Input(e.to_string()),
        })?;
        report.insert(
            "external".into(),
            serde_json::to_value(external).expect("serializes"),
        );
    }

    let stem = match a.bias_source {
        Source::Views => "affinity/bias_views",
        Source::Outlinks => "affinity/bias_outlinks",
    };
    let b = read_matrix(&a.analysis, stem)?;
    let bias = BiasMatrix::from_entries(
        AttentionSource::from(a.bias_source),
        b.rows.clone(),
        b.cols.clone(),
        flatten(&b),
    );
    let cross =
        match cross_measure_correlations(&snapshot, &similarity, &understanding, &bias, &test) {
            Ok(r) => serde_json::to_value(r).expect("serializes"),
            Err(e) => {
                log::warn!("cross-measure correlations unavailable: {e}");
                Value::Null
            }
        };
    report.insert("cross_measure".into(), cross);

    let dir = a.out.join("validation");
    if let Some(k) = a.crowd_tasks {
        let ranking = match &a.crowd_ranking {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(ctx(p.display()))?;
                let label = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                RankedPairList::from_tsv(label, &text).map_err(ctx(p.display()))?
            }
            None => similarity_ranking(&similarity, "similarity"),
        };
        let tasks =
            generate_crowd_tasks(&ranking, k).map_err(|e| CliError::Input(e.to_string()))?;
        write_file(&dir.join("crowd_tasks.tsv"), &crowd_tasks_to_tsv(&tasks))
            .map_err(|e| CliError::Input(e.to_string()))?;
        report.insert(
            "crowd_tasks".into(),
            json!({ "k": k, "ranking": ranking.source_label, "tasks": tasks.len() }),
        );
    }

    let text = serde_json::to_string_pretty(&Value::Object(report)).expect("serializes") + "\n";
    write_file(&dir.join("report.json"), &text).map_err(|e| CliError::Input(e.to_string()))?;
    println!("wrote validation report to {}", dir.display());
    Ok(())
}
