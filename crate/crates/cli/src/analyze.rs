use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ccrm_core::corpus::{load_snapshot, AttentionSource, CorpusSnapshot};
use ccrm_core::measures::{
    bias_summaries, coverage_stats, cultural_similarity, cultural_understanding,
    neighbor_similarity_ratio, pairwise_agreement, BiasMatrix, BiasSummary, Perspective,
    SimilarityMatrix, Thresholds, UnderstandingMatrix,
};
use ccrm_core::report::{
    emit_matrix, render_heatmap, render_ranked_curves, write_file, ColorScale, Format,
    HeatmapRender, LabeledMatrix,
};
use ccrm_core::stats::{spearman, PermutationTest};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{AnalyzeArgs, Source};
use crate::error::{ctx, CliError, CliResult};

/// Header of the empirical bias file read by `simulate`.
pub const EMPIRICAL_HEADER: &str = "language\tcuisine\tbias";

fn write(path: &Path, contents: &str) -> CliResult<()> {
    write_file(path, contents).map_err(|e| CliError::Input(e.to_string()))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn similarity_mean(m: &SimilarityMatrix) -> Option<f64> {
    mean(m.pairs().filter(|(a, b, _)| a < b).map(|(_, _, v)| v))
}

fn understanding_mean(m: &UnderstandingMatrix, snapshot: &CorpusSnapshot) -> Option<f64> {
    let own = snapshot.ownership();
    let mut values = Vec::new();
    for (li, l) in m.languages().iter().enumerate() {
        for (ci, c) in m.cuisines().iter().enumerate() {
            if !own.owns(l, c) {
                values.extend(m.get(li, ci));
            }
        }
    }
    mean(values)
}

#[derive(Serialize)]
struct Aggregate {
    mean: Option<f64>,
    defined: usize,
    per_item: BTreeMap<String, Option<f64>>,
}

fn aggregate(items: impl IntoIterator<Item = (String, Option<f64>)>) -> Aggregate {
    let per_item: BTreeMap<String, Option<f64>> = items.into_iter().collect();
    let defined: Vec<f64> = per_item.values().flatten().copied().collect();
    Aggregate {
        mean: mean(defined.iter().copied()),
        defined: defined.len(),
        per_item,
    }
}

fn bias_matrix(
    snapshot: &CorpusSnapshot,
    source: Source,
    selected: Source,
    a: &AnalyzeArgs,
) -> CliResult<Option<BiasMatrix>> {
    let months = if source == Source::Views {
        a.months
    } else {
        None
    };
    match snapshot.attention_matrix(AttentionSource::from(source), months) {
        Ok(att) => Ok(Some(BiasMatrix::compute(&att))),
        Err(e) if source == selected => Err(CliError::Input(format!("{source:?} attention: {e}"))),
        Err(e) => {
            log::warn!("{source:?} attention unavailable: {e}");
            Ok(None)
        }
    }
}

fn bias_table(snapshot: &CorpusSnapshot, bias: Option<&BiasMatrix>) -> LabeledMatrix {
    match bias {
        Some(b) => LabeledMatrix::from_bias(b),
        None => {
            let rows: Vec<String> = snapshot
                .languages()
                .iter()
                .map(|l| l.code.clone())
                .collect();
            let cols: Vec<String> = snapshot.cuisines().iter().map(|c| c.id.clone()).collect();
            let values = vec![vec![None; cols.len()]; rows.len()];
            LabeledMatrix::new(rows, cols, values).expect("snapshot labels are unique")
        }
    }
}

/// Covered bias values toward cuisines the language does not own.
fn empirical_bias(snapshot: &CorpusSnapshot, bias: &BiasMatrix) -> String {
    let mut out = format!("{EMPIRICAL_HEADER}\n");
    for (li, l) in bias.languages().iter().enumerate() {
        for (ci, c) in bias.cuisines().iter().enumerate() {
            if snapshot.ownership().owns(l, c) {
                continue;
            }
            if let Some(v) = bias.covered_value(li, ci) {
                let _ = writeln!(out, "{l}\t{c}\t{v}");
            }
        }
    }
    out
}

fn summaries_json(s: &[BiasSummary]) -> (Aggregate, Aggregate) {
    (
        aggregate(s.iter().map(|b| (b.language.clone(), b.self_focus))),
        aggregate(s.iter().map(|b| (b.language.clone(), b.regional))),
    )
}

pub fn run(a: &AnalyzeArgs, seed: u64) -> CliResult<()> {
    if a.min_cuisines == 0 || a.min_neighbors == 0 {
        return Err(CliError::Input("thresholds must be at least 1".into()));
    }
    let snapshot = load_snapshot(&a.snapshot).map_err(ctx(a.snapshot.display()))?;
    let thresholds = Thresholds {
        min_cuisines: a.min_cuisines,
        min_neighbors: a.min_neighbors,
    };
    let format = Format::from(a.format);
    let ext = format.extension();
    let out = &a.out;

    let views = bias_matrix(&snapshot, Source::Views, a.source, a)?;
    let outlinks = bias_matrix(&snapshot, Source::Outlinks, a.source, a)?;
    let global = cultural_similarity(&snapshot, Perspective::Global);
    let native = cultural_similarity(&snapshot, Perspective::Native);
    let understanding = cultural_understanding(&snapshot);

    let coverage = coverage_stats(&snapshot);
    let mut cov = String::from("language\tsize_articles\tcuisine_articles\n");
    for r in &coverage {
        let _ = writeln!(
            cov,
            "{}\t{}\t{}",
            r.language, r.size_articles, r.cuisine_articles
        );
    }
    write(&out.join("coverage/coverage.tsv"), &cov)?;

    let emit = |m: &LabeledMatrix, rel: String| {
        emit_matrix(m, format, &out.join(rel)).map_err(|e| CliError::Input(e.to_string()))
    };
    emit(
        &LabeledMatrix::from_similarity(&global),
        format!("similarity/global.{ext}"),
    )?;
    emit(
        &LabeledMatrix::from_similarity(&native),
        format!("similarity/native.{ext}"),
    )?;

    let ratios: Vec<(String, Option<f64>)> = snapshot
        .cuisines()
        .iter()
        .map(|c| {
            (
                c.id.clone(),
                neighbor_similarity_ratio(&global, &c.id, &snapshot, a.min_neighbors),
            )
        })
        .collect();
    let mut ratio_tsv = String::from("cuisine\tratio\n");
    for (c, r) in &ratios {
        let _ = writeln!(ratio_tsv, "{c}\t{}", opt(*r));
    }
    write(&out.join("similarity/neighbor_ratio.tsv"), &ratio_tsv)?;

    let und_table = LabeledMatrix::from_understanding(&understanding);
    emit(&und_table, format!("understanding/understanding.{ext}"))?;
    let own = snapshot.ownership();
    let heat = HeatmapRender::from_matrix(
        "Cultural understanding",
        &und_table,
        |l, c| own.owns(l, c),
        ColorScale::blues(0.0, 1.0),
    );
    write(
        &out.join("understanding/heatmap.svg"),
        &render_heatmap(&heat),
    )?;
    let curves = render_ranked_curves(
        "Pairwise description agreement",
        &pairwise_agreement(&snapshot),
    );
    write(&out.join("understanding/agreement_curves.svg"), &curves)?;

    emit(
        &bias_table(&snapshot, views.as_ref()),
        format!("affinity/bias_views.{ext}"),
    )?;
    emit(
        &bias_table(&snapshot, outlinks.as_ref()),
        format!("affinity/bias_outlinks.{ext}"),
    )?;
    let selected = match a.source {
        Source::Views => views.as_ref(),
        Source::Outlinks => outlinks.as_ref(),
    }
    .expect("selected source was computed");
    write(
        &out.join("affinity/empirical_bias.tsv"),
        &empirical_bias(&snapshot, selected),
    )?;

    let test = PermutationTest {
        permutations: a.permutations,
        seed,
    };
    let sizes: Vec<f64> = coverage.iter().map(|r| r.size_articles as f64).collect();
    let counts: Vec<f64> = coverage.iter().map(|r| r.cuisine_articles as f64).collect();
    let coverage_corr = match spearman(&sizes, &counts, &test) {
        Ok(c) => json!({ "spearman_rho": c.rho, "p_value": c.p_value, "n": c.n }),
        Err(e) => json!({ "error": e.to_string() }),
    };

    let mut bias_json = serde_json::Map::new();
    let mut regional_json = serde_json::Map::new();
    for (name, m) in [("views", &views), ("outlinks", &outlinks)] {
        let (sf, rb) = match m {
            Some(m) => {
                let (sf, rb) = summaries_json(&bias_summaries(m, &snapshot, thresholds));
                (
                    serde_json::to_value(sf).expect("serializable"),
                    serde_json::to_value(rb).expect("serializable"),
                )
            }
            None => (Value::Null, Value::Null),
        };
        bias_json.insert(name.into(), sf);
        regional_json.insert(name.into(), rb);
    }

    let summary = json!({
        "snapshot": {
            "languages": snapshot.languages().len(),
            "cuisines": snapshot.cuisines().len(),
            "articles": snapshot.concept_sets().count(),
            "metadata": snapshot.metadata(),
        },
        "settings": {
            "source": a.source,
            "months": a.months.map(|m| m.to_string()),
            "thresholds": thresholds,
            "permutations": a.permutations,
            "seed": seed,
        },
        "similarity": {
            "global_mean": similarity_mean(&global),
            "native_mean": similarity_mean(&native),
        },
        "understanding": { "mean": understanding_mean(&understanding, &snapshot) },
        "neighbor_ratio": aggregate(ratios),
        "self_focus": bias_json,
        "regional_bias": regional_json,
        "coverage": coverage_corr,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write(&out.join("summary.json"), &text)?;
    println!(
        "wrote analysis of {} to {}",
        a.snapshot.display(),
        out.display()
    );
    Ok(())
}
