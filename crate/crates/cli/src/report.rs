//! Tables and rule listings gathered from every evaluated scope.

use std::fmt::Write as _;

use anyhow::Context as _;
use serde::{Deserialize, Serialize};

use crate::artifacts::{json_files, read_json, write_json, write_text, Layout};
use crate::stages::{Evaluation, PredicateExplanations};

/// Rules listed per predicate in `top_rules.txt`.
pub const TOP_RULES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub evaluations: Vec<Evaluation>,
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// Writes `table.csv`, `table.json` and `top_rules.txt` under `report/`.
pub fn report(layout: &Layout) -> anyhow::Result<Report> {
    let files = json_files(&layout.fidelity_dir(), "evaluate")?;
    let evaluations: Vec<Evaluation> =
        files.iter().map(|p| read_json(p, "evaluate")).collect::<anyhow::Result<_>>()?;
    let model = evaluations.first().map(|e| e.model.clone()).unwrap_or_default();

    let mut predicates: Vec<String> = evaluations
        .iter()
        .flat_map(|e| e.per_predicate.iter().map(|p| p.predicate.clone()))
        .collect();
    predicates.sort();
    predicates.dedup();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model".to_owned(), "predicate".to_owned()];
    for e in &evaluations {
        for col in ["roc_auc", "s_mrr", "o_mrr", "covered"] {
            header.push(format!("{}_{}_{col}", e.scope, e.mode));
        }
    }
    w.write_record(&header)?;
    let mut overall = vec![model.clone(), "all".to_owned()];
    for e in &evaluations {
        let r = e.overall.as_ref();
        overall.extend([
            cell(r.and_then(|r| r.roc_auc)),
            cell(r.and_then(|r| r.s_mrr)),
            cell(r.and_then(|r| r.o_mrr)),
            format!("{}/{}", e.covered_predicates, e.predicates),
        ]);
    }
    w.write_record(&overall)?;
    for p in &predicates {
        let mut row = vec![model.clone(), p.clone()];
        for e in &evaluations {
            match e.per_predicate.iter().find(|x| &x.predicate == p) {
                Some(x) => {
                    let r = x.fidelity.as_ref();
                    row.extend([
                        cell(r.and_then(|r| r.roc_auc)),
                        cell(r.and_then(|r| r.s_mrr)),
                        cell(r.and_then(|r| r.o_mrr)),
                        format!("{}/{}", x.covered_explanations, x.explanations),
                    ]);
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&row)?;
    }
    let table = String::from_utf8(w.into_inner().context("flushing table")?)?;
    let dir = layout.report_dir();
    write_text(&dir.join("table.csv"), &table)?;

    let mut top = String::new();
    for e in &evaluations {
        let expl_dir = layout.explanations_dir(e.scope, e.mode);
        for path in json_files(&expl_dir, "explain")? {
            let pe: PredicateExplanations = read_json(&path, "explain")?;
            writeln!(top, "== {} [{}-{}]", pe.predicate, pe.scope, pe.mode)?;
            if let Some(why) = &pe.skipped {
                writeln!(top, "  skipped: {why}")?;
            }
            let mut rules: Vec<(f64, String, String)> = pe
                .explanations
                .iter()
                .flat_map(|x| x.rules.iter().map(move |r| (r.coefficient, r.text.clone(), x.scope.to_string())))
                .filter(|(g, ..)| *g != 0.0)
                .collect();
            rules.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2)));
            for (g, text, scope) in rules.iter().take(TOP_RULES) {
                writeln!(top, "  {g:+.4}  {text}  [{scope}]")?;
            }
        }
    }
    write_text(&dir.join("top_rules.txt"), &top)?;

    let report = Report { model, evaluations };
    write_json(&dir.join("table.json"), &report)?;
    Ok(report)
}
