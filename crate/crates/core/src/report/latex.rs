use std::fmt::Write;

use super::RunResult;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '_' | '&' | '%' | '$' | '#' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            '\\' => out.push_str("\\textbackslash{}"),
            _ => out.push(c),
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "--".to_string())
}

/// A single `tabular` with one row per evaluated dataset. Absent metrics are
/// rendered as `--`.
pub fn emit_latex(result: &RunResult) -> String {
    let mut out = String::new();
    out.push_str("\\begin{tabular}{lrrrrrr}\n\\hline\n");
    out.push_str("Dataset & N & EER & AUC & Accuracy & TPR & TNR \\\\\n\\hline\n");
    for (id, r) in &result.reports {
        writeln!(
            out,
            "{} & {} & {} & {} & {} & {} & {} \\\\",
            escape(id),
            r.n_bonafide + r.n_spoof,
            cell(r.eer),
            cell(r.auc),
            cell(r.accuracy),
            cell(r.tpr),
            cell(r.tnr),
        )
        .expect("writing to a String");
    }
    out.push_str("\\hline\n\\end{tabular}\n");
    out
}
