use super::metrics::MacroTable;

/// Run tag as shown in tables: first letter upper-cased.
pub fn display_label(tag: &str) -> String {
    let mut chars = tag.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One precision row: label then three-decimal values, space separated.
pub fn format_precision_row(label: &str, values: &[f64]) -> String {
    let mut out = label.to_string();
    for v in values {
        out.push(' ');
        out.push_str(&format!("{v:.3}"));
    }
    out
}

/// Aligned table of mean precision per run.
pub fn render_precision_table(rows: &[MacroTable<f64>]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let width = rows
        .iter()
        .map(|r| display_label(&r.run_tag).chars().count())
        .max()
        .unwrap_or(0)
        .max(2);
    let mut out = format!("{:<width$}", "p@");
    for k in &first.cutoffs {
        out.push_str(&format!(" {k:>5}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:<width$}", display_label(&r.run_tag)));
        for v in &r.means {
            out.push_str(&format!(" {v:>5.3}"));
        }
        out.push('\n');
    }
    out
}
