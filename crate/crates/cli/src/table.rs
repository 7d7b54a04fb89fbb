//! Plain-text table rendering with four-significant-digit numeric cells
//! (full precision stays in the CSVs).

use batd_core::spectra::AnalysisRow;

/// Format with four significant digits: plain decimal in a readable range,
/// scientific outside it.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let digits = (3 - a.log10().floor() as i64).max(0) as usize;
        format!("{x:.digits$}")
    } else {
        format!("{x:.3e}")
    }
}

/// Render rows as aligned columns separated by two spaces.
pub fn render(headers: &[&str], rows: &[Vec<String>]) -> String {
    let ncols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: &[String], out: &mut String| {
        for i in 0..ncols {
            let cell = cells.get(i).map(String::as_str).unwrap_or("");
            out.push_str(&format!("{:<width$}", cell, width = widths[i]));
            if i + 1 < ncols {
                out.push_str("  ");
            }
        }
        out.push('\n');
    };
    fmt_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>(), &mut out);
    let total: usize = widths.iter().sum::<usize>() + 2 * (ncols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        fmt_row(row, &mut out);
    }
    out
}

/// The mean-operator verification table.
pub fn analysis_table(rows: &[AnalysisRow]) -> String {
    let headers = [
        "env",
        "sigma_min(M_A-D_pi)",
        "TDRC margin",
        "BA margin",
        "best q_C",
        "best q_A",
        "q_A<q_C",
        "interpretation",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.env.clone(),
                fmt_sig(r.sigma_min_fp),
                fmt_sig(r.margin_tdrc),
                fmt_sig(r.margin_ba),
                fmt_sig(r.best_q_c),
                fmt_sig(r.best_q_a),
                if r.speed_holds { "yes" } else { "no" }.to_string(),
                r.interpretation.clone(),
            ]
        })
        .collect();
    render(&headers, &body)
}

/// `mean ± std`, with a trailing `*` when any contributing run diverged.
pub fn cell_mean_std(mean: f64, std: f64, n_diverged: usize) -> String {
    let mark = if n_diverged > 0 { "*" } else { "" };
    format!("{} ± {}{}", fmt_sig(mean), fmt_sig(std), mark)
}
