//! Plain-text tables and the per-replicate CSV.

use std::fmt::Write as _;
use std::io::Write;

use super::{EvalReport, Mark};
use crate::error::Result;

const TALLY_SIG: &str = "win-lose-tie";
const TALLY_MEAN: &str = "  (by mean)";

fn format_p(p: f64) -> String {
    if p >= 1e-4 || p == 0.0 {
        format!("{p:.4}")
    } else {
        format!("{p:.1e}")
    }
}

impl EvalReport {
    fn name_width(&self) -> usize {
        self.datasets
            .iter()
            .map(|d| d.name.chars().count())
            .chain([TALLY_SIG.len(), "dataset".len()])
            .max()
            .unwrap_or(0)
    }

    fn method_width(&self) -> usize {
        self.methods.iter().map(|m| m.name().len()).max().unwrap_or(0).max(9) + 2
    }

    fn baseline_name(&self) -> &'static str {
        self.methods[self.baseline].name()
    }

    /// Error table with significance marks and the win-lose-tie footer.
    pub fn error_table(&self) -> String {
        let (nw, mw) = (self.name_width(), self.method_width());
        let mut out = String::new();
        writeln!(
            out,
            "Error rates, mean over {} replicates. Marks compare each method with {} \
             (paired t-test, p < {}): \u{2218} higher error, \u{2022} lower error.",
            self.replicates,
            self.baseline_name(),
            self.alpha
        )
        .unwrap();
        out.push('\n');
        write!(out, "{:<nw$}", "dataset").unwrap();
        for m in &self.methods {
            write!(out, "{:>mw$}", m.name()).unwrap();
        }
        out.push('\n');
        for d in &self.datasets {
            write!(out, "{:<nw$}", d.name).unwrap();
            match &d.failure {
                Some(reason) => write!(out, "  FAILED: {reason}").unwrap(),
                None => {
                    for r in &d.results {
                        let mark = r.comparison.as_ref().map_or(Mark::None, |c| c.mark);
                        let cell = format!("{:.3} {:<1}", r.mean_error, mark.symbol());
                        write!(out, "{cell:>mw$}").unwrap();
                    }
                }
            }
            out.push('\n');
        }
        writeln!(out, "{}", "-".repeat(nw + mw * self.methods.len())).unwrap();
        for (label, by_mean) in [(TALLY_SIG, false), (TALLY_MEAN, true)] {
            write!(out, "{label:<nw$}").unwrap();
            for i in 0..self.methods.len() {
                let cell = if i == self.baseline {
                    "-".to_string()
                } else if by_mean {
                    self.win_lose_tie_by_mean(i).to_string()
                } else {
                    self.win_lose_tie(i).to_string()
                };
                write!(out, "{:>mw$}", format!("{cell}  ")).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Paired t-test p-values of each method against the baseline.
    pub fn p_value_table(&self) -> String {
        let (nw, mw) = (self.name_width(), self.method_width());
        let others: Vec<usize> = (0..self.methods.len()).filter(|&i| i != self.baseline).collect();
        let mut out = String::new();
        writeln!(out, "Paired t-test p-values against {}.", self.baseline_name()).unwrap();
        out.push('\n');
        write!(out, "{:<nw$}", "dataset").unwrap();
        for &i in &others {
            write!(out, "{:>mw$}", self.methods[i].name()).unwrap();
        }
        out.push('\n');
        for d in self.datasets.iter().filter(|d| d.failure.is_none()) {
            write!(out, "{:<nw$}", d.name).unwrap();
            for &i in &others {
                let cell = d.results[i].comparison.as_ref().map_or("-".to_string(), |c| format_p(c.test.p_value));
                write!(out, "{cell:>mw$}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Dataset shapes and mean number of features each method's model uses.
    pub fn feature_table(&self) -> String {
        let (nw, mw) = (self.name_width(), self.method_width());
        let mut out = String::new();
        writeln!(out, "Data sets and features used by each model, mean over {} replicates.", self.replicates).unwrap();
        out.push('\n');
        write!(out, "{:<nw$}{:>11}{:>9}{:>10}", "dataset", "instances", "classes", "features").unwrap();
        for m in &self.methods {
            write!(out, "{:>mw$}", m.name()).unwrap();
        }
        out.push('\n');
        for d in &self.datasets {
            write!(out, "{:<nw$}{:>11}{:>9}{:>10}", d.name, d.n_rows, d.n_classes, d.n_features).unwrap();
            if d.failure.is_some() {
                write!(out, "  FAILED").unwrap();
            }
            for r in &d.results {
                write!(out, "{:>mw$}", format!("{:.1}", r.mean_features)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// All three tables.
    pub fn to_text(&self) -> String {
        format!("{}\n{}\n{}", self.error_table(), self.p_value_table(), self.feature_table())
    }
}

/// One row per dataset, method and replicate:
/// `dataset,method,replicate,error,n_features_used,seed`.
pub fn write_csv_report<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["dataset", "method", "replicate", "error", "n_features_used", "seed"])?;
    for d in report.datasets.iter().filter(|d| d.failure.is_none()) {
        for r in &d.results {
            for (rep, (error, used)) in r.errors.iter().zip(&r.features_used).enumerate() {
                wtr.write_record([
                    d.name.clone(),
                    r.method.name().to_string(),
                    rep.to_string(),
                    error.to_string(),
                    used.to_string(),
                    d.seeds[rep].to_string(),
                ])?;
            }
        }
    }
    wtr.flush().map_err(|e| crate::Error::io("<report>", e))?;
    Ok(())
}

pub fn csv_report(report: &EvalReport) -> String {
    let mut buf = Vec::new();
    write_csv_report(&mut buf, report).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}
