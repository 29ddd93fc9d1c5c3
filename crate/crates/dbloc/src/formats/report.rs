//! AP table as CSV: one row per method, one column per no-change RoC bound,
//! two decimals.
//!
//! ```text
//! method,0.01,0.02,0.03,0.04,0.05
//! rank_fusion,0.74,0.73,0.73,0.72,0.72
//! ```

use std::fmt::Write as _;
use std::path::Path;

use dbloc_core::evaluation::Report;

use super::write_atomic;
use crate::error::Result;

pub fn render_csv(report: &Report) -> String {
    let mut out = String::from("method");
    for v in &report.roc_neg_max {
        write!(out, ",{v:.2}").unwrap();
    }
    out.push('\n');
    for (m, row) in report.methods.iter().zip(&report.ap) {
        out.push_str(m.name());
        for ap in row {
            write!(out, ",{ap:.2}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    write_atomic(path, render_csv(report).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dbloc_core::fusion::FusionMethod;

    #[test]
    fn table_shape() {
        let r = Report {
            methods: vec![FusionMethod::RankFusion, FusionMethod::ScoreMax],
            roc_neg_max: vec![0.01, 0.05],
            ap: vec![vec![0.7412, 0.7], vec![0.789, 1.0]],
            counts: vec![(1, 1), (1, 1)],
        };
        assert_eq!(
            render_csv(&r),
            "method,0.01,0.05\nrank_fusion,0.74,0.70\nscore_max,0.79,1.00\n"
        );
    }
}
