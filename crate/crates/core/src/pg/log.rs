use std::io::Write;

use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// One row of a training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: u64,
    pub mean_return: f64,
    /// Batch risk penalty of the objective being optimised.
    pub mean_penalty: f64,
    pub grad_norm: f64,
    /// VaR estimate or Sharpe ratio estimate when the algorithm tracks one.
    pub aux: Option<f64>,
}

pub const LOG_HEADER: [&str; 5] = ["iteration", "mean_return", "mean_penalty", "grad_norm", "aux"];

/// Writes the log as CSV; `aux` is left empty when absent.
pub fn write_training_log<W: Write>(rows: &[IterationLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(LOG_HEADER).map_err(fail)?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            fmt_f64(r.mean_return),
            fmt_f64(r.mean_penalty),
            fmt_f64(r.grad_norm),
            r.aux.map(fmt_f64).unwrap_or_default(),
        ])
        .map_err(fail)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_layout() {
        let rows = [
            IterationLog { iteration: 0, mean_return: 1.5, mean_penalty: 0.0, grad_norm: 2.0, aux: None },
            IterationLog { iteration: 1, mean_return: 1.0, mean_penalty: 0.25, grad_norm: 0.5, aux: Some(-1.0) },
        ];
        let mut buf = Vec::new();
        write_training_log(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,mean_return,mean_penalty,grad_norm,aux");
        assert!(lines[1].ends_with(','));
        assert!(lines[2].ends_with("-1.0000000000000000e0"));
    }
}
