//! Deterministic text output: CSV time series, spectra and flat
//! `key = value` summaries. Numbers use `{:.16e}` (17 significant digits)
//! and every line ends in `\n`.

use std::fs;
use std::path::Path;

use crate::analysis::Spectrum;
use crate::error::{Error, Result};
use crate::report::{ExperimentReport, RunStatus, TimeSample};

pub const SERIES_HEADER: &str = "t,sup_u_dev,sup_v,bc_residual,energy";
pub const SPECTRUM_HEADER: &str = "re,im,is_zero_cluster";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV body for `series`, with `sup_u_dev` measured against `reference`.
pub fn series_csv(series: &[TimeSample], reference: f64) -> String {
    let mut out = String::with_capacity(96 * (series.len() + 1));
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for s in series {
        out.push_str(
            &[s.t, s.sup_u_dev(reference), s.sup_v, s.bc_residual, s.energy]
                .map(num)
                .join(","),
        );
        out.push('\n');
    }
    out
}

pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for z in &spectrum.eigenvalues {
        out.push_str(&format!("{},{},{}\n", num(z.re), num(z.im), spectrum.is_zero(z)));
    }
    out
}

/// Ordered `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace('\n', " | ");
        self.entries.push((key.to_string(), value));
        self
    }

    pub fn push_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, num(value))
    }

    pub fn append(&mut self, other: Summary) -> &mut Self {
        self.entries.extend(other.entries);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_error(&mut self, e: &Error) -> &mut Self {
        self.push("status", "failed")
            .push("error_kind", e.kind())
            .push("error_message", e)
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Parses the output of [`Summary::render`].
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

/// Summary of a simulation run.
pub fn report_summary(report: &ExperimentReport) -> Summary {
    let mut s = Summary::new();
    match &report.status {
        RunStatus::Completed => {
            s.push("status", "completed");
        }
        RunStatus::Failed(e) => {
            s.push_error(e);
        }
    }
    let first = report.series.first();
    let drift = report
        .series
        .iter()
        .map(|x| match first {
            Some(f) => (x.u_max - f.u_max).abs().max((x.u_min - f.u_min).abs()),
            None => 0.0,
        })
        .fold(0.0, f64::max);
    s.push("steps", report.steps)
        .push("newton_iterations", report.newton_iterations)
        .push("samples", report.series.len())
        .push_num("t_final", report.series.last().map_or(0.0, |x| x.t))
        .push_num("max_abs_u", report.max_abs_u)
        .push_num("peak_sup_v", report.peak_sup_v())
        .push_num("final_sup_v", report.series.last().map_or(0.0, |x| x.sup_v))
        .push_num("drift", drift)
        .push_num("reference", report.reference);
    if let Some(fit) = &report.fit {
        s.push_num("r_inf", fit.r_inf)
            .push_num("omega", fit.omega)
            .push_num("fit_residual", fit.fit_residual)
            .push_num("fit_window_start", fit.window.0)
            .push_num("fit_window_end", fit.window.1)
            .push("fit_points", fit.points);
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_series(series: &[TimeSample], reference: f64, path: &Path) -> Result<()> {
    write_text(path, &series_csv(series, reference))
}

pub fn write_report(summary: &Summary, path: &Path) -> Result<()> {
    write_text(path, &summary.render())
}

pub fn write_spectrum(spectrum: &Spectrum, path: &Path) -> Result<()> {
    write_text(path, &spectrum_csv(spectrum))
}
