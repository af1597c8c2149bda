//! CSV rows, text summaries and two-column plot files.

use std::fmt::Write as _;
use std::path::Path;

use super::{BlowupReport, LawCheckReport};
use crate::error::Result;
use crate::trajectory::TrajectoryRecord;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `law,max_deviation,fitted,expected,notes` with notes joined by `;`.
pub fn law_reports_csv(reports: &[LawCheckReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["law", "max_deviation", "fitted", "expected", "notes"])?;
    for r in reports {
        w.write_record([
            r.law.as_str().to_string(),
            r.max_deviation.to_string(),
            opt(r.fitted),
            opt(r.expected),
            r.notes.join("; "),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

pub fn law_reports_text(reports: &[LawCheckReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = write!(s, "{:<22} max deviation {:.3e}", r.law.as_str(), r.max_deviation);
        if let Some(f) = r.fitted {
            let _ = write!(s, ", fitted {f:.12}");
        }
        if let Some(e) = r.expected {
            let _ = write!(s, ", expected {e:.12}");
        }
        s.push('\n');
        for n in &r.notes {
            let _ = writeln!(s, "    {n}");
        }
    }
    s
}

impl BlowupReport {
    pub const CSV_HEADER: &'static str = "blew_up,T_star_est,stop_reason,rate_exponent,loglog_residual,power_residual,T_star_power,T_star_loglog,window_points,window_decades,last_time,fit_reliable";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.blew_up,
            self.t_star_est,
            self.stop_reason,
            self.rate_exponent,
            self.loglog_residual,
            self.power_residual,
            self.t_star_power,
            self.t_star_loglog,
            self.window_points,
            self.window_decades,
            self.last_time,
            self.fit_reliable
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "stop reason      {}", self.stop_reason);
        let _ = writeln!(s, "blow-up          {}", self.blew_up);
        let _ = writeln!(s, "last sample      t = {:.9}", self.last_time);
        let _ = writeln!(s, "T* estimate      {:.9}", self.t_star_est);
        let _ = writeln!(s, "power fit        gamma = {:.4}, T* = {:.9}, rms = {:.3e}", self.rate_exponent, self.t_star_power, self.power_residual);
        let _ = writeln!(s, "log-log fit      T* = {:.9}, rms = {:.3e}", self.t_star_loglog, self.loglog_residual);
        let _ = writeln!(
            s,
            "collapse window  {} points over {:.2} decades{}",
            self.window_points,
            self.window_decades,
            if self.fit_reliable { "" } else { " (fit unreliable)" }
        );
        s
    }
}

/// One `t,<name>` file per functional in `dir`.
pub fn write_plot_data(dir: &Path, traj: &TrajectoryRecord) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut series: Vec<(String, Vec<f64>)> = vec![
        ("mass_sq".into(), traj.samples().map(|s| s.mass_sq).collect()),
        ("grad_norm".into(), traj.samples().map(|s| s.grad_norm()).collect()),
        ("E0".into(), traj.samples().map(|s| s.e0).collect()),
        ("EV".into(), traj.samples().map(|s| s.ev).collect()),
        ("variance".into(), traj.samples().map(|s| s.variance).collect()),
    ];
    for (axis, name) in ["Px", "Py", "Pz"].iter().enumerate().take(traj.params.dim) {
        series.push((name.to_string(), traj.samples().map(|s| s.momentum[axis]).collect()));
    }
    let t = traj.times();
    for (name, ys) in series {
        let mut out = format!("t,{name}\n");
        for (a, b) in t.iter().zip(ys) {
            let _ = writeln!(out, "{a},{b}");
        }
        std::fs::write(dir.join(format!("{name}.csv")), out)?;
    }
    Ok(())
}
