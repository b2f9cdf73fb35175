//! Result table writers. The CSV column order is fixed and spelled out in
//! the header row; JSONL carries the full records including per-user values.

use phyauth_core::montecarlo::MetricsRecord;
use serde_json::json;
use std::io::{self, Write};

pub const SWEEP_CSV_HEADER: &str = "strategy,phi,tag_fraction,data_fraction,psi,omega,p_tx_dbm,\
realization,analytic_p_d,analytic_p_k,analytic_sum_rate,empirical_p_d,empirical_p_d_ci,\
empirical_false_alarm,empirical_false_alarm_ci,empirical_p_k,empirical_p_k_ci,auth_samples,\
fa_samples,ml_samples,note";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(records: &[MetricsRecord], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        let a = r.analytic.as_ref();
        let e = r.empirical.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.strategy,
            r.phi,
            r.tag_fraction,
            1.0 - r.tag_fraction,
            r.psi,
            opt(r.omega),
            r.p_tx_dbm,
            r.realization,
            opt(a.map(|a| a.detection_prob)),
            opt(a.map(|a| a.key_detection_prob)),
            opt(a.map(|a| a.sum_rate)),
            opt(e.map(|e| e.detection_prob)),
            opt(e.map(|e| e.detection_ci)),
            opt(e.map(|e| e.false_alarm)),
            opt(e.map(|e| e.false_alarm_ci)),
            opt(e.and_then(|e| e.ml_success)),
            opt(e.and_then(|e| e.ml_success_ci)),
            opt(e.map(|e| e.auth_samples as f64)),
            opt(e.map(|e| e.fa_samples as f64)),
            opt(e.map(|e| e.ml_samples as f64)),
            r.infeasible.as_deref().unwrap_or_default(),
        )?;
    }
    Ok(())
}

pub fn write_sweep_jsonl(records: &[MetricsRecord], out: &mut impl Write) -> io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// One (ψ, ω) grid point of the factor-relation table.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorRecord {
    pub psi: f64,
    pub omega: f64,
    pub phi: Option<f64>,
    pub tag_fraction: Option<f64>,
    pub note: Option<String>,
}

pub const FACTORS_CSV_HEADER: &str = "psi,omega,phi,tag_fraction,note";

pub fn write_factors_csv(records: &[FactorRecord], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{FACTORS_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.psi,
            r.omega,
            opt(r.phi),
            opt(r.tag_fraction),
            r.note.as_deref().unwrap_or_default(),
        )?;
    }
    Ok(())
}

pub fn write_factors_jsonl(records: &[FactorRecord], out: &mut impl Write) -> io::Result<()> {
    for r in records {
        let line = json!({
            "psi": r.psi,
            "omega": r.omega,
            "phi": r.phi,
            "tag_fraction": r.tag_fraction,
            "note": r.note,
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}
