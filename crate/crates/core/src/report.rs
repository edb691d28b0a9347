//! CSV and JSON emission with reproducibility metadata.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::PipelineOutput;
use crate::error::Result;
use crate::group::IntegerMatrix;
use crate::spectral::ConstantsBundle;
use crate::verify::{AuditRecord, SweepReport};

pub const TOOL_VERSION: &str = concat!("rigidity ", env!("CARGO_PKG_VERSION"));
pub const AUDIT_HEADER: &str = "lemma,x,lhs,bound,margin,pass,tag";
pub const SWEEP_HEADER: &str = "index,x,column,norm_u,norm_s";

/// First 16 hex digits of the SHA-256 digest.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(digest)[..16].to_string()
}

pub fn matrix_hash(a: &IntegerMatrix) -> String {
    short_hash(a.to_text().as_bytes())
}

pub fn constants_hash(c: &ConstantsBundle) -> String {
    short_hash(serde_json::to_string(c).expect("constants serialize").as_bytes())
}

/// Provenance written at the top of every output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Metadata {
    pub matrix_hash: String,
    pub constants_hash: String,
    pub grid: usize,
    pub seed: u64,
}

impl Metadata {
    pub fn new(a: &IntegerMatrix, c: &ConstantsBundle, grid: usize, seed: u64) -> Self {
        Metadata {
            matrix_hash: matrix_hash(a),
            constants_hash: constants_hash(c),
            grid,
            seed,
        }
    }

    /// `# key: value` lines for CSV files.
    pub fn comment_lines(&self) -> String {
        format!(
            "# tool: {TOOL_VERSION}\n# matrix_sha256: {}\n# constants_sha256: {}\n# grid: {}\n# seed: {}\n",
            self.matrix_hash, self.constants_hash, self.grid, self.seed
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tool": TOOL_VERSION,
            "matrix_sha256": self.matrix_hash,
            "constants_sha256": self.constants_hash,
            "grid": self.grid,
            "seed": self.seed,
        })
    }
}

/// Audit table. Columns of the displacement matrix are not a CSV field;
/// per-column records of one point appear consecutively in column order.
pub fn audit_csv(meta: &Metadata, records: &[AuditRecord]) -> String {
    let mut out = meta.comment_lines();
    out.push_str(AUDIT_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.lemma, r.x, r.lhs, r.bound, r.margin, r.pass, r.tag
        )
        .expect("write to string");
    }
    out
}

/// Sweep table with one-based column indices.
pub fn sweep_csv(meta: &Metadata, sweep: &SweepReport) -> String {
    let mut out = meta.comment_lines();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &sweep.table {
        writeln!(out, "{},{},{},{},{}", r.index, r.x, r.column + 1, r.norm_u, r.norm_s)
            .expect("write to string");
    }
    out
}

pub fn summary_json(meta: &Metadata, family: &str, out: &PipelineOutput, exit_code: i32) -> Value {
    let r = &out.report;
    let s = &r.sweep;
    let a = s.argmax;
    json!({
        "metadata": meta.to_json(),
        "family": family,
        "hyperbolicity": out.hyperbolicity,
        "splitting": {
            "dim_u": out.splitting.dim_u,
            "dim_s": out.splitting.dim_s,
            "residuals": out.splitting_residuals,
        },
        "constants": out.constants,
        "hypotheses": {
            "measured": r.hypotheses,
            "transport_holds": r.hypotheses.transport_holds(),
            "additivity_holds": r.hypotheses.additivity_holds(),
            "sweep_holds": r.hypotheses.sweep_holds(),
        },
        "relation_residual": r.relation_residual,
        "commutator_residual": r.commutator_residual,
        "audit": {
            "points": r.points,
            "records": r.records.len(),
            "ok": r.ok,
            "hypothesis_violated": r.hypothesis_violated,
            "fail": r.failed,
        },
        "row_column": {
            "checks": r.row_column_checks,
            "violations": r.row_column_violations,
        },
        "sweep": {
            "argmax": {
                "index": a.index,
                "x": a.x,
                "column": a.column + 1,
                "component": a.component,
                "value": a.value,
            },
            "followed_points": s.followed_points,
            "followed_values": s.followed_values,
            "printed_factor": s.printed_factor,
            "variant_factor": s.variant_factor,
            "verdict": s.verdict,
        },
        "exit_code": exit_code,
    })
}

/// Writes `audit.csv`, `sweep.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, meta: &Metadata, family: &str, out: &PipelineOutput, exit_code: i32) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("audit.csv"), audit_csv(meta, &out.report.records))?;
    std::fs::write(dir.join("sweep.csv"), sweep_csv(meta, &out.report.sweep))?;
    let mut summary = serde_json::to_string_pretty(&summary_json(meta, family, out, exit_code))?;
    summary.push('\n');
    std::fs::write(dir.join("summary.json"), summary)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_are_stable_prefixes() {
        let h = short_hash(b"abc");
        assert_eq!(h, "ba7816bf8f01cfea");
        let a = IntegerMatrix::from_rows(&[[2]]).unwrap();
        assert_eq!(matrix_hash(&a), matrix_hash(&a.clone()));
    }
}
