use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lln,
    Clt,
    JumpTest,
    CovariationClt,
    JointBpvRv,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Lln => "lln",
            Self::Clt => "clt",
            Self::JumpTest => "jump_test",
            Self::CovariationClt => "covariation_clt",
            Self::JointBpvRv => "joint_bpv_rv",
        }
    }
}

/// Distribution diagnostics of standardised errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZStats {
    pub used: usize,
    pub degenerate: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub ks: f64,
    pub coverage90: f64,
    pub coverage95: f64,
    pub coverage99: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRates {
    pub at_1: f64,
    pub at_5: f64,
    pub at_10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub estimator: String,
    /// `model`, or `null` / `alternative` for jump experiments.
    pub model: String,
    pub n: usize,
    pub replications: usize,
    pub mean_estimate: f64,
    pub mean_target: f64,
    pub bias: f64,
    pub rmse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<ZStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible: Option<ZStats>,
    /// MC mean of plug-in over true asymptotic variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avar_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<RejectionRates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub estimator: String,
    pub slope: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixComparison {
    pub label: String,
    pub n: usize,
    pub entries: Vec<String>,
    pub empirical: Vec<Vec<f64>>,
    pub theoretical: Vec<Vec<f64>>,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub passed: bool,
}

impl GateOutcome {
    pub fn range(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lo,
            hi,
            passed: value >= lo && value <= hi,
        }
    }
}

/// Wall-clock facts excluded from the canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub timestamp: String,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub tool_version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub seed_rule: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slopes: Vec<SlopeFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matrices: Vec<MatrixComparison>,
    pub gates: Vec<GateOutcome>,
    pub passed: bool,
    pub run: RunInfo,
}

impl ExperimentReport {
    pub fn row(&self, estimator: &str, model: &str, n: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.model == model && r.n == n)
    }

    pub fn failed_gates(&self) -> impl Iterator<Item = &GateOutcome> {
        self.gates.iter().filter(|g| !g.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON without the timestamp and wall time; equal for equal configs.
    pub fn canonical_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("run");
        }
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Row table preceded by `#` metadata lines; slopes, matrices and gates
    /// follow as `#` lines.
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::new();
        let config = serde_json::to_string(&self.config)?;
        let _ = writeln!(s, "# tool_version={}", self.tool_version);
        let _ = writeln!(s, "# kind={}", self.kind.as_str());
        let _ = writeln!(s, "# seed={}", self.seed);
        let _ = writeln!(s, "# seed_rule={}", self.seed_rule);
        let _ = writeln!(s, "# timestamp={}", self.run.timestamp);
        let _ = writeln!(s, "# config={config}");
        s.push_str(
            "estimator,model,n,replications,mean_estimate,mean_target,bias,rmse,\
             oracle_mean,oracle_variance,oracle_skewness,oracle_kurtosis,oracle_ks,oracle_cov90,oracle_cov95,oracle_cov99,oracle_degenerate,\
             feasible_mean,feasible_variance,feasible_skewness,feasible_kurtosis,feasible_ks,feasible_cov90,feasible_cov95,feasible_cov99,feasible_degenerate,\
             avar_ratio,reject_1,reject_5,reject_10\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let z = |z: &Option<ZStats>| -> String {
            match z {
                Some(z) => format!(
                    "{},{},{},{},{},{},{},{},{}",
                    z.mean,
                    z.variance,
                    z.skewness,
                    z.kurtosis,
                    z.ks,
                    z.coverage90,
                    z.coverage95,
                    z.coverage99,
                    z.degenerate
                ),
                None => ",,,,,,,,".into(),
            }
        };
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.estimator,
                r.model,
                r.n,
                r.replications,
                r.mean_estimate,
                r.mean_target,
                r.bias,
                r.rmse,
                z(&r.oracle),
                z(&r.feasible),
                opt(r.avar_ratio),
                opt(r.rejection.map(|x| x.at_1)),
                opt(r.rejection.map(|x| x.at_5)),
                opt(r.rejection.map(|x| x.at_10)),
            );
        }
        for f in &self.slopes {
            let _ = writeln!(s, "# slope {}={} se={}", f.estimator, f.slope, f.std_error);
        }
        for m in &self.matrices {
            let _ = writeln!(
                s,
                "# matrix {} n={} entries={} empirical={} theoretical={} max_rel_error={}",
                m.label,
                m.n,
                m.entries.join(";"),
                serde_json::to_string(&m.empirical)?,
                serde_json::to_string(&m.theoretical)?,
                m.max_rel_error
            );
        }
        for g in &self.gates {
            let _ = writeln!(
                s,
                "# gate {} value={} range=[{},{}] {}",
                g.name,
                g.value,
                g.lo,
                g.hi,
                if g.passed { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "# passed={}", self.passed);
        Ok(s)
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`, each atomically.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        write_atomic(&json, self.to_json()?.as_bytes())?;
        write_atomic(&csv, self.to_csv()?.as_bytes())?;
        Ok((json, csv))
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
