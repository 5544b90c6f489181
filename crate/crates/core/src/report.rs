//! Report bundles and file artifacts: JSON verification reports and CSV
//! dumps, each carrying the run manifest that reproduces it. Files are
//! written to a temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::Result;
use crate::stats::TestReport;

/// Everything needed to rerun a command: echoed verbatim into every
/// artifact the command writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub space: String,
    pub n: usize,
    pub config: SimConfig,
    pub params: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, space: &str, n: usize, config: SimConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            space: space.to_string(),
            n,
            config,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// A manifest plus the reports it produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub manifest: RunManifest,
    pub reports: Vec<TestReport>,
    pub passed: bool,
}

impl ReportBundle {
    pub fn new(manifest: RunManifest, reports: Vec<TestReport>) -> Self {
        let passed = reports.iter().all(|r| r.passed);
        ReportBundle { manifest, reports, passed }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty-printed JSON with sorted keys (serialization goes through
/// `serde_json::Value`, whose maps are ordered).
pub fn write_json_report(path: &Path, bundle: &ReportBundle) -> Result<()> {
    let value = serde_json::to_value(bundle).expect("bundle serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value prints");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Decimal text with 17 significant digits, round-trip exact for f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a `# manifest:` comment line, a header row, then one row per
/// record at full precision.
pub fn write_csv<'a, I>(path: &Path, manifest: &RunManifest, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let manifest_json =
        serde_json::to_string(&serde_json::to_value(manifest).expect("manifest serializes"))
            .expect("manifest prints");
    let mut text = format!("# manifest: {manifest_json}\n{}\n", header.join(","));
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                text.push(',');
            }
            text.push_str(&format_f64(*v));
            first = false;
        }
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> RunManifest {
        RunManifest::new("simulate", "real", 2, SimConfig::new(1, 0.5, 1.0, 2).unwrap())
            .with_param("t0", 0.0)
    }

    #[test]
    fn json_report_is_sorted_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let bundle = ReportBundle::new(
            manifest(),
            vec![TestReport::new("b_check", 0.1, 0.5, 10, true).with_detail("z", 1).with_detail("a", 2)],
        );
        write_json_report(&path, &bundle).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"passed\": true"));
        // Keys inside objects come out sorted.
        let cfg_pos = text.find("\"config\"").unwrap();
        let cmd_pos = text.find("\"command\"").unwrap();
        assert!(cmd_pos < cfg_pos);
        // Writing twice produces identical bytes.
        let path2 = dir.path().join("report2.json");
        write_json_report(&path2, &bundle).unwrap();
        assert_eq!(text, fs::read_to_string(&path2).unwrap());
    }

    #[test]
    fn csv_roundtrips_f64_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let rows: Vec<Vec<f64>> = vec![vec![0.1 + 0.2, -1.0 / 3.0], vec![1e-300, 6.02e23]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        write_csv(&path, &manifest(), &["a", "b"], refs.iter().copied()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# manifest: "));
        assert_eq!(lines.next().unwrap(), "a,b");
        for (line, row) in lines.zip(&rows) {
            for (field, want) in line.split(',').zip(row) {
                assert_eq!(field.parse::<f64>().unwrap(), *want);
            }
        }
    }
}
