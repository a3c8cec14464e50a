//! CSV readers and writers.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// One input row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct InputRecord {
    pub t: i64,
    pub y: f64,
    pub mu_hat: f64,
    #[serde(default)]
    pub group: Option<String>,
}

/// Rows of one group in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub group: Option<String>,
    pub rows: Vec<InputRecord>,
    /// Season label per row, when the source has one.
    pub seasons: Vec<Option<String>>,
}

impl Series {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.mu_hat, r.y)).collect()
    }
}

/// Reads `t,y,mu_hat[,group]`. Groups come back sorted by name.
pub fn read_input(path: &Path) -> Result<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    for col in ["t", "y", "mu_hat"] {
        if !headers.iter().any(|h| h == col) {
            bail!("{}: missing column '{col}'", path.display());
        }
    }
    let mut groups: BTreeMap<Option<String>, Vec<InputRecord>> = BTreeMap::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let rec: InputRecord = rec.with_context(|| format!("{}: bad row {}", path.display(), i + 2))?;
        if !rec.y.is_finite() || !rec.mu_hat.is_finite() {
            bail!("{}: row {} has a non-finite value", path.display(), i + 2);
        }
        let key = rec.group.clone().filter(|g| !g.is_empty());
        groups.entry(key).or_default().push(rec);
    }
    if groups.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    let mut out = Vec::with_capacity(groups.len());
    for (group, rows) in groups {
        if let Some(w) = rows.windows(2).find(|w| w[1].t <= w[0].t) {
            bail!(
                "{}: rows must be strictly increasing in t within a group (t = {} follows t = {})",
                path.display(),
                w[1].t,
                w[0].t
            );
        }
        let seasons = vec![None; rows.len()];
        out.push(Series { group, rows, seasons });
    }
    Ok(out)
}

/// Models left out of the FluSight ensemble analysis.
pub const FLUSIGHT_EXCLUDED: [&str; 7] =
    ["Delphi_Uniform", "CUBMA", "CU_EAKFC_SIRS", "CU_EKF_SEIRS", "CU_EKF_SIRS", "CU_RHF_SEIRS", "CU_RHF_SIRS"];

const FLUSIGHT_COLUMNS: [&str; 8] =
    ["model_name", "Target", "Location", "Year", "Model.Week", "Season", "Value", "obs_value"];

/// Reads a FluSight point-estimate file, keeping one-week-ahead national
/// forecasts, one series per model, ordered by (Year, Model.Week).
pub fn read_flusight_csv(path: &Path) -> Result<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 8];
    for (slot, col) in idx.iter_mut().zip(FLUSIGHT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == col)
            .with_context(|| format!("{}: missing column '{col}'", path.display()))?;
    }
    let [model, target, location, year, week, season, value, obs] = idx;

    struct Row {
        year: i64,
        week: i64,
        season: String,
        mu_hat: f64,
        y: f64,
    }
    let mut by_model: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut dropped = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad row {}", path.display(), i + 2))?;
        if &rec[target] != "1 wk ahead" || &rec[location] != "US National" {
            continue;
        }
        let name = &rec[model];
        if FLUSIGHT_EXCLUDED.contains(&name) {
            continue;
        }
        let num = |c: usize| rec[c].parse::<f64>().ok().filter(|v| v.is_finite());
        let (Some(mu_hat), Some(y)) = (num(value), num(obs)) else {
            dropped += 1;
            continue;
        };
        let int = |c: usize| {
            rec[c]
                .parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0)
                .map(|v| v as i64)
                .with_context(|| format!("{}: row {}: '{}' is not an integer", path.display(), i + 2, &rec[c]))
        };
        by_model.entry(name.to_string()).or_default().push(Row {
            year: int(year)?,
            week: int(week)?,
            season: rec[season].to_string(),
            mu_hat,
            y,
        });
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing values", path.display());
    }
    if by_model.is_empty() {
        log::warn!("{}: no retained one-week-ahead national forecasts", path.display());
    }
    Ok(by_model
        .into_iter()
        .map(|(name, mut rows)| {
            rows.sort_by_key(|r| (r.year, r.week));
            let seasons = rows.iter().map(|r| Some(r.season.clone())).collect();
            let rows = rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| InputRecord { t: i as i64 + 1, y: r.y, mu_hat: r.mu_hat, group: Some(name.clone()) })
                .collect();
            Series { group: Some(name), rows, seasons }
        })
        .collect())
}

/// One row of `intervals.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub t: i64,
    pub y: f64,
    pub mu_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub covered: u8,
    pub theta: Option<f64>,
    pub width: f64,
}

pub fn write_intervals(path: &Path, rows: &[OutputRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_intervals(path: &Path) -> Result<Vec<OutputRecord>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("{}: bad row {}", path.display(), i + 2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn reads_groups_sorted() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "in.csv", "t,y,mu_hat,group\n1,1.0,0.5,b\n1,2.0,1.5,a\n2,3.0,2.5,a\n");
        let s = read_input(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].group.as_deref(), Some("a"));
        assert_eq!(s[0].pairs(), vec![(1.5, 2.0), (2.5, 3.0)]);
    }

    #[test]
    fn rejects_unordered_and_missing_columns() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "a.csv", "t,y,mu_hat\n2,1,1\n1,1,1\n");
        assert!(read_input(&p).is_err());
        let p = write(d.path(), "b.csv", "t,y\n1,1\n");
        assert!(format!("{:#}", read_input(&p).unwrap_err()).contains("mu_hat"));
    }

    #[test]
    fn flusight_filters_and_sorts() {
        let d = tempfile::tempdir().unwrap();
        let body = "model_name,Target,Location,Year,Model.Week,Season,Value,obs_value\n\
                    m1,1 wk ahead,US National,2011,2,2010/2011,2.0,2.5\n\
                    m1,1 wk ahead,US National,2010,45,2010/2011,1.0,1.5\n\
                    m1,2 wk ahead,US National,2010,46,2010/2011,9.0,9.5\n\
                    m1,1 wk ahead,HHS Region 1,2010,46,2010/2011,9.0,9.5\n\
                    CUBMA,1 wk ahead,US National,2010,45,2010/2011,1.0,1.5\n";
        let p = write(d.path(), "f.csv", body);
        let s = read_flusight_csv(&p).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].pairs(), vec![(1.0, 1.5), (2.0, 2.5)]);
        assert_eq!(s[0].rows[1].t, 2);

        let p = write(d.path(), "g.csv", "model_name,Target\nx,y\n");
        assert!(format!("{:#}", read_flusight_csv(&p).unwrap_err()).contains("Location"));
        let p =
            write(d.path(), "h.csv", &body.lines().take(1).chain(body.lines().skip(5)).collect::<Vec<_>>().join("\n"));
        assert!(read_flusight_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn interval_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let rows = vec![
            OutputRecord {
                t: 1,
                y: 0.1,
                mu_hat: 0.0,
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
                covered: 1,
                theta: Some(0.9),
                width: f64::INFINITY,
            },
            OutputRecord {
                t: 2,
                y: 1.0 / 3.0,
                mu_hat: 1e-17,
                lower: -0.25,
                upper: 0.7,
                covered: 1,
                theta: None,
                width: 0.95,
            },
        ];
        let p = d.path().join("i.csv");
        write_intervals(&p, &rows).unwrap();
        let back = read_intervals(&p).unwrap();
        assert_eq!(back, rows);
    }
}
