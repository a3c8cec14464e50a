//! `aci plotdata`: long-format `t,series,value` rows from a run directory.

use std::path::Path;

use anyhow::{Context, Result};

use crate::args::PlotArgs;
use crate::error::{usage, CliResult};
use crate::io::{read_intervals, OutputRecord};

pub const SERIES: [&str; 5] = ["y", "lower", "upper", "prediction", "width"];

pub fn long_rows(records: &[OutputRecord]) -> Vec<(i64, &'static str, f64)> {
    records
        .iter()
        .flat_map(|r| {
            let vals = [r.y, r.lower, r.upper, r.mu_hat, r.upper - r.lower];
            SERIES.iter().zip(vals).map(move |(s, v)| (r.t, *s, v))
        })
        .collect()
}

pub fn write_plotdata(path: &Path, records: &[OutputRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["t", "series", "value"])?;
    for (t, s, v) in long_rows(records) {
        w.write_record([t.to_string(), s.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_plotdata(args: &PlotArgs) -> CliResult<()> {
    if !args.run_dir.is_dir() {
        return Err(usage(format!("run directory {} does not exist", args.run_dir.display())));
    }
    let records = read_intervals(&args.run_dir.join("intervals.csv"))?;
    let out = args.out.clone().unwrap_or_else(|| args.run_dir.join("plotdata.csv"));
    write_plotdata(&out, &records)?;
    Ok(())
}
