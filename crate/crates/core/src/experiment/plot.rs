use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Report files understood by [`plot_data_export`], with the figure each feeds.
pub const PLOT_INPUTS: [(&str, &str); 3] =
    [("quenched.csv", "plot_gaps.csv"), ("obrien.csv", "plot_obrien.csv"), ("theta_points.csv", "plot_theta.csv")];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
        if let Some(i) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(Error::Parse(format!("{}: row {} has {} fields", path.display(), i + 2, rows[i].len())));
        }
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str, path: &Path) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column {name}", path.display())))
    }
}

/// Long-format plot tables (one per figure kind) from the report files found
/// in `report_dir`, written to `out_dir`. Each output starts with `#` comment
/// lines documenting its columns.
pub fn plot_data_export(report_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let present: Vec<_> = PLOT_INPUTS.iter().filter(|(input, _)| report_dir.join(input).is_file()).collect();
    if present.is_empty() {
        let expected: Vec<&str> = PLOT_INPUTS.iter().map(|(i, _)| *i).collect();
        return Err(Error::Config(format!(
            "no report files in {}; expected at least one of: {}",
            report_dir.display(),
            expected.join(", ")
        )));
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (input, output) in present {
        let path = report_dir.join(input);
        let table = Table::read(&path)?;
        let body = match *input {
            "quenched.csv" => gaps(&table, &path)?,
            "obrien.csv" => obrien(&table, &path)?,
            _ => theta(&table, &path)?,
        };
        let target = out_dir.join(output);
        fs::write(&target, body)?;
        written.push(target);
    }
    Ok(written)
}

fn gaps(t: &Table, path: &Path) -> Result<String> {
    let (s, n, g, sg) = (t.col("start", path)?, t.col("n", path)?, t.col("gap", path)?, t.col("stationary_gap", path)?);
    let mut out = String::from(
        "# quenched gap curves\n# series: start point or state, or \"stationary\" for the reference curve\n\
         # n: horizon\n# value: sup-norm gap to the phantom power\nseries,n,value\n",
    );
    let mut reference: Vec<(&str, &str)> = Vec::new();
    for r in &t.rows {
        out.push_str(&format!("{},{},{}\n", r[s], r[n], r[g]));
        if !reference.iter().any(|(rn, _)| *rn == r[n]) {
            reference.push((&r[n], &r[sg]));
        }
    }
    for (n, v) in reference {
        out.push_str(&format!("stationary,{n},{v}\n"));
    }
    Ok(out)
}

fn obrien(t: &Table, path: &Path) -> Result<String> {
    let cols = [t.col("t", path)?, t.col("n", path)?, t.col("estimate", path)?, t.col("target", path)?];
    let mut out = String::from(
        "# level criterion convergence\n# t: horizon multiplier\n# n: level horizon\n\
         # estimate: empirical P(M_[nt] <= v_n)\n# target: exp(-beta t)\nt,n,estimate,target\n",
    );
    for r in &t.rows {
        out.push_str(&cols.iter().map(|&c| r[c].as_str()).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}

fn theta(t: &Table, path: &Path) -> Result<String> {
    let cols = [t.col("x", path)?, t.col("log_ratio", path)?];
    let mut out = String::from(
        "# relative extremal index diagnostics\n# x: evaluation point\n\
         # log_ratio: ln P_a(M_n <= x) / ln P_b(M_n <= x)\nx,log_ratio\n",
    );
    for r in &t.rows {
        out.push_str(&format!("{},{}\n", r[cols[0]], r[cols[1]]));
    }
    Ok(out)
}
