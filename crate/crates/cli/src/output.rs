//! Output plumbing: number formatting, λ-grid parsing, and the file/stdout
//! sink. All emitters go through [`emit`] so repeated runs with the same
//! flags produce byte-identical documents.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use iqdp_core::{lambda_grid, Quantizer};

/// Render a computed value with 12 significant digits, in plain decimal
/// notation so spreadsheet and plotting tools ingest it directly.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Grid syntax `lo:hi:step`, or an explicit comma-separated list.
pub fn parse_lambdas(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("lambda grid must be lo:hi:step, got {spec:?}");
        }
        let lo: f64 = parts[0].parse().context("bad grid start")?;
        let hi: f64 = parts[1].parse().context("bad grid end")?;
        let step: f64 = parts[2].parse().context("bad grid step")?;
        return Ok(lambda_grid(lo, hi, step)?);
    }
    let mut grid = Vec::new();
    for part in spec.split(',') {
        let lambda: f64 = part
            .trim()
            .parse()
            .with_context(|| format!("bad lambda {part:?}"))?;
        if !(0.0..=1.0).contains(&lambda) {
            bail!("lambda {lambda} outside [0, 1]");
        }
        grid.push(lambda);
    }
    if grid.is_empty() {
        bail!("empty lambda list");
    }
    Ok(grid)
}

/// Bin sizes as a comma-separated list, e.g. `11,5`.
pub fn parse_quantizer(spec: &str) -> Result<Quantizer> {
    let mut bins = Vec::new();
    for part in spec.split(',') {
        let bin: usize = part
            .trim()
            .parse()
            .with_context(|| format!("bad bin size {part:?}"))?;
        bins.push(bin);
    }
    Ok(Quantizer::new(bins)?)
}

/// Write `content` to `--out PATH` or standard output.
pub fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let stdout = std::io::stdout();
            let mut handle = stdout.lock();
            handle.write_all(content.as_bytes())?;
            handle.flush()?;
        }
    }
    Ok(())
}

/// Serialize a JSON document, pretty-printed with a trailing newline.
pub fn to_json_doc<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut doc = serde_json::to_string_pretty(value)?;
    doc.push('\n');
    Ok(doc)
}
