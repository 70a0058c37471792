//! Serialization of curvature profiles: JSON, long and summary CSV, and a
//! gnuplot script for the usual `(r, ρ)` plot.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::curvature::{CurvatureProfile, RHO_CIRCLE, RHO_EUCLIDEAN, RHO_TREE};
use crate::error::Result;

pub fn write_json<W: Write>(profile: &CurvatureProfile, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, profile)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<CurvatureProfile> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn config_header<W: Write>(profile: &CurvatureProfile, out: &mut W) -> Result<()> {
    if let Some(cfg) = &profile.meta.config {
        writeln!(out, "# config {}", serde_json::to_string(cfg)?)?;
    }
    Ok(())
}

/// One row per triangle: `r,rho`.
pub fn write_long_csv<W: Write>(profile: &CurvatureProfile, mut out: W) -> Result<()> {
    config_header(profile, &mut out)?;
    writeln!(out, "r,rho")?;
    for (r, rho) in profile.observations() {
        writeln!(out, "{r},{rho}")?;
    }
    Ok(())
}

/// One row per scale: `r,count,mean_rho` and optionally `median_rho`.
pub fn write_summary_csv<W: Write>(
    profile: &CurvatureProfile,
    with_median: bool,
    mut out: W,
) -> Result<()> {
    config_header(profile, &mut out)?;
    if with_median {
        writeln!(out, "r,count,mean_rho,median_rho")?;
    } else {
        writeln!(out, "r,count,mean_rho")?;
    }
    for rec in &profile.records {
        write!(out, "{},{},{}", rec.r, rec.count, rec.mean_rho)?;
        if with_median {
            write!(out, ",{}", rec.median_rho)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Scatter of the long CSV with reference lines at the tree, plane and
/// circle values of ρ.
pub fn write_gnuplot<W: Write>(long_csv: &Path, mut out: W) -> Result<()> {
    let data = long_csv.display();
    writeln!(out, "set datafile separator ','")?;
    writeln!(out, "set key outside")?;
    writeln!(out, "set xlabel 'r'")?;
    writeln!(out, "set ylabel 'rho'")?;
    writeln!(out, "set yrange [0.95:2.05]")?;
    writeln!(
        out,
        "plot '{data}' skip 1 using 1:2 with points pt 7 ps 0.4 title 'triangles', \\"
    )?;
    writeln!(out, "     {RHO_TREE} with lines dt 2 title 'tree', \\")?;
    writeln!(
        out,
        "     {RHO_EUCLIDEAN} with lines dt 2 title 'plane', \\"
    )?;
    writeln!(out, "     {RHO_CIRCLE} with lines dt 2 title 'circle'")?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
