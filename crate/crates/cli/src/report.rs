//! Bias-report serialization: the flat CSV record schema and the full JSON
//! document.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::experiments::BiasStudy;

/// One CSV row of a bias report. Fields appear in the fixed column order
/// `dist,df,N,estimator,kernel,bandwidth,resolution,bias,variance,theta0,u_star,reps,seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub dist: String,
    pub df: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub estimator: String,
    pub kernel: Option<String>,
    pub bandwidth: Option<f64>,
    pub resolution: Option<u32>,
    pub bias: f64,
    pub variance: f64,
    pub theta0: f64,
    pub u_star: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Flatten a study into CSV records.
pub fn to_records(study: &BiasStudy) -> Vec<CsvRecord> {
    study
        .rows
        .iter()
        .map(|row| CsvRecord {
            dist: study.config.dist.family_label().to_owned(),
            df: study.config.dist.df(),
            n: row.n,
            estimator: row.estimator.clone(),
            kernel: row.kernel.clone(),
            bandwidth: row.bandwidth,
            resolution: row.resolution,
            bias: row.bias,
            variance: row.variance,
            theta0: study.theta0,
            u_star: study.u_star,
            reps: study.config.replications,
            seed: study.config.master_seed,
        })
        .collect()
}

/// Write records as CSV with the fixed header.
pub fn write_csv<W: Write>(records: &[CsvRecord], writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Read records back from CSV.
pub fn read_csv<R: Read>(reader: R) -> anyhow::Result<Vec<CsvRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<Result<Vec<CsvRecord>, _>>()?)
}

/// Full study as pretty JSON.
pub fn write_json<W: Write>(study: &BiasStudy, mut writer: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut writer, study)?;
    writeln!(writer)?;
    Ok(())
}
