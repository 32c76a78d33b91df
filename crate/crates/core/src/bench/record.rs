use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};

use crate::skeleton::AlgorithmTag;
use crate::Result;

/// One trial point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub trial: u64,
    /// Seed of the trial generator; rerunning the trial with it reproduces
    /// the row.
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    #[serde(serialize_with = "float17")]
    pub delta: f64,
    /// `||A - approx||_2`.
    #[serde(serialize_with = "float17")]
    pub err2: f64,
    /// `err2 / ||A||_2`.
    #[serde(serialize_with = "float17")]
    pub err2_rel: f64,
    #[serde(serialize_with = "float17")]
    pub eps_k: f64,
    #[serde(serialize_with = "opt_float17")]
    pub eps1_k: Option<f64>,
    #[serde(serialize_with = "float17")]
    pub runtime_ms: f64,
    pub algorithm_tag: AlgorithmTag,
    /// Entries of `A` read while factorizing (not while measuring).
    pub entry_reads: u64,
}

/// 17 significant digits, enough to round-trip any `f64`.
fn format17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn float17<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format17(*v))
}

fn opt_float17<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_str(&format17(*v)),
        None => s.serialize_str(""),
    }
}

/// Records plus `#` comment lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub notes: Vec<String>,
}

/// Header row, then one row per record, then the notes as `# ` lines.
pub fn write_csv<W: Write>(out: &ExperimentOutput, mut w: W) -> Result<()> {
    {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(&mut w);
        wr.write_record([
            "experiment",
            "trial",
            "seed",
            "m",
            "n",
            "l",
            "k",
            "delta",
            "err2",
            "err2_rel",
            "eps_k",
            "eps1_k",
            "runtime_ms",
            "algorithm_tag",
            "entry_reads",
        ])?;
        for r in &out.records {
            wr.serialize(r)?;
        }
        wr.flush()?;
    }
    for note in &out.notes {
        writeln!(w, "# {note}")?;
    }
    Ok(())
}

/// Reads rows written by [`write_csv`], skipping comment lines.
pub fn read_csv<R: Read>(r: R) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentRecord {
        ExperimentRecord {
            experiment: "vcurve".into(),
            trial: 3,
            seed: u64::MAX - 5,
            m: 301,
            n: 301,
            l: 100,
            k: 9,
            delta: 1e-10,
            err2: 0.1 + 0.2,
            err2_rel: std::f64::consts::PI * 1e-9,
            eps_k: 1e-15,
            eps1_k: None,
            runtime_ms: 12.5,
            algorithm_tag: AlgorithmTag::UniformK3,
            entry_reads: 7654,
        }
    }

    #[test]
    fn roundtrip_is_lossless() {
        let mut a = sample();
        let mut b = sample();
        b.trial = 4;
        b.eps1_k = Some(1.0 / 3.0);
        a.err2 = f64::NAN;
        let out = ExperimentOutput {
            records: vec![a.clone(), b.clone()],
            notes: vec!["fit slope=0.5".into()],
        };
        let mut buf = Vec::new();
        write_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("experiment,trial,seed,m,n,l,k,delta,err2,"));
        assert!(text.contains("3.0000000000000004e-1"));
        assert!(text.ends_with("# fit slope=0.5\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back[1], b);
        assert!(back[0].err2.is_nan());
        assert_eq!(back[0].eps1_k, None);
    }

    #[test]
    fn header_only_when_empty() {
        let mut buf = Vec::new();
        write_csv(&ExperimentOutput::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(read_csv(text.as_bytes()).unwrap().is_empty());
    }
}
