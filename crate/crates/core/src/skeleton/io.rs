//! JSON container for skeleton decompositions.
//!
//! ```json
//! { "format": "skeletonlab/skeleton", "version": 1, "m": 4, "n": 5,
//!   "rows": [..], "rows_with_replacement": true,
//!   "cols": [..], "cols_with_replacement": true,
//!   "core": { "nrows": 2, "ncols": 2, "data": [[re, im], ..] },
//!   "delta_used": 1e-8, "algorithm": "uniform_k3", "seed": 7 }
//! ```
//! `core.data` is row-major. Floats are written in shortest round-trip
//! form, so `Z` reads back bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AlgorithmTag, SkeletonDecomposition};
use crate::sampling::IndexSample;
use crate::{Error, Mat, Result, C64};

pub const FORMAT: &str = "skeletonlab/skeleton";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFile {
    pub format: String,
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub rows: Vec<usize>,
    pub rows_with_replacement: bool,
    pub cols: Vec<usize>,
    pub cols_with_replacement: bool,
    pub core: CoreMatrix,
    pub delta_used: f64,
    pub algorithm: AlgorithmTag,
    pub seed: Option<u64>,
}

impl From<&SkeletonDecomposition> for SkeletonFile {
    fn from(s: &SkeletonDecomposition) -> Self {
        let z = &s.core;
        let mut data = Vec::with_capacity(z.nrows() * z.ncols());
        for i in 0..z.nrows() {
            for j in 0..z.ncols() {
                data.push([z[(i, j)].re, z[(i, j)].im]);
            }
        }
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            m: s.dims.0,
            n: s.dims.1,
            rows: s.rows.indices().to_vec(),
            rows_with_replacement: s.rows.with_replacement(),
            cols: s.cols.indices().to_vec(),
            cols_with_replacement: s.cols.with_replacement(),
            core: CoreMatrix {
                nrows: z.nrows(),
                ncols: z.ncols(),
                data,
            },
            delta_used: s.delta_used,
            algorithm: s.algorithm,
            seed: s.seed,
        }
    }
}

impl TryFrom<SkeletonFile> for SkeletonDecomposition {
    type Error = Error;

    fn try_from(f: SkeletonFile) -> Result<Self> {
        if f.format != FORMAT || f.version != VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported container {} v{}",
                f.format, f.version
            )));
        }
        let c = &f.core;
        if c.data.len() != c.nrows * c.ncols {
            return Err(Error::DimensionMismatch {
                expected: c.nrows * c.ncols,
                found: c.data.len(),
            });
        }
        let core = Mat::from_fn(c.nrows, c.ncols, |i, j| {
            let [re, im] = c.data[i * c.ncols + j];
            C64::new(re, im)
        });
        let rows = IndexSample::new(f.rows, f.m, f.rows_with_replacement)?;
        let cols = IndexSample::new(f.cols, f.n, f.cols_with_replacement)?;
        let s = SkeletonDecomposition::new(rows, cols, core, (f.m, f.n), f.delta_used, f.algorithm)?;
        Ok(match f.seed {
            Some(seed) => s.with_seed(seed),
            None => s,
        })
    }
}

pub fn write_json<W: Write>(s: &SkeletonDecomposition, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &SkeletonFile::from(s))?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<SkeletonDecomposition> {
    let f: SkeletonFile = serde_json::from_reader(r)?;
    f.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matsource::{synthetic_fourier_source, Basis, SyntheticModelSpec};
    use crate::sampling::trial_rng;
    use crate::skeleton::{skeleton_rows_rrqr_nk2, skeleton_uniform_k3};

    fn bits(m: &Mat) -> Vec<(u64, u64)> {
        let mut v = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                v.push((m[(i, j)].re.to_bits(), m[(i, j)].im.to_bits()));
            }
        }
        v
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let spec = SyntheticModelSpec::log_spaced(64, 5, 1e-9, Basis::UnitaryDft);
        let (a, _) = synthetic_fourier_source(&spec).unwrap();
        let s = skeleton_uniform_k3(&a, 20, 1e-9, &mut trial_rng(1, 0)).unwrap().with_seed(77);
        let mut buf = Vec::new();
        write_json(&s, &mut buf).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(bits(&back.core), bits(&s.core));
        assert_eq!(back, s);

        let s = skeleton_rows_rrqr_nk2(&a, 20, 5, &mut trial_rng(1, 1)).unwrap();
        let mut buf = Vec::new();
        write_json(&s, &mut buf).unwrap();
        assert_eq!(read_json(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_corrupt_container() {
        let spec = SyntheticModelSpec::two_level(16, 2, 1e-3, Basis::UnitaryDft);
        let (a, _) = synthetic_fourier_source(&spec).unwrap();
        let s = skeleton_uniform_k3(&a, 4, 1e-3, &mut trial_rng(2, 0)).unwrap();
        let mut f = SkeletonFile::from(&s);
        f.core.data.pop();
        assert!(SkeletonDecomposition::try_from(f).is_err());
        let mut f = SkeletonFile::from(&s);
        f.format = "other".into();
        assert!(SkeletonDecomposition::try_from(f).is_err());
        let mut f = SkeletonFile::from(&s);
        f.rows[0] = 16;
        assert!(SkeletonDecomposition::try_from(f).is_err());
    }
}
