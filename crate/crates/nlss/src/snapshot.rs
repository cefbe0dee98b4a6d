//! Binary field snapshots and the ground-state sidecar.
//!
//! Layout (little-endian throughout): magic "NLSS", u32 version = 1, u32 n,
//! f64 L, u32 component_count, i32 first_index, then per component n*n
//! interleaved f64 (re, im) pairs in row-major order. `first_index` is 1 for
//! the finite system (components 1..N) and -Jmax for the resonant band.
//! Full description in docs/format.md.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NlssError, Result};
use crate::field::{ComplexField2D, FieldIndexing, FieldVec};
use crate::grid::Grid2D;
use crate::ground::GroundState;

const MAGIC: &[u8; 4] = b"NLSS";
const VERSION: u32 = 1;

pub fn write_snapshot(path: &Path, u: &FieldVec) -> Result<()> {
    let grid = u.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.n as u32).to_le_bytes())?;
    w.write_all(&grid.half_width.to_le_bytes())?;
    w.write_all(&(u.n_components() as u32).to_le_bytes())?;
    let first_index: i32 = match u.indexing {
        FieldIndexing::Finite { .. } => 1,
        FieldIndexing::Resonant { jmax } => -jmax,
    };
    w.write_all(&first_index.to_le_bytes())?;
    for c in &u.components {
        for z in &c.samples {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn take(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) => Err(NlssError::Format {
                offset: self.offset,
                detail: format!("reading {what}: {e}"),
            }),
        }
    }
}

pub fn read_snapshot(path: &Path) -> Result<FieldVec> {
    let mut r = CountingReader {
        inner: BufReader::new(File::open(path)?),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.take(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(NlssError::Format {
            offset: 0,
            detail: format!("bad magic {magic:?}, expected \"NLSS\""),
        });
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.take(&mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(NlssError::Format {
            offset: 4,
            detail: format!("unsupported version {version}"),
        });
    }
    r.take(&mut b4, "grid size")?;
    let n = u32::from_le_bytes(b4) as usize;
    r.take(&mut b8, "box half-width")?;
    let half_width = f64::from_le_bytes(b8);
    let grid = Grid2D::new(half_width, n).map_err(|e| NlssError::Format {
        offset: 8,
        detail: format!("invalid grid header: {e}"),
    })?;
    r.take(&mut b4, "component count")?;
    let n_comp = u32::from_le_bytes(b4) as usize;
    r.take(&mut b4, "first index")?;
    let first_index = i32::from_le_bytes(b4);
    let indexing = if first_index == 1 {
        FieldIndexing::Finite { n_comp }
    } else if first_index <= 0 {
        let jmax = -first_index;
        if n_comp != (2 * jmax + 1) as usize {
            return Err(NlssError::Format {
                offset: 20,
                detail: format!(
                    "resonant header inconsistent: first index {first_index} \
                     with {n_comp} components"
                ),
            });
        }
        FieldIndexing::Resonant { jmax }
    } else {
        return Err(NlssError::Format {
            offset: 20,
            detail: format!("invalid first index {first_index}"),
        });
    };
    let mut components = Vec::with_capacity(n_comp);
    for _ in 0..n_comp {
        let mut samples = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.take(&mut b8, "sample (re)")?;
            let re = f64::from_le_bytes(b8);
            r.take(&mut b8, "sample (im)")?;
            let im = f64::from_le_bytes(b8);
            samples.push(Complex64::new(re, im));
        }
        components.push(ComplexField2D {
            grid: grid.clone(),
            samples,
        });
    }
    FieldVec::from_components(indexing, components)
}

/// JSON sidecar carrying the ground-state certificates.
#[derive(Debug, Serialize, Deserialize)]
pub struct GroundStateSidecar {
    pub mass_sq: f64,
    pub residual_inf: f64,
    pub pohozaev_defects: (f64, f64),
    pub grid_half_width: f64,
    pub grid_n: usize,
}

pub fn write_ground_state(dir: &Path, stem: &str, gs: &GroundState) -> Result<()> {
    let field = FieldVec::from_components(
        FieldIndexing::Finite { n_comp: 1 },
        vec![gs.profile.clone()],
    )?;
    write_snapshot(&dir.join(format!("{stem}.nlss")), &field)?;
    let sidecar = GroundStateSidecar {
        mass_sq: gs.mass_sq,
        residual_inf: gs.residual_inf,
        pohozaev_defects: gs.pohozaev_defects,
        grid_half_width: gs.profile.grid.half_width,
        grid_n: gs.profile.grid.n,
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| NlssError::Config(format!("sidecar serialization: {e}")))?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

pub fn read_ground_state(dir: &Path, stem: &str) -> Result<(FieldVec, GroundStateSidecar)> {
    let field = read_snapshot(&dir.join(format!("{stem}.nlss")))?;
    let raw = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
    let sidecar: GroundStateSidecar = serde_json::from_str(&raw)
        .map_err(|e| NlssError::Config(format!("sidecar parse: {e}")))?;
    Ok((field, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_localized;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("nlss-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn roundtrip_preserves_bytes() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let comps = (0..3)
            .map(|_| random_localized(g.clone(), &mut rng, 2.0, 1.0, 1.0))
            .collect();
        let u = FieldVec::from_components(FieldIndexing::Resonant { jmax: 1 }, comps).unwrap();
        let path = tmpdir().join("roundtrip.nlss");
        write_snapshot(&path, &u).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.indexing, u.indexing);
        for (a, b) in u.components.iter().zip(back.components.iter()) {
            assert_eq!(a.samples, b.samples);
        }
    }

    #[test]
    fn corrupted_magic_reports_offset_zero() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let u = FieldVec::zero(g, FieldIndexing::Finite { n_comp: 1 });
        let path = tmpdir().join("corrupt.nlss");
        write_snapshot(&path, &u).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        match read_snapshot(&path) {
            Err(NlssError::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_a_late_offset() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let u = FieldVec::zero(g, FieldIndexing::Finite { n_comp: 2 });
        let path = tmpdir().join("truncated.nlss");
        write_snapshot(&path, &u).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        match read_snapshot(&path) {
            Err(NlssError::Format { offset, .. }) => assert!(offset > 24),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
