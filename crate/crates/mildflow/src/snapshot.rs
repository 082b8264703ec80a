//! The MFLD binary field snapshot format.
//!
//! Layout: magic "MFLD", version u16, dimension u16, N u32, role u8, then
//! little-endian f64 physical samples, component-major, row-major axis
//! order. The component count is implied by the role (and, for generic
//! fields, by the payload length). Round trips are bit-exact on the
//! physical samples.

use crate::error::{Error, Result};
use crate::field::{FieldRole, VectorField};
use crate::grid::SpectralGrid;
use std::f64::consts::PI;
use std::path::Path;

pub const MFLD_MAGIC: [u8; 4] = *b"MFLD";
pub const MFLD_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 4 + 1;

/// Serialize a field's physical samples. The format carries no period;
/// standalone snapshot files are standard-period (see `write_file`), while
/// trajectory stores record the period in their index.
pub fn to_bytes(field: &VectorField) -> Result<Vec<u8>> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(
        HEADER_LEN + 8 * field.n_comps() * grid.total_points(),
    );
    out.extend_from_slice(&MFLD_MAGIC);
    out.extend_from_slice(&MFLD_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dimension() as u16).to_le_bytes());
    out.extend_from_slice(&(grid.modes_per_axis() as u32).to_le_bytes());
    out.push(field.role().as_u8());
    for comp in field.physical() {
        for v in comp {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Decode a snapshot on the standard-period torus.
pub fn from_bytes(bytes: &[u8]) -> Result<VectorField> {
    from_bytes_with_period(bytes, 2.0 * PI)
}

/// Decode a snapshot whose period is known out of band (trajectory stores).
pub fn from_bytes_with_period(bytes: &[u8], period: f64) -> Result<VectorField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MFLD_MAGIC {
        return Err(Error::Snapshot("bad magic, not an MFLD snapshot".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version > MFLD_VERSION {
        return Err(Error::SnapshotVersion {
            found: version,
            supported: MFLD_VERSION,
        });
    }
    if version == 0 {
        return Err(Error::Snapshot("version 0 is not a valid MFLD version".into()));
    }
    let dimension = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let n = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    let role = FieldRole::from_u8(bytes[12])?;
    let grid = SpectralGrid::new(dimension, n, period)
        .map_err(|e| Error::Snapshot(format!("invalid grid header: {e}")))?;
    let total = grid.total_points();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() % 8 != 0 {
        return Err(Error::Snapshot("payload is not a whole number of f64s".into()));
    }
    let n_values = payload.len() / 8;
    if n_values == 0 || n_values % total != 0 {
        return Err(Error::Snapshot(format!(
            "payload holds {n_values} samples, not a multiple of the {total} grid points"
        )));
    }
    let n_comps = n_values / total;
    let expected = match role {
        FieldRole::Velocity => Some(dimension),
        FieldRole::Director => Some(3),
        FieldRole::Generic => None,
    };
    if let Some(want) = expected {
        if n_comps != want {
            return Err(Error::Snapshot(format!(
                "{role:?} snapshot needs {want} components, found {n_comps}"
            )));
        }
    }
    let mut comps = Vec::with_capacity(n_comps);
    for c in 0..n_comps {
        let mut samples = Vec::with_capacity(total);
        for i in 0..total {
            let off = (c * total + i) * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&payload[off..off + 8]);
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(Error::Snapshot(format!(
                    "non-finite sample at component {c}, index {i}"
                )));
            }
            samples.push(v);
        }
        comps.push(samples);
    }
    VectorField::from_physical(grid, role, comps)
}

/// Atomic file write: temp file in the target directory, then rename.
/// Standalone snapshots fix the standard period.
pub fn write_file(field: &VectorField, path: &Path) -> Result<()> {
    if (field.grid().period() - 2.0 * PI).abs() > 1e-12 {
        return Err(Error::Snapshot(
            "standalone MFLD files fix the standard period; use a trajectory store".into(),
        ));
    }
    let bytes = to_bytes(field)?;
    crate::run::atomic_write(path, &bytes)
}

pub fn read_file(path: &Path) -> Result<VectorField> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Snapshot(format!("cannot read {}: {e}", path.display())))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample_field() -> VectorField {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        VectorField::from_point_fn(g, FieldRole::Velocity, 2, |x| {
            vec![x[0].cos() * x[1].sin(), -x[0].sin() * x[1].cos()]
        })
        .unwrap()
    }

    #[test]
    fn bitwise_round_trip() {
        let f = sample_field();
        let bytes = to_bytes(&f).unwrap();
        let g = from_bytes(&bytes).unwrap();
        assert_eq!(f.physical(), g.physical());
        assert_eq!(g.role(), FieldRole::Velocity);
        // write(read(bytes)) reproduces the bytes
        let again = to_bytes(&g).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn wrong_magic_rejected() {
        let f = sample_field();
        let mut bytes = to_bytes(&f).unwrap();
        bytes[0] = b'X';
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn future_version_rejected() {
        let f = sample_field();
        let mut bytes = to_bytes(&f).unwrap();
        bytes[4] = 9;
        match from_bytes(&bytes).unwrap_err() {
            Error::SnapshotVersion { found, supported } => {
                assert_eq!(found, 9);
                assert_eq!(supported, MFLD_VERSION);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn truncation_rejected() {
        let f = sample_field();
        let bytes = to_bytes(&f).unwrap();
        assert!(from_bytes(&bytes[..10]).is_err());
        assert!(from_bytes(&bytes[..bytes.len() - 5]).is_err());
        assert!(from_bytes(&bytes[..bytes.len() - 8 * 100]).is_err());
    }

    #[test]
    fn role_component_mismatch_rejected() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let f = VectorField::from_point_fn(g, FieldRole::Generic, 1, |x| vec![x[0].sin()])
            .unwrap();
        let mut bytes = to_bytes(&f).unwrap();
        bytes[12] = FieldRole::Director.as_u8(); // claims 3 comps, has 1
        assert!(from_bytes(&bytes).is_err());
    }
}
