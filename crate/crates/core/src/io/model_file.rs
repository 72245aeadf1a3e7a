//! Binary model files, little-endian throughout.
//!
//! PLDA block:
//! `"PLDA"` | version `u32` = 1 | d `u32` | mean `d x f64` |
//! transform `d*d x f64` row-major | psi `d x f64`.
//!
//! Mixture file:
//! `"MPLD"` | version `u32` = 1 | three times: type tag `u8` (`b'M'`,
//! `b'F'`, `b'C'`, in that order) followed by a PLDA block | default
//! prior `3 x f64` in `M F C` order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mixture::{MixturePlda, SpeakerTypePrior};
use crate::plda::PldaModel;
use crate::types::SpeakerType;

pub const PLDA_MAGIC: &[u8; 4] = b"PLDA";
pub const MIXTURE_MAGIC: &[u8; 4] = b"MPLD";
pub const FORMAT_VERSION: u32 = 1;

/// Largest dimension accepted when reading, guarding allocation size.
const MAX_DIM: u32 = 1 << 14;

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn write_f64s<W: Write>(w: &mut W, xs: impl IntoIterator<Item = f64>) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_plda<W: Write>(w: &mut W, model: &PldaModel<f64>) -> Result<()> {
    let d = model.dim();
    w.write_all(PLDA_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    write_f64s(w, model.mean().iter().copied())?;
    let t = model.transform();
    write_f64s(w, (0..d).flat_map(|r| (0..d).map(move |c| t[(r, c)])))?;
    write_f64s(w, model.psi().iter().copied())?;
    Ok(())
}

pub fn read_plda<R: Read>(r: &mut R) -> Result<PldaModel<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != PLDA_MAGIC {
        return Err(Error::BadMagic("PLDA model".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let d = read_u32(r)?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidModel(format!("implausible dimension {d}")));
    }
    let d = d as usize;
    let mean = DVector::from_vec(read_f64s(r, d)?);
    let transform = DMatrix::from_row_slice(d, d, &read_f64s(r, d * d)?);
    let psi = DVector::from_vec(read_f64s(r, d)?);
    PldaModel::new(mean, transform, psi)
}

pub fn write_mixture<W: Write>(w: &mut W, mix: &MixturePlda<f64>) -> Result<()> {
    w.write_all(MIXTURE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for ty in SpeakerType::ALL {
        w.write_all(&[ty.code() as u8])?;
        write_plda(w, mix.component(ty))?;
    }
    write_f64s(w, mix.default_prior().as_array())?;
    Ok(())
}

pub fn read_mixture<R: Read>(r: &mut R) -> Result<MixturePlda<f64>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MIXTURE_MAGIC {
        return Err(Error::BadMagic("mixture model".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut components: [Option<PldaModel<f64>>; 3] = [None, None, None];
    for _ in 0..3 {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let ty = SpeakerType::from_code(tag[0] as char)
            .ok_or_else(|| Error::InvalidModel(format!("unknown component tag {:#04x}", tag[0])))?;
        if components[ty.index()].is_some() {
            return Err(Error::InvalidModel(format!("duplicate component {ty}")));
        }
        components[ty.index()] = Some(read_plda(r)?);
    }
    let p = read_f64s(r, 3)?;
    let prior = SpeakerTypePrior::new([p[0], p[1], p[2]])?;
    let [m, f, c] = components.map(|c| c.expect("three distinct tags read"));
    MixturePlda::new(m, f, c, prior)
}

/// Either kind of model file, detected by magic.
#[derive(Debug, Clone)]
pub enum ModelFile {
    Single(PldaModel<f64>),
    Mixture(MixturePlda<f64>),
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut cursor = bytes.as_slice();
    match bytes.get(..4) {
        Some(m) if m == PLDA_MAGIC => read_plda(&mut cursor).map(ModelFile::Single),
        Some(m) if m == MIXTURE_MAGIC => read_mixture(&mut cursor).map(ModelFile::Mixture),
        _ => Err(Error::BadMagic(path.display().to_string())),
    }
}

pub fn save_plda(path: &Path, model: &PldaModel<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_plda(&mut w, model)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_mixture(path: &Path, mix: &MixturePlda<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_mixture(&mut w, mix)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_plda(path: &Path) -> Result<PldaModel<f64>> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_plda(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PldaModel<f64> {
        PldaModel::new(
            DVector::from_vec(vec![0.5, -1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.25, -0.5, 2.0]),
            DVector::from_vec(vec![3.0, 0.1]),
        )
        .unwrap()
    }

    #[test]
    fn plda_layout() {
        let mut buf = Vec::new();
        write_plda(&mut buf, &model()).unwrap();
        assert_eq!(&buf[..4], b"PLDA");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(buf.len(), 12 + 8 * (2 + 4 + 2));
        // transform row-major: second stored transform entry is (0, 1)
        let t01 = f64::from_le_bytes(buf[12 + 16 + 8..12 + 16 + 16].try_into().unwrap());
        assert_eq!(t01, 0.25);
        assert_eq!(read_plda(&mut buf.as_slice()).unwrap(), model());
    }

    #[test]
    fn unknown_version_rejected() {
        let mut buf = Vec::new();
        write_plda(&mut buf, &model()).unwrap();
        buf[4] = 2;
        assert!(matches!(read_plda(&mut buf.as_slice()), Err(Error::UnsupportedVersion(2))));
        buf[0] = b'X';
        assert!(matches!(read_plda(&mut buf.as_slice()), Err(Error::BadMagic(_))));
    }

    #[test]
    fn singular_transform_rejected_on_load() {
        let mut buf = Vec::new();
        write_plda(&mut buf, &model()).unwrap();
        // zero the transform
        for b in &mut buf[12 + 16..12 + 16 + 32] {
            *b = 0;
        }
        assert!(matches!(read_plda(&mut buf.as_slice()), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn mixture_round_trip() {
        let mix = MixturePlda::replicated(model(), SpeakerTypePrior::nonuniform_paper());
        let mut buf = Vec::new();
        write_mixture(&mut buf, &mix).unwrap();
        assert_eq!(&buf[..4], b"MPLD");
        assert_eq!(buf[8], b'M');
        assert_eq!(read_mixture(&mut buf.as_slice()).unwrap(), mix);
    }

    #[test]
    fn truncated_file_is_error() {
        let mut buf = Vec::new();
        write_plda(&mut buf, &model()).unwrap();
        buf.truncate(20);
        assert!(read_plda(&mut buf.as_slice()).is_err());
    }
}
