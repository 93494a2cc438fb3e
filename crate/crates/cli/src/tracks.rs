//! Little-endian binary files for finished per-realization results, so an
//! interrupted run can resume without recomputing them.

use std::io::{Read, Write};

use qdecay_core::observables::{Profile, RealizationTrack};
use qdecay_core::EigenPairs64;

const TRACK_MAGIC: &[u8; 4] = b"QDTK";
const PAIRS_MAGIC: &[u8; 4] = b"QDEP";
const VERSION: u32 = 1;

fn put_u64<W: Write>(w: &mut W, x: u64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn put_f64s<W: Write>(w: &mut W, xs: &[f64]) -> std::io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

fn check_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> std::io::Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    if &m != magic || u32::from_le_bytes(v) != VERSION {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "bad magic or version"));
    }
    Ok(())
}

// guards allocations against corrupted counts
fn bounded(n: u64) -> std::io::Result<usize> {
    if n > 1 << 32 {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("implausible length {n}")));
    }
    Ok(n as usize)
}

pub fn write_track<W: Write>(w: &mut W, t: &RealizationTrack<f64>) -> std::io::Result<()> {
    w.write_all(TRACK_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    put_u64(w, t.seed)?;
    put_u64(w, t.survival.len() as u64)?;
    for k in 0..t.survival.len() {
        put_f64s(w, &[t.survival[k], t.norm_leak[k]])?;
        put_f64s(w, &t.quartiles[k])?;
        let p = &t.profiles[k];
        put_u64(w, p.n_lo as u64)?;
        put_u64(w, p.prob.len() as u64)?;
        put_f64s(w, &p.prob)?;
    }
    Ok(())
}

pub fn read_track<R: Read>(r: &mut R) -> std::io::Result<RealizationTrack<f64>> {
    check_header(r, TRACK_MAGIC)?;
    let seed = get_u64(r)?;
    let nt = bounded(get_u64(r)?)?;
    let mut t = RealizationTrack { seed, survival: vec![], profiles: vec![], quartiles: vec![], norm_leak: vec![] };
    for _ in 0..nt {
        t.survival.push(get_f64(r)?);
        t.norm_leak.push(get_f64(r)?);
        t.quartiles.push([get_f64(r)?, get_f64(r)?, get_f64(r)?]);
        let n_lo = get_u64(r)? as i64;
        let len = bounded(get_u64(r)?)?;
        t.profiles.push(Profile { n_lo, prob: get_f64s(r, len)? });
    }
    Ok(t)
}

/// Eigenvalues and prepared-level weights (no vectors).
pub fn write_pairs<W: Write>(w: &mut W, p: &EigenPairs64) -> std::io::Result<()> {
    w.write_all(PAIRS_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    put_u64(w, p.values.len() as u64)?;
    put_f64s(w, &p.values)?;
    put_f64s(w, &p.weights)
}

pub fn read_pairs<R: Read>(r: &mut R) -> std::io::Result<EigenPairs64> {
    check_header(r, PAIRS_MAGIC)?;
    let n = bounded(get_u64(r)?)?;
    Ok(EigenPairs64 { values: get_f64s(r, n)?, weights: get_f64s(r, n)?, vectors: None })
}
