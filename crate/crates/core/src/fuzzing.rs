//! Byte-level entry points shared by the fuzz targets and the corpus replay
//! test. Each one parses untrusted input, checks that the descriptor survives
//! a serialize/parse round trip, and exercises the built object. Panics are
//! bugs; rejected input comes back as `Err`.

use std::fmt::Debug;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::descriptor::{ConnectionDesc, PathDesc, PotentialDesc};
use crate::error::{Error, Result};
use crate::harness::RunConfig;

fn decode<T: DeserializeOwned + Serialize + PartialEq + Debug>(data: &[u8]) -> Result<T> {
    let text = std::str::from_utf8(data).map_err(|e| Error::Descriptor(e.to_string()))?;
    let desc: T = serde_json::from_str(text)?;
    let again: T = serde_json::from_str(&serde_json::to_string(&desc)?).expect("re-encoded descriptor parses");
    assert_eq!(desc, again, "descriptor changed across a round trip");
    Ok(desc)
}

pub fn path(data: &[u8]) -> Result<()> {
    let p = decode::<PathDesc>(data)?.build()?;
    let d = p.domain();
    for s in [d.a(), 0.5 * (d.a() + d.b()), d.b()] {
        p.eval_with_velocity(s)?;
    }
    if !d.is_degenerate() {
        p.reverse().canonical()?;
    }
    Ok(())
}

pub fn connection(data: &[u8]) -> Result<()> {
    let c = decode::<ConnectionDesc>(data)?.build()?;
    let n = c.field().chart_dim().unwrap_or(2);
    let x = vec![0.25; n];
    for i in 0..n {
        c.field().component(&x, i)?;
    }
    Ok(())
}

pub fn potential(data: &[u8]) -> Result<()> {
    let p = decode::<PotentialDesc>(data)?.build()?;
    let n = p.field().chart_dim().unwrap_or(2);
    let x = vec![0.25; n];
    p.check_at(&x)?;
    p.contract(&x, &vec![1e-3; n])?;
    Ok(())
}

pub fn run_config(data: &[u8]) -> Result<()> {
    let cfg = decode::<RunConfig>(data)?;
    cfg.validate()
}
