use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use deltasys::setcore::{parse_family, parse_family_json, serialize_family, serialize_family_json, SetFamily};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::Format;

/// Reads a file and folds its bytes into the running input digest.
pub fn read_input(path: &Path, hasher: &mut Sha256) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    hasher.update(&bytes);
    Ok(bytes)
}

pub fn read_family(path: &Path, format: Format, hasher: &mut Sha256) -> Result<SetFamily> {
    let bytes = read_input(path, hasher)?;
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let f = match format {
        Format::Text => parse_family(&text),
        Format::Json => parse_family_json(&text),
    };
    f.with_context(|| format!("parsing {}", path.display()))
}

pub fn family_bytes(f: &SetFamily, format: Format) -> String {
    match format {
        Format::Text => serialize_family(f),
        Format::Json => serialize_family_json(f),
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, hasher: &mut Sha256) -> Result<T> {
    let bytes = read_input(path, hasher)?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Weights as a JSON array of integers or `"num/den"` strings.
pub fn read_weights(path: &Path, hasher: &mut Sha256) -> Result<Vec<BigRational>> {
    let values: Vec<Value> = read_json(path, hasher)?;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Number(n) => match n.as_i64() {
                Some(x) => Ok(BigRational::from_integer(BigInt::from(x))),
                None => bail!("weight {i}: {n} is not an integer; use a \"num/den\" string"),
            },
            Value::String(s) => BigRational::from_str(s.trim()).map_err(|e| anyhow::anyhow!("weight {i}: {s:?}: {e}")),
            other => bail!("weight {i}: unexpected {other}"),
        })
        .collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))
}

/// `DELTASYS_CAP` if set, else `default`.
pub fn cap(default: usize) -> Result<usize> {
    match std::env::var("DELTASYS_CAP") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("DELTASYS_CAP={v:?} is not an integer")),
        Err(_) => Ok(default),
    }
}

/// `1-2,1-3` becomes `[[1,2],[1,3]]`.
pub fn parse_pattern(s: &str) -> Result<Vec<Vec<usize>>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|part| {
            part.split('-')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad index {x:?} in pattern {s:?}"))
                })
                .collect()
        })
        .collect()
}
