//! Textual model specs: `exact:8u`, `truncb:8u:k=2`, `dpp:8s:diag=4`,
//! `dpp:8u:rect=3x1`, `dpp:8u:seed=7,p=0.3`, `dpp:4u:pp=0.0+1.2`,
//! `table:path/to/file.axtt`.

use std::str::FromStr;

use super::{ModelKind, MultiplierModel, Operand, PpMask, Signedness, TruthTable};
use crate::error::{Error, Result};

fn bad(spec: &str, why: &str) -> Error {
    Error::InvalidConfig(format!("bad model spec `{spec}`: {why}"))
}

fn parse_type(spec: &str, ty: &str) -> Result<(u32, Signedness)> {
    let (digits, sign) = ty.split_at(ty.len().saturating_sub(1));
    let signedness = match sign {
        "u" => Signedness::Unsigned,
        "s" => Signedness::Signed,
        _ => return Err(bad(spec, "type must look like 8u or 16s")),
    };
    let width = digits.parse().map_err(|_| bad(spec, "width is not a number"))?;
    Ok((width, signedness))
}

fn parse_mask(spec: &str, width: u32, param: &str) -> Result<PpMask> {
    let (key, value) = param.split_once('=').ok_or_else(|| bad(spec, "expected key=value"))?;
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad(spec, "expected an integer"));
    match key {
        "diag" => Ok(PpMask::diagonal(width, num(value)?)),
        "rect" => {
            let (r, c) = value.split_once('x').ok_or_else(|| bad(spec, "rect=RxC"))?;
            Ok(PpMask::rect(width, num(r)?, num(c)?))
        }
        "seed" => {
            let (seed, p) = value.split_once(",p=").ok_or_else(|| bad(spec, "seed=S,p=P"))?;
            let seed = seed.parse().map_err(|_| bad(spec, "seed must be an integer"))?;
            let p: f64 = p.parse().map_err(|_| bad(spec, "p must be a number"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(spec, "p must lie in [0, 1]"));
            }
            Ok(PpMask::random(width, seed, p))
        }
        "pp" => {
            let mut positions = Vec::new();
            for item in value.split('+').filter(|s| !s.is_empty()) {
                let (r, c) = item.split_once('.').ok_or_else(|| bad(spec, "pp=row.col+row.col"))?;
                let (r, c) = (num(r)?, num(c)?);
                if r >= width || c >= width {
                    return Err(bad(spec, "partial product position out of range"));
                }
                positions.push((r, c));
            }
            Ok(PpMask::from_positions(width, positions))
        }
        _ => Err(bad(spec, "unknown mask parameter")),
    }
}

impl MultiplierModel {
    /// Parses a model spec. `table:` specs read the file, trusting its header.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if let Some(path) = spec.strip_prefix("table:") {
            return Ok(MultiplierModel::from_table(TruthTable::read_file(path)?));
        }
        let mut parts = spec.splitn(3, ':');
        let family = parts.next().unwrap_or_default();
        let ty = parts.next().ok_or_else(|| bad(spec, "missing type"))?;
        let param = parts.next();
        let (width, signedness) = parse_type(spec, ty)?;
        let kind = match (family, param) {
            ("exact", None) => ModelKind::Exact,
            ("trunca" | "truncb", Some(p)) => {
                let k = p
                    .strip_prefix("k=")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| bad(spec, "expected k=<bits>"))?;
                let which = if family == "trunca" { Operand::A } else { Operand::B };
                ModelKind::TruncateOperand { which, k }
            }
            ("dpp", Some(p)) => ModelKind::DropPartialProducts(parse_mask(spec, width, p)?),
            _ => return Err(bad(spec, "unknown family or missing parameter")),
        };
        MultiplierModel::new(width, signedness, kind)
    }
}

impl FromStr for MultiplierModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_spec(s)
    }
}
