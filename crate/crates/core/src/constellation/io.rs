//! Plain-text constellation format.
//!
//! ```text
//! T K B kind
//! re_1 im_1 ... re_T im_T      (2^B symbol lines)
//! 0110                         (2^B label lines, "-" when B = 0)
//! ```
//!
//! Several constellations may be concatenated in one file.

use std::fmt::Write;

use super::{Constellation, ConstellationKind, Label};
use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

pub fn write_constellation(c: &Constellation) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {} {}", c.dim(), c.users(), c.bits(), c.kind()).unwrap();
    for s in c.symbols() {
        let cells: Vec<String> = s.iter().flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)]).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    for l in c.labels() {
        if l.bits() == 0 {
            writeln!(out, "-").unwrap();
        } else {
            writeln!(out, "{l}").unwrap();
        }
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses one or more concatenated constellations.
pub fn parse_constellations(text: &str) -> Result<Vec<Constellation>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < lines.len() {
        let (hline, header) = lines[pos];
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(perr(hline, "header must read `T K B kind`"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| perr(hline, format!("expected integer, got '{s}'")));
        let (t, k, b) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        if b > 30 {
            return Err(perr(hline, "B too large"));
        }
        let kind: ConstellationKind = fields[3].parse().map_err(|m: String| perr(hline, m))?;
        let m = 1usize << b;
        if pos + 1 + 2 * m > lines.len() {
            return Err(perr(hline, "truncated constellation block"));
        }
        let mut symbols = Vec::with_capacity(m);
        for &(ln, line) in &lines[pos + 1..pos + 1 + m] {
            let vals = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| perr(ln, format!("bad real '{v}'"))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != 2 * t {
                return Err(perr(ln, format!("expected {} reals, got {}", 2 * t, vals.len())));
            }
            symbols.push(CVec::from_fn(t, |i, _| C64::new(vals[2 * i], vals[2 * i + 1])));
        }
        let mut labels = Vec::with_capacity(m);
        for &(ln, line) in &lines[pos + 1 + m..pos + 1 + 2 * m] {
            if b == 0 {
                if line != "-" {
                    return Err(perr(ln, "expected '-' label for B = 0"));
                }
                labels.push(Label::new(0, 0));
                continue;
            }
            if line.len() != b || !line.bytes().all(|c| c == b'0' || c == b'1') {
                return Err(perr(ln, format!("label '{line}' is not a {b}-bit string")));
            }
            labels.push(Label::new(u32::from_str_radix(line, 2).unwrap(), b as u32));
        }
        out.push(Constellation::new(symbols, labels, kind, k).map_err(|e| perr(hline, e.to_string()))?);
        pos += 1 + 2 * m;
    }
    Ok(out)
}

/// Parses exactly one constellation.
pub fn parse_constellation(text: &str) -> Result<Constellation> {
    let mut all = parse_constellations(text)?;
    if all.len() != 1 {
        return Err(perr(1, format!("expected one constellation, found {}", all.len())));
    }
    Ok(all.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{pilot_qam_constellation, PrecodedFamily, DEFAULT_BITS_CAP};

    #[test]
    fn roundtrip_is_bit_exact() {
        let base: Vec<CVec> = (0..4)
            .map(|i| {
                let a = 0.3 + i as f64 * 0.41;
                let v = CVec::from_vec(vec![C64::from_polar(1.0, a), C64::new(a.sin(), 1e-300)]);
                let n = v.norm();
                v / C64::from(n)
            })
            .collect();
        let fam = PrecodedFamily::with_default_precoders(base, 3, 2).unwrap();
        let mut all = vec![fam.base_constellation().unwrap()];
        all.extend(fam.constellations().unwrap());
        all.push(pilot_qam_constellation(4, 2, 1, 8, DEFAULT_BITS_CAP).unwrap());
        let text: String = all.iter().map(write_constellation).collect();
        let back = parse_constellations(&text).unwrap();
        assert_eq!(back, all);
        let again: String = back.iter().map(write_constellation).collect();
        assert_eq!(again, text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_constellation("2 1 1 grassmannian\n1 0 0 0\n0 0 1\n0\n1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
