//! `NLSFIELD v1` text files.
//!
//! ```text
//! NLSFIELD v1
//! level <k> domain <x0> <y0> <x1> <y1>
//! <re> <im>        one line per node, x fastest, boundary nodes included
//! ```
//!
//! Numbers are written in shortest round-trip form, so reading a written file
//! reproduces the coefficients bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use nlsfem::{FeField, Mesh, Rect, C64};

use crate::error::{CliError, Result};

pub const MAGIC: &str = "NLSFIELD v1";

pub fn format_field(mesh: &Mesh, field: &FeField) -> Result<String> {
    field.check_mesh(mesh)?;
    let d = mesh.domain();
    let mut out = String::with_capacity(48 * mesh.num_nodes());
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "level {} domain {:?} {:?} {:?} {:?}", mesh.level(), d.x0, d.y0, d.x1, d.y1).unwrap();
    for c in field.nodal_values(mesh) {
        writeln!(out, "{:?} {:?}", c.re, c.im).unwrap();
    }
    Ok(out)
}

pub fn write_field(path: &Path, mesh: &Mesh, field: &FeField) -> Result<()> {
    let text = format_field(mesh, field)?;
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_owned(),
        source,
    })
}

pub fn read_field(path: &Path) -> Result<(Mesh, FeField)> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })?;
    parse_field(BufReader::new(file), path)
}

/// Parses a field file. Boundary entries must be exactly zero.
pub fn parse_field(reader: impl Read, path: &Path) -> Result<(Mesh, FeField)> {
    let bad = |line: usize, reason: &str| CliError::FieldFormat {
        path: path.to_owned(),
        line,
        reason: reason.to_owned(),
    };
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(bad(i + 1, &e.to_string())),
            None => Err(bad(0, &format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, magic) = next("header")?;
    if magic.trim_end() != MAGIC {
        return Err(bad(n, "expected `NLSFIELD v1`"));
    }
    let (n, header) = next("mesh line")?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 7 || tok[0] != "level" || tok[2] != "domain" {
        return Err(bad(n, "expected `level <k> domain <x0> <y0> <x1> <y1>`"));
    }
    let level: u32 = tok[1].parse().map_err(|_| bad(n, "level is not an integer"))?;
    if level > 12 {
        return Err(bad(n, "level out of range"));
    }
    let mut ext = [0.0; 4];
    for (e, t) in ext.iter_mut().zip(&tok[3..]) {
        *e = t.parse().map_err(|_| bad(n, "domain bound is not a number"))?;
    }
    let domain = Rect::new(ext[0], ext[1], ext[2], ext[3]).map_err(|_| bad(n, "invalid domain"))?;
    let mesh = Mesh::uniform(domain, level)?;

    let mut coeffs = vec![C64::new(0.0, 0.0); mesh.num_dofs()];
    for node in 0..mesh.num_nodes() {
        let (n, line) = next("node values")?;
        let mut it = line.split_whitespace();
        let mut num = || -> Result<f64> {
            let v: f64 = it
                .next()
                .ok_or_else(|| bad(n, "expected two numbers"))?
                .parse()
                .map_err(|_| bad(n, "not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(n, "non-finite value"))
            }
        };
        let c = C64::new(num()?, num()?);
        if it.next().is_some() {
            return Err(bad(n, "expected two numbers"));
        }
        match mesh.dof_of_node(node) {
            Some(d) => coeffs[d] = c,
            None if c == C64::new(0.0, 0.0) => {}
            None => return Err(bad(n, "boundary value must be zero")),
        }
    }
    for (i, rest) in lines {
        match rest {
            Ok(l) if l.trim().is_empty() => {}
            _ => return Err(bad(i + 1, "trailing data after the last node")),
        }
    }
    let field = FeField::from_coeffs(&mesh, coeffs);
    Ok((mesh, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(level: u32) -> (Mesh, FeField) {
        let mesh = Mesh::uniform(Rect::new(-6.0, -5.0, 6.0, 7.0).unwrap(), level).unwrap();
        let field = mesh.interpolate(|p| C64::new((p[0] * 0.3).sin() / 3.0, p[1].cos() * 1e-300));
        (mesh, field)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (mesh, field) = sample(3);
        let text = format_field(&mesh, &field).unwrap();
        let (m2, f2) = parse_field(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(m2.level(), 3);
        assert_eq!(m2.domain(), mesh.domain());
        assert_eq!(f2.coeffs(), field.coeffs());
        assert_eq!(format_field(&m2, &f2).unwrap(), text);
    }

    #[test]
    fn layout_has_header_and_all_nodes() {
        let (mesh, field) = sample(2);
        let text = format_field(&mesh, &field).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "NLSFIELD v1");
        assert_eq!(lines[1], "level 2 domain -6.0 -5.0 6.0 7.0");
        assert_eq!(lines.len(), 2 + 25);
        assert_eq!(lines[2], "0.0 0.0");
        // node (1,1) is the first interior node
        let c = field.coeffs()[0];
        assert_eq!(lines[2 + 6], format!("{:?} {:?}", c.re, c.im));
    }

    #[test]
    fn rejects_malformed_files() {
        let (mesh, field) = sample(1);
        let good = format_field(&mesh, &field).unwrap();
        let mut nonzero_boundary = good.clone();
        nonzero_boundary = nonzero_boundary.replacen("\n0.0 0.0\n", "\n1.0 0.0\n", 1);
        let cases = [
            good.replace("NLSFIELD v1", "NLSFIELD v2"),
            good.replace("level 1", "level x"),
            good.lines().take(5).collect::<Vec<_>>().join("\n"),
            good.clone() + "1 2\n",
            good.replacen("\n0.0 0.0\n", "\n0.0\n", 1),
            good.replacen("\n0.0 0.0\n", "\nNaN 0.0\n", 1),
            nonzero_boundary,
        ];
        for text in cases {
            let err = parse_field(text.as_bytes(), Path::new("mem")).unwrap_err();
            assert!(matches!(err, CliError::FieldFormat { .. }), "{err}");
            assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
        }
    }
}
