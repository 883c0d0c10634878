//! Architecture-string parsing.
//!
//! Feedforward networks use the notation `A - NxB - C`: `A` input nodes,
//! `N` hidden layers of `B` nodes each, `C` output nodes. `3 - 0x0 - 1`
//! degenerates to a direct input-output network `[3, 1]`. Recurrent networks
//! only need their hidden width, written `m=<int>`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchError {
    /// Byte offset into the architecture string.
    pub pos: usize,
    pub reason: String,
}

impl fmt::Display for ArchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "architecture string invalid at position {}: {}", self.pos, self.reason)
    }
}

impl std::error::Error for ArchError {}

struct Scanner<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn integer(&mut self, what: &str) -> Result<usize, ArchError> {
        self.skip_ws();
        let start = self.pos;
        let digits: &str = self.s[start..]
            .split(|c: char| !c.is_ascii_digit())
            .next()
            .unwrap_or("");
        if digits.is_empty() {
            return Err(ArchError { pos: start, reason: format!("expected {what}") });
        }
        self.pos += digits.len();
        digits
            .parse()
            .map_err(|_| ArchError { pos: start, reason: format!("{what} out of range") })
    }

    fn literal(&mut self, lit: char) -> Result<(), ArchError> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(lit) {
            self.pos += lit.len_utf8();
            Ok(())
        } else {
            Err(ArchError { pos: self.pos, reason: format!("expected {lit:?}") })
        }
    }

    fn end(&mut self) -> Result<(), ArchError> {
        self.skip_ws();
        if self.pos == self.s.len() {
            Ok(())
        } else {
            Err(ArchError { pos: self.pos, reason: "trailing input".into() })
        }
    }
}

/// Parses `A - NxB - C` into layer sizes `[A, B×N, C]`.
pub fn parse_layers(s: &str) -> Result<Vec<usize>, ArchError> {
    let mut sc = Scanner { s, pos: 0 };
    let inputs = sc.integer("input-node count")?;
    sc.literal('-')?;
    let n_hidden = sc.integer("hidden-layer count")?;
    sc.literal('x')?;
    let width_pos = sc.pos;
    let width = sc.integer("hidden-layer width")?;
    sc.literal('-')?;
    let outputs = sc.integer("output-node count")?;
    sc.end()?;
    if inputs == 0 || outputs == 0 {
        return Err(ArchError { pos: 0, reason: "layer sizes must be positive".into() });
    }
    if n_hidden > 0 && width == 0 {
        return Err(ArchError {
            pos: width_pos,
            reason: "hidden width must be positive when hidden layers exist".into(),
        });
    }
    let mut layers = vec![inputs];
    layers.extend(std::iter::repeat(width).take(n_hidden));
    layers.push(outputs);
    Ok(layers)
}

/// Parses the recurrent form `m=<int>` into the hidden width.
pub fn parse_hidden_width(s: &str) -> Result<usize, ArchError> {
    let mut sc = Scanner { s, pos: 0 };
    sc.skip_ws();
    if !sc.s[sc.pos..].starts_with('m') {
        return Err(ArchError { pos: sc.pos, reason: "expected `m=<int>`".into() });
    }
    sc.pos += 1;
    sc.literal('=')?;
    let pos = sc.pos;
    let m = sc.integer("hidden width")?;
    sc.end()?;
    if m == 0 {
        return Err(ArchError { pos, reason: "hidden width must be positive".into() });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_notation_parses() {
        assert_eq!(parse_layers("3 - 2x10 - 1").unwrap(), vec![3, 10, 10, 1]);
        assert_eq!(parse_layers("3 - 1x5 - 1").unwrap(), vec![3, 5, 1]);
        assert_eq!(parse_layers("3 - 0x0 - 1").unwrap(), vec![3, 1]);
        assert_eq!(parse_layers("1-3x4-2").unwrap(), vec![1, 4, 4, 4, 2]);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_layers("3 - 2y10 - 1").unwrap_err();
        assert_eq!(err.pos, 5);
        let err = parse_layers("3 - 2x10 - 1 - 9").unwrap_err();
        assert_eq!(err.reason, "trailing input");
        assert!(parse_layers("0 - 1x5 - 1").is_err());
        assert!(parse_layers("").is_err());
    }

    #[test]
    fn recurrent_notation_parses() {
        assert_eq!(parse_hidden_width("m=5").unwrap(), 5);
        assert_eq!(parse_hidden_width(" m = 12 ").unwrap(), 12);
        assert!(parse_hidden_width("m=0").is_err());
        assert!(parse_hidden_width("5").is_err());
    }
}
