//! Surface syntax for polynomials, frequencies and basis declarations.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := ('+' | '-') unary | atom
//! atom    := number | number 'i' | 'i' | 'e' '(' freq ')' | '(' expr ')'
//! freq    := fterm (('+' | '-') fterm)*      leading sign allowed
//! fterm   := fatom (('*' | '/') fatom)*
//! fatom   := integer | label | '(' freq ')'
//! ```
//!
//! Frequencies are exact rational combinations of basis labels; decimals are
//! refused there. Coefficients are `f64` and [`render`] prints them with the
//! shortest representation that parses back to the same bits.

use std::fmt;
use std::sync::Arc;

use apsigma_core::{APPolynomial, Frequency, FrequencyBasis, Rational, RealValue};
use num_complex::Complex64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub message: String,
    pub code: &'static str,
}

impl ParseError {
    fn at(position: usize, message: impl Into<String>) -> Self {
        ParseError { position, message: message.into(), code: "parse-error" }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at position {}", self.message, self.position)
    }
}

impl std::error::Error for ParseError {}

pub type ParseResult<T> = Result<T, ParseError>;

/// Linear combination of basis labels under construction.
#[derive(Clone, Debug)]
struct Lin {
    coords: Vec<Rational>,
}

impl Lin {
    fn constant(dim: usize, q: Rational) -> Self {
        let mut coords = vec![Rational::zero(); dim];
        coords[0] = q;
        Lin { coords }
    }

    fn as_constant(&self) -> Option<Rational> {
        self.coords[1..].iter().all(Zero::is_zero).then_some(self.coords[0])
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    basis: &'a Arc<FrequencyBasis>,
}

fn overflow(pos: usize) -> ParseError {
    ParseError::at(pos, "frequency coefficient overflows 64-bit rationals")
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, basis: &'a Arc<FrequencyBasis>) -> Self {
        Parser { src, bytes: src.as_bytes(), pos: 0, basis }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> ParseResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected `{}`", c as char)))
        }
    }

    fn unexpected(&mut self, what: &str) -> ParseError {
        match self.peek() {
            None => ParseError::at(self.pos, format!("{what}, found end of input")),
            Some(_) => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                ParseError::at(self.pos, format!("{what}, found `{ch}`"))
            }
        }
    }

    fn finish(&mut self) -> ParseResult<()> {
        if self.peek().is_some() {
            Err(self.unexpected("expected end of input"))
        } else {
            Ok(())
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let first = *self.bytes.get(start)?;
        if !(first.is_ascii_alphabetic() || first == b'_') {
            return None;
        }
        let mut end = start + 1;
        while end < self.bytes.len() && (self.bytes[end].is_ascii_alphanumeric() || self.bytes[end] == b'_') {
            end += 1;
        }
        self.pos = end;
        Some(&self.src[start..end])
    }

    // ---- polynomial expressions ----

    fn expr(&mut self) -> ParseResult<APPolynomial> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> ParseResult<APPolynomial> {
        let mut acc = self.unary()?;
        while self.eat(b'*') {
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> ParseResult<APPolynomial> {
        if self.eat(b'-') {
            Ok(-&self.unary()?)
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> ParseResult<APPolynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let value = self.float()?;
                let c = if self.bytes.get(self.pos) == Some(&b'i') && !self.ident_continues(self.pos + 1) {
                    self.pos += 1;
                    Complex64::new(0.0, value)
                } else {
                    Complex64::new(value, 0.0)
                };
                Ok(APPolynomial::constant(self.basis, c))
            }
            Some(_) => {
                let start = self.pos;
                match self.ident() {
                    Some("i") => Ok(APPolynomial::constant(self.basis, Complex64::new(0.0, 1.0))),
                    Some("e") => {
                        self.expect(b'(')?;
                        let fstart = self.pos;
                        let freq = self.freq()?;
                        self.expect(b')')?;
                        APPolynomial::monomial(self.basis, freq, Complex64::new(1.0, 0.0)).map_err(|e| ParseError {
                            position: fstart,
                            message: e.to_string(),
                            code: e.code(),
                        })
                    }
                    Some(other) => Err(ParseError::at(start, format!("unexpected identifier `{other}`"))),
                    None => Err(self.unexpected("expected a number, `i`, `e(...)` or `(`")),
                }
            }
            None => Err(self.unexpected("expected a number, `i`, `e(...)` or `(`")),
        }
    }

    fn ident_continues(&self, at: usize) -> bool {
        self.bytes.get(at).is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
    }

    fn float(&mut self) -> ParseResult<f64> {
        self.skip_ws();
        let start = self.pos;
        let b = self.bytes;
        let mut end = start;
        while end < b.len() && b[end].is_ascii_digit() {
            end += 1;
        }
        if end < b.len() && b[end] == b'.' {
            end += 1;
            while end < b.len() && b[end].is_ascii_digit() {
                end += 1;
            }
        }
        // An exponent only when digits follow; `2e(1)` is not a number.
        if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
            let mut k = end + 1;
            if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                k += 1;
            }
            if k < b.len() && b[k].is_ascii_digit() {
                while k < b.len() && b[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| ParseError::at(start, format!("malformed number `{text}`")))?;
        if !value.is_finite() {
            return Err(ParseError::at(start, format!("number `{text}` is not finite")));
        }
        self.pos = end;
        Ok(value)
    }

    // ---- frequencies ----

    fn freq(&mut self) -> ParseResult<Frequency> {
        let lin = self.fsum()?;
        Ok(self.basis.from_coords(lin.coords))
    }

    fn fsum(&mut self) -> ParseResult<Lin> {
        let negate_first = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let mut acc = self.fterm()?;
        if negate_first {
            acc.coords.iter_mut().for_each(|c| *c = -*c);
        }
        loop {
            let pos = self.pos;
            let sub = if self.eat(b'+') {
                false
            } else if self.eat(b'-') {
                true
            } else {
                return Ok(acc);
            };
            let rhs = self.fterm()?;
            for (a, b) in acc.coords.iter_mut().zip(&rhs.coords) {
                *a = if sub { a.checked_sub(b) } else { a.checked_add(b) }.ok_or_else(|| overflow(pos))?;
            }
        }
    }

    fn fterm(&mut self) -> ParseResult<Lin> {
        let mut acc = self.fatom()?;
        loop {
            let pos = self.pos;
            if self.eat(b'*') {
                let rhs = self.fatom()?;
                acc = match (acc.as_constant(), rhs.as_constant()) {
                    (Some(q), _) => scale_lin(&rhs, q).ok_or_else(|| overflow(pos))?,
                    (None, Some(q)) => scale_lin(&acc, q).ok_or_else(|| overflow(pos))?,
                    (None, None) => return Err(ParseError::at(pos, "product of two labels is not a frequency")),
                };
            } else if self.eat(b'/') {
                let rhs = self.fatom()?;
                let q = rhs.as_constant().ok_or_else(|| ParseError::at(pos, "division by a label"))?;
                if q.is_zero() {
                    return Err(ParseError::at(pos, "division by zero"));
                }
                let inv = Rational::from_integer(1).checked_div(&q).ok_or_else(|| overflow(pos))?;
                acc = scale_lin(&acc, inv).ok_or_else(|| overflow(pos))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn fatom(&mut self) -> ParseResult<Lin> {
        let dim = self.basis.dim();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.fsum()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                let mut end = start;
                while end < self.bytes.len() && self.bytes[end].is_ascii_digit() {
                    end += 1;
                }
                if end < self.bytes.len() && (self.bytes[end] == b'.' || self.bytes[end] == b'e') {
                    return Err(ParseError::at(start, "frequencies must be exact: use integers, `/` and basis labels"));
                }
                let n: i64 = self.src[start..end].parse().map_err(|_| overflow(start))?;
                self.pos = end;
                Ok(Lin::constant(dim, Rational::from_integer(n)))
            }
            Some(_) => {
                let start = self.pos;
                match self.ident() {
                    Some(label) => {
                        let i = self.basis.index_of(label).ok_or_else(|| ParseError {
                            position: start,
                            message: format!("unknown basis label `{label}`"),
                            code: "unknown-label",
                        })?;
                        let mut lin = Lin::constant(dim, Rational::zero());
                        lin.coords[i] = Rational::from_integer(1);
                        Ok(lin)
                    }
                    None => Err(self.unexpected("expected an integer, a basis label or `(`")),
                }
            }
            None => Err(self.unexpected("expected an integer, a basis label or `(`")),
        }
    }
}

fn scale_lin(lin: &Lin, q: Rational) -> Option<Lin> {
    let coords = lin.coords.iter().map(|c| c.checked_mul(&q)).collect::<Option<Vec<_>>>()?;
    Some(Lin { coords })
}

/// Parses a polynomial over `basis`.
pub fn parse_ap_expression(text: &str, basis: &Arc<FrequencyBasis>) -> ParseResult<APPolynomial> {
    let mut p = Parser::new(text, basis);
    let out = p.expr()?;
    p.finish()?;
    Ok(out)
}

/// Parses a frequency such as `3/2 + 2*s`. Negative values are allowed here;
/// callers that need `λ ≥ 0` check the sign.
pub fn parse_frequency(text: &str, basis: &Arc<FrequencyBasis>) -> ParseResult<Frequency> {
    let mut p = Parser::new(text, basis);
    let out = p.freq()?;
    p.finish()?;
    Ok(out)
}

/// Comma-separated frequencies, e.g. a generator list `2, 3` or `1, s`.
pub fn parse_frequency_list(text: &str, basis: &Arc<FrequencyBasis>) -> ParseResult<Vec<Frequency>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in text.split(',') {
        if piece.trim().is_empty() {
            return Err(ParseError::at(offset, "empty list entry"));
        }
        out.push(parse_frequency(piece, basis).map_err(|e| ParseError { position: e.position + offset, ..e })?);
        offset += piece.len() + 1;
    }
    Ok(out)
}

/// A constant expression such as `0.5-0.25i`.
pub fn parse_complex(text: &str, basis: &Arc<FrequencyBasis>) -> ParseResult<Complex64> {
    let p = parse_ap_expression(text, basis)?;
    match p.spectrum().map(|s| s.len()) {
        Ok(0) => Ok(Complex64::new(0.0, 0.0)),
        Ok(1) if p.coefficient(&basis.zero()) != Complex64::new(0.0, 0.0) => Ok(p.constant_term()),
        _ => Err(ParseError::at(0, "expected a constant")),
    }
}

/// Basis declarations `label=value`, comma-separated. Values are `p/q`,
/// `sqrt(p/q)` or an enclosure `mid+-rad`.
pub fn parse_basis(decls: &[String]) -> ParseResult<FrequencyBasis> {
    let mut entries = Vec::new();
    for decl in decls {
        for piece in decl.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (label, value) = piece
                .split_once('=')
                .ok_or_else(|| ParseError::at(0, format!("basis entry `{piece}` is not `label=value`")))?;
            entries.push((label.trim().to_string(), parse_real_value(value.trim())?));
        }
    }
    FrequencyBasis::new(entries).map_err(|e| ParseError { position: 0, message: e.to_string(), code: e.code() })
}

fn parse_ratio(text: &str) -> ParseResult<(i64, i64)> {
    let bad = || ParseError::at(0, format!("`{text}` is not a rational `p/q`"));
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
        None => (text.trim().parse().map_err(|_| bad())?, 1),
    };
    if d == 0 {
        return Err(bad());
    }
    Ok((n, d))
}

fn parse_real_value(text: &str) -> ParseResult<RealValue> {
    if let Some(inner) = text.strip_prefix("sqrt(").and_then(|s| s.strip_suffix(')')) {
        let (n, d) = parse_ratio(inner)?;
        return Ok(RealValue::sqrt(n, d));
    }
    if let Some((mid, rad)) = text.split_once("+-") {
        let bad = || ParseError::at(0, format!("`{text}` is not an enclosure `mid+-rad`"));
        let mid: f64 = mid.trim().parse().map_err(|_| bad())?;
        let rad: f64 = rad.trim().parse().map_err(|_| bad())?;
        return RealValue::interval(mid, rad).ok_or_else(bad);
    }
    let (n, d) = parse_ratio(text)?;
    Ok(RealValue::rational(n, d))
}

/// Shortest text that parses back to exactly `p`.
pub fn render(p: &APPolynomial) -> String {
    let basis = p.basis();
    let mut out = String::new();
    for (freq, c) in p.terms() {
        let (negative, body) = if c.im == 0.0 {
            (c.re < 0.0, format!("{:?}", c.re.abs()))
        } else if c.re == 0.0 {
            (c.im < 0.0, format!("{:?}i", c.im.abs()))
        } else {
            let sign = if c.im < 0.0 { '-' } else { '+' };
            (false, format!("({:?}{sign}{:?}i)", c.re, c.im.abs()))
        };
        match (out.is_empty(), negative) {
            (true, false) => {}
            (true, true) => out.push('-'),
            (false, false) => out.push_str(" + "),
            (false, true) => out.push_str(" - "),
        }
        out.push_str(&body);
        out.push_str("*e(");
        out.push_str(&basis.render(freq));
        out.push(')');
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Nonnegative frequencies only.
pub fn require_nonnegative(f: &Frequency, basis: &FrequencyBasis) -> ParseResult<()> {
    match basis.sign(f) {
        Ok(std::cmp::Ordering::Less) => Err(ParseError {
            position: 0,
            message: format!("frequency {} is negative", basis.render(f)),
            code: "negative-frequency",
        }),
        Ok(_) => Ok(()),
        Err(e) => Err(ParseError { position: 0, message: e.to_string(), code: e.code() }),
    }
}
