//! A small equation language for entering linear systems as text.
//!
//! Grammar (one equation per line):
//!
//! ```text
//! system   := equation (newline equation)*
//! equation := sum '=' sum
//! sum      := ['+'|'-'] term (('+'|'-') term)*
//! term     := rational ident | rational | ident
//! rational := integer ['/' integer]
//! ident    := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! Coefficients attach to variables by juxtaposition (`4y`, `1/2x`). Blank
//! lines are skipped. Accepted extensions beyond the core grammar: `#`
//! starts a comment running to end of line, and the Unicode minus sign `−`
//! is treated as `-`.
//!
//! Equations must be homogeneous once constants are collected (`x = 2` is
//! rejected), every equation must retain a nonzero coefficient after
//! cancellation, and every variable mentioned must survive with a nonzero
//! coefficient in at least one equation. Variables are ordered by first
//! appearance. Errors carry 1-based line and column positions.

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::rational::Rational;
use crate::systems::{FamilyTag, LinearSystem};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Slash,
    Eq,
    Newline,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (li, raw_line) in text.lines().enumerate() {
        let line = li + 1;
        let content = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let mut chars = content.char_indices().peekable();
        // Column counting is per character, 1-based.
        let mut col = 0usize;
        while let Some((_, ch)) = chars.next() {
            col += 1;
            let tok = match ch {
                c if c.is_whitespace() => continue,
                '+' => Tok::Plus,
                '-' | '\u{2212}' => Tok::Minus,
                '/' => Tok::Slash,
                '=' => Tok::Eq,
                c if c.is_ascii_digit() => {
                    let start_col = col;
                    let mut s = String::new();
                    s.push(c);
                    while let Some(&(_, d)) = chars.peek() {
                        if d.is_ascii_digit() {
                            s.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    out.push(Spanned { tok: Tok::Num(s), line, col: start_col });
                    continue;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start_col = col;
                    let mut s = String::new();
                    s.push(c);
                    while let Some(&(_, d)) = chars.peek() {
                        if d.is_ascii_alphanumeric() || d == '_' {
                            s.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    out.push(Spanned { tok: Tok::Ident(s), line, col: start_col });
                    continue;
                }
                other => return Err(perr(line, col, format!("unexpected character {other:?}"))),
            };
            out.push(Spanned { tok, line, col });
        }
        out.push(Spanned { tok: Tok::Newline, line, col: col + 1 });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// One parsed term: sign already applied to the coefficient; `var` is `None`
/// for a bare constant.
struct Term {
    coeff: Rational,
    var: Option<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_newline_or_end(&self) -> bool {
        matches!(self.peek().map(|t| &t.tok), None | Some(Tok::Newline))
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek().map(|t| &t.tok), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    fn last_pos(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.saturating_sub(1))
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    /// Parses an unsigned rational: `integer ['/' integer]`.
    fn parse_rational(&mut self, first: String, line: usize, col: usize) -> Result<Rational> {
        let num: num_bigint::BigInt = first
            .parse()
            .map_err(|_| perr(line, col, format!("invalid integer {first:?}")))?;
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Slash)) {
            self.next();
            match self.next() {
                Some(Spanned { tok: Tok::Num(d), line: dl, col: dc }) => {
                    let den: num_bigint::BigInt = d
                        .parse()
                        .map_err(|_| perr(dl, dc, format!("invalid integer {d:?}")))?;
                    Rational::new(num, den)
                }
                other => {
                    let (l, c) = other.map(|t| (t.line, t.col)).unwrap_or((line, col));
                    Err(perr(l, c, "expected denominator after '/'"))
                }
            }
        } else {
            Ok(Rational::from_int(num))
        }
    }

    /// Parses one term (after any sign has been consumed by the caller).
    fn parse_term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Spanned { tok: Tok::Num(s), line, col }) => {
                let coeff = self.parse_rational(s, line, col)?;
                if let Some(Spanned { tok: Tok::Ident(_), .. }) = self.peek() {
                    let Some(Spanned { tok: Tok::Ident(v), .. }) = self.next() else {
                        unreachable!()
                    };
                    Ok(Term { coeff, var: Some(v) })
                } else {
                    Ok(Term { coeff, var: None })
                }
            }
            Some(Spanned { tok: Tok::Ident(v), .. }) => {
                Ok(Term { coeff: Rational::one(), var: Some(v) })
            }
            other => {
                let (l, c) = other
                    .as_ref()
                    .map(|t| (t.line, t.col))
                    .unwrap_or_else(|| self.last_pos());
                Err(perr(l, c, "expected a term (number, variable, or number variable)"))
            }
        }
    }

    /// Parses a sum of signed terms, stopping at `=`, newline or end.
    fn parse_sum(&mut self) -> Result<Vec<Term>> {
        let mut terms = Vec::new();
        // Optional leading sign.
        let mut sign = Rational::one();
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Plus) => {
                    self.next();
                }
                Some(Tok::Minus) => {
                    self.next();
                    sign = -sign;
                }
                _ => break,
            }
        }
        let first = self.parse_term()?;
        terms.push(Term { coeff: &sign * &first.coeff, var: first.var });
        while let Some(Tok::Plus | Tok::Minus) = self.peek().map(|t| t.tok.clone()) {
            let mut sign = Rational::one();
            loop {
                match self.peek().map(|t| t.tok.clone()) {
                    Some(Tok::Plus) => {
                        self.next();
                    }
                    Some(Tok::Minus) => {
                        self.next();
                        sign = -sign;
                    }
                    _ => break,
                }
            }
            let t = self.parse_term()?;
            terms.push(Term { coeff: &sign * &t.coeff, var: t.var });
        }
        Ok(terms)
    }
}

/// Parses a whole system. See the module docs for the grammar.
pub fn parse_system(text: &str) -> Result<LinearSystem> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut variables: Vec<String> = Vec::new();
    let mut var_index = std::collections::HashMap::<String, usize>::new();
    // Row as sparse (var index -> coefficient) plus a constant accumulator.
    let mut rows_sparse: Vec<Vec<(usize, Rational)>> = Vec::new();

    loop {
        p.skip_newlines();
        if p.peek().is_none() {
            break;
        }
        let eq_line = p.peek().map(|t| t.line).unwrap_or(1);
        let lhs = p.parse_sum()?;
        match p.next() {
            Some(Spanned { tok: Tok::Eq, .. }) => {}
            other => {
                let (l, c) = other
                    .as_ref()
                    .map(|t| (t.line, t.col))
                    .unwrap_or_else(|| p.last_pos());
                return Err(perr(l, c, "expected '='"));
            }
        }
        let rhs = p.parse_sum()?;
        if !p.at_newline_or_end() {
            let t = p.peek().unwrap();
            return Err(perr(t.line, t.col, "expected end of equation"));
        }

        let mut coeffs: Vec<Rational> = vec![Rational::zero(); variables.len()];
        let mut constant = Rational::zero();
        let mut add = |term: Term, negate: bool,
                       coeffs: &mut Vec<Rational>,
                       constant: &mut Rational| {
            let c = if negate { -term.coeff } else { term.coeff };
            match term.var {
                None => *constant += &c,
                Some(v) => {
                    let idx = *var_index.entry(v.clone()).or_insert_with(|| {
                        variables.push(v);
                        variables.len() - 1
                    });
                    if idx >= coeffs.len() {
                        coeffs.resize(idx + 1, Rational::zero());
                    }
                    coeffs[idx] += &c;
                }
            }
        };
        for t in lhs {
            add(t, false, &mut coeffs, &mut constant);
        }
        for t in rhs {
            add(t, true, &mut coeffs, &mut constant);
        }

        let row_no = rows_sparse.len() + 1;
        if !constant.is_zero() {
            return Err(Error::NonHomogeneous { row: row_no, value: constant.to_string() });
        }
        let sparse: Vec<(usize, Rational)> = coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        if sparse.is_empty() {
            return Err(Error::ZeroRow { row: row_no });
        }
        let _ = eq_line;
        rows_sparse.push(sparse);
    }

    if rows_sparse.is_empty() {
        return Err(Error::EmptySystem);
    }
    let cols = variables.len();
    let mut rows = Vec::with_capacity(rows_sparse.len());
    for sparse in &rows_sparse {
        let mut row = vec![Rational::zero(); cols];
        for (idx, c) in sparse {
            row[*idx] = c.clone();
        }
        rows.push(row);
    }
    // Every variable must survive cancellation somewhere.
    for (idx, var) in variables.iter().enumerate() {
        if rows.iter().all(|r| r[idx].is_zero()) {
            return Err(Error::ZeroColumn { var: var.clone() });
        }
    }
    LinearSystem::new(RatMatrix::from_rows(rows)?, variables, FamilyTag::Custom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ri(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn parses_single_equation() {
        let sys = parse_system("4y + x - z = 0").unwrap();
        assert_eq!(sys.variables(), &["y", "x", "z"]);
        assert_eq!(sys.matrix().row(0), &[ri(4), ri(1), ri(-1)]);
    }

    #[test]
    fn parses_terms_on_both_sides() {
        let sys = parse_system("x + y = z").unwrap();
        assert_eq!(sys.variables(), &["x", "y", "z"]);
        assert_eq!(sys.matrix().row(0), &[ri(1), ri(1), ri(-1)]);
    }

    #[test]
    fn parses_rational_coefficients_and_unicode_minus() {
        let sys = parse_system("1/2x \u{2212} 3/4y = 0").unwrap();
        assert_eq!(sys.matrix().row(0), &[Rational::new(1, 2).unwrap(), Rational::new(-3, 4).unwrap()]);
    }

    #[test]
    fn multi_line_with_comments_and_blanks() {
        let text = "# a Schur-like pair\nx + y = z\n\nz + z = w   # doubling\n";
        let sys = parse_system(text).unwrap();
        assert_eq!(sys.equations(), 2);
        assert_eq!(sys.variables(), &["x", "y", "z", "w"]);
        assert_eq!(sys.matrix().row(1), &[ri(0), ri(0), ri(2), ri(-1)]);
    }

    #[test]
    fn cancellation_to_zero_row_is_rejected() {
        match parse_system("x = x") {
            Err(Error::ZeroRow { row: 1 }) => {}
            other => panic!("expected ZeroRow, got {other:?}"),
        }
    }

    #[test]
    fn cancelled_variable_is_rejected() {
        match parse_system("x + y = y + z") {
            Err(Error::ZeroColumn { var }) => assert_eq!(var, "y"),
            other => panic!("expected ZeroColumn, got {other:?}"),
        }
    }

    #[test]
    fn nonhomogeneous_is_rejected() {
        match parse_system("x = 2") {
            Err(Error::NonHomogeneous { row: 1, value }) => assert_eq!(value, "-2"),
            other => panic!("expected NonHomogeneous, got {other:?}"),
        }
        // Constants may appear as long as they cancel.
        assert!(parse_system("x + 2 = z + 2").is_ok());
    }

    #[test]
    fn error_positions_are_reported() {
        match parse_system("x + = z") {
            Err(Error::Parse { line: 1, col, .. }) => assert_eq!(col, 5),
            other => panic!("expected Parse error, got {other:?}"),
        }
        match parse_system("x + y = z\nx ? y = z") {
            Err(Error::Parse { line: 2, col, .. }) => assert_eq!(col, 3),
            other => panic!("expected Parse error, got {other:?}"),
        }
        match parse_system("x + y z = w") {
            Err(Error::Parse { line: 1, col, .. }) => assert_eq!(col, 7),
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn zero_denominator_in_text() {
        assert!(matches!(parse_system("1/0x = y"), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn empty_input_is_empty_system() {
        assert!(matches!(parse_system(""), Err(Error::EmptySystem)));
        assert!(matches!(parse_system("# only comments\n\n"), Err(Error::EmptySystem)));
    }

    #[test]
    fn double_negation_and_repeated_vars_accumulate() {
        let sys = parse_system("x - -y + x = 0").unwrap();
        assert_eq!(sys.variables(), &["x", "y"]);
        assert_eq!(sys.matrix().row(0), &[ri(2), ri(1)]);
    }

    #[test]
    fn missing_equals_is_an_error() {
        assert!(matches!(parse_system("x + y"), Err(Error::Parse { .. })));
        assert!(matches!(parse_system("x = y = z"), Err(Error::Parse { .. })));
    }
}
