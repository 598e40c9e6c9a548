//! Line-oriented parser for the `.dsys` system format.
//!
//! ```text
//! # comment
//! vars: V gamma chi          (optional aliases for x1, x2, x3)
//! x1 + d(x2,1)               (one equation per line)
//! P2: d(x1,1) - d(x2,2) + x3 (optional label)
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::expr::Expr;
use super::{DiffSystem, JetError, JetVar};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Colon,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> JetError {
    JetError::Parse { line, col, msg: msg.into() }
}

fn lex(text: &str, line: usize) -> Result<Vec<Token>, JetError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, col });
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut m = k + 1;
                if m < chars.len() && (chars[m] == '+' || chars[m] == '-') {
                    m += 1;
                }
                if m < chars.len() && chars[m].is_ascii_digit() {
                    k = m;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let lit: String = chars[start..k].iter().collect();
            let v = parse_decimal(&lit).ok_or_else(|| err(line, col, format!("malformed number '{lit}'")))?;
            out.push(Token { tok: Tok::Num(v), col });
        } else if c.is_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..k].iter().collect()), col });
        } else {
            return Err(err(line, col, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

/// Exact value of a decimal literal such as `1.25e-3`.
pub(crate) fn parse_decimal(lit: &str) -> Option<BigRational> {
    let (mant, exp) = match lit.find(['e', 'E']) {
        Some(p) => (&lit[..p], lit[p + 1..].parse::<i32>().ok()?),
        None => (lit, 0),
    };
    let (int, frac) = match mant.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let factor = super::expr::rational_powi(&ten, scale);
    Some(BigRational::from_integer(n) * factor)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
    names: &'a [String],
    max_var: &'a mut usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), JetError> {
        let col = self.col();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(_) => Err(err(self.line, col, format!("expected {what}"))),
            None => Err(err(self.line, col, format!("expected {what}, found end of line"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, JetError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    terms.push(Expr::neg(self.term()?));
                }
                _ => return Ok(Expr::add(terms)),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, JetError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = Expr::mul(vec![acc, self.unary()?]);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = Expr::div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, JetError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Expr::neg(self.unary()?))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, JetError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let k = self.exponent()?;
        Ok(Expr::pow(base, k))
    }

    fn exponent(&mut self) -> Result<i32, JetError> {
        let col = self.col();
        let bad = |s: &Self| err(s.line, col, "exponent must be an integer literal");
        match self.next() {
            Some(Tok::LParen) => {
                let k = self.exponent()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(k)
            }
            Some(Tok::Minus) => Ok(-self.exponent()?),
            Some(Tok::Num(n)) if n.is_integer() => {
                i32::try_from(n.to_integer()).map_err(|_| bad(self))
            }
            _ => Err(bad(self)),
        }
    }

    fn atom(&mut self) -> Result<Expr, JetError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Const(n)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "d" if self.peek() == Some(&Tok::LParen) => self.derivative(col),
                "sin" | "cos" | "tan" | "exp" | "ln" if self.peek() == Some(&Tok::LParen) => {
                    self.pos += 1;
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(match name.as_str() {
                        "sin" => Expr::sin(e),
                        "cos" => Expr::cos(e),
                        "tan" => Expr::tan(e),
                        "exp" => Expr::exp(e),
                        _ => Expr::ln(e),
                    })
                }
                _ => {
                    let v = self.variable(&name, col)?;
                    Ok(Expr::var(v, 0))
                }
            },
            Some(_) => Err(err(self.line, col, "unexpected token")),
            None => Err(err(self.line, col, "unexpected end of line")),
        }
    }

    fn derivative(&mut self, col: usize) -> Result<Expr, JetError> {
        let bad = |s: &Self, msg: &str| err(s.line, col, format!("malformed derivative: {msg}"));
        self.pos += 1;
        let vcol = self.col();
        let name = match self.next() {
            Some(Tok::Ident(n)) => n,
            _ => return Err(bad(self, "expected d(variable, order)")),
        };
        let v = self.variable(&name, vcol)?;
        if self.next() != Some(Tok::Comma) {
            return Err(bad(self, "expected ',' and an order"));
        }
        let order = match self.next() {
            Some(Tok::Num(n)) if n.is_integer() && n >= BigRational::zero() => {
                u32::try_from(n.to_integer()).map_err(|_| bad(self, "order too large"))?
            }
            _ => return Err(bad(self, "order must be a nonnegative integer")),
        };
        if self.next() != Some(Tok::RParen) {
            return Err(bad(self, "expected ')'"));
        }
        Ok(Expr::Var(JetVar::new(v, order)))
    }

    fn variable(&mut self, name: &str, col: usize) -> Result<usize, JetError> {
        if let Some(p) = self.names.iter().position(|n| n == name) {
            *self.max_var = (*self.max_var).max(p + 1);
            return Ok(p);
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if idx >= 1 && !name[1..].starts_with('0') {
                *self.max_var = (*self.max_var).max(idx);
                return Ok(idx - 1);
            }
        }
        Err(err(self.line, col, format!("unknown identifier '{name}'")))
    }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a)
}

/// Parses a whole system; errors carry 1-based line and column.
pub fn parse_system(text: &str) -> Result<DiffSystem, JetError> {
    let mut aliases: Vec<String> = Vec::new();
    let mut max_var = 0usize;
    let mut equations = Vec::new();
    let mut labels = Vec::new();
    let mut seen_equation = false;

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = strip_comment(raw);
        if body.trim().is_empty() {
            continue;
        }
        let toks = lex(body, line)?;
        let is_header = matches!(
            (toks.first().map(|t| &t.tok), toks.get(1).map(|t| &t.tok)),
            (Some(Tok::Ident(h)), Some(Tok::Colon)) if h == "vars"
        );
        if is_header {
            if seen_equation || !aliases.is_empty() {
                return Err(err(line, 1, "the vars header must come once, before any equation"));
            }
            for t in &toks[2..] {
                match &t.tok {
                    Tok::Ident(n) if !matches!(n.as_str(), "d" | "sin" | "cos" | "tan" | "exp" | "ln") => {
                        if aliases.contains(n) {
                            return Err(err(line, t.col, format!("duplicate variable '{n}'")));
                        }
                        aliases.push(n.clone());
                    }
                    _ => return Err(err(line, t.col, "expected a variable name")),
                }
            }
            continue;
        }
        seen_equation = true;
        let (label, start) = match (toks.first().map(|t| &t.tok), toks.get(1).map(|t| &t.tok)) {
            (Some(Tok::Ident(l)), Some(Tok::Colon)) => (l.clone(), 2),
            _ => (format!("P{}", equations.len() + 1), 0),
        };
        let mut p = Parser {
            toks: &toks[start..],
            pos: 0,
            line,
            end_col: body.chars().count() + 1,
            names: &aliases,
            max_var: &mut max_var,
        };
        let e = p.expr()?;
        if p.pos < p.toks.len() {
            let t = &p.toks[p.pos];
            let msg = if t.tok == Tok::RParen { "unbalanced ')'" } else { "unexpected token" };
            return Err(err(line, t.col, msg));
        }
        equations.push(e);
        labels.push(label);
    }
    let n = max_var.max(aliases.len());
    let names = (0..n).map(|k| aliases.get(k).cloned().unwrap_or_else(|| format!("x{}", k + 1))).collect();
    Ok(DiffSystem::new(names, equations, labels))
}

/// Parses a single jet reference such as `x3`, `V` or `d(x2,1)`.
pub fn parse_jet_ref(text: &str, names: &[String]) -> Result<JetVar, JetError> {
    let toks = lex(text, 1)?;
    let mut max_var = 0;
    let mut p = Parser { toks: &toks, pos: 0, line: 1, end_col: text.len() + 1, names, max_var: &mut max_var };
    let e = p.atom()?;
    match (e, p.pos == toks.len()) {
        (Expr::Var(v), true) if v.var < names.len() => Ok(v),
        _ => Err(err(1, 1, format!("'{text}' is not a jet variable of this system"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(parse_decimal("1.25"), Some(BigRational::new(5.into(), 4.into())));
        assert_eq!(parse_decimal("2e-3"), Some(BigRational::new(1.into(), 500.into())));
        assert_eq!(parse_decimal(".5"), Some(BigRational::new(1.into(), 2.into())));
        assert_eq!(parse_decimal("1.2.3"), None);
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_system("x1\nd(x1,1) +") {
            Err(JetError::Parse { line, col, .. }) => assert_eq!((line, col), (2, 10)),
            other => panic!("{other:?}"),
        }
        match parse_system("x1 + y") {
            Err(JetError::Parse { line: 1, col: 6, msg }) => assert!(msg.contains("unknown identifier")),
            other => panic!("{other:?}"),
        }
        match parse_system("d(x1) + x2") {
            Err(JetError::Parse { line: 1, col: 1, msg }) => assert!(msg.contains("malformed derivative")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_system("(x1 + x2"), Err(JetError::Parse { line: 1, .. })));
        assert!(matches!(parse_system("x1 + x2)"), Err(JetError::Parse { line: 1, col: 8, .. })));
        assert!(matches!(parse_system("x1^x2"), Err(JetError::Parse { .. })));
    }

    #[test]
    fn aliases_and_labels() {
        let s = parse_system("vars: V gamma\n# level flight\nPV: d(V,1) - sin(gamma) # comment\nx2^(-1) + x3").unwrap();
        assert_eq!(s.names(), &["V", "gamma", "x3"]);
        assert_eq!(s.labels(), &["PV", "P2"]);
        assert_eq!(parse_jet_ref("d(gamma,2)", s.names()).unwrap(), JetVar::new(1, 2));
        assert_eq!(parse_jet_ref("x3", s.names()).unwrap(), JetVar::new(2, 0));
        assert!(parse_jet_ref("x4", s.names()).is_err());
    }
}
