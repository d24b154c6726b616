//! Boolean condition expressions used by procedural constraints.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr    := and ("or" and)*
//! and     := unary ("and" unary)*
//! unary   := "not" unary | "(" expr ")" | compare
//! compare := operand ("==" | "!=") operand
//! operand := IDENT | "index" "(" IDENT ")" | STRING | NUMBER
//! ```
//!
//! Identifiers name decisions. A decision evaluates to the text of its chosen
//! option, `index(d)` to the zero-based option index. A decision that is not
//! active in the universe being tested evaluates to null, which is unequal to
//! everything (so `==` is false and `!=` is true).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Syntax error in a condition, positioned by character offset.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("at offset {offset}: {message}")]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    /// The chosen option value of a decision.
    Decision(String),
    /// The chosen option index of a decision.
    Index(String),
    Str(String),
    /// Numeric literal; the source text is kept for display.
    Num { value: f64, text: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Compare { op: CmpOp, lhs: Operand, rhs: Operand },
}

/// A decision's state as seen by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chosen<'a> {
    pub index: usize,
    pub value: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
enum Value<'a> {
    Text(&'a str),
    Num(f64),
    Null,
}

fn unquote(s: &str) -> &str {
    let b = s.as_bytes();
    if b.len() >= 2 && (b[0] == b'"' || b[0] == b'\'') && b[b.len() - 1] == b[0] {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

impl Value<'_> {
    fn equals(&self, other: &Value<'_>) -> bool {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => false,
            (Value::Text(a), Value::Text(b)) => unquote(a) == unquote(b),
            (Value::Num(a), Value::Num(b)) => a == b,
            (Value::Text(t), Value::Num(n)) | (Value::Num(n), Value::Text(t)) => unquote(t)
                .trim()
                .parse::<f64>()
                .map(|v| v == *n)
                .unwrap_or(false),
        }
    }
}

impl Operand {
    fn eval<'a, F>(&'a self, lookup: &F) -> Value<'a>
    where
        F: Fn(&str) -> Option<Chosen<'a>>,
    {
        match self {
            Operand::Decision(name) => lookup(name).map_or(Value::Null, |c| Value::Text(c.value)),
            Operand::Index(name) => lookup(name).map_or(Value::Null, |c| Value::Num(c.index as f64)),
            Operand::Str(s) => Value::Text(s),
            Operand::Num { value, .. } => Value::Num(*value),
        }
    }

    fn decision(&self) -> Option<&str> {
        match self {
            Operand::Decision(n) | Operand::Index(n) => Some(n),
            _ => None,
        }
    }
}

impl Expr {
    /// Evaluates the expression; `lookup` returns `None` for inactive decisions.
    pub fn eval<'a, F>(&'a self, lookup: &F) -> bool
    where
        F: Fn(&str) -> Option<Chosen<'a>>,
    {
        match self {
            Expr::Or(a, b) => a.eval(lookup) || b.eval(lookup),
            Expr::And(a, b) => a.eval(lookup) && b.eval(lookup),
            Expr::Not(e) => !e.eval(lookup),
            Expr::Compare { op, lhs, rhs } => {
                let eq = lhs.eval(lookup).equals(&rhs.eval(lookup));
                match op {
                    CmpOp::Eq => eq,
                    CmpOp::Ne => !eq,
                }
            }
        }
    }

    /// Names of all decisions referenced by the expression.
    pub fn decisions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Or(a, b) | Expr::And(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Not(e) => e.collect(out),
            Expr::Compare { lhs, rhs, .. } => {
                out.extend(lhs.decision().map(str::to_owned));
                out.extend(rhs.decision().map(str::to_owned));
            }
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Decision(n) => write!(f, "{n}"),
            Operand::Index(n) => write!(f, "index({n})"),
            Operand::Str(s) => write!(f, "{s:?}"),
            Operand::Num { text, .. } => write!(f, "{text}"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Or(a, b) => write!(f, "({a} or {b})"),
            Expr::And(a, b) => write!(f, "({a} and {b})"),
            Expr::Not(e) => write!(f, "not {e}"),
            Expr::Compare { op, lhs, rhs } => {
                let op = match op {
                    CmpOp::Eq => "==",
                    CmpOp::Ne => "!=",
                };
                write!(f, "{lhs} {op} {rhs}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64, String),
    Eq,
    Ne,
    LParen,
    RParen,
    And,
    Or,
    Not,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: String| ExprError { offset, message };
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            '=' | '!' => {
                if chars.get(i + 1).map(|&(_, c)| c) != Some('=') {
                    return Err(err(pos, format!("expected `{c}=`")));
                }
                out.push((pos, if c == '=' { Tok::Eq } else { Tok::Ne }));
                i += 2;
            }
            '"' | '\'' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(pos, "unterminated string literal".into())),
                        Some(&(_, '\\')) => {
                            if let Some(&(_, e)) = chars.get(i + 1) {
                                s.push(e);
                            }
                            i += 2;
                        }
                        Some(&(_, ch)) if ch == quote => {
                            i += 1;
                            break;
                        }
                        Some(&(_, ch)) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((pos, Tok::Str(s)));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let start = i;
                i += 1;
                while let Some(&(_, d)) = chars.get(i) {
                    let exponent_sign = (d == '-' || d == '+') && matches!(chars[i - 1].1, 'e' | 'E');
                    if !(d.is_ascii_alphanumeric() || d == '.' || d == '_' || exponent_sign) {
                        break;
                    }
                    i += 1;
                }
                let end = chars.get(i).map_or(text.len(), |&(p, _)| p);
                let raw = &text[pos..end];
                let value = raw
                    .parse::<f64>()
                    .map_err(|_| err(chars[start].0, format!("invalid number `{raw}`")))?;
                out.push((pos, Tok::Num(value, raw.to_owned())));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = pos;
                while let Some(&(_, d)) = chars.get(i) {
                    if d.is_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let end = chars.get(i).map_or(text.len(), |&(p, _)| p);
                let word = &text[start..end];
                out.push((
                    start,
                    match word {
                        "and" => Tok::And,
                        "or" => Tok::Or,
                        "not" => Tok::Not,
                        _ => Tok::Ident(word.to_owned()),
                    },
                ));
            }
            other => return Err(err(pos, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.bump();
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            _ => self.compare(),
        }
    }

    fn compare(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.operand()?;
        let op = match self.peek() {
            Some(Tok::Eq) => CmpOp::Eq,
            Some(Tok::Ne) => CmpOp::Ne,
            _ => return self.error("expected `==` or `!=`"),
        };
        self.bump();
        let rhs = self.operand()?;
        Ok(Expr::Compare { op, lhs, rhs })
    }

    fn operand(&mut self) -> Result<Operand, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if name == "index" && self.toks.get(self.pos + 1).map(|t| &t.1) == Some(&Tok::LParen) => {
                self.pos += 2;
                let Some(Tok::Ident(inner)) = self.peek().cloned() else {
                    return self.error("expected a decision name inside `index(...)`");
                };
                self.bump();
                if self.peek() != Some(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                self.bump();
                Ok(Operand::Index(inner))
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                Ok(Operand::Decision(name))
            }
            Some(Tok::Str(s)) => {
                self.bump();
                Ok(Operand::Str(s))
            }
            Some(Tok::Num(value, text)) => {
                self.bump();
                Ok(Operand::Num { value, text })
            }
            Some(_) => self.error("expected a decision, string or number"),
            None => self.error("unexpected end of expression"),
        }
    }
}

/// Parses a constraint condition.
pub fn parse_constraint_expr(text: &str) -> Result<Expr, ExprError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(ExprError {
            offset: 0,
            message: "empty condition".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.or()?;
    if p.pos < p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup<'a>(m: &'a HashMap<&'a str, (usize, &'a str)>) -> impl Fn(&str) -> Option<Chosen<'a>> + 'a {
        move |n| m.get(n).map(|&(index, value)| Chosen { index, value })
    }

    #[test]
    fn single_comparison() {
        let e = parse_constraint_expr(r#"NMO == "reported""#).unwrap();
        assert_eq!(
            e,
            Expr::Compare {
                op: CmpOp::Eq,
                lhs: Operand::Decision("NMO".into()),
                rhs: Operand::Str("reported".into()),
            }
        );
    }

    #[test]
    fn negated_conjunction() {
        let e = parse_constraint_expr(r#"not (ECL == "computed" and NMO == "reported")"#).unwrap();
        let Expr::Not(inner) = &e else { panic!("{e:?}") };
        assert!(matches!(**inner, Expr::And(_, _)));
        assert_eq!(
            e.decisions().into_iter().collect::<Vec<_>>(),
            vec!["ECL".to_string(), "NMO".to_string()]
        );
    }

    #[test]
    fn index_disjunction_matches_truth_table() {
        let e = parse_constraint_expr(r#"index(F) != 2 or M == "lmer""#).unwrap();
        assert!(matches!(e, Expr::Or(_, _)));
        let fs = ["a", "b", "c"];
        let ms = ["lm", "lmer"];
        for (fi, f) in fs.iter().enumerate() {
            for (mi, m) in ms.iter().enumerate() {
                let map: HashMap<&str, (usize, &str)> = [("F", (fi, *f)), ("M", (mi, *m))].into();
                let expected = fi != 2 || mi == 1;
                assert_eq!(e.eval(&lookup(&map)), expected, "F={f} M={m}");
            }
        }
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let e = parse_constraint_expr("a == 1 or b == 1 and c == 1").unwrap();
        let Expr::Or(_, rhs) = e else { panic!() };
        assert!(matches!(*rhs, Expr::And(_, _)));
    }

    #[test]
    fn inactive_decisions_are_null() {
        let e = parse_constraint_expr("x == 1").unwrap();
        let ne = parse_constraint_expr("x != 1").unwrap();
        let none = |_: &str| None;
        assert!(!e.eval(&none));
        assert!(ne.eval(&none));
    }

    #[test]
    fn numeric_and_quoted_values_compare_by_content() {
        let e = parse_constraint_expr("cutoff == 2.5").unwrap();
        let map: HashMap<&str, (usize, &str)> = [("cutoff", (1, "2.50"))].into();
        assert!(e.eval(&lookup(&map)));
        let e = parse_constraint_expr("family == 'gaussian'").unwrap();
        let map: HashMap<&str, (usize, &str)> = [("family", (0, "\"gaussian\""))].into();
        assert!(e.eval(&lookup(&map)));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse_constraint_expr("a == ").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse_constraint_expr("a = b").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse_constraint_expr("(a == b").unwrap_err();
        assert!(err.message.contains(')'));
        assert!(parse_constraint_expr("a == b c").is_err());
        assert!(parse_constraint_expr("").is_err());
        assert!(parse_constraint_expr("\"open").is_err());
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for src in [
            r#"not (ECL == "computed" and NMO == "reported")"#,
            r#"index(F) != 2 or M == "lmer""#,
            "a == -1.5e3 and not b != 'x'",
        ] {
            let e = parse_constraint_expr(src).unwrap();
            assert_eq!(parse_constraint_expr(&e.to_string()).unwrap(), e);
        }
    }
}
