//! Expressions for computed features: `name := expr`.
//!
//! ```text
//! expr  := 'if' expr 'then' expr 'else' expr | cmp
//! cmp   := sum [ ('=' | '!=' | '<' | '<=' | '>' | '>=') sum ]
//! sum   := prod { ('+' | '-') prod }
//! prod  := unary { ('*' | '/') unary }
//! unary := '-' unary | atom
//! atom  := number | "string" | true | false | feature | `feature` | '(' expr ')'
//! ```
//!
//! Numeric faults (division by zero, overflow) evaluate to NaN, on which every
//! numeric proposition is false.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Column, Dataset, Feature, FeatureKind, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("feature `{0}` already exists")]
    NameCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Num,
    Str,
    Bool,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Num => "number",
            Type::Str => "string",
            Type::Bool => "boolean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Bool(bool),
    Feature(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Sym(&'static str),
}

fn syntax(position: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        for sym in ["<=", ">=", "!=", "=", "<", ">", "+", "-", "*", "/", "(", ")"] {
            if text[pos..].starts_with(sym) {
                out.push((Tok::Sym(sym), pos));
                i += sym.chars().count();
                break;
            }
        }
        if out.last().is_some_and(|(_, p)| *p == pos) {
            continue;
        }
        if c == '"' || c == '`' {
            let mut s = String::new();
            let mut j = i + 1;
            let mut closed = false;
            while j < chars.len() {
                let ch = chars[j].1;
                if ch == '\\' && j + 1 < chars.len() {
                    s.push(chars[j + 1].1);
                    j += 2;
                    continue;
                }
                if ch == c {
                    closed = true;
                    break;
                }
                s.push(ch);
                j += 1;
            }
            if !closed {
                return Err(syntax(pos, "unterminated quote"));
            }
            out.push((if c == '"' { Tok::Str(s) } else { Tok::Ident(s) }, pos));
            i = j + 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < chars.len()
                && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '.')
            {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |x| x.0);
            let s = &text[pos..end];
            let x: f64 = s
                .parse()
                .map_err(|_| syntax(pos, format!("`{s}` is not a number")))?;
            out.push((Tok::Num(x), pos));
            i = j;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_alphanumeric() || "_.:".contains(chars[j].1)) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |x| x.0);
            out.push((Tok::Ident(text[pos..end].to_string()), pos));
            i = j;
            continue;
        }
        return Err(syntax(pos, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.1)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ExprError> {
        if self.keyword(kw) {
            self.at += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{kw}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        if self.keyword("if") {
            self.at += 1;
            let c = self.expr()?;
            self.expect_kw("then")?;
            let a = self.expr()?;
            self.expect_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.sum()?;
        let ops = [
            ("<=", BinOp::Le),
            (">=", BinOp::Ge),
            ("!=", BinOp::Ne),
            ("=", BinOp::Eq),
            ("<", BinOp::Lt),
            (">", BinOp::Gt),
        ];
        for (s, op) in ops {
            if self.sym(s) {
                let rhs = self.sum()?;
                return Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)));
            }
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.prod()?;
        loop {
            let op = if self.sym("+") {
                BinOp::Add
            } else if self.sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.prod()?));
        }
    }

    fn prod(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.sym("*") {
                BinOp::Mul
            } else if self.sym("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.sym("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        if self.sym("(") {
            let e = self.expr()?;
            if !self.sym(")") {
                return Err(syntax(self.pos(), "expected `)`"));
            }
            return Ok(e);
        }
        let tok = self.peek().cloned();
        self.at += 1;
        match tok {
            Some(Tok::Num(x)) => Ok(Expr::Num(x)),
            Some(Tok::Str(s)) => Ok(Expr::Str(s)),
            Some(Tok::Ident(s)) => match s.as_str() {
                "true" => Ok(Expr::Bool(true)),
                "false" => Ok(Expr::Bool(false)),
                "if" | "then" | "else" => Err(syntax(pos, format!("unexpected `{s}`"))),
                _ => Ok(Expr::Feature(s)),
            },
            _ => Err(syntax(pos, "expected a value")),
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let mut p = Parser {
            toks: lex(text)?,
            at: 0,
            end: text.len(),
        };
        let e = p.expr()?;
        if p.at < p.toks.len() {
            return Err(syntax(p.pos(), "unexpected trailing input"));
        }
        Ok(e)
    }

    /// Static type against a schema.
    pub fn check(&self, schema: &[Feature]) -> Result<Type, ExprError> {
        Ok(match self {
            Expr::Num(_) => Type::Num,
            Expr::Str(_) => Type::Str,
            Expr::Bool(_) => Type::Bool,
            Expr::Feature(name) => match schema.iter().find(|f| &f.name == name) {
                Some(f) if f.kind == FeatureKind::Numeric => Type::Num,
                Some(_) => Type::Str,
                None => return Err(ExprError::UnknownFeature(name.clone())),
            },
            Expr::Neg(e) => match e.check(schema)? {
                Type::Num => Type::Num,
                t => return Err(ExprError::Type(format!("cannot negate a {t}"))),
            },
            Expr::Bin(op, a, b) => {
                let (ta, tb) = (a.check(schema)?, b.check(schema)?);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        if ta != Type::Num || tb != Type::Num {
                            return Err(ExprError::Type(format!(
                                "arithmetic on {ta} and {tb}"
                            )));
                        }
                        Type::Num
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if ta != tb {
                            return Err(ExprError::Type(format!("comparing {ta} with {tb}")));
                        }
                        Type::Bool
                    }
                    _ => {
                        if ta != Type::Num || tb != Type::Num {
                            return Err(ExprError::Type(format!("ordering {ta} and {tb}")));
                        }
                        Type::Bool
                    }
                }
            }
            Expr::If(c, a, b) => {
                if c.check(schema)? != Type::Bool {
                    return Err(ExprError::Type("condition must be boolean".into()));
                }
                let (ta, tb) = (a.check(schema)?, b.check(schema)?);
                if ta != tb {
                    return Err(ExprError::Type(format!("branches are {ta} and {tb}")));
                }
                ta
            }
        })
    }

    fn eval(&self, data: &Dataset, row: usize) -> Val {
        match self {
            Expr::Num(x) => Val::Num(*x),
            Expr::Str(s) => Val::Str(s.clone()),
            Expr::Bool(b) => Val::Bool(*b),
            Expr::Feature(name) => {
                let f = data.feature_index(name).expect("type-checked");
                match data.column(f) {
                    Column::Numeric(c) => Val::Num(c[row]),
                    Column::Nominal { codes, dict } => Val::Str(dict[codes[row] as usize].clone()),
                }
            }
            Expr::Neg(e) => Val::Num(-e.eval(data, row).num()),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(data, row), b.eval(data, row));
                match op {
                    BinOp::Add => Val::Num(x.num() + y.num()),
                    BinOp::Sub => Val::Num(x.num() - y.num()),
                    BinOp::Mul => Val::Num(x.num() * y.num()),
                    BinOp::Div => {
                        let d = y.num();
                        Val::Num(if d == 0.0 { f64::NAN } else { x.num() / d })
                    }
                    BinOp::Eq => Val::Bool(x == y),
                    BinOp::Ne => Val::Bool(x != y && !x.is_nan() && !y.is_nan()),
                    BinOp::Lt => Val::Bool(x.num() < y.num()),
                    BinOp::Le => Val::Bool(x.num() <= y.num()),
                    BinOp::Gt => Val::Bool(x.num() > y.num()),
                    BinOp::Ge => Val::Bool(x.num() >= y.num()),
                }
            }
            Expr::If(c, a, b) => {
                if c.eval(data, row) == Val::Bool(true) {
                    a.eval(data, row)
                } else {
                    b.eval(data, row)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Num(f64),
    Str(String),
    Bool(bool),
}

impl Val {
    fn num(&self) -> f64 {
        match self {
            Val::Num(x) => *x,
            _ => f64::NAN,
        }
    }

    fn is_nan(&self) -> bool {
        matches!(self, Val::Num(x) if x.is_nan())
    }
}

/// A named expression materialized as a new column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ComputedFeature {
    pub name: String,
    pub source: String,
    #[serde(skip)]
    expr: Option<Expr>,
}

impl ComputedFeature {
    /// Parses `name := expr`.
    pub fn parse(text: &str) -> Result<ComputedFeature, ExprError> {
        let (name, source) = text
            .split_once(":=")
            .ok_or_else(|| syntax(0, "expected `name := expression`"))?;
        let name = name.trim().trim_matches('`').to_string();
        if name.is_empty() {
            return Err(syntax(0, "missing feature name"));
        }
        Self::new(name, source.trim())
    }

    pub fn new(name: impl Into<String>, source: &str) -> Result<ComputedFeature, ExprError> {
        let expr = Expr::parse(source)?;
        Ok(ComputedFeature {
            name: name.into(),
            source: source.to_string(),
            expr: Some(expr),
        })
    }

    pub fn expr(&self) -> &Expr {
        self.expr.as_ref().expect("parsed on construction")
    }

    /// Feature kind of the result: strings are nominal, numbers and booleans numeric.
    pub fn kind(&self, schema: &[Feature]) -> Result<FeatureKind, ExprError> {
        Ok(match self.expr().check(schema)? {
            Type::Str => FeatureKind::Nominal,
            Type::Num | Type::Bool => FeatureKind::Numeric,
        })
    }

    /// Type-checks and computes the column. Booleans become 1/0; numeric
    /// faults become NaN.
    pub fn materialize(&self, data: &Dataset) -> Result<(Feature, Vec<Value>), ExprError> {
        if data.feature_index(&self.name).is_some() {
            return Err(ExprError::NameCollision(self.name.clone()));
        }
        let kind = self.kind(data.features())?;
        let values = (0..data.len())
            .map(|row| match self.expr().eval(data, row) {
                Val::Num(x) if x.is_finite() => Value::numeric(x),
                Val::Num(_) => Value::Numeric(f64::NAN),
                Val::Bool(b) => Value::Numeric(if b { 1.0 } else { 0.0 }),
                Val::Str(s) => Value::Nominal(s),
            })
            .collect();
        Ok((Feature::new(self.name.clone(), kind), values))
    }

    /// A copy of `data` with this feature added.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset, crate::model::ModelError> {
        let (feature, values) = self
            .materialize(data)
            .map_err(|e| crate::model::ModelError::InvalidDataset(e.to_string()))?;
        data.with_computed_column(feature, values)
    }
}

impl fmt::Display for ComputedFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.name, self.source)
    }
}

impl From<ComputedFeature> for String {
    fn from(c: ComputedFeature) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for ComputedFeature {
    type Error = ExprError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        ComputedFeature::parse(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::RuleSet;

    #[test]
    fn arithmetic_and_conditional() {
        let d = fixtures::fig1();
        let cf = ComputedFeature::parse("density := size / 10").unwrap();
        let (f, vals) = cf.materialize(&d).unwrap();
        assert_eq!(f.kind, FeatureKind::Numeric);
        assert_eq!(vals[1], Value::Numeric(0.3));
        let cf = ComputedFeature::parse("flag := if lang = \"java\" then 1 else 0").unwrap();
        let (_, vals) = cf.materialize(&d).unwrap();
        assert_eq!(vals[0], Value::Numeric(1.0));
        assert_eq!(vals[2], Value::Numeric(0.0));
        let cf = ComputedFeature::parse("big := size >= 9").unwrap();
        assert_eq!(cf.kind(d.features()).unwrap(), FeatureKind::Numeric);
    }

    #[test]
    fn faults_match_nothing() {
        let d = fixtures::fig1();
        let cf = ComputedFeature::parse("bad := size / 0").unwrap();
        let d2 = cf.apply(&d).unwrap();
        for t in ["(bad <= 0)", "(bad >= 0)"] {
            let rs = RuleSet::parse(t, d2.features()).unwrap();
            assert_eq!(d2.match_bits(&rs).unwrap().count_ones(..), 0);
        }
    }

    #[test]
    fn static_errors() {
        let d = fixtures::fig1();
        let err = |t: &str| ComputedFeature::parse(t).unwrap().materialize(&d).unwrap_err();
        assert!(matches!(err("x := lang + 1"), ExprError::Type(_)));
        assert!(matches!(err("x := nope * 2"), ExprError::UnknownFeature(_)));
        assert!(matches!(err("size := 1"), ExprError::NameCollision(_)));
        assert!(matches!(err("x := if size then 1 else 2"), ExprError::Type(_)));
        assert!(ComputedFeature::parse("x := (1 + ").is_err());
    }
}
