//! Ruleset text syntax.
//!
//! ```text
//! ruleset := incl { "or" incl } [ "except" incl { "or" incl } ]
//! incl    := "(" prop { "and" prop } ")"
//! prop    := name ("=" | "!=") token | name ("<=" | ">=") decimal
//! ```
//!
//! `(false)` stands for an empty inclusion list. Names and tokens are bare
//! words, or double-quoted strings (with `\"` and `\\` escapes) when they
//! contain blanks, parentheses, quotes or operator characters.

use std::fmt;

use super::{Feature, ModelError, Operator, Proposition, Rule, RuleSet, Value};

const KEYWORDS: [&str; 4] = ["and", "or", "except", "false"];

fn is_special(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '"' | '=' | '!' | '<' | '>' | '\\')
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || s.chars().any(is_special) || KEYWORDS.contains(&s)
}

fn write_quoted(f: &mut dyn fmt::Write, s: &str) -> fmt::Result {
    if !needs_quotes(s) {
        return f.write_str(s);
    }
    f.write_char('"')?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_char('\\')?;
        }
        f.write_char(c)?;
    }
    f.write_char('"')
}

/// Writes a feature name, quoting it if necessary.
pub fn write_name(f: &mut dyn fmt::Write, name: &str) -> fmt::Result {
    write_quoted(f, name)
}

/// Writes a nominal token, quoting it if necessary.
pub fn write_token(f: &mut dyn fmt::Write, token: &str) -> fmt::Result {
    write_quoted(f, token)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    LParen,
    RParen,
    Op(Operator),
    Word { text: String, quoted: bool },
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

fn syntax(position: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        position,
        message: message.into(),
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ModelError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let tok = match c {
            '(' => {
                chars.next();
                Tok::LParen
            }
            ')' => {
                chars.next();
                Tok::RParen
            }
            '=' => {
                chars.next();
                Tok::Op(Operator::Equals)
            }
            '!' | '<' | '>' => {
                chars.next();
                match chars.peek() {
                    Some(&(_, '=')) => {
                        chars.next();
                        Tok::Op(match c {
                            '!' => Operator::NotEquals,
                            '<' => Operator::LessOrEqual,
                            _ => Operator::GreaterOrEqual,
                        })
                    }
                    _ => return Err(syntax(pos, format!("expected `{c}=`"))),
                }
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(syntax(pos, "unterminated quoted string")),
                        Some((_, '"')) => break,
                        Some((epos, '\\')) => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => s.push(e),
                            _ => return Err(syntax(epos, "invalid escape")),
                        },
                        Some((_, ch)) => s.push(ch),
                    }
                }
                Tok::Word {
                    text: s,
                    quoted: true,
                }
            }
            '\\' => return Err(syntax(pos, "unexpected `\\`")),
            _ => {
                let mut s = String::new();
                while let Some(&(_, ch)) = chars.peek() {
                    if is_special(ch) {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                Tok::Word {
                    text: s,
                    quoted: false,
                }
            }
        };
        out.push(Token { tok, pos });
    }
    Ok(out)
}

pub(crate) struct Parser<'a> {
    toks: Vec<Token>,
    at: usize,
    end: usize,
    schema: &'a [Feature],
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &str, schema: &'a [Feature]) -> Result<Self, ModelError> {
        Ok(Parser {
            toks: tokenize(text)?,
            at: 0,
            end: text.len(),
            schema,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.at)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub(crate) fn position(&self) -> usize {
        self.pos()
    }

    pub(crate) fn next_is_keyword(&self, kw: &str) -> bool {
        self.is_keyword(kw)
    }

    pub(crate) fn eat_keyword_pub(&mut self, kw: &str) -> bool {
        self.eat_keyword(kw)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Word { text, quoted: false }, .. }) if text == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ModelError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.at += 1;
                Ok(())
            }
            _ => Err(syntax(self.pos(), format!("expected {what}"))),
        }
    }

    pub(crate) fn word(&mut self, what: &str) -> Result<(String, bool, usize), ModelError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Word { text, quoted },
                pos,
            }) => {
                if !quoted && KEYWORDS.contains(&text.as_str()) {
                    return Err(syntax(pos, format!("expected {what}, found keyword `{text}`")));
                }
                self.at += 1;
                Ok((text, quoted, pos))
            }
            _ => Err(syntax(self.pos(), format!("expected {what}"))),
        }
    }

    pub(crate) fn operator(&mut self) -> Option<Operator> {
        match self.peek() {
            Some(Token { tok: Tok::Op(op), .. }) => {
                let op = *op;
                self.at += 1;
                Some(op)
            }
            _ => None,
        }
    }

    pub(crate) fn feature(&self, name: &str) -> Result<&'a Feature, ModelError> {
        self.schema
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))
    }

    pub(crate) fn value_for(
        &mut self,
        feature: &Feature,
        op: Operator,
    ) -> Result<Value, ModelError> {
        if feature.kind != op.kind() {
            return Err(ModelError::KindMismatch {
                feature: feature.name.clone(),
                op,
                kind: feature.kind,
            });
        }
        let (text, quoted, pos) = self.word("a value")?;
        match op.kind() {
            super::FeatureKind::Nominal => Ok(Value::Nominal(text)),
            super::FeatureKind::Numeric => {
                let x: f64 = if quoted {
                    return Err(syntax(pos, "expected a decimal, found a quoted string"));
                } else {
                    text.parse()
                        .map_err(|_| syntax(pos, format!("`{text}` is not a decimal")))?
                };
                if !x.is_finite() {
                    return Err(syntax(pos, format!("`{text}` is not a finite decimal")));
                }
                Ok(Value::numeric(x))
            }
        }
    }

    fn proposition(&mut self) -> Result<Proposition, ModelError> {
        let (name, _, _) = self.word("a feature name")?;
        let op_pos = self.pos();
        let op = self
            .operator()
            .ok_or_else(|| syntax(op_pos, "expected one of `=`, `!=`, `<=`, `>=`"))?;
        let feature = self.feature(&name)?;
        let value = self.value_for(feature, op)?;
        Proposition::new(name, op, value)
    }

    /// Parses a parenthesized conjunction. Returns `None` for `(false)`.
    fn conjunction(&mut self) -> Result<Option<Rule>, ModelError> {
        let start = self.pos();
        self.expect(Tok::LParen, "`(`")?;
        if self.eat_keyword("false") {
            self.expect(Tok::RParen, "`)`")?;
            return Ok(None);
        }
        let mut props = vec![self.proposition()?];
        while self.eat_keyword("and") {
            props.push(self.proposition()?);
        }
        self.expect(Tok::RParen, "`and` or `)`")?;
        Rule::new(props)
            .map(Some)
            .map_err(|e| match e {
                ModelError::InvalidRule(m) => syntax(start, m),
                other => other,
            })
    }

    fn disjunction(&mut self, allow_false: bool) -> Result<Vec<Rule>, ModelError> {
        let mut rules = Vec::new();
        let first_pos = self.pos();
        match self.conjunction()? {
            Some(r) => rules.push(r),
            None if allow_false => {
                if self.is_keyword("or") {
                    return Err(syntax(self.pos(), "`(false)` cannot be combined with `or`"));
                }
                return Ok(rules);
            }
            None => return Err(syntax(first_pos, "`(false)` is only allowed before `except`")),
        }
        while self.eat_keyword("or") {
            let pos = self.pos();
            match self.conjunction()? {
                Some(r) => rules.push(r),
                None => return Err(syntax(pos, "`(false)` cannot be combined with `or`")),
            }
        }
        Ok(rules)
    }

    fn ruleset(&mut self) -> Result<RuleSet, ModelError> {
        let inclusions = self.disjunction(true)?;
        let exclusions = if self.eat_keyword("except") {
            self.disjunction(false)?
        } else {
            Vec::new()
        };
        if !self.at_end() {
            return Err(syntax(self.pos(), "unexpected trailing input"));
        }
        Ok(RuleSet::new(inclusions, exclusions))
    }
}

pub(crate) fn parse_ruleset(text: &str, schema: &[Feature]) -> Result<RuleSet, ModelError> {
    Parser::new(text, schema)?.ruleset()
}

/// Parses a single rule, with or without the surrounding parentheses.
pub fn parse_rule(text: &str, schema: &[Feature]) -> Result<Rule, ModelError> {
    let trimmed = text.trim_start();
    let mut p = Parser::new(text, schema)?;
    let rule = if trimmed.starts_with('(') {
        match p.conjunction()? {
            Some(r) => r,
            None => return Err(syntax(0, "`(false)` is not a rule")),
        }
    } else {
        let mut props = vec![p.proposition()?];
        while p.eat_keyword("and") {
            props.push(p.proposition()?);
        }
        Rule::new(props).map_err(|e| match e {
            ModelError::InvalidRule(m) => syntax(0, m),
            other => other,
        })?
    };
    if !p.at_end() {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureKind;

    fn schema() -> Vec<Feature> {
        vec![
            Feature::new("lang", FeatureKind::Nominal),
            Feature::new("size", FeatureKind::Numeric),
            Feature::new("my feature", FeatureKind::Nominal),
        ]
    }

    #[test]
    fn parses_inclusion_rule() {
        let rs = parse_ruleset("(lang = java and size <= 5)", &schema()).unwrap();
        assert_eq!(rs.inclusions.len(), 1);
        assert_eq!(rs.inclusions[0].len(), 2);
        assert!(rs.exclusions.is_empty());
    }

    #[test]
    fn parses_exception() {
        let rs = parse_ruleset("(lang = java) except (size >= 9)", &schema()).unwrap();
        assert_eq!((rs.inclusions.len(), rs.exclusions.len()), (1, 1));
    }

    #[test]
    fn kind_mismatch_names_feature() {
        let err = parse_ruleset("(size = java)", &schema()).unwrap_err();
        match err {
            ModelError::KindMismatch { feature, .. } => assert_eq!(feature, "size"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(
            parse_ruleset("(colour = red)", &schema()),
            Err(ModelError::UnknownFeature(f)) if f == "colour"
        ));
        assert!(matches!(
            parse_ruleset("(lang = java", &schema()),
            Err(ModelError::Syntax { position: 12, .. })
        ));
        assert!(matches!(
            parse_ruleset("(size <= big)", &schema()),
            Err(ModelError::Syntax { position: 9, .. })
        ));
        assert!(matches!(
            parse_ruleset("(lang = java) (lang = c)", &schema()),
            Err(ModelError::Syntax { position: 14, .. })
        ));
        assert!(matches!(
            parse_ruleset("(size <= inf)", &schema()),
            Err(ModelError::Syntax { .. })
        ));
        assert!(matches!(
            parse_ruleset("(lang = a and lang = b)", &schema()),
            Err(ModelError::Syntax { position: 0, .. })
        ));
    }

    #[test]
    fn empty_and_exclusion_only() {
        assert_eq!(parse_ruleset("(false)", &schema()).unwrap(), RuleSet::empty());
        assert_eq!(RuleSet::empty().to_string(), "(false)");
        let rs = parse_ruleset("(false) except (size >= 3)", &schema()).unwrap();
        assert!(rs.inclusions.is_empty());
        assert_eq!(rs.to_string(), "(false) except (size >= 3)");
        assert!(parse_ruleset("(false) or (size >= 3)", &schema()).is_err());
        assert!(parse_ruleset("(size >= 3) except (false)", &schema()).is_err());
    }

    #[test]
    fn quoting_round_trip() {
        let text = r#"("my feature" = "a b" and lang = "or") or (lang != "x\"y")"#;
        let rs = parse_ruleset(text, &schema()).unwrap();
        let printed = rs.to_string();
        assert_eq!(parse_ruleset(&printed, &schema()).unwrap(), rs);
        assert!(printed.contains(r#""my feature" = "a b""#));
    }

    #[test]
    fn rule_without_parens() {
        let r = parse_rule("size <= 5 and lang = java", &schema()).unwrap();
        assert_eq!(r.to_string(), "(lang = java and size <= 5)");
        let r2 = parse_rule("(size <= 5)", &schema()).unwrap();
        assert_eq!(r2.len(), 1);
    }
}
