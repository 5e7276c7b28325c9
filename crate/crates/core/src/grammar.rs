//! Textual action expressions.
//!
//! Canonical output looks like `click(x=0.500, y=0.500)`:
//!
//! ```text
//! expr   := name "(" [kwarg ("," kwarg)*] ")"
//! kwarg  := key "=" (number | string)
//! name   := [a-z][a-z_]*          key := same as name
//! number := ["-"] digit* "." digit{1,4}
//! string := '"' (char | '\"' | '\\')* '"'
//! ```
//!
//! The parser accepts arbitrary whitespace between tokens and one to four
//! decimals on numbers; the serializer always writes exactly three decimals,
//! one space after each comma and nothing else. Parsing is anchored: after
//! trimming, the input must be exactly one expression. [`extract_expression`]
//! is the lossy pre-pass for pulling an expression out of surrounding prose.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{format_milli, Action, ActionKind, ExtensionAction, NormPoint, ScrollDirection, TerminateStatus};

/// A number literal, held in units of 1e-4. Magnitudes saturate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub negative: bool,
    pub ten_thousandths: u64,
}

impl Decimal {
    /// Quantizes to the 0.001 grid if the value lies in `[0, 1]`.
    fn to_unit_milli(self) -> Option<u16> {
        if (self.negative && self.ten_thousandths > 0) || self.ten_thousandths > 10_000 {
            return None;
        }
        Some(((self.ten_thousandths + 5) / 10) as u16)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { "-" } else { "" };
        write!(f, "{sign}{}.{:04}", self.ten_thousandths / 10_000, self.ten_thousandths % 10_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgValue {
    Number(Decimal),
    Text(String),
}

/// The untyped parse tree of one expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionExpr {
    pub name: String,
    pub kwargs: Vec<(String, ArgValue)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Syntax,
    UnknownAction,
    Arguments,
    Range,
}

impl ErrorClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Syntax => "syntax",
            Self::UnknownAction => "unknown_action",
            Self::Arguments => "arguments",
            Self::Range => "range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown action `{name}`")]
    UnknownAction { name: String },
    #[error("bad arguments for `{action}`: {message}")]
    Arguments { action: String, message: String },
    #[error("`{action}` coordinate {key}={value} is outside [0, 1]")]
    Range { action: String, key: String, value: String },
}

impl ParseError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::Syntax { .. } => ErrorClass::Syntax,
            Self::UnknownAction { .. } => ErrorClass::UnknownAction,
            Self::Arguments { .. } => ErrorClass::Arguments,
            Self::Range { .. } => ErrorClass::Range,
        }
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("invalid action name `{0}`")]
    InvalidName(String),
    #[error("`{0}` is a built-in action kind")]
    Builtin(String),
    #[error("action kind `{0}` registered twice")]
    Duplicate(String),
    #[error("parameter `{param}` of `{action}` is invalid or repeated")]
    BadParam { action: String, param: String },
    #[error("reading registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing registry {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Declares an extra action kind. `point` kinds take `x`/`y` coordinates;
/// every other parameter is a quoted string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionDef {
    pub name: String,
    #[serde(default)]
    pub point: bool,
    #[serde(default)]
    pub params: Vec<String>,
}

/// The set of action kinds the parser accepts beyond the built-ins.
#[derive(Debug, Clone, Default)]
pub struct ActionRegistry {
    extensions: BTreeMap<String, ExtensionDef>,
    open: bool,
}

impl ActionRegistry {
    /// Only the nine built-in kinds.
    pub fn builtin() -> Self {
        Self::default()
    }

    /// Accepts any well-formed name, inferring the payload from the
    /// arguments. Used for reading canonical files that may hold kinds
    /// registered by another run.
    pub fn open() -> Self {
        Self {
            extensions: BTreeMap::new(),
            open: true,
        }
    }

    pub fn register(&mut self, def: ExtensionDef) -> Result<(), RegistryError> {
        if !is_identifier(&def.name) {
            return Err(RegistryError::InvalidName(def.name));
        }
        if ActionKind::from_name(&def.name).is_some() {
            return Err(RegistryError::Builtin(def.name));
        }
        if self.extensions.contains_key(&def.name) {
            return Err(RegistryError::Duplicate(def.name));
        }
        let mut seen = HashSet::new();
        for p in &def.params {
            let reserved = def.point && (p == "x" || p == "y");
            if !is_identifier(p) || reserved || !seen.insert(p.as_str()) {
                return Err(RegistryError::BadParam {
                    action: def.name.clone(),
                    param: p.clone(),
                });
            }
        }
        self.extensions.insert(def.name.clone(), def);
        Ok(())
    }

    /// Loads a JSON array of [`ExtensionDef`] on top of the built-ins.
    pub fn from_json_file(path: &Path) -> Result<Self, RegistryError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: shown.clone(),
            source,
        })?;
        let defs: Vec<ExtensionDef> =
            serde_json::from_str(&text).map_err(|source| RegistryError::Json { path: shown, source })?;
        let mut reg = Self::builtin();
        for s in defs {
            reg.register(s)?;
        }
        Ok(reg)
    }

    pub fn get(&self, name: &str) -> Option<&ExtensionDef> {
        self.extensions.get(name)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b'a'..=b'z')) && bytes.all(|b| b.is_ascii_lowercase() || b == b'_')
}

/// Writes the canonical text form of an action.
pub fn serialize_action(a: &Action) -> String {
    let mut out = String::new();
    out.push_str(a.kind_name());
    out.push('(');
    let mut args: Vec<String> = Vec::new();
    if let Some(p) = a.point() {
        args.push(format!("x={}", format_milli(p.x_milli())));
        args.push(format!("y={}", format_milli(p.y_milli())));
    }
    match a {
        Action::Type(text) => args.push(format!("text={}", quote(text))),
        Action::Scroll(d) => args.push(format!("direction={}", quote(d.as_str()))),
        Action::OpenApp(name) => args.push(format!("name={}", quote(name))),
        Action::Terminate(s) => args.push(format!("status={}", quote(s.as_str()))),
        Action::Extension(e) => {
            for (k, v) in &e.args {
                args.push(format!("{k}={}", quote(v)));
            }
        }
        _ => {}
    }
    out.push_str(&args.join(", "));
    out.push(')');
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            q.push('\\');
        }
        q.push(c);
    }
    q.push('"');
    q
}

/// Parses with the built-in action kinds only.
pub fn parse_action(s: &str) -> Result<Action, ParseError> {
    parse_action_with(s, &ActionRegistry::builtin())
}

pub fn parse_action_with(s: &str, registry: &ActionRegistry) -> Result<Action, ParseError> {
    let expr = parse_expr(s)?;
    expr_to_action(expr, registry)
}

/// Parses the surface syntax without interpreting the action name.
pub fn parse_expr(s: &str) -> Result<ActionExpr, ParseError> {
    Lexer::new(s).expr()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn describe_here(&self) -> String {
        match self.peek() {
            Some(c) => format!("`{}`", c.escape_debug()),
            None => "end of input".to_string(),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.bump();
            Ok(())
        } else {
            self.err(self.pos, format!("expected `{want}`, found {}", self.describe_here()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let start = self.pos;
        match self.peek() {
            Some('a'..='z') => {}
            _ => return self.err(start, format!("expected {what}, found {}", self.describe_here())),
        }
        while matches!(self.peek(), Some('a'..='z' | '_')) {
            self.bump();
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn expr(&mut self) -> Result<ActionExpr, ParseError> {
        self.skip_ws();
        let name = self.ident("action name")?;
        self.skip_ws();
        self.expect('(')?;
        let mut kwargs = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.bump();
        } else {
            loop {
                self.skip_ws();
                let key = self.ident("argument name")?;
                self.skip_ws();
                self.expect('=')?;
                self.skip_ws();
                let value = self.value()?;
                kwargs.push((key, value));
                self.skip_ws();
                match self.peek() {
                    Some(',') => {
                        self.bump();
                    }
                    Some(')') => {
                        self.bump();
                        break;
                    }
                    _ => return self.err(self.pos, format!("expected `,` or `)`, found {}", self.describe_here())),
                }
            }
        }
        self.skip_ws();
        if self.pos < self.src.len() {
            return self.err(self.pos, "trailing input after expression");
        }
        Ok(ActionExpr { name, kwargs })
    }

    fn value(&mut self) -> Result<ArgValue, ParseError> {
        match self.peek() {
            Some('"') => self.string().map(ArgValue::Text),
            Some('-' | '.' | '0'..='9') => self.number().map(ArgValue::Number),
            _ => self.err(self.pos, format!("expected number or string, found {}", self.describe_here())),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.err(start, "unterminated string"),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    _ => return self.err(self.pos.saturating_sub(1), "invalid escape (only \\\" and \\\\ are allowed)"),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Decimal, ParseError> {
        let start = self.pos;
        let negative = self.peek() == Some('-');
        if negative {
            self.bump();
        }
        let mut whole: u64 = 0;
        while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
            whole = whole.saturating_mul(10).saturating_add(u64::from(d));
            self.bump();
        }
        if self.peek() != Some('.') {
            return self.err(self.pos, "expected `.` and 1-4 decimal places");
        }
        self.bump();
        let frac_start = self.pos;
        let mut frac: u64 = 0;
        while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
            frac = frac * 10 + u64::from(d);
            self.bump();
            if self.pos - frac_start > 4 {
                return self.err(start, "more than 4 decimal places");
            }
        }
        let places = self.pos - frac_start;
        if places == 0 {
            return self.err(self.pos, "expected 1-4 decimal places");
        }
        let frac = frac * 10u64.pow(4 - places as u32);
        Ok(Decimal {
            negative,
            ten_thousandths: whole.saturating_mul(10_000).saturating_add(frac),
        })
    }
}

struct Args {
    action: String,
    kwargs: Vec<(String, ArgValue)>,
}

impl Args {
    fn new(expr: ActionExpr) -> Result<Self, ParseError> {
        let mut seen = HashSet::new();
        for (k, _) in &expr.kwargs {
            if !seen.insert(k.as_str()) {
                return Err(ParseError::Arguments {
                    action: expr.name.clone(),
                    message: format!("duplicate argument `{k}`"),
                });
            }
        }
        Ok(Self {
            action: expr.name,
            kwargs: expr.kwargs,
        })
    }

    fn bad<T>(&self, message: String) -> Result<T, ParseError> {
        Err(ParseError::Arguments {
            action: self.action.clone(),
            message,
        })
    }

    fn take(&mut self, key: &str) -> Result<ArgValue, ParseError> {
        match self.kwargs.iter().position(|(k, _)| k == key) {
            Some(i) => Ok(self.kwargs.remove(i).1),
            None => self.bad(format!("missing argument `{key}`")),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.kwargs.iter().any(|(k, _)| k == key)
    }

    fn coord(&mut self, key: &str) -> Result<u16, ParseError> {
        match self.take(key)? {
            ArgValue::Number(d) => d.to_unit_milli().ok_or_else(|| ParseError::Range {
                action: self.action.clone(),
                key: key.to_string(),
                value: d.to_string(),
            }),
            ArgValue::Text(_) => self.bad(format!("`{key}` must be a number")),
        }
    }

    fn point(&mut self) -> Result<NormPoint, ParseError> {
        // Check presence of both before range so a missing `y` is reported
        // as an arity problem even when `x` is also out of range.
        for key in ["x", "y"] {
            if !self.has(key) {
                return self.bad(format!("missing argument `{key}`"));
            }
        }
        let x = self.coord("x")?;
        let y = self.coord("y")?;
        Ok(NormPoint::from_milli(u32::from(x), u32::from(y)).expect("coord() bounds to [0, 1000]"))
    }

    fn text(&mut self, key: &str) -> Result<String, ParseError> {
        match self.take(key)? {
            ArgValue::Text(s) => Ok(s),
            ArgValue::Number(_) => self.bad(format!("`{key}` must be a string")),
        }
    }

    fn finish<T>(self, value: T) -> Result<T, ParseError> {
        match self.kwargs.first() {
            Some((k, _)) => self.bad(format!("unexpected argument `{k}`")),
            None => Ok(value),
        }
    }
}

fn expr_to_action(expr: ActionExpr, registry: &ActionRegistry) -> Result<Action, ParseError> {
    let Some(kind) = ActionKind::from_name(&expr.name) else {
        return extension_action(expr, registry);
    };
    let mut args = Args::new(expr)?;
    let action = match kind {
        ActionKind::Click => Action::Click(args.point()?),
        ActionKind::LongPress => Action::LongPress(args.point()?),
        ActionKind::Type => Action::Type(args.text("text")?),
        ActionKind::Scroll => {
            let d = args.text("direction")?;
            match ScrollDirection::from_name(&d) {
                Some(d) => Action::Scroll(d),
                None => return args.bad(format!("unknown scroll direction {d:?}")),
            }
        }
        ActionKind::OpenApp => Action::OpenApp(args.text("name")?),
        ActionKind::NavigateBack => Action::NavigateBack,
        ActionKind::NavigateHome => Action::NavigateHome,
        ActionKind::Wait => Action::Wait,
        ActionKind::Terminate => {
            let s = args.text("status")?;
            match TerminateStatus::from_name(&s) {
                Some(s) => Action::Terminate(s),
                None => return args.bad(format!("unknown terminate status {s:?}")),
            }
        }
    };
    args.finish(action)
}

fn extension_action(expr: ActionExpr, registry: &ActionRegistry) -> Result<Action, ParseError> {
    if let Some(params) = registry.get(&expr.name) {
        let params = params.clone();
        let mut args = Args::new(expr)?;
        let point = if params.point { Some(args.point()?) } else { None };
        let mut values = Vec::with_capacity(params.params.len());
        for p in &params.params {
            values.push((p.clone(), args.text(p)?));
        }
        return args.finish(Action::Extension(ExtensionAction {
            name: params.name,
            point,
            args: values,
        }));
    }
    if !registry.open {
        return Err(ParseError::UnknownAction { name: expr.name });
    }
    let mut args = Args::new(expr)?;
    let point = if args.has("x") || args.has("y") {
        Some(args.point()?)
    } else {
        None
    };
    let mut values = Vec::new();
    for (k, v) in std::mem::take(&mut args.kwargs) {
        match v {
            ArgValue::Text(s) => values.push((k, s)),
            ArgValue::Number(_) => return args.bad(format!("`{k}` must be a string")),
        }
    }
    Ok(Action::Extension(ExtensionAction {
        name: args.action,
        point,
        args: values,
    }))
}

/// Finds the first `name(...)` substring with balanced parentheses,
/// skipping over quoted strings. Returns `None` when nothing qualifies.
pub fn extract_expression(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let at_word_start = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        if at_word_start && bytes[i].is_ascii_lowercase() {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j] == b'_') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'(' {
                if let Some(end) = balanced_close(bytes, j) {
                    return Some(&text[i..=end]);
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
    None
}

fn balanced_close(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut k = open;
    while k < bytes.len() {
        let b = bytes[k];
        if in_string {
            match b {
                b'\\' => k += 1,
                b'"' => in_string = false,
                _ => {}
            }
        } else {
            match b {
                b'"' => in_string = true,
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(k);
                    }
                }
                _ => {}
            }
        }
        k += 1;
    }
    None
}

/// Parses raw model output, optionally running [`extract_expression`] first.
pub fn parse_model_output(raw: &str, extract: bool, registry: &ActionRegistry) -> Result<Action, ParseError> {
    let candidate = if extract {
        extract_expression(raw).unwrap_or(raw)
    } else {
        raw
    };
    parse_action_with(candidate, registry)
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&serialize_action(self))
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_action_with(&s, &ActionRegistry::open()).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: u32, y: u32) -> NormPoint {
        NormPoint::from_milli(x, y).unwrap()
    }

    #[test]
    fn serialize_examples() {
        assert_eq!(serialize_action(&Action::Click(pt(500, 500))), "click(x=0.500, y=0.500)");
        assert_eq!(
            serialize_action(&Action::Type("hello \"world\"".into())),
            r#"type(text="hello \"world\"")"#
        );
        assert_eq!(
            serialize_action(&Action::Terminate(TerminateStatus::Success)),
            r#"terminate(status="success")"#
        );
        assert_eq!(serialize_action(&Action::NavigateBack), "navigate_back()");
        assert_eq!(serialize_action(&Action::LongPress(pt(1000, 0))), "long_press(x=1.000, y=0.000)");
        assert_eq!(serialize_action(&Action::Type(r"a\b".into())), r#"type(text="a\\b")"#);
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_action("click(x=0.5, y=0.25)").unwrap(), Action::Click(pt(500, 250)));
        let e = parse_action("click(x=0.5)").unwrap_err();
        assert_eq!(e.class(), ErrorClass::Arguments);
        assert!(e.to_string().contains("`y`"), "{e}");
        assert_eq!(
            parse_action(r#"scroll(direction="down")"#).unwrap(),
            Action::Scroll(ScrollDirection::Down)
        );
        assert_eq!(parse_action("click(x=1.2, y=0.1)").unwrap_err().class(), ErrorClass::Range);
    }

    #[test]
    fn lenient_whitespace_and_decimals() {
        let a = parse_action("  click ( x = .1234 ,y=0.9996 )\n").unwrap();
        assert_eq!(a, Action::Click(pt(123, 1000)));
        assert_eq!(parse_action("wait( )").unwrap(), Action::Wait);
        assert_eq!(parse_action(r#"type(text="")"#).unwrap(), Action::Type(String::new()));
    }

    #[test]
    fn error_classes() {
        use ErrorClass::*;
        let cases = [
            ("", Syntax),
            ("click", Syntax),
            ("click(x=0.5, y=0.5", Syntax),
            ("click(x=0.5, y=0.5) extra", Syntax),
            ("click(x=1, y=0.5)", Syntax),
            ("click(x=0.12345, y=0.5)", Syntax),
            ("click(x=0., y=0.5)", Syntax),
            ("click(x=0.5,, y=0.5)", Syntax),
            ("click(x=0.5, y=0.5,)", Syntax),
            (r#"type(text="unterminated)"#, Syntax),
            (r#"type(text="bad \n escape")"#, Syntax),
            ("Click(x=0.5, y=0.5)", Syntax),
            ("swipe(x=0.5, y=0.5)", UnknownAction),
            ("navigate_back(x=0.1, y=0.1)", Arguments),
            ("click(x=0.5, y=0.5, y=0.5)", Arguments),
            (r#"click(x="0.5", y=0.5)"#, Arguments),
            (r#"scroll(direction="sideways")"#, Arguments),
            (r#"terminate(status="done")"#, Arguments),
            ("type(text=0.5)", Arguments),
            ("click(x=-0.1, y=0.5)", Range),
            ("click(x=0.5, y=1.0001)", Range),
            ("click(x=99999999999999999999999.0, y=0.5)", Range),
        ];
        for (src, class) in cases {
            let got = parse_action(src);
            assert_eq!(got.as_ref().map_err(|e| e.class()).err(), Some(class), "{src:?} -> {got:?}");
        }
        assert_eq!(parse_action("click(x=-0.0, y=0.0)").unwrap(), Action::Click(pt(0, 0)));
    }

    #[test]
    fn syntax_offsets_point_at_the_problem() {
        match parse_action("click(x=0.5 y=0.5)").unwrap_err() {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 12),
            e => panic!("{e}"),
        }
        match parse_action("  wait() ;").unwrap_err() {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 9),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_expression("I will click(x=0.5, y=0.5) now"), Some("click(x=0.5, y=0.5)"));
        assert_eq!(
            extract_expression(r#"Sure: type(text="a) b") done"#),
            Some(r#"type(text="a) b")"#)
        );
        assert_eq!(extract_expression("no expression here"), None);
        assert_eq!(extract_expression("unbalanced click(x=0.5"), None);
        let reg = ActionRegistry::builtin();
        assert_eq!(
            parse_model_output("I will click(x=0.5, y=0.5) now", true, &reg).unwrap(),
            Action::Click(pt(500, 500))
        );
        assert!(parse_model_output("I will click(x=0.5, y=0.5) now", false, &reg).is_err());
    }

    #[test]
    fn registry_extensions() {
        let mut reg = ActionRegistry::builtin();
        reg.register(ExtensionDef {
            name: "drag".into(),
            point: true,
            params: vec!["to".into()],
        })
        .unwrap();
        assert!(reg.register(ExtensionDef { name: "click".into(), point: false, params: vec![] }).is_err());
        assert!(reg.register(ExtensionDef { name: "Bad".into(), point: false, params: vec![] }).is_err());
        assert!(reg
            .register(ExtensionDef { name: "pinch".into(), point: true, params: vec!["x".into()] })
            .is_err());

        let src = r#"drag(x=0.100, y=0.200, to="bottom")"#;
        let a = parse_action_with(src, &reg).unwrap();
        assert_eq!(a.kind_name(), "drag");
        assert_eq!(a.point(), Some(pt(100, 200)));
        assert_eq!(serialize_action(&a), src);
        assert_eq!(parse_action(src).unwrap_err().class(), ErrorClass::UnknownAction);
        assert_eq!(parse_action_with("drag(x=0.1, y=0.2)", &reg).unwrap_err().class(), ErrorClass::Arguments);

        let open = parse_action_with(src, &ActionRegistry::open()).unwrap();
        assert_eq!(open, a);
    }

    #[test]
    fn action_json_is_canonical_string() {
        let a = Action::Type("hi".into());
        assert_eq!(serde_json::to_string(&a).unwrap(), r#""type(text=\"hi\")""#);
        let back: Action = serde_json::from_str(r#""type(text=\"hi\")""#).unwrap();
        assert_eq!(back, a);
    }

    pub(crate) fn arb_action() -> impl Strategy<Value = Action> {
        let point = (0u32..=1000, 0u32..=1000).prop_map(|(x, y)| pt(x, y));
        prop_oneof![
            point.clone().prop_map(Action::Click),
            point.prop_map(Action::LongPress),
            any::<String>().prop_map(Action::Type),
            prop::sample::select(ScrollDirection::ALL.to_vec()).prop_map(Action::Scroll),
            any::<String>().prop_map(Action::OpenApp),
            Just(Action::NavigateBack),
            Just(Action::NavigateHome),
            Just(Action::Wait),
            prop::sample::select(vec![TerminateStatus::Success, TerminateStatus::Failure]).prop_map(Action::Terminate),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(a in arb_action()) {
            let s = serialize_action(&a);
            let back = parse_action(&s).unwrap();
            prop_assert_eq!(serialize_action(&back), s);
            prop_assert_eq!(back, a);
        }

        #[test]
        fn parser_is_total(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let s = String::from_utf8_lossy(&bytes);
            let _ = parse_action(&s);
            let _ = parse_model_output(&s, true, &ActionRegistry::open());
        }
    }
}
