use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::catcore::BaseType;

/// A base-typed constant.
///
/// Floats compare by `total_cmp`, so `NaN == NaN` and `-0.0 != 0.0`; this
/// keeps `Eq` and `Ord` lawful for use as map keys.
#[derive(Clone, Debug)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Literal {
    pub fn ty(&self) -> BaseType {
        match self {
            Literal::Int(_) => BaseType::Int,
            Literal::Float(_) => BaseType::Float,
            Literal::Str(_) => BaseType::String,
            Literal::Bool(_) => BaseType::Bool,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Literal::Int(_) => 0,
            Literal::Float(_) => 1,
            Literal::Str(_) => 2,
            Literal::Bool(_) => 3,
        }
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Literal {}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Literal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Literal::Int(a), Literal::Int(b)) => a.cmp(b),
            (Literal::Float(a), Literal::Float(b)) => a.total_cmp(b),
            (Literal::Str(a), Literal::Str(b)) => a.cmp(b),
            (Literal::Bool(a), Literal::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

/// Source-text form: strings quoted, floats always carry a `.` or exponent.
impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Str(s) => write_quoted(f, s),
        }
    }
}

fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

/// A cell value: a literal, a labelled null, or a function applied to
/// values at least one of which contains a null.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Lit(Literal),
    /// `label` excludes the leading `?`.
    Null { label: String, ty: BaseType },
    Term { func: String, args: Vec<Value> },
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Lit(Literal::Int(i))
    }

    pub fn float(x: f64) -> Value {
        Value::Lit(Literal::Float(x))
    }

    pub fn str(s: &str) -> Value {
        Value::Lit(Literal::Str(s.into()))
    }

    pub fn bool(b: bool) -> Value {
        Value::Lit(Literal::Bool(b))
    }

    pub fn null(label: &str, ty: BaseType) -> Value {
        Value::Null { label: label.into(), ty }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Value::Lit(l) => Some(l),
            _ => None,
        }
    }

    pub fn contains_null(&self) -> bool {
        match self {
            Value::Lit(_) => false,
            Value::Null { .. } => true,
            Value::Term { args, .. } => args.iter().any(Value::contains_null),
        }
    }
}

impl From<Literal> for Value {
    fn from(l: Literal) -> Self {
        Value::Lit(l)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Lit(l) => write!(f, "{l}"),
            Value::Null { label, .. } => write!(f, "?{label}"),
            Value::Term { func, args } => {
                write!(f, "{func}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn float_display_keeps_a_decimal_point() {
        assert_eq!(Literal::Float(1.0).to_string(), "1.0");
        assert_eq!(Literal::Float(1e-7).to_string(), "1e-7");
        assert_eq!(Literal::Float(-2.5).to_string(), "-2.5");
    }

    #[test]
    fn string_quoting() {
        assert_eq!(Literal::Str("a\"b\\c\n".into()).to_string(), r#""a\"b\\c\n""#);
    }

    #[test]
    fn total_float_order() {
        assert_eq!(Literal::Float(f64::NAN), Literal::Float(f64::NAN));
        assert_ne!(Literal::Float(0.0), Literal::Float(-0.0));
        assert_ne!(Literal::Int(1), Literal::Float(1.0));
    }

    #[test]
    fn term_display() {
        let t = Value::Term {
            func: "json_extract".into(),
            args: vec![Value::null("n1", BaseType::String), Value::str("encut")],
        };
        assert_eq!(t.to_string(), r#"json_extract(?n1, "encut")"#);
        assert!(t.contains_null());
    }
}
