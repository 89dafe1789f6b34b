//! Typed user-defined functions for attribute mappings.
//!
//! Bodies are compiled into the engine and looked up by name. Applying a
//! function to literals computes a literal; applying it to anything that
//! contains a labelled null produces a symbolic [`Value::Term`] instead.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::catcore::BaseType;
use crate::instance::{Literal, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UdfSignature {
    pub name: String,
    pub args: Vec<BaseType>,
    pub ret: BaseType,
}

impl UdfSignature {
    pub fn new(name: &str, args: &[BaseType], ret: BaseType) -> Self {
        UdfSignature { name: name.into(), args: args.to_vec(), ret }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UdfError {
    #[error("function `{0}` is already registered")]
    DuplicateName(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` takes {expected} arguments, got {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("argument {position} of `{name}` must be {expected}, got {found}")]
    TypeMismatch { name: String, position: usize, expected: BaseType, found: BaseType },
    #[error("`{name}` failed on ({args}): {message}")]
    Evaluation { name: String, args: String, message: String },
}

type Body = Box<dyn Fn(&[Literal]) -> Result<Literal, String> + Send + Sync>;

struct Udf {
    sig: UdfSignature,
    body: Body,
}

/// Name-indexed function catalog. Immutable once set up.
#[derive(Default)]
pub struct UdfRegistry {
    funcs: BTreeMap<String, Udf>,
}

impl core::fmt::Debug for UdfRegistry {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.funcs.values().map(|u| &u.sig)).finish()
    }
}

impl UdfRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The built-in catalog:
    ///
    /// | name | signature | result |
    /// |---|---|---|
    /// | `json_extract` | `(String, String) -> String` | field of a flat JSON object, numbers as written |
    /// | `parse_float` | `(String) -> Float` | |
    /// | `parse_int` | `(String) -> Int` | |
    /// | `scale` | `(Float, Float) -> Float` | product |
    /// | `concat` | `(String, String) -> String` | |
    /// | `format_float` | `(Float, Int) -> String` | fixed number of decimals |
    /// | `detect_system_type` | `(String) -> String` | `"bulk"`, `"surface"` or `"molecule"` from a 3-letter `T`/`F` periodicity flag |
    pub fn with_builtins() -> Self {
        use BaseType::*;
        let mut r = Self::new();
        let mut add = |sig: UdfSignature, body: Body| {
            r.register(sig, body).expect("builtin names are distinct");
        };
        add(UdfSignature::new("json_extract", &[String, String], String), Box::new(|a| json_extract(str_arg(&a[0]), str_arg(&a[1])).map(Literal::Str)));
        add(UdfSignature::new("parse_float", &[String], Float), Box::new(|a| {
            let s = str_arg(&a[0]);
            s.trim().parse::<f64>().map(Literal::Float).map_err(|_| format!("`{s}` is not a number"))
        }));
        add(UdfSignature::new("parse_int", &[String], Int), Box::new(|a| {
            let s = str_arg(&a[0]);
            s.trim().parse::<i64>().map(Literal::Int).map_err(|_| format!("`{s}` is not an integer"))
        }));
        add(UdfSignature::new("scale", &[Float, Float], Float), Box::new(|a| Ok(Literal::Float(float_arg(&a[0]) * float_arg(&a[1])))));
        add(UdfSignature::new("concat", &[String, String], String), Box::new(|a| {
            let mut s = str_arg(&a[0]).to_string();
            s.push_str(str_arg(&a[1]));
            Ok(Literal::Str(s))
        }));
        add(UdfSignature::new("format_float", &[Float, Int], String), Box::new(|a| {
            let digits = match &a[1] {
                Literal::Int(d) if (0..=17).contains(d) => *d as usize,
                other => return Err(format!("digit count {other} out of range 0..=17")),
            };
            Ok(Literal::Str(format!("{:.*}", digits, float_arg(&a[0]))))
        }));
        add(UdfSignature::new("detect_system_type", &[String], String), Box::new(|a| detect_system_type(str_arg(&a[0])).map(|s| Literal::Str(s.into()))));
        r
    }

    pub fn register(&mut self, sig: UdfSignature, body: Body) -> Result<(), UdfError> {
        if self.funcs.contains_key(&sig.name) {
            return Err(UdfError::DuplicateName(sig.name));
        }
        self.funcs.insert(sig.name.clone(), Udf { sig, body });
        Ok(())
    }

    pub fn register_fn<F>(&mut self, sig: UdfSignature, body: F) -> Result<(), UdfError>
    where
        F: Fn(&[Literal]) -> Result<Literal, String> + Send + Sync + 'static,
    {
        self.register(sig, Box::new(body))
    }

    /// A nullary function, i.e. a database-wide constant.
    pub fn register_constant(&mut self, name: &str, value: Literal) -> Result<(), UdfError> {
        let sig = UdfSignature::new(name, &[], value.ty());
        self.register(sig, Box::new(move |_| Ok(value.clone())))
    }

    /// A unary `Float -> Float` unit conversion multiplying by `factor`.
    pub fn register_scale(&mut self, name: &str, factor: f64) -> Result<(), UdfError> {
        let sig = UdfSignature::new(name, &[BaseType::Float], BaseType::Float);
        self.register(sig, Box::new(move |a| Ok(Literal::Float(float_arg(&a[0]) * factor))))
    }

    pub fn signature(&self, name: &str) -> Option<&UdfSignature> {
        self.funcs.get(name).map(|u| &u.sig)
    }

    pub fn signatures(&self) -> impl Iterator<Item = &UdfSignature> {
        self.funcs.values().map(|u| &u.sig)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.funcs.contains_key(name)
    }

    /// Checks arity and argument types of an application.
    pub fn check_call(&self, name: &str, arg_types: &[BaseType]) -> Result<BaseType, UdfError> {
        let sig = self.signature(name).ok_or_else(|| UdfError::UnknownFunction(name.into()))?;
        if sig.args.len() != arg_types.len() {
            return Err(UdfError::ArityMismatch { name: name.into(), expected: sig.args.len(), found: arg_types.len() });
        }
        for (i, (want, got)) in sig.args.iter().zip(arg_types).enumerate() {
            if want != got {
                return Err(UdfError::TypeMismatch { name: name.into(), position: i + 1, expected: *want, found: *got });
            }
        }
        Ok(sig.ret)
    }

    /// Evaluates on literal arguments.
    pub fn eval(&self, name: &str, args: &[Literal]) -> Result<Literal, UdfError> {
        let types: Vec<BaseType> = args.iter().map(Literal::ty).collect();
        self.check_call(name, &types)?;
        let udf = &self.funcs[name];
        (udf.body)(args).map_err(|message| UdfError::Evaluation {
            name: name.into(),
            args: args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "),
            message,
        })
    }

    /// Literal arguments give a literal; anything containing a null gives a
    /// symbolic term.
    pub fn apply(&self, name: &str, args: &[Value]) -> Result<Value, UdfError> {
        let mut types = Vec::with_capacity(args.len());
        for a in args {
            types.push(self.value_type(a)?);
        }
        self.check_call(name, &types)?;
        if args.iter().all(|a| matches!(a, Value::Lit(_))) {
            let lits: Vec<Literal> = args
                .iter()
                .map(|a| match a {
                    Value::Lit(l) => l.clone(),
                    _ => unreachable!(),
                })
                .collect();
            return self.eval(name, &lits).map(Value::Lit);
        }
        Ok(Value::Term { func: name.into(), args: args.to_vec() })
    }

    pub fn value_type(&self, v: &Value) -> Result<BaseType, UdfError> {
        match v {
            Value::Lit(l) => Ok(l.ty()),
            Value::Null { ty, .. } => Ok(*ty),
            Value::Term { func, .. } => {
                self.signature(func).map(|s| s.ret).ok_or_else(|| UdfError::UnknownFunction(func.clone()))
            }
        }
    }
}

fn str_arg(l: &Literal) -> &str {
    match l {
        Literal::Str(s) => s,
        _ => "",
    }
}

fn float_arg(l: &Literal) -> f64 {
    match l {
        Literal::Float(f) => *f,
        _ => f64::NAN,
    }
}

/// Extracts `field` from a flat JSON object whose values are strings or numbers.
pub fn json_extract(doc: &str, field: &str) -> Result<String, String> {
    let parsed: serde_json::Value = serde_json::from_str(doc).map_err(|e| format!("malformed JSON: {e}"))?;
    let obj = parsed.as_object().ok_or_else(|| "JSON document is not an object".to_string())?;
    match obj.get(field) {
        Some(serde_json::Value::String(s)) => Ok(s.clone()),
        Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
        Some(_) => Err(format!("field `{field}` is not a string or number")),
        None => Err(format!("no field `{field}`")),
    }
}

/// Lists the fields of a flat JSON object.
pub fn json_fields(doc: &str) -> Result<Vec<String>, String> {
    let parsed: serde_json::Value = serde_json::from_str(doc).map_err(|e| format!("malformed JSON: {e}"))?;
    let obj = parsed.as_object().ok_or_else(|| "JSON document is not an object".to_string())?;
    Ok(obj.keys().cloned().collect())
}

/// 3 periodic directions: bulk; 2: surface; 0: molecule. One periodic
/// direction (a wire) has no class.
pub fn detect_system_type(pbc: &str) -> Result<&'static str, String> {
    if pbc.len() != 3 || !pbc.chars().all(|c| c == 'T' || c == 'F') {
        return Err(format!("periodicity flags must be three of T/F, got `{pbc}`"));
    }
    match pbc.chars().filter(|&c| c == 'T').count() {
        3 => Ok("bulk"),
        2 => Ok("surface"),
        0 => Ok("molecule"),
        _ => Err(format!("one periodic direction (`{pbc}`) is not a supported system type")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(v: &str) -> Value {
        Value::Lit(Literal::Str(v.into()))
    }

    #[test]
    fn constant() {
        let mut r = UdfRegistry::with_builtins();
        r.register_constant("dft_code", Literal::Str("VASP".into())).unwrap();
        assert_eq!(r.apply("dft_code", &[]).unwrap(), s("VASP"));
        assert_eq!(
            r.register_constant("dft_code", Literal::Int(1)),
            Err(UdfError::DuplicateName("dft_code".into()))
        );
    }

    #[test]
    fn unit_scale_is_identity() {
        let mut r = UdfRegistry::new();
        r.register_scale("unit", 1.0).unwrap();
        for x in [0.0, -3.5, 1e300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(r.eval("unit", &[Literal::Float(x)]).unwrap(), Literal::Float(x));
        }
    }

    #[test]
    fn json_field_extraction() {
        let r = UdfRegistry::with_builtins();
        let v = r.apply("json_extract", &[s(r#"{"encut": "520"}"#), s("encut")]).unwrap();
        assert_eq!(v, s("520"));
    }

    #[test]
    fn json_fixture_documents() {
        // Five hand-written parameter blobs with the expected fields read off by hand.
        let docs = [
            (r#"{"encut": 520, "xc": "PBE", "kpts": "8x8x8"}"#, [("encut", "520"), ("xc", "PBE"), ("kpts", "8x8x8")]),
            (r#"{"xc": "PBE", "encut": 400.5, "kpts": "4x4x4"}"#, [("encut", "400.5"), ("xc", "PBE"), ("kpts", "4x4x4")]),
            (r#"{"encut": "600", "xc": "RPBE", "kpts": "1x1x1"}"#, [("encut", "600"), ("xc", "RPBE"), ("kpts", "1x1x1")]),
            (r#"{ "kpts" : "6x6x1" , "xc":"BEEF-vdW","encut":450 }"#, [("encut", "450"), ("xc", "BEEF-vdW"), ("kpts", "6x6x1")]),
            (r#"{"encut": -1, "xc": "", "kpts": "1x1x1"}"#, [("encut", "-1"), ("xc", ""), ("kpts", "1x1x1")]),
        ];
        let r = UdfRegistry::with_builtins();
        for (doc, fields) in docs {
            for (field, expected) in fields {
                assert_eq!(r.apply("json_extract", &[s(doc), s(field)]).unwrap(), s(expected), "{doc} {field}");
            }
        }
    }

    #[test]
    fn malformed_json_reports_the_input() {
        let r = UdfRegistry::with_builtins();
        let err = r.apply("json_extract", &[s("{encut: 1"), s("encut")]).unwrap_err();
        match err {
            UdfError::Evaluation { name, args, .. } => {
                assert_eq!(name, "json_extract");
                assert!(args.contains("{encut: 1"));
            }
            e => panic!("{e:?}"),
        }
        let err = r.apply("json_extract", &[s(r#"{"a": {"b": 1}}"#), s("a")]).unwrap_err();
        assert!(matches!(err, UdfError::Evaluation { .. }));
    }

    #[test]
    fn nulls_stay_symbolic() {
        let r = UdfRegistry::with_builtins();
        let n = Value::Null { label: "n1".into(), ty: BaseType::String };
        let v = r.apply("json_extract", &[n.clone(), s("encut")]).unwrap();
        assert_eq!(v, Value::Term { func: "json_extract".into(), args: vec![n.clone(), s("encut")] });
        // nested terms are still null-containing
        let w = r.apply("parse_float", core::slice::from_ref(&v)).unwrap();
        assert!(matches!(w, Value::Term { .. }));
    }

    #[test]
    fn signature_errors() {
        let r = UdfRegistry::with_builtins();
        assert!(matches!(r.apply("nope", &[]), Err(UdfError::UnknownFunction(_))));
        assert!(matches!(r.apply("parse_float", &[]), Err(UdfError::ArityMismatch { .. })));
        assert!(matches!(
            r.apply("parse_float", &[Value::Lit(Literal::Int(3))]),
            Err(UdfError::TypeMismatch { position: 1, .. })
        ));
    }

    #[test]
    fn system_types() {
        let r = UdfRegistry::with_builtins();
        assert_eq!(r.apply("detect_system_type", &[s("TTT")]).unwrap(), s("bulk"));
        assert_eq!(r.apply("detect_system_type", &[s("TTF")]).unwrap(), s("surface"));
        assert_eq!(r.apply("detect_system_type", &[s("FTT")]).unwrap(), s("surface"));
        assert_eq!(r.apply("detect_system_type", &[s("FFF")]).unwrap(), s("molecule"));
        assert!(r.apply("detect_system_type", &[s("TFF")]).is_err());
        assert!(r.apply("detect_system_type", &[s("xyz")]).is_err());
    }

    #[test]
    fn hand_labelled_structures() {
        // (pbc flags, label assigned by hand from the structure description)
        let fixture = [
            ("TTT", "bulk"),     // fcc Cu
            ("TTT", "bulk"),     // rutile TiO2
            ("TTF", "surface"),  // Pt(111) slab
            ("TTF", "surface"),  // Cu(100) slab with vacuum along z
            ("FFF", "molecule"), // H2O in a box
            ("FFF", "molecule"), // CO
        ];
        for (pbc, label) in fixture {
            assert_eq!(detect_system_type(pbc).unwrap(), label);
        }
    }

    #[test]
    fn formatting_helpers() {
        let r = UdfRegistry::with_builtins();
        assert_eq!(
            r.eval("format_float", &[Literal::Float(1.23456), Literal::Int(2)]).unwrap(),
            Literal::Str("1.23".into())
        );
        assert_eq!(r.eval("scale", &[Literal::Float(2.0), Literal::Float(1000.0)]).unwrap(), Literal::Float(2000.0));
        assert_eq!(r.eval("parse_int", &[Literal::Str(" 42 ".into())]).unwrap(), Literal::Int(42));
        assert_eq!(
            r.eval("concat", &[Literal::Str("Cu".into()), Literal::Str("111".into())]).unwrap(),
            Literal::Str("Cu111".into())
        );
    }
}
