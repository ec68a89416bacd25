//! Symbolic expressions in one real variable `x` with named real parameters.
//!
//! Expressions are immutable trees with shared children, so cloning is cheap and
//! values can be evaluated from several threads at once. Building an expression
//! through the smart constructors (or the arithmetic operators) applies the same
//! local constant folding as [`Expr::fold`].

mod diff;
mod display;
mod parse;
mod simplify;

use std::collections::BTreeMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::quadrature::{self, QuadratureOptions};

pub use parse::{parse, ParseError, ParseErrorKind};

/// Elementary functions understood by the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            // ln is undefined at and below zero; f64::ln gives -inf/NaN there,
            // which the evaluator turns into a domain error.
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sqrt => v.sqrt(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
            BinOp::Pow => a.powf(b),
        }
    }
}

/// `exp(scale * ∫_lower^x integrand(s) ds)`.
///
/// Produced by the integrating-factor reduction of the convective ODE; it has no
/// textual form in the expression grammar. Its derivative is
/// `scale * integrand(x) * self`, so it differentiates like any other node and
/// only needs quadrature when evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpIntegral {
    pub scale: f64,
    pub lower: f64,
    pub integrand: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Param(Arc<str>),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
    ExpIntegral(Arc<ExpIntegral>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    Unbound(String),
    #[error("non-finite value {value} at x = {x} in `{expr}`")]
    NonFinite { expr: String, x: f64, value: f64 },
    #[error("quadrature failed at x = {x}: {reason}")]
    Quadrature { x: f64, reason: String },
}

/// Parameter bindings. Unbound parameters are an evaluation error; there are no
/// defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamEnv {
    values: BTreeMap<String, f64>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<f64, EvalError> {
        self.get(name).ok_or_else(|| EvalError::Unbound(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Bindings of `self` overridden by those of `other`.
    pub fn merged(&self, other: &ParamEnv) -> ParamEnv {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k, v);
        }
        out
    }
}

impl<K: Into<String>> FromIterator<(K, f64)> for ParamEnv {
    fn from_iter<I: IntoIterator<Item = (K, f64)>>(iter: I) -> Self {
        let mut env = ParamEnv::new();
        for (k, v) in iter {
            env.set(k, v);
        }
        env
    }
}

const QUAD: QuadratureOptions = QuadratureOptions {
    abs_tol: 1e-14,
    rel_tol: 1e-13,
    max_depth: 40,
};

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x() -> Expr {
        Expr::X
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(Arc::from(name))
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn exp_integral(scale: f64, lower: f64, integrand: Expr) -> Expr {
        if integrand.is_const(0.0) || scale == 0.0 {
            return Expr::one();
        }
        Expr::ExpIntegral(Arc::new(ExpIntegral {
            scale,
            lower,
            integrand,
        }))
    }

    pub fn negate(e: Expr) -> Expr {
        match e {
            Expr::Const(v) => Expr::Const(-v),
            Expr::Neg(inner) => Arc::unwrap_or_clone(inner),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let Expr::Const(v) = arg {
            let r = f.apply(v);
            if r.is_finite() {
                return Expr::Const(r);
            }
        }
        Expr::Call(f, Arc::new(arg))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        if let (Expr::Const(u), Expr::Const(v)) = (&a, &b) {
            let r = op.apply(*u, *v);
            // Leave undefined constant subexpressions in place so evaluation
            // reports them instead of silently producing inf/NaN.
            if r.is_finite() {
                return Expr::Const(r);
            }
        }
        match op {
            BinOp::Add => {
                if a.is_const(0.0) {
                    return b;
                }
                if b.is_const(0.0) {
                    return a;
                }
            }
            BinOp::Sub => {
                if b.is_const(0.0) {
                    return a;
                }
                if a.is_const(0.0) {
                    return Expr::negate(b);
                }
            }
            BinOp::Mul => {
                if a.is_const(0.0) || b.is_const(0.0) {
                    return Expr::zero();
                }
                if a.is_const(1.0) {
                    return b;
                }
                if b.is_const(1.0) {
                    return a;
                }
                if a.is_const(-1.0) {
                    return Expr::negate(b);
                }
                if b.is_const(-1.0) {
                    return Expr::negate(a);
                }
            }
            BinOp::Div => {
                if a.is_const(0.0) && !b.is_const(0.0) {
                    return Expr::zero();
                }
                if b.is_const(1.0) {
                    return a;
                }
                if b.is_const(-1.0) {
                    return Expr::negate(a);
                }
            }
            BinOp::Pow => {
                if b.is_const(1.0) {
                    return a;
                }
                if b.is_const(0.0) {
                    return Expr::one();
                }
            }
        }
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn sum(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn difference(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn quotient(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::pow(self, Expr::c(f64::from(n)))
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Re-applies constant folding and neutral-element elimination bottom-up.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::X | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::negate(a.fold()),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.fold(), b.fold()),
            Expr::Call(f, a) => Expr::call(*f, a.fold()),
            Expr::ExpIntegral(ei) => Expr::exp_integral(ei.scale, ei.lower, ei.integrand.fold()),
        }
    }

    /// Replaces parameters bound in `env` by their values and folds.
    pub fn bind(&self, env: &ParamEnv) -> Expr {
        match self {
            Expr::Param(name) => match env.get(name) {
                Some(v) => Expr::c(v),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::X => self.clone(),
            Expr::Neg(a) => Expr::negate(a.bind(env)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.bind(env), b.bind(env)),
            Expr::Call(f, a) => Expr::call(*f, a.bind(env)),
            Expr::ExpIntegral(ei) => Expr::exp_integral(ei.scale, ei.lower, ei.integrand.bind(env)),
        }
    }

    /// Collects like terms, merges powers of equal bases and exponentials.
    /// Intended for printing; cancellations assume the cancelled factors are
    /// non-zero.
    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::X | Expr::ExpIntegral(_) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_x(),
            Expr::Binary(_, a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    /// Names of the free parameters, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Const(_) | Expr::X => {}
                Expr::Param(p) => out.push(p.to_string()),
                Expr::Neg(a) | Expr::Call(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::ExpIntegral(ei) => walk(&ei.integrand, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::X | Expr::Param(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
            Expr::ExpIntegral(ei) => 1 + ei.integrand.size(),
        }
    }

    pub fn eval(&self, x: f64, env: &ParamEnv) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(v) => *v,
            Expr::X => x,
            Expr::Param(name) => env.require(name)?,
            Expr::Neg(a) => -a.eval(x, env)?,
            Expr::Binary(op, a, b) => op.apply(a.eval(x, env)?, b.eval(x, env)?),
            Expr::Call(f, a) => f.apply(a.eval(x, env)?),
            Expr::ExpIntegral(ei) => {
                let integral =
                    quadrature::integrate(|s| ei.integrand.eval(s, env), ei.lower, x, &QUAD).map_err(|e| match e {
                        quadrature::QuadError::Integrand(inner) => inner,
                        other => EvalError::Quadrature {
                            x,
                            reason: other.to_string(),
                        },
                    })?;
                (ei.scale * integral.value).exp()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite {
                expr: self.to_string(),
                x,
                value: v,
            })
        }
    }

    /// Evaluates on every point of `xs`.
    pub fn eval_many(&self, xs: &[f64], env: &ParamEnv) -> Result<Vec<f64>, EvalError> {
        xs.iter().map(|&x| self.eval(x, env)).collect()
    }

    /// `d^order / dx^order`, constant-folded. `order == 0` returns a copy.
    pub fn derivative(&self, order: usize) -> Expr {
        let mut e = self.fold();
        for _ in 0..order {
            e = diff::differentiate(&e);
        }
        e
    }

    /// First derivative.
    pub fn d(&self) -> Expr {
        diff::differentiate(self)
    }
}

/// `d^order e / dx^order`.
pub fn differentiate(e: &Expr, order: usize) -> Expr {
    e.derivative(order)
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Const(v)
    }
}

impl fmt::Display for ExpIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exp({:?}*integral({}, {:?}..x))",
            self.scale, self.integrand, self.lower
        )
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self, Expr::Const(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$ctor(self.clone(), Expr::Const(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$ctor(Expr::Const(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$ctor(Expr::Const(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, sum);
impl_binop!(Sub, sub, difference);
impl_binop!(Mul, mul, product);
impl_binop!(Div, div, quotient);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negate(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negate(self.clone())
    }
}
