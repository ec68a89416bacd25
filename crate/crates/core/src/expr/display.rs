//! Printing in the parser's grammar. Parentheses are emitted only where the
//! grammar needs them to rebuild the same tree; `ExpIntegral` nodes print in a
//! descriptive form that does not parse.

use std::fmt;

use super::{BinOp, Expr};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(v) if v.is_sign_negative() => UNARY,
        Expr::Const(v) if !v.is_finite() => UNARY,
        Expr::Const(_) | Expr::X | Expr::Param(_) | Expr::Call(..) | Expr::ExpIntegral(_) => ATOM,
        Expr::Neg(_) => UNARY,
        Expr::Binary(op, ..) => match op {
            BinOp::Add | BinOp::Sub => SUM,
            BinOp::Mul | BinOp::Div => PRODUCT,
            BinOp::Pow => POWER,
        },
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_finite() {
        // Debug formatting is the shortest text that reads back to the same f64.
        let s = format!("{:?}", v.abs());
        let s = s.strip_suffix(".0").unwrap_or(&s);
        if v.is_sign_negative() {
            write!(f, "-{s}")
        } else {
            f.write_str(s)
        }
    } else if v.is_nan() {
        f.write_str("(0/0)")
    } else if v > 0.0 {
        f.write_str("(1/0)")
    } else {
        f.write_str("(-1/0)")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write_number(f, *v),
            Expr::X => f.write_str("x"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, UNARY)
            }
            Expr::Binary(op, a, b) => {
                let (left_min, right_min) = match op {
                    BinOp::Add => (SUM, SUM),
                    BinOp::Sub => (SUM, PRODUCT),
                    BinOp::Mul => (PRODUCT, UNARY),
                    BinOp::Div => (PRODUCT, UNARY),
                    BinOp::Pow => (ATOM, UNARY),
                };
                write_child(f, a, left_min)?;
                match op {
                    BinOp::Add | BinOp::Sub => write!(f, " {} ", op.symbol())?,
                    _ => write!(f, "{}", op.symbol())?,
                }
                // "a - -b" and "a + -b" parse fine; keep them readable anyway
                if matches!(op, BinOp::Add | BinOp::Sub) && precedence(b) == UNARY {
                    return write!(f, "({b})");
                }
                write_child(f, b, right_min)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::ExpIntegral(ei) => write!(f, "{ei}"),
        }
    }
}
