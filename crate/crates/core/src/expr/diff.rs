use super::{BinOp, Expr, Func};

/// First derivative with respect to `x`, built through the folding
/// constructors.
pub(super) fn differentiate(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Param(_) => Expr::zero(),
        Expr::X => Expr::one(),
        Expr::Neg(a) => -differentiate(a),
        Expr::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => differentiate(a) + differentiate(b),
                BinOp::Sub => differentiate(a) - differentiate(b),
                BinOp::Mul => differentiate(a) * b + a * differentiate(b),
                BinOp::Div => {
                    let da = differentiate(a);
                    let db = differentiate(b);
                    if !b.depends_on_x() {
                        return da / b;
                    }
                    (da * b - a * db) / b.clone().powi(2)
                }
                BinOp::Pow => power_rule(a, b),
            }
        }
        Expr::Call(f, a) => {
            let du = differentiate(a);
            if du.is_const(0.0) {
                return Expr::zero();
            }
            let u = a.as_ref().clone();
            let outer = match f {
                Func::Exp => u.exp(),
                Func::Ln => return du / u,
                Func::Sin => u.cos(),
                Func::Cos => -u.sin(),
                Func::Tan => return du / u.cos().powi(2),
                Func::Sqrt => return du / (2.0 * u.sqrt()),
                Func::Sinh => Expr::call(Func::Cosh, u),
                Func::Cosh => Expr::call(Func::Sinh, u),
            };
            outer * du
        }
        Expr::ExpIntegral(ei) => ei.scale * &ei.integrand * e,
    }
}

fn power_rule(base: &Expr, exponent: &Expr) -> Expr {
    if !exponent.depends_on_x() {
        // n * a^(n-1) * a'
        let da = differentiate(base);
        if da.is_const(0.0) {
            return Expr::zero();
        }
        let lowered = Expr::pow(base.clone(), exponent - 1.0);
        return exponent * lowered * da;
    }
    // a^b = exp(b ln a) for an x-dependent exponent
    let rewritten = (exponent * base.clone().ln()).exp();
    differentiate(&rewritten)
}
