//! Algebraic normalization for presentation.
//!
//! A sum is flattened into terms `c * prod(base_i^e_i) * exp(a)`. Terms with
//! the same factors are collected, equal bases have their exponents added and
//! exponentials are merged into one. Scalar multiples of sums are distributed
//! and integer powers of products are split; other sums inside factors stay
//! as they are. Cancelling `b^e / b^e` assumes `b != 0`, so the result agrees
//! with the input wherever the input is defined.

use super::{BinOp, Expr, Func};

#[derive(Clone, Debug)]
struct Term {
    coef: f64,
    /// Bases in first-appearance order with their (non-zero) exponents.
    factors: Vec<(String, Expr, f64)>,
    /// Argument of the merged exponential.
    exp_arg: Option<Expr>,
}

impl Term {
    fn constant(c: f64) -> Term {
        Term {
            coef: c,
            factors: Vec::new(),
            exp_arg: None,
        }
    }

    fn factor(base: Expr) -> Term {
        let key = base.to_string();
        Term::keyed(base, key)
    }

    fn keyed(base: Expr, key: String) -> Term {
        if let Some(c) = base.as_const() {
            return Term::constant(c);
        }
        Term {
            coef: 1.0,
            factors: vec![(key, base, 1.0)],
            exp_arg: None,
        }
    }

    fn exp(arg: Expr) -> Term {
        if let Some(c) = arg.as_const() {
            return Term::constant(c.exp());
        }
        Term {
            coef: 1.0,
            factors: Vec::new(),
            exp_arg: Some(arg),
        }
    }

    fn times(mut self, other: Term) -> Term {
        self.coef *= other.coef;
        for (key, base, e) in other.factors {
            match self.factors.iter_mut().find(|(k, _, _)| *k == key) {
                Some(slot) => slot.2 += e,
                None => self.factors.push((key, base, e)),
            }
        }
        self.factors.retain(|(_, _, e)| *e != 0.0);
        self.exp_arg = match (self.exp_arg, other.exp_arg) {
            (None, b) => b,
            (a, None) => a,
            (Some(a), Some(b)) => Some(simplify(&Expr::sum(a, b))),
        }
        .filter(|a| !a.is_const(0.0));
        if let Some(c) = self.exp_arg.as_ref().and_then(Expr::as_const) {
            self.coef *= c.exp();
            self.exp_arg = None;
        }
        self
    }

    fn powi(mut self, n: f64) -> Term {
        self.coef = self.coef.powf(n);
        for f in &mut self.factors {
            f.2 *= n;
        }
        self.factors.retain(|(_, _, e)| *e != 0.0);
        self.exp_arg = self.exp_arg.map(|a| simplify(&Expr::product(Expr::c(n), a)));
        self
    }

    fn key(&self) -> String {
        let mut parts: Vec<String> = self.factors.iter().map(|(k, _, e)| format!("({k})^{e:?}")).collect();
        parts.sort();
        if let Some(a) = &self.exp_arg {
            parts.push(format!("exp({a})"));
        }
        parts.join("*")
    }

    fn render(&self) -> Expr {
        let power = |base: &Expr, e: f64| {
            if e == 1.0 {
                base.clone()
            } else {
                Expr::pow(base.clone(), Expr::c(e))
            }
        };
        let mut num: Option<Expr> = None;
        let mut den: Option<Expr> = None;
        let push = |slot: &mut Option<Expr>, f: Expr| {
            *slot = Some(match slot.take() {
                Some(acc) => Expr::product(acc, f),
                None => f,
            })
        };
        for (_, base, e) in &self.factors {
            if *e > 0.0 {
                push(&mut num, power(base, *e));
            } else {
                push(&mut den, power(base, -*e));
            }
        }
        if let Some(a) = &self.exp_arg {
            push(&mut num, Expr::call(Func::Exp, a.clone()));
        }
        let num = match num {
            None => Expr::c(self.coef),
            Some(n) if self.coef == 1.0 => n,
            Some(n) if self.coef == -1.0 => Expr::negate(n),
            Some(n) => Expr::product(Expr::c(self.coef), n),
        };
        match den {
            None => num,
            Some(d) => Expr::quotient(num, d),
        }
    }
}

fn collect(e: &Expr, sign: f64, out: &mut Vec<Term>) {
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            collect(a, sign, out);
            collect(b, sign, out);
        }
        Expr::Binary(BinOp::Sub, a, b) => {
            collect(a, sign, out);
            collect(b, -sign, out);
        }
        Expr::Neg(a) => collect(a, -sign, out),
        other => {
            let t = term(other);
            // a scalar multiple of a sum is spread over its terms
            if let (None, [(_, base @ Expr::Binary(BinOp::Add | BinOp::Sub, _, _), e)]) =
                (&t.exp_arg, t.factors.as_slice())
            {
                if *e == 1.0 {
                    return collect(base, sign * t.coef, out);
                }
            }
            let mut t = t;
            t.coef *= sign;
            out.push(t);
        }
    }
}

/// A sum that did not collapse to a single term becomes one opaque factor,
/// identified independently of the order of its terms.
fn opaque(e: &Expr) -> Term {
    let s = simplify(e);
    match &s {
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => {
            let mut terms = Vec::new();
            collect(&s, 1.0, &mut terms);
            let mut parts: Vec<String> = terms.iter().map(|t| t.render().to_string()).collect();
            parts.sort();
            Term::keyed(s, parts.join(" + "))
        }
        _ => term(&s),
    }
}

fn term(e: &Expr) -> Term {
    match e {
        Expr::Const(v) => Term::constant(*v),
        Expr::X | Expr::Param(_) => Term::factor(e.clone()),
        Expr::Neg(a) => {
            let mut t = term(a);
            t.coef = -t.coef;
            t
        }
        Expr::Binary(BinOp::Mul, a, b) => term(a).times(term(b)),
        Expr::Binary(BinOp::Div, a, b) => {
            let d = term(b);
            if d.coef == 0.0 {
                return Term::factor(Expr::quotient(simplify(a), simplify(b)));
            }
            term(a).times(d.powi(-1.0))
        }
        Expr::Binary(BinOp::Pow, a, b) => match b.as_const() {
            Some(n) if n.fract() == 0.0 && n.abs() <= 64.0 => {
                let base = opaque(a);
                if n < 0.0 && base.coef == 0.0 {
                    return Term::factor(Expr::pow(simplify(a), Expr::c(n)));
                }
                base.powi(n)
            }
            _ => Term::factor(Expr::pow(simplify(a), simplify(b))),
        },
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => opaque(e),
        Expr::Call(Func::Exp, a) => Term::exp(simplify(a)),
        Expr::Call(f, a) => Term::factor(Expr::call(*f, simplify(a))),
        Expr::ExpIntegral(_) => Term::factor(e.fold()),
    }
}

/// Collects like terms and factors; see the module documentation for the
/// rewrite rules.
pub(super) fn simplify(e: &Expr) -> Expr {
    let mut terms = Vec::new();
    collect(e, 1.0, &mut terms);
    let mut merged: Vec<(String, Term)> = Vec::new();
    for t in terms {
        let key = t.key();
        match merged.iter_mut().find(|(k, _)| *k == key) {
            Some((_, m)) => m.coef += t.coef,
            None => merged.push((key, t)),
        }
    }
    let mut out: Option<Expr> = None;
    for (_, t) in merged.into_iter().filter(|(_, t)| t.coef != 0.0) {
        out = Some(match out {
            None => t.render(),
            Some(acc) if t.coef < 0.0 => {
                let mut pos = t;
                pos.coef = -pos.coef;
                Expr::difference(acc, pos.render())
            }
            Some(acc) => Expr::sum(acc, t.render()),
        });
    }
    out.unwrap_or(Expr::Const(0.0))
}
