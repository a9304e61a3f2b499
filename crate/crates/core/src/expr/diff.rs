use super::{BinOp, Expr, Func};

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return b;
    }
    if is_num(&b, 0.0) {
        return a;
    }
    Expr::Binary(BinOp::Add, Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        return a;
    }
    if is_num(&a, 0.0) {
        return neg(b);
    }
    Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        return Expr::Num(0.0);
    }
    if is_num(&a, 1.0) {
        return b;
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return Expr::Num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::Binary(BinOp::Div, Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b))
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

pub(super) fn derivative(e: &Expr, var: &str) -> Expr {
    if !e.depends_on(var) {
        return Expr::Num(0.0);
    }
    match e {
        Expr::Num(_) => Expr::Num(0.0),
        Expr::Var(name) => Expr::Num(if name == var { 1.0 } else { 0.0 }),
        Expr::Neg(inner) => neg(derivative(inner, var)),
        Expr::Binary(op, l, r) => {
            let (u, v) = (l.as_ref(), r.as_ref());
            match op {
                BinOp::Add => add(derivative(u, var), derivative(v, var)),
                BinOp::Sub => sub(derivative(u, var), derivative(v, var)),
                BinOp::Mul => add(
                    mul(derivative(u, var), v.clone()),
                    mul(u.clone(), derivative(v, var)),
                ),
                BinOp::Div => {
                    // (u'v - uv') / v^2
                    let num = sub(
                        mul(derivative(u, var), v.clone()),
                        mul(u.clone(), derivative(v, var)),
                    );
                    div(num, pow(v.clone(), Expr::Num(2.0)))
                }
                BinOp::Pow => {
                    if !v.depends_on(var) {
                        // v * u^(v-1) * u'
                        let lowered = match v {
                            Expr::Num(k) => Expr::Num(k - 1.0),
                            _ => sub(v.clone(), Expr::Num(1.0)),
                        };
                        mul(mul(v.clone(), pow(u.clone(), lowered)), derivative(u, var))
                    } else if !u.depends_on(var) {
                        // u^v * log(u) * v'
                        mul(
                            mul(e.clone(), call(Func::Log, u.clone())),
                            derivative(v, var),
                        )
                    } else {
                        // u^v * (v' log(u) + v u'/u)
                        let inner = add(
                            mul(derivative(v, var), call(Func::Log, u.clone())),
                            div(mul(v.clone(), derivative(u, var)), u.clone()),
                        );
                        mul(e.clone(), inner)
                    }
                }
            }
        }
        Expr::Call(f, arg) => {
            let a = arg.as_ref().clone();
            let da = derivative(arg, var);
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Tan => div(Expr::Num(1.0), pow(call(Func::Cos, a), Expr::Num(2.0))),
                Func::Exp => call(Func::Exp, a),
                Func::Log => div(Expr::Num(1.0), a),
                Func::Sqrt => div(Expr::Num(0.5), call(Func::Sqrt, a)),
                Func::Abs => div(a.clone(), call(Func::Abs, a)),
            };
            mul(outer, da)
        }
    }
}
