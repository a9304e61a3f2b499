use super::{apply_binary, apply_func, BinOp, Env, Expr, ExprError, Func};

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    PowInt(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// An expression with coordinates resolved to slot indices and constants
/// substituted by value. Evaluation takes the coordinate values as a slice.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
    arity: usize,
}

impl CompiledExpr {
    pub(super) fn new(e: &Expr, coords: &[String], constants: &Env) -> Result<Self, ExprError> {
        Ok(CompiledExpr {
            root: lower(e, coords, constants)?,
            arity: coords.len(),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, q: &[f64]) -> Result<f64, ExprError> {
        debug_assert_eq!(q.len(), self.arity);
        eval(&self.root, q)
    }

    /// `Some(v)` when the expression does not depend on any coordinate.
    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }
}

fn lower(e: &Expr, coords: &[String], constants: &Env) -> Result<Node, ExprError> {
    Ok(match e {
        Expr::Num(v) => Node::Const(*v),
        Expr::Var(name) => {
            if let Some(i) = coords.iter().position(|c| c == name) {
                Node::Slot(i)
            } else if let Some(v) = constants.get(name) {
                Node::Const(v)
            } else {
                return Err(ExprError::Unbound(name.clone()));
            }
        }
        Expr::Neg(inner) => match lower(inner, coords, constants)? {
            Node::Const(v) => Node::Const(-v),
            n => Node::Neg(Box::new(n)),
        },
        Expr::Binary(op, l, r) => {
            let l = lower(l, coords, constants)?;
            let r = lower(r, coords, constants)?;
            match (&l, &r) {
                // Folding is only done when it cannot hide a domain error.
                (Node::Const(a), Node::Const(b)) => match apply_binary(*op, *a, *b) {
                    Ok(v) => Node::Const(v),
                    Err(_) => Node::Binary(*op, Box::new(l), Box::new(r)),
                },
                (_, Node::Const(b)) if *op == BinOp::Pow && b.fract() == 0.0 && b.abs() <= 64.0 => {
                    Node::PowInt(Box::new(l), *b as i32)
                }
                _ => Node::Binary(*op, Box::new(l), Box::new(r)),
            }
        }
        Expr::Call(f, arg) => match lower(arg, coords, constants)? {
            Node::Const(a) => match apply_func(*f, a) {
                Ok(v) => Node::Const(v),
                Err(_) => Node::Call(*f, Box::new(Node::Const(a))),
            },
            n => Node::Call(*f, Box::new(n)),
        },
    })
}

fn eval(node: &Node, q: &[f64]) -> Result<f64, ExprError> {
    match node {
        Node::Const(v) => Ok(*v),
        Node::Slot(i) => Ok(q[*i]),
        Node::Neg(inner) => Ok(-eval(inner, q)?),
        Node::Binary(op, l, r) => apply_binary(*op, eval(l, q)?, eval(r, q)?),
        Node::PowInt(base, k) => {
            let b = eval(base, q)?;
            if b == 0.0 && *k < 0 {
                return apply_binary(BinOp::Pow, b, *k as f64);
            }
            let v = b.powi(*k);
            if v.is_finite() {
                Ok(v)
            } else {
                apply_binary(BinOp::Pow, b, *k as f64)
            }
        }
        Node::Call(f, a) => apply_func(*f, eval(a, q)?),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Env, ExprError};

    #[test]
    fn matches_tree_evaluation() {
        let e = parse("A*cos(x - y)^2 + log(B) * y").unwrap();
        let consts = Env::new().with("A", 2.0).with("B", 3.0);
        let coords = vec!["x".to_string(), "y".to_string()];
        let c = e.compile(&coords, &consts).unwrap();
        let env = consts.clone().with("x", 0.3).with("y", -1.1);
        assert_eq!(c.eval(&[0.3, -1.1]).unwrap(), e.eval(&env).unwrap());
        assert!(c.as_constant().is_none());
    }

    #[test]
    fn constant_domain_errors_survive_folding() {
        let e = parse("x + 1/c").unwrap();
        let c = e
            .compile(&["x".to_string()], &Env::new().with("c", 0.0))
            .unwrap();
        assert!(matches!(c.eval(&[1.0]), Err(ExprError::Domain(_))));
    }

    #[test]
    fn integer_powers() {
        let coords = vec!["x".to_string()];
        let c = parse("x^3 + x^-2")
            .unwrap()
            .compile(&coords, &Env::new())
            .unwrap();
        assert!((c.eval(&[2.0]).unwrap() - 8.25).abs() < 1e-15);
        assert!(matches!(c.eval(&[0.0]), Err(ExprError::Domain(_))));
    }

    #[test]
    fn unbound_names_fail_at_compile_time() {
        let e = parse("x + k").unwrap();
        assert_eq!(
            e.compile(&["x".to_string()], &Env::new()).unwrap_err(),
            ExprError::Unbound("k".into())
        );
    }
}
