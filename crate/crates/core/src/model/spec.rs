use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::expr::{CompiledExpr, Env, Expr};
use crate::numerics::{min_eigen_sym, Mat};

/// Validated description of a simple underactuated Hamiltonian system in a
/// given chart.
///
/// Expressions are kept symbolically (for charts and derivatives) and in
/// compiled form for evaluation. Immutable once built.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    coords: Vec<String>,
    constants: Env,
    mass_inverse: Vec<Vec<Expr>>,
    potential: Expr,
    actuation: Vec<Vec<Expr>>,
    equilibrium: Vec<f64>,
    compiled: Compiled,
}

#[derive(Debug, Clone)]
struct Compiled {
    mass_inverse: Vec<CompiledExpr>,
    // [k][i * n + j] = ∂ℍ^{ij}/∂q^k
    d_mass_inverse: Vec<Vec<CompiledExpr>>,
    potential: CompiledExpr,
    d_potential: Vec<CompiledExpr>,
    actuation: Vec<CompiledExpr>,
}

const SYMMETRY_SAMPLES: usize = 100;
const SYMMETRY_TOL: f64 = 1e-12;
const CRITICAL_TOL: f64 = 1e-8;

impl ModelSpec {
    /// Builds and validates a model. `mass_inverse` is the full n×n array.
    pub fn new(
        coords: Vec<String>,
        constants: Env,
        mass_inverse: Vec<Vec<Expr>>,
        potential: Expr,
        actuation: Vec<Vec<Expr>>,
        equilibrium: Vec<f64>,
    ) -> Result<ModelSpec, ModelError> {
        let n = coords.len();
        if n == 0 {
            return Err(ModelError::Format("model has no coordinates".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(ModelError::Format(format!("duplicate coordinate `{c}`")));
            }
            if constants.get(c).is_some() {
                return Err(ModelError::Format(format!(
                    "coordinate `{c}` shadows a constant"
                )));
            }
        }
        if equilibrium.len() != n {
            return Err(ModelError::Format(format!(
                "equilibrium has {} entries, expected {n}",
                equilibrium.len()
            )));
        }
        if mass_inverse.len() != n || mass_inverse.iter().any(|r| r.len() != n) {
            return Err(ModelError::Format(format!("mass_inverse must be {n}x{n}")));
        }
        if let Some(row) = actuation.iter().find(|r| r.len() != n) {
            return Err(ModelError::Format(format!(
                "actuation row has {} entries, expected {n}",
                row.len()
            )));
        }
        let m = actuation.len();
        if m == 0 || m >= n {
            return Err(ModelError::invariant(
                "underactuation",
                format!("m < n required (m = {m}, n = {n}); need at least one actuator"),
            ));
        }

        let compile = |e: &Expr, what: String| {
            e.compile(&coords, &constants)
                .map_err(|err| ModelError::expr(what, err))
        };
        let mut mi = Vec::with_capacity(n * n);
        let mut dmi = vec![Vec::with_capacity(n * n); n];
        for i in 0..n {
            for j in 0..n {
                let e = &mass_inverse[i][j];
                mi.push(compile(e, format!("mass_inverse[{}][{}]", i + 1, j + 1))?);
                for (k, name) in coords.iter().enumerate() {
                    dmi[k].push(compile(
                        &e.diff(name),
                        format!("d mass_inverse[{}][{}] / d{name}", i + 1, j + 1),
                    )?);
                }
            }
        }
        let pot = compile(&potential, "potential".into())?;
        let dpot = coords
            .iter()
            .map(|name| compile(&potential.diff(name), format!("d h / d{name}")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut act = Vec::with_capacity(m * n);
        for (a, row) in actuation.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                act.push(compile(e, format!("theta{}[{}]", a + 1, i + 1))?);
            }
        }

        let spec = ModelSpec {
            coords,
            constants,
            mass_inverse,
            potential,
            actuation,
            equilibrium,
            compiled: Compiled {
                mass_inverse: mi,
                d_mass_inverse: dmi,
                potential: pot,
                d_potential: dpot,
                actuation: act,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.n();
        let q0 = &self.equilibrium;

        // Symmetry at random points around q0; points where an entry cannot
        // be evaluated are skipped.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SYMMETRY_SAMPLES {
            let q: Vec<f64> = q0.iter().map(|c| c + rng.gen_range(-1.0..1.0)).collect();
            let Ok(h) = self.mass_inverse_at(&q) else {
                continue;
            };
            if !h.is_symmetric(SYMMETRY_TOL) {
                return Err(ModelError::invariant(
                    "mass_inverse symmetric",
                    format!("asymmetric at q = {q:?}: {h:?}"),
                ));
            }
        }

        let h0 = self.mass_inverse_at(q0)?;
        if !h0.is_symmetric(SYMMETRY_TOL) {
            return Err(ModelError::invariant(
                "mass_inverse symmetric",
                format!("asymmetric at the equilibrium: {h0:?}"),
            ));
        }
        let lmin = min_eigen_sym(&h0)?;
        if !(lmin > 0.0) {
            return Err(ModelError::invariant(
                "mass_inverse positive-definite",
                format!("least eigenvalue {lmin} at the equilibrium"),
            ));
        }

        let theta = self.actuation_at(q0)?;
        let gram = theta.matmul(&theta.transpose());
        let rank_ok = min_eigen_sym(&gram)? > 1e-12 * gram.norm_inf().max(1e-300);
        if !rank_ok {
            return Err(ModelError::invariant(
                "actuation rank",
                format!(
                    "the {} actuation rows are linearly dependent at the equilibrium",
                    self.m()
                ),
            ));
        }

        let grad = self.potential_grad_at(q0)?;
        let gmax = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax > CRITICAL_TOL {
            return Err(ModelError::invariant(
                "equilibrium is a critical point of h",
                format!("|grad h|_inf = {gmax:e} at {q0:?}"),
            ));
        }
        debug_assert_eq!(grad.len(), n);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// Number of actuators.
    pub fn m(&self) -> usize {
        self.actuation.len()
    }

    /// Degree of underactuation, n − m.
    pub fn dou(&self) -> usize {
        self.n() - self.m()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn constants(&self) -> &Env {
        &self.constants
    }

    pub fn equilibrium(&self) -> &[f64] {
        &self.equilibrium
    }

    pub fn mass_inverse(&self) -> &[Vec<Expr>] {
        &self.mass_inverse
    }

    pub fn potential(&self) -> &Expr {
        &self.potential
    }

    pub fn actuation(&self) -> &[Vec<Expr>] {
        &self.actuation
    }

    fn eval_array(
        &self,
        exprs: &[CompiledExpr],
        rows: usize,
        cols: usize,
        q: &[f64],
        what: &str,
    ) -> Result<Mat, ModelError> {
        let mut out = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = exprs[i * cols + j].eval(q).map_err(|e| {
                    ModelError::expr(format!("{what}[{}][{}] at {q:?}", i + 1, j + 1), e)
                })?;
            }
        }
        Ok(out)
    }

    /// ℍ^{ij}(q)
    pub fn mass_inverse_at(&self, q: &[f64]) -> Result<Mat, ModelError> {
        let n = self.n();
        self.eval_array(&self.compiled.mass_inverse, n, n, q, "mass_inverse")
    }

    /// ∂ℍ^{ij}/∂q^k (q), one matrix per k.
    pub fn mass_inverse_derivs_at(&self, q: &[f64]) -> Result<Vec<Mat>, ModelError> {
        let n = self.n();
        self.compiled
            .d_mass_inverse
            .iter()
            .map(|d| self.eval_array(d, n, n, q, "d mass_inverse"))
            .collect()
    }

    pub fn potential_at(&self, q: &[f64]) -> Result<f64, ModelError> {
        self.compiled
            .potential
            .eval(q)
            .map_err(|e| ModelError::expr(format!("potential at {q:?}"), e))
    }

    /// Symbolic gradient of h at q.
    pub fn potential_grad_at(&self, q: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.compiled
            .d_potential
            .iter()
            .zip(&self.coords)
            .map(|(d, name)| {
                d.eval(q)
                    .map_err(|e| ModelError::expr(format!("d h / d{name} at {q:?}"), e))
            })
            .collect()
    }

    /// ϑ_{ai}(q) as an m×n matrix.
    pub fn actuation_at(&self, q: &[f64]) -> Result<Mat, ModelError> {
        self.eval_array(&self.compiled.actuation, self.m(), self.n(), q, "theta")
    }

    /// Same model with coordinate `i` of the result being coordinate
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<ModelSpec, ModelError> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(ModelError::Format(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        ModelSpec::new(
            perm.iter().map(|&p| self.coords[p].clone()).collect(),
            self.constants.clone(),
            perm.iter()
                .map(|&pi| {
                    perm.iter()
                        .map(|&pj| self.mass_inverse[pi][pj].clone())
                        .collect()
                })
                .collect(),
            self.potential.clone(),
            self.actuation
                .iter()
                .map(|row| perm.iter().map(|&p| row[p].clone()).collect())
                .collect(),
            perm.iter().map(|&p| self.equilibrium[p]).collect(),
        )
    }

    /// Same model with different constant values (all must already exist).
    pub fn with_constants(&self, overrides: &[(String, f64)]) -> Result<ModelSpec, ModelError> {
        let mut constants = self.constants.clone();
        for (name, value) in overrides {
            if constants.get(name).is_none() {
                return Err(ModelError::Format(format!("unknown constant `{name}`")));
            }
            constants.set(name.clone(), *value);
        }
        ModelSpec::new(
            self.coords.clone(),
            constants,
            self.mass_inverse.clone(),
            self.potential.clone(),
            self.actuation.clone(),
            self.equilibrium.clone(),
        )
    }
}
