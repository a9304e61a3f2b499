use std::collections::BTreeMap;
use std::path::Path;

use toml::{Table, Value};

use super::{apply_affine, AffineChart, ModelError, ModelSpec};
use crate::expr::{parse, Env, Expr};
use crate::numerics::Mat;

/// A parsed (not yet validated) model file.
///
/// ```text
/// [model]        n = 2, coords = ["x", "y"], equilibrium = [0, 0]
/// [constants]    A = 2.0, ...
/// [mass_inverse] H11 = "...", H12 = "...", H22 = "..."
/// [potential]    h = "..."
/// [actuation]    theta1 = ["expr", "expr"], ...
/// [chart]        T = [[...]], c = [...], coords = [...]   (optional)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub coords: Vec<String>,
    pub equilibrium: Vec<f64>,
    pub constants: BTreeMap<String, f64>,
    pub mass_inverse: Vec<Vec<Expr>>,
    pub potential: Expr,
    pub actuation: Vec<Vec<Expr>>,
    pub chart: Option<ChartEntry>,
}

/// Chart section; entries may refer to model constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartEntry {
    pub t: Vec<Vec<Expr>>,
    pub offset: Vec<Expr>,
    pub coords: Option<Vec<String>>,
}

fn fmt_err(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

fn section<'a>(root: &'a Table, name: &str) -> Result<&'a Table, ModelError> {
    root.get(name)
        .ok_or_else(|| fmt_err(format!("missing [{name}] section")))?
        .as_table()
        .ok_or_else(|| fmt_err(format!("[{name}] must be a section")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64, ModelError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(fmt_err(format!("{what} must be a number"))),
    }
}

fn as_expr(v: &Value, what: &str) -> Result<Expr, ModelError> {
    match v {
        Value::String(s) => parse(s).map_err(|e| ModelError::expr(what, e)),
        Value::Float(_) | Value::Integer(_) => Ok(Expr::Num(as_f64(v, what)?)),
        _ => Err(fmt_err(format!(
            "{what} must be an expression string or a number"
        ))),
    }
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, ModelError> {
    v.as_array()
        .ok_or_else(|| fmt_err(format!("{what} must be an array")))
}

fn as_names(v: &Value, what: &str) -> Result<Vec<String>, ModelError> {
    as_array(v, what)?
        .iter()
        .map(|c| {
            let s = c
                .as_str()
                .ok_or_else(|| fmt_err(format!("{what} entries must be strings")))?;
            let valid = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(fmt_err(format!("invalid name {s:?} in {what}")));
            }
            Ok(s.to_string())
        })
        .collect()
}

/// `H12` (n < 10) or `H1_2` → zero-based (0, 1).
fn mass_key(key: &str, n: usize) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('H')?;
    let (i, j) = if let Some((a, b)) = rest.split_once('_') {
        (a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)
    } else if n < 10 && rest.len() == 2 && rest.bytes().all(|b| b.is_ascii_digit()) {
        (
            (rest.as_bytes()[0] - b'0') as usize,
            (rest.as_bytes()[1] - b'0') as usize,
        )
    } else {
        return None;
    };
    (1..=n).contains(&i).then_some(())?;
    (1..=n).contains(&j).then_some(())?;
    Some((i - 1, j - 1))
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<ModelFile, ModelError> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| fmt_err(e.to_string()))?;
        for key in root.keys() {
            if !matches!(
                key.as_str(),
                "model" | "constants" | "mass_inverse" | "potential" | "actuation" | "chart"
            ) {
                return Err(fmt_err(format!("unknown section [{key}]")));
            }
        }

        let model = section(&root, "model")?;
        let coords = as_names(
            model
                .get("coords")
                .ok_or_else(|| fmt_err("[model] needs coords"))?,
            "coords",
        )?;
        let n = coords.len();
        if let Some(v) = model.get("n") {
            let declared = as_f64(v, "n")?;
            if declared != n as f64 {
                return Err(fmt_err(format!("n = {declared} but {n} coords given")));
            }
        }
        let equilibrium = match model.get("equilibrium") {
            Some(v) => as_array(v, "equilibrium")?
                .iter()
                .map(|x| as_f64(x, "equilibrium entry"))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![0.0; n],
        };

        let mut constants = BTreeMap::new();
        if let Some(c) = root.get("constants") {
            let c = c
                .as_table()
                .ok_or_else(|| fmt_err("[constants] must be a section"))?;
            for (k, v) in c {
                let value = as_f64(v, &format!("constant {k}"))?;
                if !value.is_finite() {
                    return Err(fmt_err(format!("constant {k} is not finite")));
                }
                constants.insert(k.clone(), value);
            }
        }

        let mi = section(&root, "mass_inverse")?;
        let mut entries: Vec<Vec<Option<Expr>>> = vec![vec![None; n]; n];
        for (k, v) in mi {
            let (i, j) = mass_key(k, n)
                .ok_or_else(|| fmt_err(format!("bad mass_inverse key `{k}` for n = {n}")))?;
            entries[i][j] = Some(as_expr(v, k)?);
        }
        let mut mass_inverse = vec![vec![Expr::Num(0.0); n]; n];
        for i in 0..n {
            for j in i..n {
                let upper = entries[i][j].clone().ok_or_else(|| {
                    fmt_err(format!("mass_inverse entry H{}{} missing", i + 1, j + 1))
                })?;
                // An explicitly given lower entry is kept so that symmetry
                // gets checked instead of assumed.
                let lower = entries[j][i].clone().unwrap_or_else(|| upper.clone());
                mass_inverse[i][j] = upper;
                mass_inverse[j][i] = lower;
            }
        }

        let pot = section(&root, "potential")?;
        let potential = as_expr(
            pot.get("h").ok_or_else(|| fmt_err("[potential] needs h"))?,
            "h",
        )?;

        let act = section(&root, "actuation")?;
        let mut rows: BTreeMap<usize, Vec<Expr>> = BTreeMap::new();
        for (k, v) in act {
            let idx: usize = k
                .strip_prefix("theta")
                .and_then(|s| s.parse().ok())
                .filter(|&i| i >= 1)
                .ok_or_else(|| fmt_err(format!("bad actuation key `{k}`")))?;
            let row = as_array(v, k)?
                .iter()
                .map(|x| as_expr(x, k))
                .collect::<Result<Vec<_>, _>>()?;
            rows.insert(idx, row);
        }
        if rows.keys().copied().ne(1..=rows.len()) {
            return Err(fmt_err(
                "actuation rows must be theta1..thetam without gaps",
            ));
        }
        let actuation = rows.into_values().collect();

        let chart = match root.get("chart") {
            None => None,
            Some(c) => {
                let c = c
                    .as_table()
                    .ok_or_else(|| fmt_err("[chart] must be a section"))?;
                let t = as_array(c.get("T").ok_or_else(|| fmt_err("[chart] needs T"))?, "T")?
                    .iter()
                    .map(|row| {
                        as_array(row, "T row")?
                            .iter()
                            .map(|x| as_expr(x, "T entry"))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let offset = match c.get("c") {
                    Some(v) => as_array(v, "c")?
                        .iter()
                        .map(|x| as_expr(x, "c entry"))
                        .collect::<Result<Vec<_>, _>>()?,
                    None => vec![Expr::Num(0.0); n],
                };
                let coords = c
                    .get("coords")
                    .map(|v| as_names(v, "chart coords"))
                    .transpose()?;
                Some(ChartEntry { t, offset, coords })
            }
        };

        Ok(ModelFile {
            coords,
            equilibrium,
            constants,
            mass_inverse,
            potential,
            actuation,
            chart,
        })
    }

    /// Validates the model (with constant overrides) and applies the chart
    /// section if present.
    pub fn build(&self, overrides: &[(String, f64)]) -> Result<ModelSpec, ModelError> {
        let mut constants = self.constants.clone();
        for (name, value) in overrides {
            match constants.get_mut(name) {
                Some(slot) => *slot = *value,
                None => return Err(fmt_err(format!("unknown constant `{name}`"))),
            }
        }
        let env: Env = constants.into_iter().collect();
        let spec = ModelSpec::new(
            self.coords.clone(),
            env.clone(),
            self.mass_inverse.clone(),
            self.potential.clone(),
            self.actuation.clone(),
            self.equilibrium.clone(),
        )?;
        let Some(chart) = &self.chart else {
            return Ok(spec);
        };
        let n = spec.n();
        if chart.t.len() != n || chart.t.iter().any(|r| r.len() != n) || chart.offset.len() != n {
            return Err(fmt_err(format!(
                "chart T must be {n}x{n} and c of length {n}"
            )));
        }
        let eval = |e: &Expr| e.eval(&env).map_err(|err| ModelError::expr("chart", err));
        let t_rows = chart
            .t
            .iter()
            .map(|row| row.iter().map(eval).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let offset = chart
            .offset
            .iter()
            .map(eval)
            .collect::<Result<Vec<_>, _>>()?;
        let mut affine = AffineChart::new(Mat::from_rows(&t_rows), offset);
        affine.coords = chart.coords.clone();
        apply_affine(&spec, &affine)
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec, ModelError> {
    load_model_with(path, &[])
}

/// Loads a model file with constant overrides applied before the chart.
pub fn load_model_with(
    path: impl AsRef<Path>,
    overrides: &[(String, f64)],
) -> Result<ModelSpec, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    ModelFile::parse(&text)?.build(overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"
[model]
n = 2
coords = ["x", "y"]
equilibrium = [0, 0]

[constants]
k = 2.0

[mass_inverse]
H11 = 1
H12 = "0"
H22 = "k"

[potential]
h = "x^2 + k*y^2"

[actuation]
theta1 = ["0", "1"]
"#;

    #[test]
    fn parses_flat_model() {
        let spec = ModelFile::parse(FLAT).unwrap().build(&[]).unwrap();
        assert_eq!(spec.n(), 2);
        assert_eq!(spec.m(), 1);
        assert_eq!(spec.mass_inverse_at(&[0.0, 0.0]).unwrap()[(1, 1)], 2.0);
    }

    #[test]
    fn overrides_apply_and_unknown_ones_fail() {
        let file = ModelFile::parse(FLAT).unwrap();
        let spec = file.build(&[("k".into(), 5.0)]).unwrap();
        assert_eq!(spec.mass_inverse_at(&[0.0, 0.0]).unwrap()[(1, 1)], 5.0);
        assert!(file.build(&[("nope".into(), 1.0)]).is_err());
    }

    #[test]
    fn explicit_lower_entry_is_checked() {
        let text = FLAT.replace("H22 = \"k\"", "H22 = \"k\"\nH21 = \"0.5*x\"");
        let err = ModelFile::parse(&text).unwrap().build(&[]).unwrap_err();
        assert!(matches!(
            err,
            ModelError::Invariant {
                name: "mass_inverse symmetric",
                ..
            }
        ));
    }

    #[test]
    fn missing_entry_and_bad_keys() {
        let text = FLAT.replace("H12 = \"0\"\n", "");
        assert!(ModelFile::parse(&text).is_err());
        let text = FLAT.replace("H12", "H13");
        assert!(ModelFile::parse(&text).is_err());
        let text = FLAT.replace("theta1", "theta2");
        assert!(ModelFile::parse(&text).is_err());
        assert!(ModelFile::parse("[model]\ncoords = [\"x\"").is_err());
    }

    #[test]
    fn expression_errors_carry_offsets() {
        let text = FLAT.replace("x^2 + k*y^2", "x^2 + * y");
        match ModelFile::parse(&text) {
            Err(ModelError::Expr { source, .. }) => {
                assert!(matches!(
                    source,
                    crate::expr::ExprError::Syntax { offset: 6, .. }
                ))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wide_keys() {
        assert_eq!(mass_key("H12", 3), Some((0, 1)));
        assert_eq!(mass_key("H10_12", 12), Some((9, 11)));
        assert_eq!(mass_key("H12", 12), None);
        assert_eq!(mass_key("H04", 5), None);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_model("/nonexistent/model.toml"),
            Err(ModelError::Io(_))
        ));
    }
}
