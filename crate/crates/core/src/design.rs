//! Dummy-coded covariate matrices over complete cases.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Attribute, Cohort};

pub const INTERCEPT: &str = "(intercept)";

/// Covariate matrix over the participants with every requested attribute observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    /// Cohort row index of each design row, ascending.
    pub rows: Vec<usize>,
}

impl Design {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `mask[i]` is true when cohort row `i` is a design row.
    pub fn mask(&self, n_nodes: usize) -> Vec<bool> {
        let mut m = vec![false; n_nodes];
        for &r in &self.rows {
            m[r] = true;
        }
        m
    }

    /// Append a numeric column.
    pub fn push_column(&mut self, name: &str, values: &[f64]) {
        assert_eq!(values.len(), self.n(), "one value per design row");
        let p = self.x.ncols();
        self.x = self.x.clone().insert_column(p, 0.0);
        for (i, v) in values.iter().enumerate() {
            self.x[(i, p)] = *v;
        }
        self.names.push(name.to_string());
    }
}

/// Build `[1, dummies…]` for `attributes`. Categorical attributes get one
/// indicator per non-reference level observed among complete cases, named
/// `attribute=level`; `age` enters as a numeric column. `references`
/// overrides the default reference level per attribute.
pub fn dummy_design(
    cohort: &Cohort,
    attributes: &[Attribute],
    references: &[(Attribute, String)],
    intercept: bool,
) -> Result<Design> {
    let n = cohort.len();
    let mut labels: Vec<Vec<Option<String>>> = Vec::with_capacity(attributes.len());
    for &a in attributes {
        if a == Attribute::Age {
            labels.push(
                cohort
                    .participants()
                    .iter()
                    .map(|p| p.age.map(|v| v.to_string()))
                    .collect(),
            );
        } else {
            labels.push(
                cohort
                    .participants()
                    .iter()
                    .map(|p| p.label(a))
                    .collect::<Result<_>>()?,
            );
        }
    }
    let rows: Vec<usize> = (0..n)
        .filter(|&i| labels.iter().all(|l| l[i].is_some()))
        .collect();
    if rows.is_empty() {
        return Err(Error::Undefined("no participant has every covariate observed".into()));
    }
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if intercept {
        names.push(INTERCEPT.to_string());
        columns.push(vec![1.0; rows.len()]);
    }
    for (k, &a) in attributes.iter().enumerate() {
        if a == Attribute::Age {
            names.push("age".into());
            columns.push(
                rows.iter()
                    .map(|&i| cohort.get(i).age.expect("complete case"))
                    .collect(),
            );
            continue;
        }
        let observed: Vec<&str> = rows.iter().map(|&i| labels[k][i].as_deref().unwrap()).collect();
        let mut levels: Vec<&str> = match a.declared_levels() {
            Some(order) => order.into_iter().filter(|l| observed.contains(l)).collect(),
            None => {
                let mut v = observed.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        };
        let reference = references
            .iter()
            .find(|(ra, _)| *ra == a)
            .map(|(_, l)| l.as_str())
            .or_else(|| a.default_reference())
            .filter(|r| levels.contains(r))
            .or_else(|| levels.first().copied());
        if let Some((_, want)) = references.iter().find(|(ra, _)| *ra == a) {
            if !levels.contains(&want.as_str()) {
                return Err(Error::Config(format!("reference level `{want}` of {a} is not observed")));
            }
        }
        levels.retain(|l| Some(*l) != reference);
        for level in levels {
            names.push(format!("{a}={level}"));
            columns.push(observed.iter().map(|o| (*o == level) as u8 as f64).collect());
        }
    }
    let x = DMatrix::from_fn(rows.len(), columns.len(), |i, j| columns[j][i]);
    Ok(Design { names, x, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Carriage, Participant, Sex};

    fn cohort() -> Cohort {
        let mut ps = Vec::new();
        for (i, sex) in [Some(Sex::Female), Some(Sex::Male), None, Some(Sex::Male)].into_iter().enumerate() {
            let mut p = Participant::new(format!("p{i}"), Carriage::Negative, Carriage::Negative);
            p.sex = sex;
            p.age = Some(16.0 + i as f64);
            ps.push(p);
        }
        Cohort::new(ps).unwrap()
    }

    #[test]
    fn reference_is_dropped_and_missing_rows_excluded() {
        let d = dummy_design(&cohort(), &[Attribute::Sex, Attribute::Age], &[], true).unwrap();
        assert_eq!(d.names, vec!["(intercept)", "sex=male", "age"]);
        assert_eq!(d.rows, vec![0, 1, 3]);
        assert_eq!(d.x.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn reference_override() {
        let d = dummy_design(&cohort(), &[Attribute::Sex], &[(Attribute::Sex, "male".into())], true).unwrap();
        assert_eq!(d.names, vec!["(intercept)", "sex=female"]);
        assert!(dummy_design(&cohort(), &[Attribute::Sex], &[(Attribute::Sex, "x".into())], true).is_err());
    }
}
