//! Cohort-level tables: prevalence cross-tabulations, popularity by
//! category, same-week friendship shares and the representativeness score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::hypothesis::{
    chi_square, expected_counts, fisher_exact, one_way_anova, pooled_t_test, welch_t_test,
};
use crate::error::{Error, Result};
use crate::graph::{popularity_all, Attribute, Cohort, IsoWeek, Layer, Nomination};
use crate::ingest::Warning;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ChiSquareYates,
    ChiSquare,
    FisherExact,
    TTest,
    Anova,
}

/// Which test `cross_tab` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestChoice {
    /// 2×2 with an expected cell below 5 → Fisher; other 2×2 → Yates χ²; larger → plain χ².
    Auto,
    Forced(TestKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTab {
    pub row_variable: Attribute,
    pub column_variable: Attribute,
    pub row_levels: Vec<String>,
    pub column_levels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub positive_column: Option<String>,
    /// Per-row percentage falling in `positive_column`.
    pub prevalence: Vec<f64>,
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
}

/// Cross-tabulate two categorical attributes over participants observed on both.
pub fn cross_tab(
    cohort: &Cohort,
    row_attr: Attribute,
    col_attr: Attribute,
    positive_column: Option<&str>,
    choice: TestChoice,
) -> Result<CrossTab> {
    let rows = cohort.column(row_attr)?;
    let cols = cohort.column(col_attr)?;
    let mut counts = vec![vec![0u64; cols.levels.len()]; rows.levels.len()];
    for (r, c) in rows.codes.iter().zip(&cols.codes) {
        if let (Some(r), Some(c)) = (r, c) {
            counts[*r as usize][*c as usize] += 1;
        }
    }
    if counts.len() < 2 || cols.levels.len() < 2 {
        return Err(Error::Undefined(format!(
            "{row_attr} × {col_attr} needs at least two observed levels on each side"
        )));
    }
    let positive_idx = match positive_column {
        Some(label) => Some(cols.level_index(label).ok_or_else(|| {
            Error::Config(format!("`{label}` is not an observed level of {col_attr}"))
        })? as usize),
        None => None,
    };
    let prevalence = match positive_idx {
        Some(j) => counts
            .iter()
            .map(|r| {
                let tot: u64 = r.iter().sum();
                if tot == 0 { f64::NAN } else { 100.0 * r[j] as f64 / tot as f64 }
            })
            .collect(),
        None => Vec::new(),
    };
    let is_2x2 = counts.len() == 2 && cols.levels.len() == 2;
    let kind = match choice {
        TestChoice::Forced(k) => k,
        TestChoice::Auto if is_2x2 => {
            let small = expected_counts(&counts).iter().flatten().any(|&e| e < 5.0);
            if small { TestKind::FisherExact } else { TestKind::ChiSquareYates }
        }
        TestChoice::Auto => TestKind::ChiSquare,
    };
    let outcome = match kind {
        TestKind::ChiSquareYates => chi_square(&counts, true)?,
        TestKind::ChiSquare => chi_square(&counts, false)?,
        TestKind::FisherExact if is_2x2 => {
            fisher_exact([[counts[0][0], counts[0][1]], [counts[1][0], counts[1][1]]])
        }
        TestKind::FisherExact => {
            return Err(Error::Unsupported("Fisher's exact test is implemented for 2×2 tables only".into()))
        }
        TestKind::TTest | TestKind::Anova => {
            return Err(Error::Unsupported("t-test and ANOVA need a numeric outcome, not a contingency table".into()))
        }
    };
    Ok(CrossTab {
        row_variable: row_attr,
        column_variable: col_attr,
        row_levels: rows.levels,
        column_levels: cols.levels,
        counts,
        positive_column: positive_column.map(String::from),
        prevalence,
        test: kind,
        statistic: outcome.statistic,
        p_value: outcome.p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestVariant {
    #[default]
    Welch,
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityRow {
    pub level: String,
    pub n: usize,
    pub mean_popularity: f64,
    pub never_nominated: usize,
    /// Share of this category never nominated, in percent.
    pub isolation_within_pct: f64,
    /// Share of all never-nominated participants that fall in this category, in percent.
    pub isolation_share_pct: f64,
    pub relative_frequency_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityTable {
    pub attribute: Attribute,
    pub layer: Layer,
    pub overall_mean: f64,
    pub rows: Vec<PopularityRow>,
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub warnings: Vec<Warning>,
}

/// Mean number of distinct nominators per category, with a t-test (two
/// categories) or one-way ANOVA (more).
pub fn popularity_by_category(
    cohort: &Cohort,
    nominations: &[Nomination],
    layer: Layer,
    attr: Attribute,
    variant: TTestVariant,
) -> Result<PopularityTable> {
    let col = cohort.column(attr)?;
    let pop = popularity_all(cohort.len(), nominations, layer);
    let mut warnings = Vec::new();
    if let Some(declared) = attr.declared_levels() {
        for l in declared.iter().filter(|l| !col.levels.iter().any(|c| c == *l)) {
            warnings.push(Warning {
                row: 0,
                message: format!("{attr} level `{l}` has no members; excluded"),
            });
        }
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); col.levels.len()];
    for (code, &p) in col.codes.iter().zip(&pop) {
        if let Some(c) = code {
            groups[*c as usize].push(p as f64);
        }
    }
    let observed: usize = groups.iter().map(Vec::len).sum();
    let isolated_total: usize = groups
        .iter()
        .map(|g| g.iter().filter(|&&p| p == 0.0).count())
        .sum();
    let rows = col
        .levels
        .iter()
        .zip(&groups)
        .map(|(level, g)| {
            let never = g.iter().filter(|&&p| p == 0.0).count();
            PopularityRow {
                level: level.clone(),
                n: g.len(),
                mean_popularity: g.iter().sum::<f64>() / g.len() as f64,
                never_nominated: never,
                isolation_within_pct: 100.0 * never as f64 / g.len() as f64,
                isolation_share_pct: if isolated_total == 0 {
                    0.0
                } else {
                    100.0 * never as f64 / isolated_total as f64
                },
                relative_frequency_pct: 100.0 * g.len() as f64 / observed as f64,
            }
        })
        .collect();
    let (kind, outcome) = match groups.len() {
        0 | 1 => {
            return Err(Error::Undefined(format!("{attr} has fewer than two observed categories")))
        }
        2 => {
            let t = match variant {
                TTestVariant::Welch => welch_t_test(&groups[0], &groups[1])?,
                TTestVariant::Pooled => pooled_t_test(&groups[0], &groups[1])?,
            };
            (TestKind::TTest, t)
        }
        _ => {
            let refs: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
            (TestKind::Anova, one_way_anova(&refs)?.0)
        }
    };
    Ok(PopularityTable {
        attribute: attr,
        layer,
        overall_mean: pop.iter().map(|&p| p as f64).sum::<f64>() / pop.len().max(1) as f64,
        rows,
        test: kind,
        statistic: outcome.statistic,
        p_value: outcome.p_value,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekRow {
    pub week: IsoWeek,
    pub n_participants: usize,
    pub same_week_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SameWeekTable {
    pub weeks: Vec<WeekRow>,
    /// Participant-weighted average over all weeks.
    pub weighted_average_pct: f64,
    pub n_included: usize,
    pub n_skipped_no_week: usize,
    pub n_skipped_no_friends: usize,
    pub warnings: Vec<Warning>,
}

/// For each participant with an attendance week, the share of the people they
/// nominated who attended in the same week; averaged per week and overall.
pub fn same_week_friend_proportion(cohort: &Cohort, nominations: &[Nomination]) -> SameWeekTable {
    let mut friends: Vec<Vec<usize>> = vec![Vec::new(); cohort.len()];
    for n in nominations {
        if !friends[n.from].contains(&n.to) {
            friends[n.from].push(n.to);
        }
    }
    let mut per_week: BTreeMap<IsoWeek, Vec<f64>> = BTreeMap::new();
    let mut no_week = 0;
    let mut no_friends = 0;
    let mut warnings = Vec::new();
    for (i, p) in cohort.participants().iter().enumerate() {
        let Some(week) = p.attendance_week else {
            no_week += 1;
            continue;
        };
        if friends[i].is_empty() {
            no_friends += 1;
            continue;
        }
        let same = friends[i]
            .iter()
            .filter(|&&j| cohort.get(j).attendance_week == Some(week))
            .count();
        per_week
            .entry(week)
            .or_default()
            .push(100.0 * same as f64 / friends[i].len() as f64);
    }
    if no_week > 0 {
        warnings.push(Warning {
            row: 0,
            message: format!("{no_week} participant(s) without attendance week skipped"),
        });
    }
    let all: Vec<f64> = per_week.values().flatten().copied().collect();
    SameWeekTable {
        weeks: per_week
            .iter()
            .map(|(w, v)| WeekRow {
                week: *w,
                n_participants: v.len(),
                same_week_pct: v.iter().sum::<f64>() / v.len() as f64,
            })
            .collect(),
        weighted_average_pct: if all.is_empty() { f64::NAN } else { all.iter().sum::<f64>() / all.len() as f64 },
        n_included: all.len(),
        n_skipped_no_week: no_week,
        n_skipped_no_friends: no_friends,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativenessSummary {
    /// Counts for scores 0 through 10.
    pub histogram: [u64; 11],
    pub n: u64,
    pub mean: f64,
    pub pct_at_least_five: f64,
}

pub fn representativeness_summary(cohort: &Cohort) -> Result<RepresentativenessSummary> {
    let mut histogram = [0u64; 11];
    for r in cohort.participants().iter().filter_map(|p| p.representativeness) {
        histogram[r as usize] += 1;
    }
    let n: u64 = histogram.iter().sum();
    if n == 0 {
        return Err(Error::Undefined("no participant has a representativeness score".into()));
    }
    let total: u64 = histogram.iter().enumerate().map(|(s, c)| s as u64 * c).sum();
    let high: u64 = histogram[5..].iter().sum();
    Ok(RepresentativenessSummary {
        histogram,
        n,
        mean: total as f64 / n as f64,
        pct_at_least_five: 100.0 * high as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Carriage, Contexts, Participant, Sex};

    fn person(id: &str, sex: Sex, direct: bool) -> Participant {
        let c = if direct { Carriage::Positive } else { Carriage::Negative };
        let mut p = Participant::new(id, c, Carriage::Negative);
        p.sex = Some(sex);
        p
    }

    fn nom(from: usize, to: usize) -> Nomination {
        Nomination { from, to, contexts: Contexts::NONE }
    }

    #[test]
    fn prevalence_per_row() {
        let mut ps = Vec::new();
        for i in 0..10 {
            ps.push(person(&format!("F{i}"), Sex::Female, i < 3));
            ps.push(person(&format!("M{i}"), Sex::Male, i < 6));
        }
        let c = Cohort::new(ps).unwrap();
        let t = cross_tab(&c, Attribute::Sex, Attribute::CarriageDirect, Some("positive"), TestChoice::Auto).unwrap();
        assert_eq!(t.row_levels, vec!["female", "male"]);
        assert_eq!(t.prevalence, vec![30.0, 60.0]);
        assert_eq!(t.counts, vec![vec![3, 7], vec![6, 4]]);
        // expected cells are 4.5 and 5.5 → Fisher
        assert_eq!(t.test, TestKind::FisherExact);
        let forced = cross_tab(&c, Attribute::Sex, Attribute::CarriageDirect, None, TestChoice::Forced(TestKind::ChiSquareYates)).unwrap();
        assert_eq!(forced.test, TestKind::ChiSquareYates);
        assert!(forced.prevalence.is_empty());
    }

    #[test]
    fn continuous_attribute_is_type_error() {
        let c = Cohort::new(vec![person("A", Sex::Male, true)]).unwrap();
        let err = cross_tab(&c, Attribute::Age, Attribute::CarriageDirect, None, TestChoice::Auto).unwrap_err();
        assert!(matches!(err, Error::Type(_)));
    }

    #[test]
    fn fisher_forced_on_larger_table_unsupported() {
        let mut ps = Vec::new();
        for (i, s) in ["a", "b", "c", "a", "b", "c"].iter().enumerate() {
            let mut p = person(&format!("P{i}"), Sex::Male, i % 2 == 0);
            p.school = Some(s.to_string());
            ps.push(p);
        }
        let c = Cohort::new(ps).unwrap();
        let err = cross_tab(&c, Attribute::School, Attribute::CarriageDirect, None, TestChoice::Forced(TestKind::FisherExact)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn popularity_table_with_no_nominations() {
        let ps = vec![person("A", Sex::Male, true), person("B", Sex::Male, false), person("C", Sex::Female, true), person("D", Sex::Female, false)];
        let c = Cohort::new(ps).unwrap();
        let t = popularity_by_category(&c, &[], Layer::Overall, Attribute::Sex, TTestVariant::Welch).unwrap();
        assert_eq!(t.overall_mean, 0.0);
        assert!(t.rows.iter().all(|r| r.isolation_within_pct == 100.0));
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn popularity_means_and_unobserved_level_warning() {
        let mut ps = Vec::new();
        for i in 0..6 {
            let mut p = person(&format!("P{i}"), if i < 3 { Sex::Female } else { Sex::Male }, false);
            p.smoking = Some(crate::graph::UseFrequency::ALL[i % 2]);
            ps.push(p);
        }
        let c = Cohort::new(ps).unwrap();
        let noms = [nom(3, 0), nom(4, 0), nom(5, 1), nom(0, 3)];
        let t = popularity_by_category(&c, &noms, Layer::Overall, Attribute::Sex, TTestVariant::Pooled).unwrap();
        assert!((t.rows[0].mean_popularity - 1.0).abs() < 1e-12);
        assert!((t.rows[1].mean_popularity - 1.0 / 3.0).abs() < 1e-12);
        let s = popularity_by_category(&c, &noms, Layer::Overall, Attribute::Smoking, TTestVariant::Welch).unwrap();
        assert_eq!(s.warnings.len(), 1, "`never` smoking level is unobserved");
    }

    fn weekly(weeks: &[u8]) -> Cohort {
        let ps = weeks
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut p = person(&format!("P{i}"), Sex::Male, false);
                p.attendance_week = IsoWeek::new(2011, *w);
                p
            })
            .collect();
        Cohort::new(ps).unwrap()
    }

    #[test]
    fn same_week_all_friends() {
        let c = weekly(&[5, 5, 5]);
        let t = same_week_friend_proportion(&c, &[nom(0, 1), nom(0, 2), nom(1, 2)]);
        assert_eq!(t.weighted_average_pct, 100.0);
        assert_eq!(t.n_skipped_no_friends, 1);
    }

    #[test]
    fn same_week_half() {
        let c = weekly(&[5, 5, 6]);
        let t = same_week_friend_proportion(&c, &[nom(0, 1), nom(0, 2)]);
        assert_eq!(t.weeks[0].same_week_pct, 50.0);
    }

    fn scored(scores: &[u8]) -> Cohort {
        let ps = scores
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut p = person(&format!("P{i}"), Sex::Male, false);
                p.representativeness = Some(*s);
                p
            })
            .collect();
        Cohort::new(ps).unwrap()
    }

    #[test]
    fn representativeness_examples() {
        let a = representativeness_summary(&scored(&[5, 5, 5])).unwrap();
        assert_eq!((a.mean, a.pct_at_least_five), (5.0, 100.0));
        let b = representativeness_summary(&scored(&[0, 10])).unwrap();
        assert_eq!((b.mean, b.pct_at_least_five), (5.0, 50.0));
        let none = Cohort::new(vec![person("A", Sex::Male, false)]).unwrap();
        assert!(matches!(representativeness_summary(&none), Err(Error::Undefined(_))));
    }
}
