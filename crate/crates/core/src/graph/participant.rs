use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! category_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $token:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $token)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }

            /// Case-insensitive; `-` and spaces are read as `_`.
            pub fn parse_token(token: &str) -> Option<Self> {
                let t = normalize_token(token);
                match t.as_str() {
                    $($token $(| $alias)* => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

pub(crate) fn normalize_token(token: &str) -> String {
    token
        .trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == '-' || c == ' ' { '_' } else { c })
        .collect()
}

category_enum!(Sex {
    Female => "female" | "f",
    Male => "male" | "m",
});

category_enum!(StudyProgram {
    General => "general",
    Sports => "sports" | "sport",
    Vocational => "vocational",
});

category_enum!(
    /// Cutpoints 18.5 / 25.0 / 30.0 kg/m².
    BmiCategory {
        Underweight => "underweight",
        Healthy => "healthy" | "normal",
        Overweight => "overweight",
        Obese => "obese",
    }
);

category_enum!(
    /// Used for both smoking and snuff.
    UseFrequency {
        Daily => "daily",
        Sometimes => "sometimes",
        Never => "never",
    }
);

category_enum!(Alcohol {
    Never => "never",
    AtMostMonthly => "at_most_monthly",
    TwiceMonthlyOrMore => "twice_monthly_or_more",
});

category_enum!(PhysicalActivity {
    None => "none",
    Light => "light" | "low",
    Medium => "medium",
    Hard => "hard" | "high",
});

category_enum!(Contraceptive {
    NonUser => "non_user" | "nonuser",
    ProgestinOnly => "progestin_only" | "progestin",
    LowEstrogen => "low_estrogen",
    HighEstrogen => "high_estrogen",
});

category_enum!(Carriage {
    Positive => "positive" | "pos",
    Negative => "negative" | "neg",
});

impl BmiCategory {
    pub fn from_bmi(bmi: f64) -> Option<Self> {
        if !bmi.is_finite() || bmi <= 0.0 {
            return None;
        }
        Some(if bmi < 18.5 {
            BmiCategory::Underweight
        } else if bmi < 25.0 {
            BmiCategory::Healthy
        } else if bmi < 30.0 {
            BmiCategory::Overweight
        } else {
            BmiCategory::Obese
        })
    }
}

impl Carriage {
    pub fn is_positive(self) -> bool {
        self == Carriage::Positive
    }
}

/// ISO 8601 year-week, written `2010-W38`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u8,
}

impl IsoWeek {
    pub fn new(year: i32, week: u8) -> Option<Self> {
        (1..=53).contains(&week).then_some(IsoWeek { year, week })
    }
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-W{:02}", self.year, self.week)
    }
}

impl FromStr for IsoWeek {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        let (year, week) = t
            .split_once('-')
            .ok_or_else(|| format!("`{s}` is not an ISO year-week"))?;
        let week = week.strip_prefix('W').unwrap_or(week);
        let year: i32 = year.parse().map_err(|_| format!("bad year in `{s}`"))?;
        let week: u8 = week.parse().map_err(|_| format!("bad week in `{s}`"))?;
        IsoWeek::new(year, week).ok_or_else(|| format!("week out of range in `{s}`"))
    }
}

impl Serialize for IsoWeek {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IsoWeek {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A study participant. Every attribute except `id` and the two carriage
/// phenotypes may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub sex: Option<Sex>,
    pub age: Option<f64>,
    pub school: Option<String>,
    pub study_program: Option<StudyProgram>,
    pub bmi_category: Option<BmiCategory>,
    pub smoking: Option<UseFrequency>,
    pub snuff: Option<UseFrequency>,
    pub alcohol: Option<Alcohol>,
    pub physical_activity: Option<PhysicalActivity>,
    pub contraceptive: Option<Contraceptive>,
    pub carriage_direct: Carriage,
    pub carriage_enrichment: Carriage,
    pub spa_type: Option<String>,
    pub representativeness: Option<u8>,
    pub attendance_week: Option<IsoWeek>,
}

impl Participant {
    /// A participant with every optional attribute missing.
    pub fn new(id: impl Into<String>, direct: Carriage, enrichment: Carriage) -> Self {
        Participant {
            id: id.into(),
            sex: None,
            age: None,
            school: None,
            study_program: None,
            bmi_category: None,
            smoking: None,
            snuff: None,
            alcohol: None,
            physical_activity: None,
            contraceptive: None,
            carriage_direct: direct,
            carriage_enrichment: enrichment,
            spa_type: None,
            representativeness: None,
            attendance_week: None,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty participant id".into());
        }
        if self.contraceptive.is_some() && self.sex != Some(Sex::Female) {
            return Err(format!(
                "participant {}: contraceptive recorded but sex is not female",
                self.id
            ));
        }
        if let Some(r) = self.representativeness {
            if r > 10 {
                return Err(format!(
                    "participant {}: representativeness {r} outside 0..=10",
                    self.id
                ));
            }
        }
        Ok(())
    }

    pub fn carriage(&self, t: Trait) -> Carriage {
        match t {
            Trait::Direct => self.carriage_direct,
            Trait::Enrichment => self.carriage_enrichment,
        }
    }

    /// Set an attribute from its label; `None` clears it.
    pub fn set_label(&mut self, attr: Attribute, label: Option<&str>) -> Result<()> {
        fn parse<T>(attr: Attribute, label: Option<&str>, f: fn(&str) -> Option<T>) -> Result<Option<T>> {
            label
                .map(|l| f(l).ok_or_else(|| Error::Config(format!("`{l}` is not a level of {attr}"))))
                .transpose()
        }
        let required = |c: Option<Carriage>| c.ok_or_else(|| Error::Config(format!("{attr} cannot be missing")));
        match attr {
            Attribute::Sex => self.sex = parse(attr, label, Sex::parse_token)?,
            Attribute::Age => {
                self.age = label
                    .map(|l| l.parse::<f64>().map_err(|_| Error::Config(format!("`{l}` is not an age"))))
                    .transpose()?
            }
            Attribute::School => self.school = label.map(String::from),
            Attribute::StudyProgram => self.study_program = parse(attr, label, StudyProgram::parse_token)?,
            Attribute::Bmi => self.bmi_category = parse(attr, label, BmiCategory::parse_token)?,
            Attribute::Smoking => self.smoking = parse(attr, label, UseFrequency::parse_token)?,
            Attribute::Snuff => self.snuff = parse(attr, label, UseFrequency::parse_token)?,
            Attribute::Alcohol => self.alcohol = parse(attr, label, Alcohol::parse_token)?,
            Attribute::PhysicalActivity => {
                self.physical_activity = parse(attr, label, PhysicalActivity::parse_token)?
            }
            Attribute::Contraceptive => self.contraceptive = parse(attr, label, Contraceptive::parse_token)?,
            Attribute::CarriageDirect => {
                self.carriage_direct = required(parse(attr, label, Carriage::parse_token)?)?
            }
            Attribute::CarriageEnrichment => {
                self.carriage_enrichment = required(parse(attr, label, Carriage::parse_token)?)?
            }
            Attribute::SpaType => self.spa_type = label.map(String::from),
            Attribute::Representativeness => {
                self.representativeness = parse(attr, label, |l| l.parse::<u8>().ok().filter(|v| *v <= 10))?
            }
            Attribute::AttendanceWeek => self.attendance_week = parse(attr, label, |l| l.parse::<IsoWeek>().ok())?,
        }
        Ok(())
    }

    /// Categorical label of an attribute, `None` when missing.
    pub fn label(&self, attr: Attribute) -> Result<Option<String>> {
        fn s<T: fmt::Display>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(|x| x.to_string())
        }
        Ok(match attr {
            Attribute::Sex => s(&self.sex),
            Attribute::School => self.school.clone(),
            Attribute::StudyProgram => s(&self.study_program),
            Attribute::Bmi => s(&self.bmi_category),
            Attribute::Smoking => s(&self.smoking),
            Attribute::Snuff => s(&self.snuff),
            Attribute::Alcohol => s(&self.alcohol),
            Attribute::PhysicalActivity => s(&self.physical_activity),
            Attribute::Contraceptive => s(&self.contraceptive),
            Attribute::CarriageDirect => Some(self.carriage_direct.to_string()),
            Attribute::CarriageEnrichment => Some(self.carriage_enrichment.to_string()),
            Attribute::SpaType => self.spa_type.clone(),
            Attribute::Representativeness => s(&self.representativeness),
            Attribute::AttendanceWeek => s(&self.attendance_week),
            Attribute::Age => {
                return Err(Error::Type("age is continuous, not categorical".into()))
            }
        })
    }
}

/// Carriage phenotype selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trait {
    Direct,
    Enrichment,
}

impl Trait {
    pub fn attribute(self) -> Attribute {
        match self {
            Trait::Direct => Attribute::CarriageDirect,
            Trait::Enrichment => Attribute::CarriageEnrichment,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Trait::Direct => "direct",
            Trait::Enrichment => "enrichment",
        }
    }
}

impl FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize_token(s).as_str() {
            "direct" | "carriage_direct" => Ok(Trait::Direct),
            "enrichment" | "carriage_enrichment" => Ok(Trait::Enrichment),
            other => Err(Error::Config(format!("unknown trait `{other}`"))),
        }
    }
}

/// Attribute selector for the categorical statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Sex,
    Age,
    School,
    StudyProgram,
    Bmi,
    Smoking,
    Snuff,
    Alcohol,
    PhysicalActivity,
    Contraceptive,
    CarriageDirect,
    CarriageEnrichment,
    SpaType,
    Representativeness,
    AttendanceWeek,
}

impl Attribute {
    pub const ALL: &'static [Attribute] = &[
        Attribute::Sex,
        Attribute::Age,
        Attribute::School,
        Attribute::StudyProgram,
        Attribute::Bmi,
        Attribute::Smoking,
        Attribute::Snuff,
        Attribute::Alcohol,
        Attribute::PhysicalActivity,
        Attribute::Contraceptive,
        Attribute::CarriageDirect,
        Attribute::CarriageEnrichment,
        Attribute::SpaType,
        Attribute::Representativeness,
        Attribute::AttendanceWeek,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Sex => "sex",
            Attribute::Age => "age",
            Attribute::School => "school",
            Attribute::StudyProgram => "study_program",
            Attribute::Bmi => "bmi_category",
            Attribute::Smoking => "smoking",
            Attribute::Snuff => "snuff",
            Attribute::Alcohol => "alcohol",
            Attribute::PhysicalActivity => "physical_activity",
            Attribute::Contraceptive => "contraceptive",
            Attribute::CarriageDirect => "carriage_direct",
            Attribute::CarriageEnrichment => "carriage_enrichment",
            Attribute::SpaType => "spa_type",
            Attribute::Representativeness => "representativeness",
            Attribute::AttendanceWeek => "attendance_week",
        }
    }

    /// Canonical level order for enum-valued attributes; `None` for open label sets.
    pub fn declared_levels(self) -> Option<Vec<&'static str>> {
        fn names<T: Copy>(all: &[T], f: fn(T) -> &'static str) -> Option<Vec<&'static str>> {
            Some(all.iter().map(|&v| f(v)).collect())
        }
        match self {
            Attribute::Sex => names(Sex::ALL, Sex::as_str),
            Attribute::StudyProgram => names(StudyProgram::ALL, StudyProgram::as_str),
            Attribute::Bmi => names(BmiCategory::ALL, BmiCategory::as_str),
            Attribute::Smoking | Attribute::Snuff => names(UseFrequency::ALL, UseFrequency::as_str),
            Attribute::Alcohol => names(Alcohol::ALL, Alcohol::as_str),
            Attribute::PhysicalActivity => names(PhysicalActivity::ALL, PhysicalActivity::as_str),
            Attribute::Contraceptive => names(Contraceptive::ALL, Contraceptive::as_str),
            Attribute::CarriageDirect | Attribute::CarriageEnrichment => {
                names(Carriage::ALL, Carriage::as_str)
            }
            _ => None,
        }
    }

    /// Reference category used for dummy coding (female, vocational, healthy
    /// BMI, daily smoking/snuff, twice-monthly-or-more alcohol, light activity,
    /// non-user, negative carriage).
    pub fn default_reference(self) -> Option<&'static str> {
        match self {
            Attribute::Sex => Some("female"),
            Attribute::StudyProgram => Some("vocational"),
            Attribute::Bmi => Some("healthy"),
            Attribute::Smoking | Attribute::Snuff => Some("daily"),
            Attribute::Alcohol => Some("twice_monthly_or_more"),
            Attribute::PhysicalActivity => Some("light"),
            Attribute::Contraceptive => Some("non_user"),
            Attribute::CarriageDirect | Attribute::CarriageEnrichment => Some("negative"),
            _ => None,
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = normalize_token(s);
        let attr = match t.as_str() {
            "sex" => Attribute::Sex,
            "age" => Attribute::Age,
            "school" => Attribute::School,
            "study_program" | "program" => Attribute::StudyProgram,
            "bmi" | "bmi_category" => Attribute::Bmi,
            "smoking" | "smoke" => Attribute::Smoking,
            "snuff" => Attribute::Snuff,
            "alcohol" => Attribute::Alcohol,
            "physical_activity" | "activity" => Attribute::PhysicalActivity,
            "contraceptive" | "contraceptives" => Attribute::Contraceptive,
            "carriage_direct" | "direct" => Attribute::CarriageDirect,
            "carriage_enrichment" | "enrichment" => Attribute::CarriageEnrichment,
            "spa_type" | "spa" => Attribute::SpaType,
            "representativeness" => Attribute::Representativeness,
            "attendance_week" | "week" => Attribute::AttendanceWeek,
            other => return Err(Error::Config(format!("unknown attribute `{other}`"))),
        };
        Ok(attr)
    }
}

/// Dense integer coding of a categorical attribute over the cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeColumn {
    pub attribute: Attribute,
    pub levels: Vec<String>,
    pub codes: Vec<Option<u32>>,
}

impl AttributeColumn {
    /// Build a column from raw labels. Levels keep `declared` order when given,
    /// otherwise sorted order; unobserved declared levels are dropped.
    pub fn from_labels(
        attribute: Attribute,
        labels: &[Option<String>],
        declared: Option<&[&str]>,
    ) -> Self {
        let observed: BTreeSet<&str> = labels.iter().flatten().map(String::as_str).collect();
        let levels: Vec<String> = match declared {
            Some(order) => order
                .iter()
                .filter(|l| observed.contains(**l))
                .map(|l| l.to_string())
                .collect(),
            None if attribute == Attribute::Representativeness => {
                let mut v: Vec<&str> = observed.into_iter().collect();
                v.sort_by_key(|s| s.parse::<u32>().unwrap_or(u32::MAX));
                v.into_iter().map(String::from).collect()
            }
            None => observed.into_iter().map(String::from).collect(),
        };
        let lookup: HashMap<&str, u32> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let codes = labels
            .iter()
            .map(|l| l.as_deref().map(|s| lookup[s]))
            .collect();
        AttributeColumn {
            attribute,
            levels,
            codes,
        }
    }

    pub fn level_index(&self, label: &str) -> Option<u32> {
        self.levels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.levels.len()];
        for c in self.codes.iter().flatten() {
            counts[*c as usize] += 1;
        }
        counts
    }
}

/// The participant table with an id index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cohort {
    participants: Vec<Participant>,
    index: HashMap<String, usize>,
}

impl Cohort {
    pub fn new(participants: Vec<Participant>) -> Result<Self> {
        let mut index = HashMap::with_capacity(participants.len());
        for (i, p) in participants.iter().enumerate() {
            p.validate().map_err(|m| Error::ingest(i + 1, m))?;
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::ingest(i + 1, format!("duplicate id `{}`", p.id)));
            }
        }
        Ok(Cohort {
            participants,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn participants(&self) -> &[Participant] {
        &self.participants
    }

    pub fn get(&self, i: usize) -> &Participant {
        &self.participants[i]
    }

    pub fn node(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn column(&self, attr: Attribute) -> Result<AttributeColumn> {
        let labels = self
            .participants
            .iter()
            .map(|p| p.label(attr))
            .collect::<Result<Vec<_>>>()?;
        let declared = attr.declared_levels();
        Ok(AttributeColumn::from_labels(attr, &labels, declared.as_deref()))
    }

    pub fn positives(&self, t: Trait) -> Vec<bool> {
        self.participants
            .iter()
            .map(|p| p.carriage(t).is_positive())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_are_case_insensitive() {
        assert_eq!(Sex::parse_token(" FEMALE "), Some(Sex::Female));
        assert_eq!(Alcohol::parse_token("Twice-Monthly-Or-More"), Some(Alcohol::TwiceMonthlyOrMore));
        assert_eq!(PhysicalActivity::parse_token("bogus"), None);
    }

    #[test]
    fn bmi_cutpoints() {
        assert_eq!(BmiCategory::from_bmi(18.49), Some(BmiCategory::Underweight));
        assert_eq!(BmiCategory::from_bmi(18.5), Some(BmiCategory::Healthy));
        assert_eq!(BmiCategory::from_bmi(24.99), Some(BmiCategory::Healthy));
        assert_eq!(BmiCategory::from_bmi(25.0), Some(BmiCategory::Overweight));
        assert_eq!(BmiCategory::from_bmi(30.0), Some(BmiCategory::Obese));
    }

    #[test]
    fn contraceptive_requires_female() {
        let mut p = Participant::new("P1", Carriage::Positive, Carriage::Positive);
        p.sex = Some(Sex::Male);
        p.contraceptive = Some(Contraceptive::NonUser);
        assert!(p.validate().is_err());
        p.sex = Some(Sex::Female);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn iso_week_round_trip() {
        let w: IsoWeek = "2010-w38".parse().unwrap();
        assert_eq!(w, IsoWeek { year: 2010, week: 38 });
        assert_eq!(w.to_string(), "2010-W38");
        assert!("2010-W60".parse::<IsoWeek>().is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = Participant::new("A", Carriage::Negative, Carriage::Negative);
        let err = Cohort::new(vec![a.clone(), a]).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 2, .. }));
    }

    #[test]
    fn column_uses_declared_order_and_skips_missing() {
        let mut ps = Vec::new();
        for (i, sex) in [Some(Sex::Male), None, Some(Sex::Female)].into_iter().enumerate() {
            let mut p = Participant::new(format!("P{i}"), Carriage::Negative, Carriage::Negative);
            p.sex = sex;
            ps.push(p);
        }
        let cohort = Cohort::new(ps).unwrap();
        let col = cohort.column(Attribute::Sex).unwrap();
        assert_eq!(col.levels, vec!["female", "male"]);
        assert_eq!(col.codes, vec![Some(1), None, Some(0)]);
        assert!(cohort.column(Attribute::Age).is_err());
    }
}
