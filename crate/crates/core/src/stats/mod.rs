//! Univariable descriptive statistics.

pub mod descriptive;
pub mod hypothesis;

pub use descriptive::{
    cross_tab, popularity_by_category, representativeness_summary, same_week_friend_proportion,
    CrossTab, PopularityRow, PopularityTable, RepresentativenessSummary, SameWeekTable, TTestVariant,
    TestChoice, TestKind, WeekRow,
};
pub use hypothesis::{
    chi_square, fisher_exact, normal_two_sided, one_way_anova, pooled_t_test, welch_t_test,
    TestOutcome,
};
