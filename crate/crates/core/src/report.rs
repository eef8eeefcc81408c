//! Run manifests, JSON result envelopes, text tables and graph exports.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autocorr::AutocorrFit;
use crate::ergm::DyadicErgmFit;
use crate::error::{Error, Result};
use crate::exposure::{FriendExposureResult, RelativeRiskTable};
use crate::graph::{Attribute, Cohort, ContactNetwork, Layer};
use crate::ingest::IngestReport;
use crate::permutation::{CategoryTransmissionResult, PermutationTestResult};
use crate::stats::{CrossTab, PopularityTable, RepresentativenessSummary, SameWeekTable};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Unreadable inputs are ingestion failures.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub schema_version: u32,
    /// Digest of command, parameters, input digests, seed and version.
    pub manifest_id: String,
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    /// `flag` when given on the command line, `auto` when drawn at startup.
    pub seed_source: Option<String>,
    pub version: String,
    pub threads: usize,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
    /// RFC 3339 UTC; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
}

pub fn timestamp_now() -> String {
    let t = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(|s| std::time::UNIX_EPOCH + std::time::Duration::from_secs(s))
        .unwrap_or_else(std::time::SystemTime::now);
    humantime::format_rfc3339_seconds(t).to_string()
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: Vec<String>,
        inputs: Vec<InputDigest>,
        seed: Option<(u64, &str)>,
        parameters: serde_json::Value,
        threads: usize,
    ) -> Self {
        let mut m = RunManifest {
            schema: "contactnet/manifest".into(),
            schema_version: SCHEMA_VERSION,
            manifest_id: String::new(),
            command: command.into(),
            argv,
            inputs,
            seed: seed.map(|s| s.0),
            seed_source: seed.map(|s| s.1.to_string()),
            version: VERSION.into(),
            threads,
            parameters,
            outputs: Vec::new(),
            timestamp: timestamp_now(),
        };
        m.manifest_id = m.compute_id();
        m
    }

    /// Stable across thread counts, output locations and wall-clock time.
    pub fn compute_id(&self) -> String {
        let key = serde_json::json!({
            "command": self.command,
            "inputs": self.inputs.iter().map(|i| (&i.role, &i.sha256)).collect::<Vec<_>>(),
            "seed": self.seed,
            "version": self.version,
            "parameters": self.parameters,
        });
        sha256_hex(key.to_string().as_bytes())[..16].to_string()
    }
}

/// Wrapper written around every JSON result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub schema_version: u32,
    pub manifest_id: String,
    pub result: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, manifest_id: &str, result: T) -> Self {
        Envelope {
            schema: format!("contactnet/{kind}"),
            schema_version: SCHEMA_VERSION,
            manifest_id: manifest_id.into(),
            result,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: Layer,
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub isolates: usize,
}

pub fn layer_summary(net: &ContactNetwork) -> LayerSummary {
    let n = net.node_count();
    LayerSummary {
        layer: net.layer(),
        nodes: n,
        edges: net.edge_count(),
        mean_degree: if n == 0 { 0.0 } else { 2.0 * net.edge_count() as f64 / n as f64 },
        isolates: (0..n).filter(|&i| net.degree(i) == 0).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceBlock {
    pub trait_name: String,
    pub n_positive: usize,
    pub prevalence_pct: f64,
    pub tables: Vec<CrossTab>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeReport {
    pub layer: Layer,
    pub ingest: IngestReport,
    pub networks: Vec<LayerSummary>,
    pub prevalence: Vec<PrevalenceBlock>,
    pub popularity: Vec<PopularityTable>,
    pub same_week: SameWeekTable,
    pub representativeness: Option<RepresentativenessSummary>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyLayerResult {
    /// Edges with both endpoints observed on the attribute.
    pub total_relationships: usize,
    #[serde(flatten)]
    pub test: PermutationTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    pub attribute: String,
    pub layers: Vec<HomophilyLayerResult>,
    pub categories: Vec<CategoryTransmissionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgmReport {
    pub joint: bool,
    pub fits: Vec<DyadicErgmFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrReport {
    pub trait_name: String,
    pub layer: Layer,
    pub covariates: Vec<String>,
    pub n_excluded_incomplete: usize,
    pub fit: AutocorrFit,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitReport {
    pub trait_name: String,
    pub exposure: FriendExposureResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrReport {
    pub trait_name: String,
    pub tables: Vec<RelativeRiskTable>,
}

// ---- text rendering -------------------------------------------------------

/// Left-aligned first column, right-aligned others.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let ncol = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (j, c) in r.iter().enumerate().take(ncol) {
            width[j] = width[j].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (j, c) in cells.iter().enumerate() {
            let pad = width[j] - c.chars().count();
            if j == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn fmt_p(p: f64) -> String {
    if p.is_nan() {
        "NA".into()
    } else if p < 0.001 {
        "< 0.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn f(x: f64, d: usize) -> String {
    if x.is_finite() {
        format!("{x:.d$}")
    } else {
        "NA".into()
    }
}

pub fn render_describe(r: &DescribeReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Networks");
    let rows: Vec<Vec<String>> = r
        .networks
        .iter()
        .map(|n| vec![n.layer.to_string(), n.nodes.to_string(), n.edges.to_string(), f(n.mean_degree, 2), n.isolates.to_string()])
        .collect();
    s.push_str(&text_table(&["Layer", "Nodes", "Edges", "Mean degree", "Isolates"], &rows));
    for block in &r.prevalence {
        let _ = writeln!(s, "\nPrevalence by category: {} ({} positive, {:.1} %)", block.trait_name, block.n_positive, block.prevalence_pct);
        let mut rows = Vec::new();
        for t in &block.tables {
            rows.push(vec![t.row_variable.to_string(), String::new(), String::new(), String::new(), fmt_p(t.p_value)]);
            let pos = t.positive_column.as_ref().and_then(|p| t.column_levels.iter().position(|c| c == p));
            for (i, level) in t.row_levels.iter().enumerate() {
                let (p, n) = match pos {
                    Some(j) => (t.counts[i][j], t.counts[i].iter().sum::<u64>() - t.counts[i][j]),
                    None => (0, 0),
                };
                rows.push(vec![format!("  {level}"), p.to_string(), n.to_string(), format!("{:.1} %", t.prevalence[i]), String::new()]);
            }
        }
        s.push_str(&text_table(&["Variable", "Positive", "Negative", "Prevalence", "P-value"], &rows));
    }
    let _ = writeln!(s, "\nPopularity ({} layer)", r.layer);
    let mut rows = Vec::new();
    for t in &r.popularity {
        rows.push(vec![format!("{} (mean {:.2})", t.attribute, t.overall_mean), String::new(), String::new(), String::new(), String::new(), fmt_p(t.p_value)]);
        for row in &t.rows {
            rows.push(vec![
                format!("  {}", row.level),
                f(row.mean_popularity, 2),
                f(row.isolation_within_pct, 2),
                f(row.isolation_share_pct, 2),
                f(row.relative_frequency_pct, 2),
                String::new(),
            ]);
        }
    }
    s.push_str(&text_table(
        &["Variable", "Average popularity", "Isolated within (%)", "Share of isolated (%)", "Relative frequency (%)", "P-value"],
        &rows,
    ));
    let _ = writeln!(s, "\nSame-week friends");
    let rows: Vec<Vec<String>> = r
        .same_week
        .weeks
        .iter()
        .map(|w| vec![w.week.to_string(), w.n_participants.to_string(), format!("{:.2} %", w.same_week_pct)])
        .collect();
    s.push_str(&text_table(&["Week", "Participants", "Friends same week"], &rows));
    let _ = writeln!(s, "Weighted average: {:.2} %", r.same_week.weighted_average_pct);
    if let Some(rep) = &r.representativeness {
        let _ = writeln!(s, "\nRepresentativeness (n = {}, mean {:.2}, score >= 5: {:.1} %)", rep.n, rep.mean, rep.pct_at_least_five);
        let rows: Vec<Vec<String>> = rep.histogram.iter().enumerate().map(|(k, c)| vec![k.to_string(), c.to_string()]).collect();
        s.push_str(&text_table(&["Score", "Count"], &rows));
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

pub const HOMOPHILY_COLUMNS: [&str; 11] = [
    "Network",
    "Total relationships",
    "Equal relationships",
    "MIN",
    "Q1",
    "Median",
    "Q3",
    "MAX",
    "SD",
    "P-value",
    "Empirical P",
];

pub fn render_homophily(r: &HomophilyReport) -> String {
    let mut s = String::new();
    if let Some(first) = r.layers.first() {
        let restrict = first.test.restrict.as_deref().map(|l| format!(", both endpoints {l}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "Same-attribute relationships: {}{} ({} simulations, {}, seed {})",
            r.attribute,
            restrict,
            first.test.n_sims,
            first.test.mode.as_str(),
            first.test.seed
        );
    }
    let rows: Vec<Vec<String>> = r
        .layers
        .iter()
        .map(|l| {
            let t = &l.test;
            let q = &t.sims_summary;
            vec![
                t.layer.clone(),
                l.total_relationships.to_string(),
                t.observed.to_string(),
                f(q.min, 0),
                f(q.q1, 0),
                f(q.median, 0),
                f(q.q3, 0),
                f(q.max, 0),
                f(q.sd, 1),
                fmt_p(t.p_value),
                fmt_p(t.p_empirical),
            ]
        })
        .collect();
    s.push_str(&text_table(&HOMOPHILY_COLUMNS, &rows));
    if !r.categories.is_empty() {
        let _ = writeln!(s, "\nCategory transmission ({} positive pairs within category)", r.attribute);
        let rows: Vec<Vec<String>> = r
            .categories
            .iter()
            .map(|c| {
                vec![
                    format!("{}={}", c.attribute, c.category),
                    c.n_in_category.to_string(),
                    c.observed.to_string(),
                    f(c.null_network.mean, 1),
                    f(c.null_category.mean, 1),
                    fmt_p(c.p_value),
                    fmt_p(c.p_null_network),
                    fmt_p(c.p_null_category),
                ]
            })
            .collect();
        s.push_str(&text_table(
            &["Category", "N", "Observed", "Null mean (network)", "Null mean (category)", "P-value", "P (network null)", "P (category null)"],
            &rows,
        ));
    }
    s
}

pub fn render_ergm(r: &ErgmReport) -> String {
    let mut s = String::new();
    for fit in &r.fits {
        let _ = writeln!(
            s,
            "Dyadic ERGM, {} layer: {} dyads, {} edges, log-likelihood {:.3}{}",
            fit.layer,
            fit.n_dyads,
            fit.n_edges,
            fit.log_likelihood,
            if fit.converged { "" } else { " (not converged)" }
        );
        let rows: Vec<Vec<String>> = fit
            .terms
            .iter()
            .map(|t| {
                vec![
                    t.name.clone(),
                    t.homophily_pct.map_or("--".into(), |h| f(h, 2)),
                    f(t.estimate, 2),
                    f(t.std_error, 2),
                    fmt_p(t.p_value),
                ]
            })
            .collect();
        s.push_str(&text_table(&["Term", "Homophily (%)", "Estimate (logit)", "Std Error", "P-value"], &rows));
    }
    s
}

pub fn render_autocorr(r: &AutocorrReport) -> String {
    let mut s = String::new();
    let fit = &r.fit;
    let _ = writeln!(
        s,
        "Network autocorrelation, {}: {} ({} weights), n = {}",
        r.trait_name,
        fit.method.as_str(),
        fit.weight_mode.as_str(),
        fit.n
    );
    let rows: Vec<Vec<String>> = fit
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let name = if i == 0 || fit.beta_interpretable { t.name.clone() } else { format!("{} ^a", t.name) };
            vec![name, f(t.estimate, 3), f(t.std_error, 3), fmt_p(t.p_value)]
        })
        .collect();
    s.push_str(&text_table(&["Term", "Estimate", "Std Error", "P-value"], &rows));
    if !fit.beta_interpretable {
        let _ = writeln!(s, "^a Host-factor estimates are adjusted for the lag term and cannot be interpreted as effects.");
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

pub fn render_logit(r: &LogitReport) -> String {
    let mut s = String::new();
    let e = &r.exposure;
    let _ = writeln!(s, "Carrier status vs positive friends, {} ({} layer, n = {})", r.trait_name, e.layer, e.n);
    let rows: Vec<Vec<String>> = (0..e.fit.terms.len())
        .map(|j| {
            vec![
                e.fit.terms[j].clone(),
                f(e.fit.coefficients[j], 2),
                f(e.fit.std_errors[j], 2),
                fmt_p(e.fit.wald_p_values[j]),
            ]
        })
        .collect();
    s.push_str(&text_table(&["Term", "Estimate", "Std Error", "P-value"], &rows));
    let me = |m: &crate::exposure::MarginalEffect| format!("{:.2} % (95% CI {:.2} - {:.2})", 100.0 * m.estimate, 100.0 * m.ci95[0], 100.0 * m.ci95[1]);
    let _ = writeln!(s, "Probability increase per positive friend (average): {}", me(&e.average_marginal_effect));
    let _ = writeln!(s, "Probability increase per positive friend (at mean): {}", me(&e.effect_at_mean));
    let rows: Vec<Vec<String>> = e
        .curve
        .iter()
        .map(|c| vec![c.k.to_string(), f(c.p_hat, 3), c.n_positive.to_string(), c.n_negative.to_string()])
        .collect();
    s.push_str(&text_table(&["Positive friends", "Fitted probability", "Carriers", "Non-carriers"], &rows));
    s
}

pub fn render_rr(r: &RrReport) -> String {
    let mut s = String::new();
    for t in &r.tables {
        let _ = writeln!(s, "Relative risk of exposure ({}), {} vs {} ({} layer)", t.exposure_definition.as_str(), t.attribute, t.reference, t.layer);
        let rows: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|row| {
                vec![
                    row.category.clone(),
                    row.n.to_string(),
                    f(100.0 * row.proportion_exposed, 1),
                    if row.is_reference { "ref".into() } else { f(row.relative_risk, 3) },
                    row.ci95.map_or(String::new(), |c| format!("{:.3} - {:.3}", c[0], c[1])),
                    row.p_value.map_or(String::new(), fmt_p),
                ]
            })
            .collect();
        s.push_str(&text_table(&["Category", "N", "Exposed (%)", "RR", "95% CI", "P-value"], &rows));
    }
    s
}

// ---- graph export ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    EdgeList,
    Graphml,
    Dot,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::EdgeList => "csv",
            ExportFormat::Graphml => "graphml",
            ExportFormat::Dot => "dot",
        }
    }
}

fn node_attributes(cohort: &Cohort, i: usize) -> Vec<(&'static str, String)> {
    let p = cohort.get(i);
    let mut out = Vec::new();
    for &a in Attribute::ALL {
        let v = if a == Attribute::Age {
            p.age.map(|x| x.to_string())
        } else {
            p.label(a).ok().flatten()
        };
        if let Some(v) = v {
            out.push((a.as_str(), v));
        }
    }
    out
}

/// `same_<attr>` per edge: `Some(true)` when both endpoints share a non-missing value.
fn same_flags(cohort: &Cohort, net: &ContactNetwork, color_by: Option<Attribute>) -> Result<Option<(String, Vec<bool>)>> {
    let Some(a) = color_by else { return Ok(None) };
    let col = cohort.column(a)?;
    let flags = net
        .edges()
        .iter()
        .map(|&(x, y)| matches!((col.codes[x as usize], col.codes[y as usize]), (Some(p), Some(q)) if p == q))
        .collect();
    Ok(Some((format!("same_{}", a.as_str()), flags)))
}

pub fn export_graph(cohort: &Cohort, net: &ContactNetwork, format: ExportFormat, color_by: Option<Attribute>) -> Result<String> {
    let flags = same_flags(cohort, net, color_by)?;
    let id = |i: u32| cohort.get(i as usize).id.as_str();
    let mut s = String::new();
    match format {
        ExportFormat::EdgeList => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["source".to_string(), "target".to_string()];
            if let Some((name, _)) = &flags {
                header.push(name.clone());
            }
            w.write_record(&header)?;
            for (k, &(a, b)) in net.edges().iter().enumerate() {
                let mut rec = vec![id(a).to_string(), id(b).to_string()];
                if let Some((_, fl)) = &flags {
                    rec.push(fl[k].to_string());
                }
                w.write_record(&rec)?;
            }
            s = String::from_utf8(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
                .expect("csv output is UTF-8");
        }
        ExportFormat::Graphml => {
            use quick_xml::escape::escape;
            s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
            s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
            for &a in Attribute::ALL {
                let ty = if a == Attribute::Age { "double" } else { "string" };
                let _ = writeln!(s, "  <key id=\"{0}\" for=\"node\" attr.name=\"{0}\" attr.type=\"{ty}\"/>", a.as_str());
            }
            if let Some((name, _)) = &flags {
                let _ = writeln!(s, "  <key id=\"{name}\" for=\"edge\" attr.name=\"{name}\" attr.type=\"boolean\"/>");
            }
            let _ = writeln!(s, "  <graph id=\"{}\" edgedefault=\"undirected\">", net.layer());
            for i in 0..net.node_count() {
                let _ = writeln!(s, "    <node id=\"{}\">", escape(id(i as u32)));
                for (k, v) in node_attributes(cohort, i) {
                    let _ = writeln!(s, "      <data key=\"{k}\">{}</data>", escape(v.as_str()));
                }
                s.push_str("    </node>\n");
            }
            for (k, &(a, b)) in net.edges().iter().enumerate() {
                let (ea, eb) = (escape(id(a)), escape(id(b)));
                match &flags {
                    Some((name, fl)) => {
                        let _ = writeln!(s, "    <edge source=\"{ea}\" target=\"{eb}\"><data key=\"{name}\">{}</data></edge>", fl[k]);
                    }
                    None => {
                        let _ = writeln!(s, "    <edge source=\"{ea}\" target=\"{eb}\"/>");
                    }
                }
            }
            s.push_str("  </graph>\n</graphml>\n");
        }
        ExportFormat::Dot => {
            let q = |v: &str| format!("\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\""));
            let _ = writeln!(s, "graph {} {{", q(net.layer().as_str()));
            for i in 0..net.node_count() {
                let attrs: Vec<String> = node_attributes(cohort, i)
                    .into_iter()
                    .filter(|(k, _)| *k != "id")
                    .map(|(k, v)| format!("{k}={}", q(&v)))
                    .collect();
                let _ = writeln!(s, "  {} [{}];", q(id(i as u32)), attrs.join(", "));
            }
            for (k, &(a, b)) in net.edges().iter().enumerate() {
                match &flags {
                    Some((name, fl)) => {
                        let color = if fl[k] { "red" } else { "gray" };
                        let _ = writeln!(s, "  {} -- {} [{name}={}, color={color}];", q(id(a)), q(id(b)), fl[k]);
                    }
                    None => {
                        let _ = writeln!(s, "  {} -- {};", q(id(a)), q(id(b)));
                    }
                }
            }
            s.push_str("}\n");
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Carriage, Participant};

    fn triangle() -> (Cohort, ContactNetwork) {
        let ps = (0..3)
            .map(|i| {
                let mut p = Participant::new(format!("n{i}"), Carriage::Negative, Carriage::Positive);
                p.spa_type = Some("t012".into());
                p
            })
            .collect();
        let net = ContactNetwork::from_edges(3, Layer::Overall, [(0, 1), (1, 2), (0, 2)]).unwrap();
        (Cohort::new(ps).unwrap(), net)
    }

    #[test]
    fn triangle_same_spa_flags() {
        let (c, n) = triangle();
        let out = export_graph(&c, &n, ExportFormat::EdgeList, Some(Attribute::SpaType)).unwrap();
        assert_eq!(out.lines().next(), Some("source,target,same_spa_type"));
        assert_eq!(out.lines().filter(|l| l.ends_with(",true")).count(), 3);
        let g = export_graph(&c, &n, ExportFormat::Graphml, Some(Attribute::SpaType)).unwrap();
        assert_eq!(g.matches("<edge ").count(), 3);
        let d = export_graph(&c, &n, ExportFormat::Dot, Some(Attribute::SpaType)).unwrap();
        assert_eq!(d.matches("same_spa_type=true").count(), 3);
    }

    #[test]
    fn empty_graph_exports() {
        let (c, _) = triangle();
        let n = ContactNetwork::empty(3, Layer::Overall);
        let out = export_graph(&c, &n, ExportFormat::EdgeList, None).unwrap();
        assert_eq!(out, "source,target\n");
    }

    #[test]
    fn manifest_id_ignores_time_and_threads() {
        let a = RunManifest::new("describe", vec!["x".into()], vec![], None, serde_json::json!({"layer": "overall"}), 1);
        let mut b = RunManifest::new("describe", vec!["y".into()], vec![], None, serde_json::json!({"layer": "overall"}), 8);
        b.timestamp = "2000-01-01T00:00:00Z".into();
        assert_eq!(a.manifest_id, b.compute_id());
    }

    #[test]
    fn table_alignment() {
        let t = text_table(&["A", "Num"], &[vec!["x".into(), "1.5".into()], vec!["long".into(), "10.25".into()]]);
        assert_eq!(t, "A       Num\n----  -----\nx       1.5\nlong  10.25\n");
    }
}
