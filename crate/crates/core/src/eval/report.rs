//! Metric tables with paired significance tests against reference systems.

use std::fmt;
use std::io::Write;

use super::{wilcoxon_signed_rank, EvalReport, SignificanceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    P5,
    P10,
    Map,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::P5, Metric::P10, Metric::Map];

    pub fn name(self) -> &'static str {
        match self {
            Metric::P5 => "p@5",
            Metric::P10 => "p@10",
            Metric::Map => "map@k",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SystemResult {
    pub name: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub name: String,
    pub mark: char,
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub system: String,
    pub metric: Metric,
    pub mean: f64,
    /// One entry per reference; `None` when comparing a system with itself.
    pub tests: Vec<Option<SignificanceResult>>,
}

#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub references: Vec<Reference>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Compare every system against every named reference with a two-tailed
    /// Wilcoxon test over the queries both were evaluated on.
    pub fn build(systems: &[SystemResult], references: &[(String, char)], correction: f64) -> Self {
        let refs: Vec<Reference> = references
            .iter()
            .map(|(name, mark)| Reference {
                name: name.clone(),
                mark: *mark,
            })
            .collect();
        let mut rows = Vec::new();
        for sys in systems {
            for metric in Metric::ALL {
                let tests = refs
                    .iter()
                    .map(|r| {
                        if r.name == sys.name {
                            return None;
                        }
                        let other = systems.iter().find(|s| s.name == r.name)?;
                        let (a, b) = sys.report.paired(&other.report, metric);
                        wilcoxon_signed_rank(&a, &b, correction).ok()
                    })
                    .collect();
                rows.push(ComparisonRow {
                    system: sys.name.clone(),
                    metric,
                    mean: sys.report.mean(metric),
                    tests,
                });
            }
        }
        Self {
            references: refs,
            rows,
        }
    }

    /// Significance marks for a row: the reference's letter when p < 0.05,
    /// upper-cased when it also survives the Bonferroni correction.
    pub fn marks(&self, row: &ComparisonRow) -> String {
        row.tests
            .iter()
            .zip(&self.references)
            .filter_map(|(t, r)| {
                let t = t.as_ref()?;
                if t.significant_bonferroni {
                    Some(r.mark.to_ascii_uppercase())
                } else if t.significant_95 {
                    Some(r.mark)
                } else {
                    None
                }
            })
            .collect()
    }
}

pub fn write_comparison_csv<W: Write>(writer: W, table: &ComparisonTable) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["system".to_string(), "metric".into(), "mean".into()];
    header.extend(table.references.iter().map(|r| format!("p_{}", r.name)));
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![row.system.clone(), row.metric.to_string(), format!("{:.6}", row.mean)];
        rec.extend(
            row.tests
                .iter()
                .map(|t| t.map_or_else(String::new, |t| format!("{:.6}", t.p_value))),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(mut w: W, table: &ComparisonTable) -> std::io::Result<()> {
    let width = table
        .rows
        .iter()
        .map(|r| r.system.len())
        .max()
        .unwrap_or(6)
        .max(6);
    write!(w, "{:<width$}", "system")?;
    for m in Metric::ALL {
        write!(w, "  {:>12}", m.name())?;
    }
    writeln!(w)?;
    for chunk in table.rows.chunks(Metric::ALL.len()) {
        write!(w, "{:<width$}", chunk[0].system)?;
        for row in chunk {
            let cell = format!("{:.1}{}", 100.0 * row.mean, table.marks(row));
            write!(w, "  {cell:>12}")?;
        }
        writeln!(w)?;
    }
    if !table.references.is_empty() {
        let legend: Vec<String> = table
            .references
            .iter()
            .map(|r| format!("{} = {}", r.mark, r.name))
            .collect();
        writeln!(
            w,
            "marks: {} (lower case p < 0.05; upper case also after Bonferroni correction)",
            legend.join(", ")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::QueryMetrics;
    use super::*;

    fn report(p5: &[usize]) -> EvalReport {
        EvalReport {
            k: 20,
            per_query: p5
                .iter()
                .enumerate()
                .map(|(i, &h)| {
                    (
                        format!("q{i:02}"),
                        QueryMetrics {
                            hits5: h,
                            hits10: h,
                            p5: h as f64 / 5.0,
                            p10: h as f64 / 10.0,
                            ap: h as f64 / 5.0,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn table_marks_and_outputs() {
        let strong = SystemResult {
            name: "fused".into(),
            report: report(&[5, 5, 4, 5, 5, 4, 5, 5]),
        };
        let weak = SystemResult {
            name: "run1".into(),
            report: report(&[1, 0, 1, 2, 0, 1, 0, 1]),
        };
        let table = ComparisonTable::build(&[strong, weak], &[("run1".into(), 'a')], 4.0);
        assert_eq!(table.rows.len(), 6);
        // 8 positive differences: p = 2/256 < 0.05/4
        assert_eq!(table.marks(&table.rows[0]), "A");
        assert!(table.rows[3].tests[0].is_none());

        let mut csv_out = Vec::new();
        write_comparison_csv(&mut csv_out, &table).unwrap();
        let csv_text = String::from_utf8(csv_out).unwrap();
        assert!(csv_text.starts_with("system,metric,mean,p_run1\n"));
        assert!(csv_text.contains("fused,p@5,0.950000,0.007812"));

        let mut txt = Vec::new();
        write_summary(&mut txt, &table).unwrap();
        let txt = String::from_utf8(txt).unwrap();
        assert!(txt.contains("95.0A"));
        assert!(txt.contains("a = run1"));
    }
}
