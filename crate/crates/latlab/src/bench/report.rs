//! Report emission: CSV, JSON, and fixed-width tables for the terminal.

use std::io::{self, Write};

use crate::model::{ParameterSet, Stage, TrialResult};
use crate::time::Micros;

use super::experiment::{CellReport, ExperimentReport};

/// Stable column layout; consumed directly by plotting scripts.
pub const CSV_HEADER: &str = "policy,mode,param_set,t_sec,n,P,N,trial,seed,T_job_sec,\
     T_total_sec,U,launches,stage_submission_sec,stage_queue_sec,stage_ident_sec,\
     stage_select_sec,stage_alloc_sec,stage_dispatch_sec,stage_term_sec";

fn f64_cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn trial_row(cell: &CellReport, idx: usize, t: &TrialResult) -> String {
    let stages: Vec<String> =
        Stage::ALL.iter().map(|s| t.stage_totals[*s].secs_display()).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cell.policy,
        cell.mode.name(),
        cell.set_index,
        t.params.task_time.secs_display(),
        t.params.tasks_per_processor,
        t.params.processors,
        t.params.total_tasks,
        idx + 1,
        t.seed,
        t.params.job_time_per_processor.secs_display(),
        t.t_total.secs_display(),
        f64_cell(t.utilization),
        t.launches,
        stages.join(",")
    )
}

/// Column-wise aggregate over the cell's trials.
fn aggregate_row(cell: &CellReport, which: &str) -> String {
    let pick = |f: &dyn Fn(&TrialResult) -> f64| -> f64 {
        let xs: Vec<f64> = cell.trials.iter().map(f).collect();
        match which {
            "mean" => xs.iter().sum::<f64>() / xs.len() as f64,
            "min" => xs.iter().copied().fold(f64::INFINITY, f64::min),
            _ => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    };
    let params = &cell.params;
    let stages: Vec<String> = Stage::ALL
        .iter()
        .map(|s| f64_cell(pick(&|t: &TrialResult| t.stage_totals[*s].as_secs_f64())))
        .collect();
    format!(
        "{},{},{},{},{},{},{},{},,{},{},{},{},{}",
        cell.policy,
        cell.mode.name(),
        cell.set_index,
        params.task_time.secs_display(),
        params.tasks_per_processor,
        params.processors,
        params.total_tasks,
        which,
        params.job_time_per_processor.secs_display(),
        f64_cell(pick(&|t: &TrialResult| t.t_total.as_secs_f64())),
        f64_cell(pick(&|t: &TrialResult| t.utilization)),
        f64_cell(pick(&|t: &TrialResult| t.launches as f64)),
        stages.join(",")
    )
}

/// Rows are grouped by (policy, mode, parameter set): per-trial rows first,
/// then mean/min/max aggregates.
pub fn write_csv(report: &ExperimentReport, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for cell in &report.cells {
        for (idx, t) in cell.trials.iter().enumerate() {
            writeln!(out, "{}", trial_row(cell, idx, t))?;
        }
        if !cell.trials.is_empty() {
            for which in ["mean", "min", "max"] {
                writeln!(out, "{}", aggregate_row(cell, which))?;
            }
        }
    }
    Ok(())
}

pub fn csv_string(report: &ExperimentReport) -> String {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).expect("csv into memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn write_json(report: &ExperimentReport, out: &mut impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, report)?;
    writeln!(out)
}

fn hours_display(m: Micros) -> String {
    format!("{:.2}", m.as_secs_f64() / 3600.0)
}

/// The plan laid out one parameter set per column.
pub fn plan_table(sets: &[ParameterSet]) -> String {
    let labels = [
        "Processors P",
        "Job time per processor T_job (s)",
        "Task time t (s)",
        "Tasks per processor n",
        "Total tasks N",
        "Total processor time (s)",
        "Total processor time (h)",
        "Trials",
    ];
    let mut columns: Vec<Vec<String>> = Vec::new();
    for set in sets {
        columns.push(vec![
            set.processors.to_string(),
            set.job_time_per_processor.secs_display(),
            set.task_time.secs_display(),
            set.tasks_per_processor.to_string(),
            set.total_tasks.to_string(),
            set.total_processor_time().secs_display(),
            hours_display(set.total_processor_time()),
            set.trials.to_string(),
        ]);
    }

    let label_width = labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut widths = Vec::new();
    for (i, col) in columns.iter().enumerate() {
        let header = format!("Set {}", i + 1);
        widths.push(col.iter().map(|v| v.len()).chain([header.len()]).max().unwrap());
    }

    let mut out = String::new();
    out.push_str(&format!("{:<label_width$}", "Configuration"));
    for (i, w) in widths.iter().enumerate() {
        out.push_str(&format!("  {:>w$}", format!("Set {}", i + 1)));
    }
    out.push('\n');
    for (row, label) in labels.iter().enumerate() {
        out.push_str(&format!("{label:<label_width$}"));
        for (col, w) in columns.iter().zip(&widths) {
            out.push_str(&format!("  {:>w$}", col[row]));
        }
        out.push('\n');
    }
    out
}

/// Per-cell mean utilization summary for standard output.
pub fn summary_table(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16}  {:<10}  {:>3}  {:>6}  {:>8}  {:>8}  {:>8}  {}\n",
        "policy", "mode", "set", "t(s)", "mean U", "min U", "max U", "status"
    ));
    for cell in &report.cells {
        let status = if let Some(err) = &cell.error {
            format!("FAILED: {err}")
        } else {
            cell.note.clone().unwrap_or_default()
        };
        let line = format!(
            "{:<16}  {:<10}  {:>3}  {:>6}  {:>8}  {:>8}  {:>8}  {}",
            cell.policy,
            cell.mode.name(),
            cell.set_index,
            cell.params.task_time.secs_display(),
            format_u(cell.mean_utilization),
            format_u(cell.min_utilization),
            format_u(cell.max_utilization),
            status,
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn format_u(u: f64) -> String {
    if u.is_nan() {
        "-".to_string()
    } else {
        format!("{u:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_parameter_set;

    #[test]
    fn plan_table_layout_carries_exact_values() {
        let sets: Vec<ParameterSet> = [1, 5, 30, 60]
            .iter()
            .map(|&t| {
                derive_parameter_set(
                    1408,
                    Micros::from_secs(240),
                    Micros::from_secs(t),
                    3,
                )
                .unwrap()
            })
            .collect();
        let table = plan_table(&sets);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].contains("Set 1") && lines[0].contains("Set 4"));
        let row = |label: &str| {
            lines
                .iter()
                .find(|l| l.starts_with(label))
                .unwrap_or_else(|| panic!("row {label}"))
                .split_whitespace()
                .rev()
                .take(4)
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(row("Task time"), vec!["60", "30", "5", "1"]);
        assert_eq!(row("Tasks per processor"), vec!["4", "8", "48", "240"]);
        assert_eq!(row("Total tasks"), vec!["5632", "11264", "67584", "337920"]);
        assert!(table.contains("337920")); // total processor time in seconds
        assert!(table.contains("93.87")); // and in hours
    }
}
