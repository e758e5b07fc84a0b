use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::experiment::ExperimentResult;
use super::generalize::GeneralizationResult;
use super::metrics::{aggregate, AggregateRecord, MetricsRecord};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_csv<T: serde::Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    write_csv(path, &MetricsRecord::HEADER, records)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_err(path, e))
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_err(path, e))
}

#[derive(serde::Serialize)]
struct PlotPoint<'a> {
    curve: &'a str,
    step: usize,
    mean: f64,
    std: f64,
}

/// Writes, under `out`:
/// - `<name>_seed<seed>.csv` per run,
/// - `<name>_aggregate.csv` per experiment,
/// - `<name>_config.toml` per experiment,
/// - `plot_<metric>.csv` with one `(curve, step, mean, std)` series per experiment.
///
/// Returns the written paths in creation order.
pub fn emit_outputs(results: &[ExperimentResult], out: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no results to write".into()));
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    let mut aggregates = Vec::with_capacity(results.len());
    for res in results {
        let name = &res.config.name;
        for run in &res.runs {
            let p = out.join(format!("{name}_seed{}.csv", run.seed));
            write_metrics_csv(&p, &run.records)?;
            written.push(p);
        }
        let agg = aggregate(&res.records());
        let p = out.join(format!("{name}_aggregate.csv"));
        write_csv(&p, &AggregateRecord::HEADER, &agg)?;
        written.push(p);
        let p = out.join(format!("{name}_config.toml"));
        fs::write(&p, res.config.to_toml()?).map_err(|e| Error::io(&p, e))?;
        written.push(p);
        aggregates.push((name.as_str(), agg));
    }
    type Pick = fn(&AggregateRecord) -> (f64, f64);
    let metrics: [(&str, Pick); 4] = [
        ("success_rate", |a| {
            (a.success_rate_mean, a.success_rate_std)
        }),
        ("entropy", |a| (a.entropy_mean, a.entropy_std)),
        ("max_occ", |a| (a.max_occ_mean, a.max_occ_std)),
        ("avg_occ", |a| (a.avg_occ_mean, a.avg_occ_std)),
    ];
    for (metric, pick) in metrics {
        let rows: Vec<PlotPoint> = aggregates
            .iter()
            .flat_map(|(curve, agg)| {
                agg.iter().map(move |a| {
                    let (mean, std) = pick(a);
                    PlotPoint {
                        curve,
                        step: a.step,
                        mean,
                        std,
                    }
                })
            })
            .collect();
        let p = out.join(format!("plot_{metric}.csv"));
        write_csv(&p, &["curve", "step", "mean", "std"], &rows)?;
        written.push(p);
    }
    Ok(written)
}

#[derive(serde::Serialize)]
struct GeneralizationRow<'a> {
    label: &'a str,
    seed: u64,
    maze: &'a str,
    policy: &'a str,
    success_rate: f64,
    max_occ: f64,
    avg_occ: f64,
}

/// One row per `(label, seed, result)` triple.
pub fn write_generalization_csv(
    path: &Path,
    rows: &[(String, u64, GeneralizationResult)],
) -> Result<()> {
    let rows: Vec<GeneralizationRow> = rows
        .iter()
        .map(|(label, seed, r)| GeneralizationRow {
            label,
            seed: *seed,
            maze: &r.maze,
            policy: r.policy.name(),
            success_rate: r.success_rate,
            max_occ: r.max_occ,
            avg_occ: r.avg_occ,
        })
        .collect();
    write_csv(
        path,
        &[
            "label",
            "seed",
            "maze",
            "policy",
            "success_rate",
            "max_occ",
            "avg_occ",
        ],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let recs = vec![
            MetricsRecord {
                step: 300,
                seed: 4,
                success_rate: 0.0,
                entropy: 2.0794415416798357,
                max_occ: 0.31,
                avg_occ: 0.1 / 3.0,
            },
            MetricsRecord {
                step: 600,
                seed: 4,
                success_rate: 1.0,
                entropy: 1e-17,
                max_occ: 1.0,
                avg_occ: 0.5,
            },
        ];
        write_metrics_csv(&p, &recs).unwrap();
        assert_eq!(read_metrics_csv(&p).unwrap(), recs);
        write_metrics_csv(&p, &[]).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "step,seed,success_rate,entropy,max_occ,avg_occ\n"
        );
        assert!(read_metrics_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn unwritable_paths_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("missing").join("m.csv");
        let err = write_metrics_csv(&p, &[]).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }
}
