use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blcirs::diagnostics::ConvergenceRecord;
use blcirs::ingest::{MatrixSource, RHS_GENERATOR};
use blcirs::{run_suite, Block, CsrMatrix, RunResult, RunStatus, SolverError, Variant};

use crate::config::{Emit, ProblemArgs, RunConfig};
use crate::history::{fmt_f64, read_history_file, write_history_file, History, HistoryMeta};
use crate::plot::{LogPlot, Series};
use crate::report::{evaluate_bounds, write_bounds_csv, BoundReport};

pub struct Problem {
    pub a: CsrMatrix<f64>,
    pub b: Block<f64>,
    pub label: String,
}

fn matrix_label(src: &MatrixSource) -> String {
    let raw = match src {
        MatrixSource::Generated(g) => format!("generated:{},{},{},{}", g.nx, g.ny, g.px, g.py),
        MatrixSource::MatrixMarketFile(p) => format!("file:{}", p.display()),
        MatrixSource::SuiteSparse(n) => format!("collection:{n}"),
    };
    raw.replace([';', '\n'], "_")
}

pub fn load_problem(cfg: &RunConfig) -> Result<Problem> {
    let a = cfg
        .problem
        .load_matrix(cfg.cache_dir.as_deref())
        .context("cannot load matrix")?;
    let b = cfg.problem.rhs(a.n()).context("cannot build right-hand side")?;
    Ok(Problem {
        a,
        b,
        label: matrix_label(&cfg.problem.source),
    })
}

fn status_text(st: &RunStatus) -> String {
    match st {
        RunStatus::Converged => "converged".into(),
        RunStatus::MaxIter => "max-iter".into(),
        RunStatus::Breakdown { iteration, cause } => format!("breakdown at {iteration}: {cause}"),
    }
}

fn history_meta(cfg: &RunConfig, p: &Problem, res: &RunResult<f64>) -> HistoryMeta {
    let mut m = HistoryMeta::default();
    m.set("solver", res.variant.name())
        .set("solver_number", res.variant.number())
        .set("matrix", &p.label)
        .set("n", p.a.n())
        .set("s", p.b.ncols())
        .set("seed", cfg.problem.seed)
        .set("rhs_dist", format!("{:?}", cfg.problem.rhs_dist).to_ascii_lowercase())
        .set("rhs_generator", RHS_GENERATOR)
        .set("norm_b", fmt_f64(res.norm_b))
        .set("status", status_text(&res.status).replace([';', '\n'], ","))
        .set("iterations", res.iterations)
        .set("setup_spmm", res.setup_spmm)
        .set("final_true_rel", fmt_f64(res.final_true_rel))
        .set("elapsed_s", fmt_f64(res.elapsed.as_secs_f64()));
    m
}

fn convergence_plot(res: &RunResult<f64>) -> LogPlot {
    let pts = |f: &dyn Fn(&ConvergenceRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        res.records.iter().filter_map(|r| f(r).map(|v| (r.k as f64, v))).collect()
    };
    let mut series = vec![
        Series {
            label: "recursive R".into(),
            points: pts(&|r| Some(r.rel_r)),
            dashed: false,
            color: 0,
        },
        Series {
            label: "true B-AX".into(),
            points: pts(&|r| r.true_rel_r),
            dashed: true,
            color: 0,
        },
    ];
    if res.variant.is_smoothed() {
        series.push(Series {
            label: "recursive S".into(),
            points: pts(&|r| r.rel_s),
            dashed: false,
            color: 1,
        });
        series.push(Series {
            label: "true B-AY".into(),
            points: pts(&|r| r.true_rel_s),
            dashed: true,
            color: 1,
        });
    }
    LogPlot {
        title: format!("Solver {} ({})", res.variant.number(), res.variant.name()),
        x_label: "iteration".into(),
        y_label: "log10 relative residual".into(),
        series,
    }
}

pub struct SummaryRow {
    pub solver: String,
    pub iterations: usize,
    pub time_s: f64,
    pub true_res: Option<f64>,
    pub status: String,
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = format!("{:<22} {:>6} {:>10} {:>11}  {}\n", "Solver", "Iter.", "Time (s)", "True res.", "Status");
    for r in rows {
        let tr = r.true_res.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>10.3} {:>11}  {}",
            r.solver, r.iterations, r.time_s, tr, r.status
        );
    }
    out
}

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["solver", "iterations", "time_s", "true_res", "status"])?;
    for r in rows {
        w.write_record([
            r.solver.clone(),
            r.iterations.to_string(),
            fmt_f64(r.time_s),
            r.true_res.map(fmt_f64).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn record_artifact(errors: &mut Vec<String>, written: &mut Vec<PathBuf>, path: PathBuf, r: Result<()>) {
    match r {
        Ok(()) => written.push(path),
        Err(e) => errors.push(format!("{e:#}")),
    }
}

/// Outcome of a command: whether any solver converged, plus artifact errors.
pub struct CommandOutcome {
    pub any_converged: bool,
    pub written: Vec<PathBuf>,
    pub errors: Vec<String>,
}

impl CommandOutcome {
    pub fn success(&self) -> bool {
        self.any_converged && self.errors.is_empty()
    }
}

fn run_all(cfg: &RunConfig, p: &Problem) -> Vec<(Variant, Result<RunResult<f64>, SolverError>)> {
    let results = run_suite(&p.a, &p.b, &cfg.solvers);
    cfg.solvers.iter().map(|o| o.variant).zip(results).collect()
}

fn summary_rows(runs: &[(Variant, Result<RunResult<f64>, SolverError>)]) -> Vec<SummaryRow> {
    runs.iter()
        .map(|(v, r)| match r {
            Ok(res) => SummaryRow {
                solver: format!("{} {}", v.number(), v.name()),
                iterations: res.iterations,
                time_s: res.elapsed.as_secs_f64(),
                true_res: Some(res.final_true_rel),
                status: status_text(&res.status),
            },
            Err(e) => SummaryRow {
                solver: format!("{} {}", v.number(), v.name()),
                iterations: 0,
                time_s: 0.0,
                true_res: None,
                status: format!("error: {e}"),
            },
        })
        .collect()
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutcome> {
    let dir = cfg.require_output_dir()?.to_path_buf();
    let p = load_problem(cfg)?;
    let runs = run_all(cfg, &p);
    let mut errors = Vec::new();
    let mut written = Vec::new();

    for (v, r) in &runs {
        let res = match r {
            Ok(res) => res,
            Err(e) => {
                eprintln!("solver {}: {e}", v.name());
                continue;
            }
        };
        for w in &res.warnings {
            eprintln!("solver {}: {w}", v.name());
        }
        if cfg.emit.contains(&Emit::Csv) {
            let path = dir.join(format!("history_{}.csv", v.name()));
            let r = write_history_file(&path, &history_meta(cfg, &p, res), &res.records);
            record_artifact(&mut errors, &mut written, path, r);
        }
        if cfg.emit.contains(&Emit::Plot) {
            let path = dir.join(format!("convergence_{}.svg", v.name()));
            let r = write_text(&path, &convergence_plot(res).render());
            record_artifact(&mut errors, &mut written, path, r);
        }
        if cfg.emit.contains(&Emit::Bounds) {
            let path = dir.join(format!("bounds_{}.csv", v.name()));
            let r = evaluate_bounds(&res.records, res.norm_b, p.b.ncols(), &p.a).and_then(|rep| {
                print!("{}", rep.verdict_text(v.name()));
                let f = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                write_bounds_csv(f, &rep)
            });
            record_artifact(&mut errors, &mut written, path, r);
        }
    }

    let rows = summary_rows(&runs);
    if cfg.emit.contains(&Emit::Summary) {
        let table = summary_table(&rows);
        print!("{table}");
        let path = dir.join("summary.txt");
        let r = write_text(&path, &table);
        record_artifact(&mut errors, &mut written, path, r);
        let path = dir.join("summary.csv");
        let r = write_summary_csv(&path, &rows);
        record_artifact(&mut errors, &mut written, path, r);
    }
    let any_converged = runs.iter().any(|(_, r)| r.as_ref().is_ok_and(|res| res.status.converged()));
    Ok(CommandOutcome {
        any_converged,
        written,
        errors,
    })
}

/// Fills unset problem flags from the history metadata.
fn args_from_meta(args: &ProblemArgs, h: &History) -> Result<ProblemArgs> {
    let mut out = args.clone();
    let has_problem = args.matrix.is_some() || args.generate.is_some() || args.config.is_some();
    if !has_problem {
        match h.meta.get("matrix") {
            Some(m) if m.starts_with("generated:") => out.generate = Some(m["generated:".len()..].to_string()),
            Some(m) if m.starts_with("file:") => out.matrix = Some(m["file:".len()..].to_string()),
            Some(m) if m.starts_with("collection:") => out.matrix = Some(m["collection:".len()..].to_string()),
            _ => bail!("history names no matrix; pass --matrix or --generate"),
        }
    }
    if out.s.is_none() {
        out.s = h.meta.get("s").and_then(|v| v.parse().ok());
    }
    if out.seed.is_none() {
        out.seed = h.meta.get("seed").and_then(|v| v.parse().ok());
    }
    if out.rhs_dist.is_none() {
        out.rhs_dist = h.meta.get("rhs_dist").map(str::to_string);
    }
    Ok(out)
}

pub fn cmd_bounds(history: &Path, args: &ProblemArgs) -> Result<BoundReport> {
    let h = read_history_file(history)?;
    let cfg = args_from_meta(args, &h)?.resolve(&[Variant::NoSmoothing])?;
    let p = load_problem(&cfg)?;
    if let Some(n) = h.meta.get("n").and_then(|v| v.parse::<usize>().ok()) {
        if n != p.a.n() {
            bail!("history is for n = {n} but the matrix has n = {}", p.a.n());
        }
    }
    let norm_b = p.b.frobenius_norm();
    if let Some(hb) = h.meta.get_f64("norm_b") {
        if (hb - norm_b).abs() > 1e-12 * norm_b {
            bail!("regenerated ‖B‖ = {norm_b:e} differs from the history's {hb:e}; check --seed, --s and --rhs-dist");
        }
    }
    let mut rep = evaluate_bounds(&h.records, norm_b, p.b.ncols(), &p.a)?;
    if !h.has_column("q_norm") || !h.has_column("q_departure") {
        rep.notes
            .push("appendix bound needs the q_norm and q_departure columns".into());
    }
    let name = h.meta.get("solver").unwrap_or("history").to_string();
    match cfg.output_dir.as_deref() {
        Some(dir) => {
            if !dir.is_dir() {
                bail!("output directory {} does not exist", dir.display());
            }
            let stem = history.file_stem().and_then(|s| s.to_str()).unwrap_or("history");
            let path = dir.join(format!("bounds_{stem}.csv"));
            let f = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
            write_bounds_csv(f, &rep)?;
            print!("{}", rep.verdict_text(&name));
        }
        None => {
            write_bounds_csv(std::io::stdout().lock(), &rep)?;
            eprint!("{}", rep.verdict_text(&name));
        }
    }
    Ok(rep)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<CommandOutcome> {
    let dir = cfg.require_output_dir()?.to_path_buf();
    let p = load_problem(cfg)?;
    let runs = run_all(cfg, &p);
    let ok: Vec<&RunResult<f64>> = runs.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let mut errors = Vec::new();
    let mut written = Vec::new();
    for (v, r) in &runs {
        if let Err(e) = r {
            eprintln!("solver {}: {e}", v.name());
        }
    }

    if cfg.emit.contains(&Emit::Csv) {
        let path = dir.join("compare.csv");
        let r = write_compare_csv(&path, cfg, &p, &ok);
        record_artifact(&mut errors, &mut written, path, r);
    }
    if cfg.emit.contains(&Emit::Plot) {
        let (res_plot, norm_plot) = compare_plots(&ok);
        let path = dir.join("compare_residuals.svg");
        let r = write_text(&path, &res_plot.render());
        record_artifact(&mut errors, &mut written, path, r);
        let path = dir.join("compare_norms.svg");
        let r = write_text(&path, &norm_plot.render());
        record_artifact(&mut errors, &mut written, path, r);
    }
    if cfg.emit.contains(&Emit::Summary) {
        let table = summary_table(&summary_rows(&runs));
        let mut text = table.clone();
        for res in &ok {
            let x_star = res.x_final.frobenius_norm();
            let max_x = res.records.iter().map(|r| r.norm_x).fold(0.0, f64::max);
            let _ = write!(text, "{}: |X_final| {x_star:.4e}, max|X_k| {max_x:.4e}", res.variant.name());
            if res.variant.is_smoothed() {
                let max_y = res.records.iter().filter_map(|r| r.norm_y).fold(0.0, f64::max);
                let _ = write!(text, ", max|Y_k| {max_y:.4e}");
            }
            text.push('\n');
        }
        print!("{text}");
        let path = dir.join("compare_summary.txt");
        let r = write_text(&path, &text);
        record_artifact(&mut errors, &mut written, path, r);
    }
    Ok(CommandOutcome {
        any_converged: ok.iter().any(|r| r.status.converged()),
        written,
        errors,
    })
}

fn write_compare_csv(path: &Path, cfg: &RunConfig, p: &Problem, runs: &[&RunResult<f64>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    let mut head = format!(
        "# blcirs-compare v1; matrix={}; n={}; s={}; seed={}",
        p.label,
        p.a.n(),
        p.b.ncols(),
        cfg.problem.seed
    );
    for r in runs {
        let _ = write!(head, "; final_true_rel_{}={}", r.variant.name(), fmt_f64(r.final_true_rel));
    }
    writeln!(f, "{head}")?;
    let mut w = csv::Writer::from_writer(f);
    let mut header = vec!["spmm_count".to_string()];
    for r in runs {
        for c in ["rel_r", "rel_s", "norm_x", "norm_y"] {
            header.push(format!("{}_{c}", r.variant.name()));
        }
    }
    w.write_record(&header)?;
    let mut rows: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let counts: BTreeSet<usize> = runs.iter().flat_map(|r| r.records.iter().map(|x| x.spmm_count)).collect();
    for c in counts {
        rows.insert(c, vec![String::new(); 4 * runs.len()]);
    }
    for (i, r) in runs.iter().enumerate() {
        for rec in &r.records {
            let row = rows.get_mut(&rec.spmm_count).expect("count collected above");
            row[4 * i] = fmt_f64(rec.rel_r);
            row[4 * i + 1] = rec.rel_s.map(fmt_f64).unwrap_or_default();
            row[4 * i + 2] = fmt_f64(rec.norm_x);
            row[4 * i + 3] = rec.norm_y.map(fmt_f64).unwrap_or_default();
        }
    }
    for (c, vals) in rows {
        let mut rec = vec![c.to_string()];
        rec.extend(vals);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn compare_plots(runs: &[&RunResult<f64>]) -> (LogPlot, LogPlot) {
    let mut res_series = Vec::new();
    let mut norm_series = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        let name = r.variant.name();
        let x_end = r.records.last().map_or(0.0, |x| x.spmm_count as f64);
        let monitored: Vec<(f64, f64)> = r
            .records
            .iter()
            .map(|x| (x.spmm_count as f64, x.rel_s.unwrap_or(x.rel_r)))
            .collect();
        res_series.push(Series {
            label: format!("{name} {}", if r.variant.is_smoothed() { "|S|" } else { "|R|" }),
            points: monitored,
            dashed: false,
            color: i,
        });
        res_series.push(Series {
            label: format!("{name} final true"),
            points: vec![(0.0, r.final_true_rel), (x_end, r.final_true_rel)],
            dashed: true,
            color: i,
        });
        norm_series.push(Series {
            label: format!("{name} |X|"),
            points: r.records.iter().map(|x| (x.spmm_count as f64, x.norm_x)).collect(),
            dashed: r.variant.is_smoothed(),
            color: i,
        });
        if r.variant.is_smoothed() {
            norm_series.push(Series {
                label: format!("{name} |Y|"),
                points: r
                    .records
                    .iter()
                    .filter_map(|x| x.norm_y.map(|y| (x.spmm_count as f64, y)))
                    .collect(),
                dashed: false,
                color: i,
            });
        }
    }
    (
        LogPlot {
            title: "relative residual norms".into(),
            x_label: "multiplications by A".into(),
            y_label: "log10 |residual| / |B|".into(),
            series: res_series,
        },
        LogPlot {
            title: "approximation norms".into(),
            x_label: "multiplications by A".into(),
            y_label: "log10 Frobenius norm".into(),
            series: norm_series,
        },
    )
}
