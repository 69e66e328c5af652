//! Subcommand bodies. Each returns the text destined for stdout; files named
//! by `--out` or `--report` are written here.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use memhd_core::cost::{compare, energy_comparison, memory_report, ArrayConfig, CostScenario, MemoryParams, ModelKind};
use memhd_core::format::ModelFile;
use memhd_core::{encode_dataset, evaluate, Encoder};

use crate::args::{
    CompareInitArgs, CostArgs, CostPreset, CostView, EvalArgs, OutputFormat, SweepArgs, SweepRatioArgs, TrainArgs,
};
use crate::config::{parse_list, InitKind, Settings};
use crate::error::{CliError, Result};
use crate::pipeline::{
    encode_splits, init_config, initialize, load_splits, mean_std, run_trial, train_encoded, Splits, Trial,
};

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

/// Writes `content` to `out` when given, otherwise hands it back for stdout.
fn emit(out: Option<&Path>, content: String) -> Result<String> {
    match out {
        Some(path) => {
            write_file(path, &content)?;
            Ok(String::new())
        }
        None => Ok(content),
    }
}

fn acc(v: f64) -> String {
    format!("{v:.6}")
}

pub fn train(args: &TrainArgs) -> Result<String> {
    let s = args.pipeline.overrides().resolve()?;
    let splits = load_splits(&s)?;
    let trial = run_trial(&s, &splits, (s.dim, s.cols), s.ratio, s.init, s.seed)?;
    trial.model.save(&args.out)?;
    if let Some(path) = &args.report {
        write_file(path, &epoch_report(&trial))?;
    }
    Ok(format!(
        "train_acc {}\ntest_acc {}\nbest_epoch {}\nmodel {}\n",
        acc(trial.train_accuracy()),
        acc(trial.test_accuracy),
        trial.report.best_epoch,
        args.out.display()
    ))
}

/// `epoch,updates,train_acc,test_acc`, epoch 0 being the initialized AM.
fn epoch_report(trial: &Trial) -> String {
    let mut out = String::from("epoch,updates,train_acc,test_acc\n");
    let _ = writeln!(
        out,
        "0,0,{},{}",
        acc(trial.report.initial_accuracy),
        acc(trial.test_curve[0])
    );
    for (s, test) in trial.report.history.iter().zip(&trial.test_curve[1..]) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.epoch,
            s.updates,
            acc(s.train_accuracy),
            acc(*test)
        );
    }
    out
}

pub fn eval(args: &EvalArgs) -> Result<String> {
    let s = args.pipeline.overrides().resolve()?;
    let splits = load_splits(&s)?;
    let csv = match (&args.model, args.trials) {
        (_, Some(trials)) => trials_csv(&s, &splits, trials)?,
        (Some(path), None) => confusion_csv(&ModelFile::load(path)?, &splits)?,
        (None, None) => return Err(CliError::Config("eval needs --model or --trials".into())),
    };
    emit(args.out.as_deref(), csv)
}

fn confusion_csv(model: &ModelFile, splits: &Splits) -> Result<String> {
    let test = &splits.test;
    if model.encoder.features != test.features() {
        return Err(CliError::Config(format!(
            "model expects {} features, dataset has {}",
            model.encoder.features,
            test.features()
        )));
    }
    if model.am.class_map().classes() != test.classes() {
        return Err(CliError::Config(format!(
            "model has {} classes, dataset has {}",
            model.am.class_map().classes(),
            test.classes()
        )));
    }
    let encoder = Encoder::new(&model.encoder)?;
    let result = evaluate(&model.am, &encode_dataset(&encoder, test)?)?;
    let cm = &result.confusion;
    let k = cm.classes();

    let mut out = String::from("true_class");
    for p in 0..k {
        let _ = write!(out, ",pred_{p}");
    }
    out.push_str(",total,accuracy\n");
    for t in 0..k {
        let row = cm.row(t);
        let total: u64 = row.iter().sum();
        let rate = if total == 0 { 0.0 } else { row[t] as f64 / total as f64 };
        let _ = write!(out, "{t}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{total},{}", acc(rate));
    }
    let _ = write!(out, "all");
    for p in 0..k {
        let col: u64 = (0..k).map(|t| cm.get(t, p)).sum();
        let _ = write!(out, ",{col}");
    }
    let _ = writeln!(out, ",{},{}", cm.total(), acc(result.accuracy));
    Ok(out)
}

fn seeds(s: &Settings, trials: usize) -> Result<Vec<u64>> {
    if trials == 0 {
        return Err(CliError::Config("`trials` must be at least 1".into()));
    }
    Ok((0..trials as u64).map(|t| s.seed.wrapping_add(t)).collect())
}

fn trials_csv(s: &Settings, splits: &Splits, trials: usize) -> Result<String> {
    let mut out = String::from("trial,seed,train_acc,test_acc,test_std\n");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (t, seed) in seeds(s, trials)?.into_iter().enumerate() {
        let trial = run_trial(s, splits, (s.dim, s.cols), s.ratio, s.init, seed)?;
        let _ = writeln!(
            out,
            "{t},{seed},{},{},",
            acc(trial.train_accuracy()),
            acc(trial.test_accuracy)
        );
        train.push(trial.train_accuracy());
        test.push(trial.test_accuracy);
    }
    let (test_mean, test_std) = mean_std(&test);
    let _ = writeln!(
        out,
        "mean,,{},{},{}",
        acc(mean_std(&train).0),
        acc(test_mean),
        acc(test_std)
    );
    Ok(out)
}

/// Mean train accuracy, mean test accuracy and test standard deviation.
fn summarize(trials: &[Trial]) -> (f64, f64, f64) {
    let train: Vec<f64> = trials.iter().map(Trial::train_accuracy).collect();
    let test: Vec<f64> = trials.iter().map(|t| t.test_accuracy).collect();
    let (test_mean, test_std) = mean_std(&test);
    (mean_std(&train).0, test_mean, test_std)
}

const SWEEP_HEADER: &str = "dim,cols,trials,train_acc,test_acc,test_std";

/// Rows of an earlier sweep keyed by `(dim, cols)`.
fn completed_cells(path: &Path) -> Result<BTreeMap<(usize, usize), String>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        None => return Ok(done),
        Some(SWEEP_HEADER) => {}
        Some(other) => {
            return Err(CliError::Config(format!(
                "{}: unexpected header `{other}`",
                path.display()
            )))
        }
    }
    for line in lines.filter(|l| !l.is_empty()) {
        let mut fields = line.split(',');
        let mut key = || fields.next().and_then(|f| f.parse::<usize>().ok());
        let (Some(d), Some(c)) = (key(), key()) else {
            return Err(CliError::Config(format!("{}: malformed row `{line}`", path.display())));
        };
        done.insert((d, c), line.to_string());
    }
    Ok(done)
}

fn sweep_csv(grid: &[(usize, usize)], rows: &BTreeMap<(usize, usize), String>) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for cell in grid {
        if let Some(row) = rows.get(cell) {
            out.push_str(row);
            out.push('\n');
        }
    }
    for (cell, row) in rows {
        if !grid.contains(cell) {
            out.push_str(row);
            out.push('\n');
        }
    }
    out
}

pub fn sweep(args: &SweepArgs) -> Result<String> {
    let s = args.pipeline.overrides().resolve()?;
    let dims: Vec<usize> = parse_list("dims", &args.dims)?;
    let cols: Vec<usize> = parse_list("cols-list", &args.cols_list)?;
    if let Some(&bad) = dims.iter().chain(&cols).find(|&&v| v == 0) {
        return Err(CliError::Config(format!("sweep sizes must be positive, found {bad}")));
    }
    let seeds = seeds(&s, args.trials)?;
    let grid: Vec<(usize, usize)> = dims.iter().flat_map(|&d| cols.iter().map(move |&c| (d, c))).collect();
    let mut rows = match &args.out {
        Some(path) => completed_cells(path)?,
        None => BTreeMap::new(),
    };

    let pending = |rows: &BTreeMap<_, _>, d| cols.iter().filter(|&&c| !rows.contains_key(&(d, c))).count();
    if grid.iter().any(|cell| !rows.contains_key(cell)) {
        let splits = load_splits(&s)?;
        for &d in &dims {
            if pending(&rows, d) == 0 {
                continue;
            }
            let mut results: BTreeMap<usize, Vec<Trial>> = BTreeMap::new();
            for &seed in &seeds {
                let enc = encode_splits(&splits, d, seed)?;
                for &c in cols.iter().filter(|&&c| !rows.contains_key(&(d, c))) {
                    let fam = initialize(s.init, &init_config(&s, c, s.ratio, seed), &enc.train)?;
                    let trial = train_encoded(&s, &enc, fam, s.ratio, seed)?;
                    results.entry(c).or_default().push(trial);
                }
            }
            for (c, trials) in results {
                let (train, test, std) = summarize(&trials);
                let row = format!("{d},{c},{},{},{},{}", trials.len(), acc(train), acc(test), acc(std));
                rows.insert((d, c), row);
            }
            if let Some(path) = &args.out {
                write_file(path, &sweep_csv(&grid, &rows))?;
            }
        }
    }
    emit(args.out.as_deref(), sweep_csv(&grid, &rows))
}

pub fn compare_init(args: &CompareInitArgs) -> Result<String> {
    let s = args.pipeline.overrides().resolve()?;
    let seeds = seeds(&s, args.trials)?;
    let splits = load_splits(&s)?;
    let mut out = String::from("seed,init,epoch,train_acc,test_acc\n");
    for seed in seeds {
        let enc = encode_splits(&splits, s.dim, seed)?;
        for kind in [InitKind::Cluster, InitKind::Random] {
            let fam = initialize(kind, &init_config(&s, s.cols, s.ratio, seed), &enc.train)?;
            let trial = train_encoded(&s, &enc, fam, s.ratio, seed)?;
            for (epoch, test) in trial.test_curve.iter().enumerate() {
                let train = trial.report.accuracy_at(epoch).unwrap_or(f64::NAN);
                let _ = writeln!(out, "{seed},{},{epoch},{},{}", kind.name(), acc(train), acc(*test));
            }
        }
    }
    emit(args.out.as_deref(), out)
}

pub fn sweep_ratio(args: &SweepRatioArgs) -> Result<String> {
    let s = args.pipeline.overrides().resolve()?;
    let ratios: Vec<f64> = parse_list("ratios", &args.ratios)?;
    if let Some(bad) = ratios.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(CliError::Config(format!("ratio {bad} must lie in (0, 1]")));
    }
    let seeds = seeds(&s, args.trials)?;
    let splits = load_splits(&s)?;
    let mut results: Vec<Vec<Trial>> = ratios.iter().map(|_| Vec::new()).collect();
    for &seed in &seeds {
        let enc = encode_splits(&splits, s.dim, seed)?;
        for (&ratio, slot) in ratios.iter().zip(&mut results) {
            let fam = initialize(s.init, &init_config(&s, s.cols, ratio, seed), &enc.train)?;
            slot.push(train_encoded(&s, &enc, fam, ratio, seed)?);
        }
    }
    let mut out = String::from("ratio,trials,train_acc,test_acc,test_std\n");
    for (ratio, trials) in ratios.iter().zip(&results) {
        let (train, test, std) = summarize(trials);
        let _ = writeln!(
            out,
            "{ratio},{},{},{},{}",
            trials.len(),
            acc(train),
            acc(test),
            acc(std)
        );
    }
    emit(args.out.as_deref(), out)
}

fn scenario(args: &CostArgs) -> Result<CostScenario> {
    let mut sc = match args.dataset {
        CostPreset::Mnist => CostScenario::mnist(),
        CostPreset::Fmnist => CostScenario {
            name: "fmnist".into(),
            ..CostScenario::mnist()
        },
        CostPreset::Isolet => CostScenario::isolet(),
    };
    sc.features = args.features.unwrap_or(sc.features);
    sc.classes = args.classes.unwrap_or(sc.classes);
    sc.basic_dim = args.basic_dim.unwrap_or(sc.basic_dim);
    sc.memhd_dim = args.dim.unwrap_or(sc.memhd_dim);
    sc.memhd_cols = args.cols.unwrap_or(sc.memhd_cols);
    match args.partitions.as_deref().map(str::trim) {
        Some("") => sc.partitions.clear(),
        Some(raw) => sc.partitions = parse_list("partitions", raw)?,
        None => {}
    }
    sc.array = ArrayConfig {
        rows: args.array_rows.unwrap_or(sc.array.rows),
        cols: args.array_cols.unwrap_or(sc.array.cols),
        e_read: args.e_read.unwrap_or(sc.array.e_read),
    };
    sc.array.validate()?;
    Ok(sc)
}

/// CSV, or space-aligned columns with the first column left-justified.
fn render(rows: &[Vec<String>], format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            for row in rows {
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        OutputFormat::Text => {
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
                .collect();
            for row in rows {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (cell, &w))| {
                        if c == 0 {
                            format!("{cell:<w$}")
                        } else {
                            format!("{cell:>w$}")
                        }
                    })
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            }
        }
    }
    out
}

fn energy_rows(sc: &CostScenario) -> Result<Vec<Vec<String>>> {
    let plans = sc.plans()?;
    let energy = energy_comparison(&plans)?;
    let memhd = energy.last().map(|r| r.energy_am).unwrap_or(0.0);
    let mut rows = vec![[
        "mapping",
        "am",
        "cycles_am",
        "arrays_am",
        "energy_am",
        "normalized",
        "vs_memhd",
    ]
    .map(String::from)
    .to_vec()];
    for r in &energy {
        rows.push(vec![
            r.kind.label(),
            r.am_structure.to_string(),
            r.cycles_am.to_string(),
            r.arrays_am.to_string(),
            format!("{:.3}", r.energy_am),
            format!("{:.4}", r.normalized),
            if memhd > 0.0 {
                format!("{:.2}", r.energy_am / memhd)
            } else {
                "-".into()
            },
        ]);
    }
    Ok(rows)
}

fn memory_rows(sc: &CostScenario, args: &CostArgs) -> Result<Vec<Vec<String>>> {
    let mut rows = vec![["model", "dim", "em_bits", "am_bits", "total_bits", "total_kb"]
        .map(String::from)
        .to_vec()];
    for kind in ModelKind::ALL {
        let dim = if kind == ModelKind::Memhd {
            sc.memhd_dim
        } else {
            sc.basic_dim
        };
        let bits = memory_report(
            kind,
            &MemoryParams {
                features: sc.features as u64,
                dim: dim as u64,
                classes: sc.classes as u64,
                cols: sc.memhd_cols as u64,
                levels: args.levels as u64,
                models_per_class: args.models_per_class as u64,
            },
        )?;
        rows.push(vec![
            kind.name().to_string(),
            dim.to_string(),
            bits.em.to_string(),
            bits.am.to_string(),
            bits.total().to_string(),
            format!("{:.2}", bits.total() as f64 / 8192.0),
        ]);
    }
    Ok(rows)
}

pub fn cost(args: &CostArgs) -> Result<String> {
    let sc = scenario(args)?;
    let text = match args.view {
        CostView::Table => {
            let cmp = compare(&sc)?;
            match args.format {
                OutputFormat::Text => cmp.to_text(),
                OutputFormat::Csv => cmp.to_csv(),
            }
        }
        CostView::Energy => render(&energy_rows(&sc)?, args.format),
        CostView::Memory => render(&memory_rows(&sc, args)?, args.format),
    };
    emit(args.out.as_deref(), text)
}
