mod common;

use std::path::Path;

use common::{code, memhd, stdout, synthetic_mnist};
use memhd_cli::config::ConfigFile;
use memhd_cli::error::{EXIT_CONFIG, EXIT_IO};
use memhd_core::format::ModelFile;

/// Small-model flags for `data`; a flag repeated in `extra` replaces the default.
fn pipeline<'a>(data: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let defaults = [
        ("--data-dir", data),
        ("--dim", "64"),
        ("--cols", "20"),
        ("--epochs", "3"),
        ("--seed", "7"),
    ];
    let mut v: Vec<&str> = defaults
        .iter()
        .filter(|(flag, _)| !extra.contains(flag))
        .flat_map(|&(flag, value)| [flag, value])
        .collect();
    v.extend_from_slice(extra);
    v
}

fn run(cmd: &str, args: &[&str]) -> std::process::Output {
    let mut full = vec![cmd];
    full.extend_from_slice(args);
    memhd(&full)
}

#[test]
fn cost_table_defaults() {
    let o = memhd(&["cost"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for needle in ["10240x10", "7.81%", "78.13%", "100.00%", "80x", "71x", "+21.87%"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
}

#[test]
fn cost_unit_array_counts_every_cell() {
    let o = memhd(&[
        "cost",
        "--array-rows",
        "1",
        "--array-cols",
        "1",
        "--partitions",
        "",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let cycles_em = text.lines().find(|l| l.starts_with("cycles,EM")).unwrap();
    assert_eq!(cycles_em, format!("cycles,EM,{},{},80x", 784 * 10240, 784 * 128));
    let cycles_am = text.lines().find(|l| l.starts_with("cycles,AM")).unwrap();
    assert!(cycles_am.starts_with(&format!("cycles,AM,{},{},", 10240 * 10, 128 * 128)));
}

#[test]
fn cost_rejects_bad_partition_and_flag() {
    assert_eq!(code(&memhd(&["cost", "--partitions", "0"])), EXIT_CONFIG);
    assert_eq!(
        code(&memhd(&["cost", "--array-rows", "1", "--array-cols", "1"])),
        EXIT_CONFIG
    );
    assert_eq!(code(&memhd(&["cost", "--no-such-flag"])), EXIT_CONFIG);
    assert_eq!(code(&memhd(&["--help"])), 0);
}

#[test]
fn missing_dataset_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent");
    let o = run("train", &pipeline(missing.to_str().unwrap(), &[]));
    assert_eq!(code(&o), EXIT_IO);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent"));
}

#[test]
fn invalid_settings_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 100, 20, 1);
    let data = data.to_str().unwrap();
    assert_eq!(code(&run("train", &pipeline(data, &["-R", "1.5"]))), EXIT_CONFIG);
    assert_eq!(
        code(&run("train", &pipeline(data, &["--normalize", "cube"]))),
        EXIT_CONFIG
    );
    assert_eq!(code(&run("train", &pipeline(data, &["--cols", "5"]))), EXIT_CONFIG);
    assert_eq!(
        code(&run("sweep-ratio", &pipeline(data, &["--ratios", "0"]))),
        EXIT_CONFIG
    );
}

#[test]
fn train_is_deterministic_and_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 200, 50, 2);
    let data = data.to_str().unwrap();
    let outputs: Vec<(Vec<u8>, String, String)> = (0..2)
        .map(|i| {
            let model = dir.path().join(format!("m{i}.memhd"));
            let report = dir.path().join(format!("r{i}.csv"));
            let o = run(
                "train",
                &pipeline(
                    data,
                    &["--out", model.to_str().unwrap(), "--report", report.to_str().unwrap()],
                ),
            );
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
            let text = stdout(&o).replace(&format!("m{i}.memhd"), "");
            (
                std::fs::read(&model).unwrap(),
                std::fs::read_to_string(&report).unwrap(),
                text,
            )
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);

    let (bytes, report, _) = &outputs[0];
    let model = ModelFile::from_bytes(bytes).unwrap();
    assert_eq!(&model.to_bytes(), bytes);
    assert_eq!(model.am.cols(), 20);
    assert_eq!(model.encoder.dim, 64);
    assert_eq!(report.lines().count(), 1 + 4);
    assert!(report.starts_with("epoch,updates,train_acc,test_acc\n0,0,"));
}

#[test]
fn zero_epochs_saves_the_initialized_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 200, 50, 3);
    let model = dir.path().join("m.memhd");
    let report = dir.path().join("r.csv");
    let o = memhd(&[
        "train",
        "--data-dir",
        data.to_str().unwrap(),
        "--dim",
        "64",
        "--cols",
        "20",
        "--epochs",
        "0",
        "--out",
        model.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("best_epoch 0"));
    assert_eq!(std::fs::read_to_string(&report).unwrap().lines().count(), 2);
    assert_eq!(ModelFile::load(&model).unwrap().meta.epochs, 0);
}

#[test]
fn eval_reports_confusion_and_rejects_mismatch_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 200, 50, 4);
    let other = synthetic_mnist(&dir.path().join("o"), 5, 100, 20, 4);
    let model = dir.path().join("m.memhd");
    let data_s = data.to_str().unwrap();
    assert_eq!(
        code(&run("train", &pipeline(data_s, &["--out", model.to_str().unwrap()]))),
        0
    );

    let o = memhd(&["eval", "--data-dir", data_s, "--model", model.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 10 + 1);
    assert!(lines[0].starts_with("true_class,pred_0,"));
    assert!(lines[11].starts_with("all,") && lines[11].contains(",50,"));
    let again = memhd(&["eval", "--data-dir", data_s, "--model", model.to_str().unwrap()]);
    assert_eq!(stdout(&again), csv);

    let o = memhd(&[
        "eval",
        "--data-dir",
        other.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), EXIT_CONFIG);

    let mut bytes = std::fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    let bad = dir.path().join("bad.memhd");
    std::fs::write(&bad, bytes).unwrap();
    let o = memhd(&["eval", "--data-dir", data_s, "--model", bad.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_IO);
}

#[test]
fn eval_trials_give_one_row_each_plus_mean() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 150, 30, 5);
    let o = run("eval", &pipeline(data.to_str().unwrap(), &["--trials", "3"]));
    assert_eq!(code(&o), 0);
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "trial,seed,train_acc,test_acc,test_std");
    assert_eq!(lines.len(), 1 + 3 + 1);
    assert!(lines[1].starts_with("0,7,") && lines[3].starts_with("2,9,"));
    assert!(lines[4].starts_with("mean,,"));
}

#[test]
fn sweep_grid_rows_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 150, 30, 6);
    let out = dir.path().join("sweep.csv");
    let args = pipeline(
        data.to_str().unwrap(),
        &[
            "--dims",
            "32,64",
            "--cols-list",
            "10,20",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&run("sweep", &args)), 0);
    let first = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 1 + 4);
    let keys: Vec<&str> = lines[1..]
        .iter()
        .map(|l| &l[..l.match_indices(',').nth(1).unwrap().0])
        .collect();
    assert_eq!(keys, ["32,10", "32,20", "64,10", "64,20"]);

    let fresh = dir.path().join("fresh.csv");
    let mut fresh_args = args.clone();
    *fresh_args.last_mut().unwrap() = fresh.to_str().unwrap();
    assert_eq!(code(&run("sweep", &fresh_args)), 0);
    assert_eq!(std::fs::read_to_string(&fresh).unwrap(), first);

    let partial: String = first
        .lines()
        .filter(|l| !l.starts_with("64,10"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&out, partial).unwrap();
    assert_eq!(code(&run("sweep", &args)), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn compare_init_and_ratio_sweep_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 150, 30, 8);
    let data = data.to_str().unwrap();
    let a = run("compare-init", &pipeline(data, &["--epochs", "0", "--trials", "2"]));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let csv = stdout(&a);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "seed,init,epoch,train_acc,test_acc");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("7,cluster,0,") && lines[2].starts_with("7,random,0,"));
    let b = run("compare-init", &pipeline(data, &["--epochs", "0", "--trials", "2"]));
    assert_eq!(stdout(&b), csv);

    let r = run("sweep-ratio", &pipeline(data, &["--ratios", "1.0"]));
    assert_eq!(code(&r), 0);
    let csv = stdout(&r);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("1,1,"));
}

#[test]
fn dataset_cache_is_used_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_mnist(&dir.path().join("d"), 6, 150, 30, 9);
    let cache = dir.path().join("cache");
    let args = pipeline(
        data.to_str().unwrap(),
        &["--trials", "1", "--cache-dir", cache.to_str().unwrap()],
    );
    let first = run("eval", &args);
    assert_eq!(code(&first), 0);
    assert!(cache.join("mnist").join("train.bin").exists());
    std::fs::remove_dir_all(&data).unwrap();
    let second = run("eval", &args);
    assert_eq!(code(&second), 0);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn presets_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    for name in ["mnist", "fmnist", "isolet"] {
        let f = ConfigFile::load(&root.join(format!("{name}.conf"))).unwrap();
        assert_eq!(f.get("dataset"), Some(name));
    }
}
