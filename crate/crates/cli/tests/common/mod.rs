#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memhd_core::data::write_idx;
use memhd_core::rng::prng;
use rand::Rng;

pub fn memhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memhd"))
        .args(args)
        .env_remove("MEMHD_DATA_DIR")
        .env_remove("MEMHD_CACHE_DIR")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Writes an MNIST-layout directory of `side x side` images: ten noisy
/// class prototypes, `train`/`test` samples.
pub fn synthetic_mnist(dir: &Path, side: usize, train: usize, test: usize, seed: u64) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = prng(seed);
    let f = side * side;
    let protos: Vec<Vec<u8>> = (0..10)
        .map(|_| (0..f).map(|_| if rng.random_bool(0.3) { 255 } else { 0 }).collect())
        .collect();
    let mut split = |n: usize| {
        let mut pixels = Vec::with_capacity(n * f);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 10;
            labels.push(c as u8);
            pixels.extend(
                protos[c]
                    .iter()
                    .map(|&p| if rng.random_bool(0.15) { 255 - p } else { p }),
            );
        }
        (pixels, labels)
    };
    let (tp, tl) = split(train);
    write_idx(
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        side,
        side,
        &tp,
        &tl,
    )
    .unwrap();
    let (sp, sl) = split(test);
    write_idx(
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
        side,
        side,
        &sp,
        &sl,
    )
    .unwrap();
    dir.to_path_buf()
}
