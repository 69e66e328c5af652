//! Tiling cost model for mapping the encoder and associative memory onto
//! fixed-size in-memory-computing arrays.
//!
//! One array activation computes one tile of a matrix-vector product, so a
//! matrix needs `ceil(rows / R) * ceil(cols / S)` activations on a single
//! `R x S` array and the same number of arrays to be held resident.
//! Partitioning folds a `D x k` memory into `ceil(D / P) x (k * P)`: fewer
//! arrays, same number of activations.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Energy of one array activation, arbitrary units.
    pub e_read: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            rows: 128,
            cols: 128,
            e_read: 1.0,
        }
    }
}

impl ArrayConfig {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let cfg = Self {
            rows,
            cols,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::ZeroDimension("array rows"));
        }
        if self.cols == 0 {
            return Err(Error::ZeroDimension("array columns"));
        }
        if !(self.e_read.is_finite() && self.e_read >= 0.0) {
            return Err(Error::Config(format!(
                "read energy {} must be finite and non-negative",
                self.e_read
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixShape {
    pub n_rows: usize,
    pub n_cols: usize,
}

impl MatrixShape {
    pub fn new(n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 {
            return Err(Error::ZeroDimension("matrix rows"));
        }
        if n_cols == 0 {
            return Err(Error::ZeroDimension("matrix columns"));
        }
        Ok(Self { n_rows, n_cols })
    }
}

impl fmt::Display for MatrixShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_rows, self.n_cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    Basic,
    /// Hypervectors folded into `P` segments.
    Partitioned(usize),
    Memhd,
}

impl MappingKind {
    pub fn label(&self) -> String {
        match self {
            Self::Basic => "Basic".into(),
            Self::Partitioned(p) => format!("P={p}"),
            Self::Memhd => "MEMHD".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingPlan {
    pub kind: MappingKind,
    /// Features x dimension.
    pub em_shape: MatrixShape,
    /// Dimension x columns, before any folding.
    pub am_shape: MatrixShape,
    pub array: ArrayConfig,
}

impl MappingPlan {
    pub fn new(kind: MappingKind, features: usize, dim: usize, am_cols: usize, array: ArrayConfig) -> Result<Self> {
        Ok(Self {
            kind,
            em_shape: MatrixShape::new(features, dim)?,
            am_shape: MatrixShape::new(dim, am_cols)?,
            array,
        })
    }

    /// The memory as laid out on the arrays.
    pub fn mapped_am(&self) -> Result<MatrixShape> {
        match self.kind {
            MappingKind::Partitioned(0) => Err(Error::Mapping("partition count must be at least 1".into())),
            MappingKind::Partitioned(p) => MatrixShape::new(self.am_shape.n_rows.div_ceil(p), self.am_shape.n_cols * p),
            MappingKind::Basic | MappingKind::Memhd => Ok(self.am_shape),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub kind: MappingKind,
    pub am_structure: MatrixShape,
    pub cycles_em: u64,
    pub cycles_am: u64,
    pub cycles_total: u64,
    pub arrays_em: u64,
    pub arrays_am: u64,
    pub arrays_total: u64,
    /// Occupied fraction of the widest array column block, in (0, 1].
    pub am_utilization: f64,
    /// Occupied fraction of the last column block.
    pub am_last_block_fill: f64,
    pub energy_am: f64,
    pub memory_em_bits: u64,
    pub memory_am_bits: u64,
}

impl CostReport {
    /// Utilization in hundredths of a percent, rounded half away from zero.
    pub fn utilization_bp(&self) -> u64 {
        (self.am_utilization * 10_000.0).round() as u64
    }
}

/// Activations needed to multiply through `shape` on one array.
pub fn tile_cycles(shape: MatrixShape, array: &ArrayConfig) -> u64 {
    (shape.n_rows.div_ceil(array.rows) * shape.n_cols.div_ceil(array.cols)) as u64
}

pub fn plan_cost(plan: &MappingPlan) -> Result<CostReport> {
    plan.array.validate()?;
    let array = &plan.array;
    let mapped = plan.mapped_am()?;
    if let MappingKind::Partitioned(p) = plan.kind {
        if mapped.n_cols > array.cols {
            return Err(Error::Mapping(format!(
                "folding {} columns by P={p} gives {} columns, wider than the {}-column array; \
                 use a wider array or a smaller P",
                plan.am_shape.n_cols, mapped.n_cols, array.cols
            )));
        }
    }
    let cycles_em = tile_cycles(plan.em_shape, array);
    let cycles_am = tile_cycles(plan.am_shape, array);
    let arrays_em = cycles_em;
    let arrays_am = tile_cycles(mapped, array);
    let am_utilization = mapped.n_cols.min(array.cols) as f64 / array.cols as f64;
    let am_last_block_fill = ((mapped.n_cols - 1) % array.cols + 1) as f64 / array.cols as f64;
    Ok(CostReport {
        kind: plan.kind,
        am_structure: mapped,
        cycles_em,
        cycles_am,
        cycles_total: cycles_em + cycles_am,
        arrays_em,
        arrays_am,
        arrays_total: arrays_em + arrays_am,
        am_utilization,
        am_last_block_fill,
        energy_am: cycles_am as f64 * array.e_read,
        memory_em_bits: (plan.em_shape.n_rows * plan.em_shape.n_cols) as u64,
        memory_am_bits: (plan.am_shape.n_rows * plan.am_shape.n_cols) as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub kind: MappingKind,
    pub am_structure: MatrixShape,
    pub energy_am: f64,
    /// `energy_am` divided by the largest entry.
    pub normalized: f64,
    pub cycles_am: u64,
    pub arrays_am: u64,
}

pub fn energy_comparison(plans: &[MappingPlan]) -> Result<Vec<EnergyRow>> {
    if plans.is_empty() {
        return Err(Error::Empty("mapping plan list"));
    }
    let reports = plans.iter().map(plan_cost).collect::<Result<Vec<_>>>()?;
    let max = reports.iter().map(|r| r.energy_am).fold(0.0, f64::max);
    Ok(reports
        .into_iter()
        .map(|r| EnergyRow {
            kind: r.kind,
            am_structure: r.am_structure,
            energy_am: r.energy_am,
            normalized: if max > 0.0 { r.energy_am / max } else { 1.0 },
            cycles_am: r.cycles_am,
            arrays_am: r.arrays_am,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    SearcHd,
    QuantHd,
    LeHdc,
    BasicHdc,
    Memhd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [Self::SearcHd, Self::QuantHd, Self::LeHdc, Self::BasicHdc, Self::Memhd];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "searchd" => Ok(Self::SearcHd),
            "quanthd" => Ok(Self::QuantHd),
            "lehdc" => Ok(Self::LeHdc),
            "basichdc" | "basic" => Ok(Self::BasicHdc),
            "memhd" => Ok(Self::Memhd),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SearcHd => "SearcHD",
            Self::QuantHd => "QuantHD",
            Self::LeHdc => "LeHDC",
            Self::BasicHdc => "BasicHDC",
            Self::Memhd => "MEMHD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryParams {
    pub features: u64,
    pub dim: u64,
    pub classes: u64,
    pub cols: u64,
    pub levels: u64,
    /// Binary vectors per class for multi-model quantization.
    pub models_per_class: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBits {
    pub em: u64,
    pub am: u64,
}

impl MemoryBits {
    pub fn total(&self) -> u64 {
        self.em + self.am
    }
}

pub fn memory_report(kind: ModelKind, p: &MemoryParams) -> Result<MemoryBits> {
    let fields = [
        ("features", p.features),
        ("dimension", p.dim),
        ("class count", p.classes),
    ];
    if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
        return Err(Error::ZeroDimension(name));
    }
    let id_level_em = (p.features + p.levels) * p.dim;
    let bits = match kind {
        ModelKind::SearcHd => MemoryBits {
            em: id_level_em,
            am: p.classes * p.dim * p.models_per_class,
        },
        ModelKind::QuantHd | ModelKind::LeHdc => MemoryBits {
            em: id_level_em,
            am: p.classes * p.dim,
        },
        ModelKind::BasicHdc => MemoryBits {
            em: p.features * p.dim,
            am: p.classes * p.dim,
        },
        ModelKind::Memhd => MemoryBits {
            em: p.features * p.dim,
            am: p.cols * p.dim,
        },
    };
    Ok(bits)
}

/// Inputs for a full baseline-versus-MEMHD mapping comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CostScenario {
    pub name: String,
    pub features: usize,
    pub classes: usize,
    pub basic_dim: usize,
    pub partitions: Vec<usize>,
    pub memhd_dim: usize,
    pub memhd_cols: usize,
    pub array: ArrayConfig,
}

impl CostScenario {
    pub fn mnist() -> Self {
        Self {
            name: "mnist".into(),
            features: 784,
            classes: 10,
            basic_dim: 10240,
            partitions: vec![5, 10],
            memhd_dim: 128,
            memhd_cols: 128,
            array: ArrayConfig::default(),
        }
    }

    pub fn isolet() -> Self {
        Self {
            name: "isolet".into(),
            features: 617,
            classes: 26,
            basic_dim: 10240,
            partitions: vec![2, 4],
            memhd_dim: 512,
            memhd_cols: 128,
            array: ArrayConfig::default(),
        }
    }

    pub fn plans(&self) -> Result<Vec<MappingPlan>> {
        let baseline = |kind| MappingPlan::new(kind, self.features, self.basic_dim, self.classes, self.array);
        let mut plans = vec![baseline(MappingKind::Basic)?];
        for &p in &self.partitions {
            plans.push(baseline(MappingKind::Partitioned(p))?);
        }
        plans.push(MappingPlan::new(
            MappingKind::Memhd,
            self.features,
            self.memhd_dim,
            self.memhd_cols,
            self.array,
        )?);
        Ok(plans)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Improvement {
    /// Best baseline divided by MEMHD.
    Ratio(f64),
    /// MEMHD minus best baseline, hundredths of a percentage point.
    PointsBp(i64),
}

impl fmt::Display for Improvement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Ratio(r) => write!(f, "{}x", trim_decimal(r)),
            Self::PointsBp(bp) => write!(f, "+{}", percent_from_bp(bp)),
        }
    }
}

fn trim_decimal(v: f64) -> String {
    let s = format!("{:.2}", (v * 100.0).round() / 100.0);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn percent_from_bp(bp: i64) -> String {
    format!("{}.{:02}%", bp / 100, (bp % 100).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostComparison {
    pub scenario: CostScenario,
    /// Baselines first, MEMHD last.
    pub reports: Vec<CostReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    CyclesEm,
    CyclesAm,
    CyclesTotal,
    ArraysEm,
    ArraysAm,
    ArraysTotal,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Self::CyclesEm,
        Self::CyclesAm,
        Self::CyclesTotal,
        Self::ArraysEm,
        Self::ArraysAm,
        Self::ArraysTotal,
    ];

    fn of(&self, r: &CostReport) -> u64 {
        match self {
            Self::CyclesEm => r.cycles_em,
            Self::CyclesAm => r.cycles_am,
            Self::CyclesTotal => r.cycles_total,
            Self::ArraysEm => r.arrays_em,
            Self::ArraysAm => r.arrays_am,
            Self::ArraysTotal => r.arrays_total,
        }
    }

    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            Self::CyclesEm => ("cycles", "EM"),
            Self::CyclesAm => ("cycles", "AM"),
            Self::CyclesTotal => ("cycles", "Total"),
            Self::ArraysEm => ("arrays", "EM"),
            Self::ArraysAm => ("arrays", "AM"),
            Self::ArraysTotal => ("arrays", "Total"),
        }
    }
}

pub fn compare(scenario: &CostScenario) -> Result<CostComparison> {
    let reports = scenario.plans()?.iter().map(plan_cost).collect::<Result<Vec<_>>>()?;
    Ok(CostComparison {
        scenario: scenario.clone(),
        reports,
    })
}

impl CostComparison {
    pub fn memhd(&self) -> &CostReport {
        self.reports.last().expect("comparison always holds the MEMHD plan")
    }

    pub fn baselines(&self) -> &[CostReport] {
        &self.reports[..self.reports.len() - 1]
    }

    pub fn improvement(&self, metric: Metric) -> Improvement {
        let best = self.baselines().iter().map(|r| metric.of(r)).min().unwrap_or(0);
        Improvement::Ratio(best as f64 / metric.of(self.memhd()) as f64)
    }

    /// Computed on the displayed (rounded) percentages.
    pub fn utilization_gain(&self) -> Improvement {
        let best = self.baselines().iter().map(|r| r.utilization_bp()).max().unwrap_or(0);
        Improvement::PointsBp(self.memhd().utilization_bp() as i64 - best as i64)
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut header = vec!["metric".to_string(), "part".to_string()];
        header.extend(self.reports.iter().map(|r| r.kind.label()));
        header.push("Improv.".into());

        let mut rows = vec![header];
        let mut structure = vec!["structure".to_string(), "AM".to_string()];
        structure.extend(self.reports.iter().map(|r| r.am_structure.to_string()));
        structure.push("-".into());
        rows.push(structure);

        for metric in Metric::ALL {
            let (name, part) = metric.labels();
            let mut row = vec![name.to_string(), part.to_string()];
            row.extend(self.reports.iter().map(|r| metric.of(r).to_string()));
            row.push(self.improvement(metric).to_string());
            rows.push(row);
        }
        let mut util = vec!["utilization".to_string(), "AM".to_string()];
        util.extend(self.reports.iter().map(|r| percent_from_bp(r.utilization_bp() as i64)));
        util.push(self.utilization_gain().to_string());
        rows.push(util);
        rows
    }

    pub fn to_csv(&self) -> String {
        self.rows().iter().fold(String::new(), |mut out, row| {
            out.push_str(&row.join(","));
            out.push('\n');
            out
        })
    }

    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c < 2 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            if i == 0 {
                let rule = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(rule));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(r: usize, c: usize) -> MatrixShape {
        MatrixShape::new(r, c).unwrap()
    }

    #[test]
    fn tile_cycle_examples() {
        let a = ArrayConfig::default();
        assert_eq!(tile_cycles(shape(784, 10240), &a), 560);
        assert_eq!(tile_cycles(shape(128, 128), &a), 1);
        assert_eq!(tile_cycles(shape(512, 128), &a), 4);
        let unit = ArrayConfig::new(1, 1).unwrap();
        assert_eq!(tile_cycles(shape(7, 9), &unit), 63);
    }

    #[test]
    fn rejects_zero_shapes() {
        assert!(MatrixShape::new(0, 3).is_err());
        assert!(ArrayConfig::new(128, 0).is_err());
        let a = ArrayConfig::default();
        let p = MappingPlan::new(MappingKind::Partitioned(0), 784, 10240, 10, a).unwrap();
        assert!(plan_cost(&p).is_err());
    }

    #[test]
    fn folded_width_beyond_array_is_error() {
        let p = MappingPlan::new(MappingKind::Partitioned(13), 784, 10240, 10, ArrayConfig::default()).unwrap();
        assert!(matches!(plan_cost(&p), Err(Error::Mapping(_))));
    }

    #[test]
    fn uneven_fold_rounds_up() {
        let p = MappingPlan::new(MappingKind::Partitioned(3), 10, 1000, 10, ArrayConfig::default()).unwrap();
        assert_eq!(p.mapped_am().unwrap(), shape(334, 30));
    }

    #[test]
    fn wide_memhd_caps_utilization() {
        let p = MappingPlan::new(MappingKind::Memhd, 784, 128, 200, ArrayConfig::default()).unwrap();
        let r = plan_cost(&p).unwrap();
        assert_eq!(r.am_utilization, 1.0);
        assert_eq!(r.am_last_block_fill, 72.0 / 128.0);
    }

    #[test]
    fn memory_formulas() {
        let p = MemoryParams {
            features: 784,
            dim: 10240,
            classes: 10,
            cols: 128,
            levels: 256,
            models_per_class: 64,
        };
        assert_eq!(
            memory_report(ModelKind::BasicHdc, &p).unwrap(),
            MemoryBits {
                em: 8_028_160,
                am: 102_400
            }
        );
        assert_eq!(memory_report(ModelKind::SearcHd, &p).unwrap().am, 6_553_600);
        let m = MemoryParams { dim: 128, ..p };
        assert_eq!(
            memory_report(ModelKind::Memhd, &m).unwrap(),
            MemoryBits {
                em: 100_352,
                am: 16_384
            }
        );
        assert!(ModelKind::parse("nope").is_err());
        assert_eq!(ModelKind::parse("LeHDC").unwrap(), ModelKind::LeHdc);
    }

    #[test]
    fn identical_plans_have_unit_ratio() {
        let p = MappingPlan::new(MappingKind::Memhd, 784, 128, 128, ArrayConfig::default()).unwrap();
        let rows = energy_comparison(&[p, p]).unwrap();
        assert_eq!(rows[0].normalized, 1.0);
        assert_eq!(rows[0].energy_am / rows[1].energy_am, 1.0);
        assert!(energy_comparison(&[]).is_err());
    }

    #[test]
    fn improvement_formatting() {
        assert_eq!(Improvement::Ratio(80.0).to_string(), "80x");
        assert_eq!(Improvement::Ratio(17.5).to_string(), "17.5x");
        assert_eq!(Improvement::PointsBp(2187).to_string(), "+21.87%");
        assert_eq!(percent_from_bp(781), "7.81%");
    }

    #[test]
    fn text_table_is_aligned() {
        let t = compare(&CostScenario::mnist()).unwrap().to_text();
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("metric"));
        assert!(lines[1].chars().all(|c| c == '-'));
        assert_eq!(lines.len(), 10);
    }
}
