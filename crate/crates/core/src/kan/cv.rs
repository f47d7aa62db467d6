//! Training driver, stratified k-fold splitting and per-group scoring.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::{LbfgsSettings, LbfgsState};
use super::model::{KanModel, TrainReport};
use super::KanConfig;
use crate::curvefit::r_squared;
use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};

/// Rows of `(U, n_A) -> S_A`, with the interaction strength kept as group label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KanBatch {
    /// Row-major, two columns.
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub groups: Vec<f64>,
}

impl KanBatch {
    pub fn from_dataset(ds: &TrajectoryDataset) -> Self {
        let mut batch = Self::default();
        for group in &ds.groups {
            for s in &group.samples {
                batch.push(group.key.u, s.n_a, s.s_a);
            }
        }
        batch
    }

    pub fn push(&mut self, u: f64, n_a: f64, s_a: f64) {
        self.inputs.extend([u, n_a]);
        self.targets.push(s_a);
        self.groups.push(u);
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut out = Self::default();
        for &r in rows {
            out.push(self.inputs[2 * r], self.inputs[2 * r + 1], self.targets[r]);
            *out.groups.last_mut().unwrap() = self.groups[r];
        }
        out
    }

    /// Row indices per group label, groups in ascending label order.
    fn group_rows(&self) -> Vec<(f64, Vec<usize>)> {
        let mut map: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, &g) in self.groups.iter().enumerate() {
            map.entry(order_key(g)).or_default().push(i);
        }
        map.into_values().map(|rows| (self.groups[rows[0]], rows)).collect()
    }
}

/// Bit pattern whose unsigned order matches the numeric order of finite floats.
fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Trains a fresh model on the whole batch.
pub fn train(config: &KanConfig, batch: &KanBatch) -> Result<(KanModel, TrainReport)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty batch".into()));
    }
    let mut model = KanModel::init(config, &batch.inputs)?;
    let settings = LbfgsSettings {
        history: config.history,
        learning_rate: config.learning_rate,
        ..LbfgsSettings::default()
    };
    let mut scratch = model.clone();
    let mut objective = |x: &[f64], g: &mut [f64]| {
        scratch.set_params(x);
        scratch.loss_and_gradient(&batch.inputs, &batch.targets, g)
    };
    let mut state = LbfgsState::new(model.params(), settings, &mut objective);
    let mut report = TrainReport {
        epochs: 0,
        iterations: 0,
        evaluations: 1,
        initial_loss: state.f,
        final_loss: state.f,
        loss_history: Vec::with_capacity(config.epochs),
        line_search_fallbacks: 0,
        stopped_early: false,
    };
    for epoch in 0..config.epochs {
        let outcome = state.run(&mut objective, config.iterations_per_epoch);
        report.epochs += 1;
        report.iterations += outcome.iterations;
        report.evaluations += outcome.evaluations;
        report.line_search_fallbacks += outcome.fallbacks;
        report.loss_history.push(state.f);
        log::debug!("epoch {}: mse {:.3e}", epoch + 1, state.f);
        if outcome.converged {
            report.stopped_early = epoch + 1 < config.epochs;
            break;
        }
    }
    report.final_loss = state.f;
    model.set_params(&state.x);
    Ok((model, report))
}

/// Deterministic stratified partition: each fold's test rows, ascending.
/// Every group is shuffled with a seeded generator and dealt round-robin, so
/// every fold receives rows from every group.
pub fn stratified_folds(groups: &[f64], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let batch = KanBatch {
        inputs: Vec::new(),
        targets: Vec::new(),
        groups: groups.to_vec(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut offset = 0;
    for (u, mut rows) in batch.group_rows() {
        if rows.len() < folds {
            return Err(Error::Stratification { u, rows: rows.len(), folds });
        }
        rows.shuffle(&mut rng);
        for (i, r) in rows.iter().enumerate() {
            out[(offset + i) % folds].push(*r);
        }
        offset = (offset + rows.len()) % folds;
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

/// `(U, R²)` for each group of `batch`, ascending in U.
pub fn per_group_r2(model: &KanModel, batch: &KanBatch) -> Result<Vec<(f64, f64)>> {
    let pred = model.predict(&batch.inputs).values;
    batch
        .group_rows()
        .into_iter()
        .map(|(u, rows)| {
            let y: Vec<f64> = rows.iter().map(|&r| batch.targets[r]).collect();
            let y_hat: Vec<f64> = rows.iter().map(|&r| pred[r]).collect();
            Ok((u, r_squared(&y, &y_hat)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_r2: f64,
    /// Training MSE of this fold's model.
    pub train_mse: f64,
    /// Test-set R² per interaction strength.
    pub per_group: Vec<(f64, f64)>,
    /// Test inputs that fell outside the training grid and were clamped.
    pub clamped: usize,
    pub train: TrainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean_r2: f64,
    /// Sample standard deviation of the fold R² values.
    pub std_r2: f64,
}

impl CvReport {
    pub fn worst_fold(&self) -> &FoldReport {
        self.folds
            .iter()
            .min_by(|a, b| a.test_r2.total_cmp(&b.test_r2))
            .expect("at least two folds")
    }

    /// Lowest test R² of each group over all folds, ascending in U.
    pub fn worst_per_group(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.folds[0].per_group.clone();
        for f in &self.folds[1..] {
            for (slot, &(_, r2)) in out.iter_mut().zip(&f.per_group) {
                slot.1 = slot.1.min(r2);
            }
        }
        out
    }
}

/// Stratified k-fold cross-validation; folds train in parallel on the
/// current rayon pool.
pub fn cross_validate(config: &KanConfig, batch: &KanBatch) -> Result<CvReport> {
    config.validate()?;
    let test_sets = stratified_folds(&batch.groups, config.folds, config.seed)?;
    let folds = test_sets
        .par_iter()
        .enumerate()
        .map(|(fold, test_rows)| {
            let mut in_test = vec![false; batch.len()];
            test_rows.iter().for_each(|&r| in_test[r] = true);
            let train_rows: Vec<usize> = (0..batch.len()).filter(|&r| !in_test[r]).collect();
            let train_set = batch.subset(&train_rows);
            let test_set = batch.subset(test_rows);
            let (model, report) = train(config, &train_set)?;
            let pred = model.predict(&test_set.inputs);
            Ok(FoldReport {
                fold,
                train_rows: train_set.len(),
                test_rows: test_set.len(),
                test_r2: r_squared(&test_set.targets, &pred.values)?,
                train_mse: report.final_loss,
                per_group: per_group_r2(&model, &test_set)?,
                clamped: pred.clamped,
                train: report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = folds.len() as f64;
    let mean_r2 = folds.iter().map(|f| f.test_r2).sum::<f64>() / k;
    let var = folds.iter().map(|f| (f.test_r2 - mean_r2).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(CvReport {
        folds,
        mean_r2,
        std_r2: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(f: impl Fn(f64, f64) -> f64) -> KanBatch {
        let mut b = KanBatch::default();
        for i in 0..8 {
            let u = 2.0 + 0.5 * i as f64;
            for j in 0..25 {
                let n = 0.07 * j as f64 / 24.0;
                b.push(u, n, f(u, n));
            }
        }
        b
    }

    fn small_config() -> KanConfig {
        KanConfig {
            epochs: 10,
            ..KanConfig::default()
        }
    }

    #[test]
    fn folds_partition_rows_and_cover_every_group() {
        let b = lattice(|_, n| n);
        let folds = stratified_folds(&b.groups, 5, 7).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..b.len()).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.len(), 40);
            for u in [2.0, 3.5, 5.5] {
                assert!(f.iter().any(|&r| b.groups[r] == u));
            }
        }
        assert_eq!(folds, stratified_folds(&b.groups, 5, 7).unwrap());
        assert_ne!(folds, stratified_folds(&b.groups, 5, 8).unwrap());
    }

    #[test]
    fn small_group_cannot_be_stratified() {
        let mut groups = vec![2.0; 10];
        groups.extend([3.0; 4]);
        match stratified_folds(&groups, 5, 0) {
            Err(Error::Stratification { u, rows, folds }) => {
                assert_eq!((u, rows, folds), (3.0, 4, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_target_trains_to_zero_loss() {
        let b = lattice(|_, _| 0.0);
        let (_, report) = train(&KanConfig::default(), &b).unwrap();
        assert!(report.final_loss < 1e-10, "{}", report.final_loss);
    }

    #[test]
    fn learns_bilinear_target() {
        let b = lattice(|u, n| u / 10.0 * n);
        let folds = stratified_folds(&b.groups, 5, 0).unwrap();
        let test = b.subset(&folds[0]);
        let train_rows: Vec<usize> = (0..b.len()).filter(|r| !folds[0].contains(r)).collect();
        let (model, _) = train(&KanConfig::default(), &b.subset(&train_rows)).unwrap();
        let pred = model.predict(&test.inputs).values;
        let r2 = r_squared(&test.targets, &pred).unwrap();
        assert!(r2 >= 0.999, "{r2}");
    }

    #[test]
    fn zero_epochs_leaves_initial_model() {
        let b = lattice(|u, n| u * n);
        let config = KanConfig {
            epochs: 0,
            ..KanConfig::default()
        };
        let (model, report) = train(&config, &b).unwrap();
        let init = KanModel::init(&config, &b.inputs).unwrap();
        assert_eq!(model, init);
        assert_eq!(report.final_loss, report.initial_loss);
        assert!(report.loss_history.is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let b = lattice(|u, n| (u * n).sin());
        let a = train(&small_config(), &b).unwrap();
        let c = train(&small_config(), &b).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn single_group_matches_global_r2() {
        let mut b = KanBatch::default();
        for j in 0..30 {
            let n = j as f64 / 29.0 * 0.07;
            b.push(4.0, n, n.sqrt());
        }
        let (model, _) = train(&small_config(), &b).unwrap();
        let groups = per_group_r2(&model, &b).unwrap();
        let global = r_squared(&b.targets, &model.predict(&b.inputs).values).unwrap();
        assert_eq!(groups, vec![(4.0, global)]);
    }

    #[test]
    fn cross_validation_reports_every_fold() {
        let b = lattice(|u, n| u / 10.0 * n);
        let report = cross_validate(&small_config(), &b).unwrap();
        assert_eq!(report.folds.len(), 5);
        assert!(report.folds.iter().all(|f| f.per_group.len() == 8));
        assert!(report.worst_fold().test_r2 <= report.mean_r2);
        assert!(report.std_r2 >= 0.0);
    }
}
