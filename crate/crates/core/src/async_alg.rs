//! ADDIS*_async: tests start at times `1, 2, …` and finish at `E_t ≥ t`.
//!
//! The level of test `t` is fixed when it starts, using only tests that
//! finished strictly before `t`. Tests still running are counted as selected
//! non-candidates (pessimism), so their eventual p-values can only loosen
//! later levels.
//!
//! Finish events are bucketed by finish time and folded into the counters
//! when a later test starts, in ascending finish time and then ascending test
//! index. The order in which callers report finishes therefore does not
//! matter as long as no finish time lies before an already-started test.

use std::collections::BTreeMap;

use crate::error::{invalid, FdrError, Result};
use crate::gamma::GammaSequence;
use crate::online::wealth_sum;
use crate::types::{check_p, AlgorithmConfig, DecisionRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Finished {
    p: f64,
    time: usize,
    record: DecisionRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AsyncRejectionMark {
    /// `κ_j`: the finish time of the rejection.
    time: usize,
    /// `κ_j*`: selected tests finished by `κ_j`.
    selected_through: usize,
    /// Candidates finished by `κ_j`; `C_j^+` is the running total minus this.
    candidates_through: usize,
}

/// State of an asynchronous ADDIS* run.
#[derive(Debug, Clone)]
pub struct AsyncAddis {
    config: AlgorithmConfig,
    gamma: GammaSequence,
    levels: Vec<f64>,
    finished: Vec<Option<Finished>>,
    /// Finishes not yet visible to any start, keyed by finish time.
    queued: BTreeMap<usize, Vec<usize>>,
    folded: usize,
    folded_selected: usize,
    folded_candidates: usize,
    rejections: Vec<AsyncRejectionMark>,
    /// Sum of all levels handed out so far.
    spent: f64,
    /// Sum of levels of folded tests that were discarded or candidates.
    exempt: f64,
}

impl AsyncAddis {
    pub fn new(config: AlgorithmConfig) -> Result<Self> {
        config.validate()?;
        let gamma = GammaSequence::from_spec(config.gamma)?;
        Ok(Self::with_gamma(config, gamma))
    }

    pub fn with_gamma(config: AlgorithmConfig, gamma: GammaSequence) -> Self {
        Self {
            config,
            gamma,
            levels: Vec::new(),
            finished: Vec::new(),
            queued: BTreeMap::new(),
            folded: 0,
            folded_selected: 0,
            folded_candidates: 0,
            rejections: Vec::new(),
            spent: 0.0,
            exempt: 0.0,
        }
    }

    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    /// Number of tests started so far.
    pub fn started(&self) -> usize {
        self.levels.len()
    }

    /// Level assigned to test `index` at its start.
    pub fn level(&self, index: usize) -> Option<f64> {
        self.levels.get(index.checked_sub(1)?).copied()
    }

    /// Starts test `t` (must equal `started() + 1`) and returns `α_t`.
    pub fn start_test(&mut self, t: usize) -> Result<f64> {
        if t != self.levels.len() + 1 {
            return Err(invalid(format!("tests start in order: expected test {}, got {t}", self.levels.len() + 1)));
        }
        self.fold_finishes_before(t);
        let pending = (t - 1) - self.folded;
        // S^t counts finished selected tests plus every test still running.
        let s = self.folded_selected + pending;
        let base = s - self.folded_candidates;
        let subs = self.rejections.iter().map(|m| {
            let c_plus = self.folded_candidates - m.candidates_through;
            s - m.selected_through - c_plus
        });
        let k = wealth_sum(&self.config, &self.gamma, base, subs);
        let level = self.config.lambda.min((self.config.tau - self.config.lambda) * k);
        self.levels.push(level);
        self.spent += level;
        self.finished.push(None);
        Ok(level)
    }

    /// Records the p-value of test `index`, finishing at `finish_time`.
    pub fn finish_test(&mut self, index: usize, p: f64, finish_time: usize) -> Result<DecisionRecord> {
        check_p(p)?;
        if index == 0 || index > self.levels.len() {
            return Err(FdrError::State(format!("test {index} has not started")));
        }
        if self.finished[index - 1].is_some() {
            return Err(FdrError::State(format!("test {index} already finished")));
        }
        if finish_time < index {
            return Err(invalid(format!("test {index} cannot finish at {finish_time}, before it starts")));
        }
        if finish_time < self.levels.len() {
            return Err(FdrError::State(format!(
                "test {index} finishing at {finish_time} is too late to report: test {} already started",
                self.levels.len()
            )));
        }
        let cfg = &self.config;
        let record = DecisionRecord::from_thresholds(index, p, self.levels[index - 1], cfg.lambda, cfg.tau);
        self.finished[index - 1] = Some(Finished { p, time: finish_time, record });
        self.queued.entry(finish_time).or_default().push(index);
        Ok(record)
    }

    fn fold_finishes_before(&mut self, t: usize) {
        while let Some(entry) = self.queued.first_entry() {
            if *entry.key() >= t {
                break;
            }
            let (time, mut indices) = entry.remove_entry();
            indices.sort_unstable();
            let mut rejected_here = 0usize;
            for &i in &indices {
                let f = self.finished[i - 1].expect("queued tests are finished");
                self.folded += 1;
                self.folded_selected += usize::from(f.record.selected);
                self.folded_candidates += usize::from(f.record.candidate);
                rejected_here += usize::from(f.record.rejected);
                if !f.record.selected || f.record.candidate {
                    self.exempt += f.record.alpha_t;
                }
            }
            for _ in 0..rejected_here {
                self.rejections.push(AsyncRejectionMark {
                    time,
                    selected_through: self.folded_selected,
                    candidates_through: self.folded_candidates,
                });
            }
        }
    }

    /// Decisions of finished tests, in test order.
    pub fn decisions(&self) -> Vec<DecisionRecord> {
        self.finished.iter().flatten().map(|f| f.record).collect()
    }

    /// Finish time of test `index`, if reported.
    pub fn finish_time(&self, index: usize) -> Option<usize> {
        self.finished.get(index.checked_sub(1)?)?.map(|f| f.time)
    }

    /// Rejection times `κ_j` currently visible to new starts.
    pub fn rejection_times(&self) -> Vec<usize> {
        self.rejections.iter().map(|m| m.time).collect()
    }

    /// Brute-force recomputation of `S^t`, `C_0^+` and `(κ_j, κ_j*, C_j^+)` for a start at `t`.
    pub fn counters_at(&self, t: usize) -> AsyncCounters {
        let upto = (t - 1).min(self.levels.len());
        let visible = |i: usize| self.finished[i].filter(|f| f.time < t);
        let mut selected = 0;
        let mut candidates = 0;
        let mut finish_rejections = Vec::new();
        for i in 0..upto {
            match visible(i) {
                Some(f) => {
                    selected += usize::from(f.p <= self.config.tau);
                    candidates += usize::from(f.p <= self.config.lambda);
                    if f.record.rejected {
                        finish_rejections.push(f.time);
                    }
                }
                None => selected += 1,
            }
        }
        finish_rejections.sort_unstable();
        let marks = finish_rejections
            .iter()
            .map(|&kappa| {
                let mut kappa_star = 0;
                let mut c_plus = 0;
                for i in 0..upto {
                    if let Some(f) = visible(i) {
                        if f.p <= self.config.tau && f.time <= kappa {
                            kappa_star += 1;
                        }
                        if f.p <= self.config.lambda && f.time > kappa {
                            c_plus += 1;
                        }
                    }
                }
                (kappa, kappa_star, c_plus)
            })
            .collect();
        AsyncCounters { selected, candidates, marks }
    }

    /// `FDP-hat_async(t)`: running tests at time `t` contribute as if they were
    /// selected non-candidates; rejections count once finished before `t`.
    pub fn fdp_hat(&self, t: usize) -> f64 {
        let width = self.config.tau - self.config.lambda;
        let mut numerator = 0.0;
        let mut rejections = 0usize;
        for (i, &alpha_j) in self.levels.iter().enumerate().take(t) {
            match self.finished[i] {
                Some(f) if f.time < t => {
                    if self.config.lambda < f.p && f.p <= self.config.tau {
                        numerator += alpha_j / width;
                    }
                    rejections += usize::from(f.p <= alpha_j);
                }
                _ => numerator += alpha_j / width,
            }
        }
        numerator / rejections.max(1) as f64
    }

    /// `fdp_hat(started())`, maintained incrementally.
    pub fn current_fdp_hat(&self) -> f64 {
        let width = self.config.tau - self.config.lambda;
        (self.spent - self.exempt) / width / self.rejections.len().max(1) as f64
    }
}

/// Counters at one start time inputs at one start time, recomputed from scratch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsyncCounters {
    /// `S^t`, pending tests included.
    pub selected: usize,
    /// `C_0^+`.
    pub candidates: usize,
    /// `(κ_j, κ_j*, C_j^+)` per visible rejection.
    pub marks: Vec<(usize, usize, usize)>,
}

/// Drives a full schedule: at each `t` start test `t`, then finish every test with `E_i = t`
/// in ascending index. Returns decisions in test order.
pub fn run_async_schedule(
    config: AlgorithmConfig,
    pvalues: &[f64],
    finish_times: &[usize],
) -> Result<Vec<DecisionRecord>> {
    let mut alg = AsyncAddis::new(config)?;
    run_async_with(&mut alg, pvalues, finish_times)?;
    Ok(alg.decisions())
}

pub fn run_async_with(alg: &mut AsyncAddis, pvalues: &[f64], finish_times: &[usize]) -> Result<()> {
    if pvalues.len() != finish_times.len() {
        return Err(invalid("p-values and finish times differ in length"));
    }
    let mut by_time: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &e) in finish_times.iter().enumerate() {
        if e < i + 1 {
            return Err(invalid(format!("test {} cannot finish at {e}, before it starts", i + 1)));
        }
        by_time.entry(e).or_default().push(i + 1);
    }
    let offset = alg.started();
    for t in 1..=pvalues.len() {
        alg.start_test(offset + t)?;
        if let Some(indices) = by_time.remove(&t) {
            for i in indices {
                alg.finish_test(offset + i, pvalues[i - 1], offset + t)?;
            }
        }
    }
    for (time, indices) in by_time {
        for i in indices {
            alg.finish_test(offset + i, pvalues[i - 1], offset + time)?;
        }
    }
    Ok(())
}
