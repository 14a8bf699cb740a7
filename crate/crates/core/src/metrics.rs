//! Success rates, the collective performance score, averaged information
//! measures, entropy heatmaps, and CSV reporting.
//!
//! Rates whose denominator is empty are `None` and serialise as empty CSV
//! cells.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{Objective, Seat};
use crate::error::{invalid, Result};
use crate::record::EpisodeRecord;

/// Success rate of passing under uniformly random play.
pub const BASELINE_SRP: f64 = 0.8;
/// Success rate of meeting under uniformly random play: 5 · (1/5)².
pub const BASELINE_SRM: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SuccessRates {
    /// Competitive episodes (objectives differ).
    pub srcp: Option<f64>,
    /// Collaborative episodes (objectives equal).
    pub srcl: Option<f64>,
    /// Episodes where this seat had to pass.
    pub srp: Option<f64>,
    /// Episodes where this seat had to meet.
    pub srm: Option<f64>,
}

fn ratio(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

pub fn success_rates(records: &[EpisodeRecord], seat: Seat) -> Result<SuccessRates> {
    if records.is_empty() {
        return Err(invalid("success rates of an empty log"));
    }
    let mut counts = [[0usize; 2]; 4];
    for r in records {
        let won = r.succeeded(seat) as usize;
        let class = if r.is_collaborative() { 1 } else { 0 };
        counts[class][0] += won;
        counts[class][1] += 1;
        let by_objective = match r.objective(seat) {
            Objective::Pass => 2,
            Objective::Meet => 3,
        };
        counts[by_objective][0] += won;
        counts[by_objective][1] += 1;
    }
    Ok(SuccessRates {
        srcp: ratio(counts[0][0], counts[0][1]),
        srcl: ratio(counts[1][0], counts[1][1]),
        srp: ratio(counts[2][0], counts[2][1]),
        srm: ratio(counts[3][0], counts[3][1]),
    })
}

/// Collective performance score: each player's pass and meet success rates
/// weighted by how hard they are to hit by chance, averaged over players.
pub fn cps(srp1: f64, srm1: f64, srp2: f64, srm2: f64, bsrp: f64, bsrm: f64) -> f64 {
    0.5 * ((1.0 - bsrp) * srp1 + (1.0 - bsrm) * srm1) + 0.5 * ((1.0 - bsrp) * srp2 + (1.0 - bsrm) * srm2)
}

/// [`cps`] with the random-play baselines.
pub fn cps_default(srp1: f64, srm1: f64, srp2: f64, srm2: f64) -> f64 {
    cps(srp1, srm1, srp2, srm2, BASELINE_SRP, BASELINE_SRM)
}

fn step_mean(records: &[EpisodeRecord], seat: Seat, pick: impl Fn(&crate::agent::StepInfo) -> f64) -> Option<f64> {
    let (sum, n) = records
        .iter()
        .flat_map(|r| r.steps.iter())
        .filter_map(|s| s.info[seat.index()].as_ref())
        .fold((0.0, 0usize), |(sum, n), i| (sum + pick(i), n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean per-step transfer entropy, in bits. `None` when the seat never
/// recorded one (rule-based players).
pub fn averaged_te(records: &[EpisodeRecord], seat: Seat) -> Option<f64> {
    step_mean(records, seat, |i| i.te)
}

pub fn averaged_h_plus(records: &[EpisodeRecord], seat: Seat) -> Option<f64> {
    step_mean(records, seat, |i| i.h_plus)
}

pub fn averaged_h_minus(records: &[EpisodeRecord], seat: Seat) -> Option<f64> {
    step_mean(records, seat, |i| i.h_minus)
}

/// Mean entropies indexed by `[turn][ego column]`, in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyHeatmap {
    pub seat: Seat,
    pub turns: usize,
    pub cols: usize,
    pub h_plus: Vec<Vec<Option<f64>>>,
    pub h_minus: Vec<Vec<Option<f64>>>,
    pub visits: Vec<Vec<usize>>,
}

impl EntropyHeatmap {
    /// Mean over visited cells of the opponent-conditioned entropy.
    pub fn mean_h_plus(&self) -> Option<f64> {
        let cells: Vec<f64> = self.h_plus.iter().flatten().flatten().copied().collect();
        (!cells.is_empty()).then(|| cells.iter().sum::<f64>() / cells.len() as f64)
    }

    pub fn visited_cells(&self) -> usize {
        self.visits.iter().flatten().filter(|v| **v > 0).count()
    }
}

pub fn entropy_heatmap(records: &[EpisodeRecord], seat: Seat, turns: usize, cols: usize) -> EntropyHeatmap {
    let mut sums = vec![vec![(0.0, 0.0); cols]; turns];
    let mut visits = vec![vec![0usize; cols]; turns];
    for step in records.iter().flat_map(|r| r.steps.iter()) {
        let Some(info) = step.info[seat.index()] else { continue };
        let col = step.cols[seat.index()];
        if step.turn >= turns || col >= cols {
            continue;
        }
        sums[step.turn][col].0 += info.h_plus;
        sums[step.turn][col].1 += info.h_minus;
        visits[step.turn][col] += 1;
    }
    let mean = |pick: fn(&(f64, f64)) -> f64| -> Vec<Vec<Option<f64>>> {
        sums.iter()
            .zip(&visits)
            .map(|(row, v)| row.iter().zip(v).map(|(s, n)| (*n > 0).then(|| pick(s) / *n as f64)).collect())
            .collect()
    };
    EntropyHeatmap { seat, turns, cols, h_plus: mean(|s| s.0), h_minus: mean(|s| s.1), visits }
}

/// Per-agent metrics for one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub rates: SuccessRates,
    pub avg_te: Option<f64>,
    pub avg_h_plus: Option<f64>,
    pub avg_h_minus: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Srcp,
    Srcl,
    Srp,
    Srm,
    AvgTe,
    AvgHPlus,
    AvgHMinus,
}

impl AgentMetrics {
    pub fn from_records(records: &[EpisodeRecord], seat: Seat) -> Result<AgentMetrics> {
        Ok(AgentMetrics {
            rates: success_rates(records, seat)?,
            avg_te: averaged_te(records, seat),
            avg_h_plus: averaged_h_plus(records, seat),
            avg_h_minus: averaged_h_minus(records, seat),
        })
    }

    pub fn get(&self, field: Field) -> Option<f64> {
        match field {
            Field::Srcp => self.rates.srcp,
            Field::Srcl => self.rates.srcl,
            Field::Srp => self.rates.srp,
            Field::Srm => self.rates.srm,
            Field::AvgTe => self.avg_te,
            Field::AvgHPlus => self.avg_h_plus,
            Field::AvgHMinus => self.avg_h_minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub episodes: usize,
    pub collaborative: usize,
    pub competitive: usize,
    pub agents: [AgentMetrics; 2],
    pub cps: Option<f64>,
}

impl SeedMetrics {
    pub fn from_records(seed: u64, records: &[EpisodeRecord]) -> Result<SeedMetrics> {
        let agents = [
            AgentMetrics::from_records(records, Seat::P1)?,
            AgentMetrics::from_records(records, Seat::P2)?,
        ];
        let cps = match (agents[0].rates, agents[1].rates) {
            (
                SuccessRates { srp: Some(p1), srm: Some(m1), .. },
                SuccessRates { srp: Some(p2), srm: Some(m2), .. },
            ) => Some(cps_default(p1, m1, p2, m2)),
            _ => None,
        };
        let collaborative = records.iter().filter(|r| r.is_collaborative()).count();
        Ok(SeedMetrics {
            seed,
            episodes: records.len(),
            collaborative,
            competitive: records.len() - collaborative,
            agents,
            cps,
        })
    }
}

/// Mean and sample standard deviation over the defined values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Summary {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        let n = v.len();
        if n == 0 {
            return Summary::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Summary { mean: Some(mean), std, n }
    }
}

/// Evaluation results for one pairing across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub experiment: String,
    /// Agent labels by seat, e.g. `non` or `pk-sf`.
    pub labels: [String; 2],
    pub seeds: Vec<SeedMetrics>,
}

impl MetricsReport {
    pub fn summary(&self, seat: Seat, field: Field) -> Summary {
        Summary::of(self.seeds.iter().map(|s| s.agents[seat.index()].get(field)))
    }

    pub fn mean(&self, seat: Seat, field: Field) -> Option<f64> {
        self.summary(seat, field).mean
    }

    pub fn cps_summary(&self) -> Summary {
        Summary::of(self.seeds.iter().map(|s| s.cps))
    }

    /// Collaborative success is shared by both seats; read it from P1.
    pub fn srcl(&self) -> Option<f64> {
        self.mean(Seat::P1, Field::Srcl)
    }

    pub fn per_seed(&self, seat: Seat, field: Field) -> Vec<Option<f64>> {
        self.seeds.iter().map(|s| s.agents[seat.index()].get(field)).collect()
    }
}

pub const CSV_HEADER: &str = "experiment,seed,agent,SRCP,SRCL,SRP,SRM,CPS,avg_TE_bits,avg_H_plus,avg_H_minus";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Writes one row per seed and agent, then `mean` and `std` rows.
/// `avg_*` columns are per-step averages.
pub fn write_csv_rows<W: Write>(report: &MetricsReport, out: &mut W) -> std::io::Result<()> {
    const FIELDS: [Field; 7] =
        [Field::Srcp, Field::Srcl, Field::Srp, Field::Srm, Field::AvgTe, Field::AvgHPlus, Field::AvgHMinus];
    let row = |out: &mut W, seed: &str, seat: Seat, values: [Option<f64>; 7], cps: Option<f64>| {
        let label = format!("{seat}:{}", report.labels[seat.index()]);
        writeln!(
            out,
            "{},{seed},{label},{},{},{},{},{},{},{},{}",
            report.experiment,
            cell(values[0]),
            cell(values[1]),
            cell(values[2]),
            cell(values[3]),
            cell(cps),
            cell(values[4]),
            cell(values[5]),
            cell(values[6]),
        )
    };
    for s in &report.seeds {
        for seat in Seat::BOTH {
            let a = &s.agents[seat.index()];
            row(out, &s.seed.to_string(), seat, FIELDS.map(|f| a.get(f)), s.cps)?;
        }
    }
    let cps = report.cps_summary();
    for seat in Seat::BOTH {
        row(out, "mean", seat, FIELDS.map(|f| report.summary(seat, f).mean), cps.mean)?;
    }
    for seat in Seat::BOTH {
        row(out, "std", seat, FIELDS.map(|f| report.summary(seat, f).std), cps.std)?;
    }
    Ok(())
}
