//! Demand generation: synthetic periodic-plus-noise curves and
//! standard-load-profile traces.
//!
//! Both generators produce a [`DemandTrace`]: a deterministic,
//! piecewise-linear function of time with explicit breakpoints that
//! the integrator treats as mandatory stop points.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};

/// Synthetic daily demand: squared-sine baseline plus hourly Gaussian
/// fluctuations, optionally with scheduled amplitude steps.
#[derive(Debug, Clone)]
pub struct SyntheticDemandSpec {
    /// Peak amplitude per node [W/W].
    pub amplitudes: DVector<f64>,
    /// Fluctuation amplitude per node [W/W].
    pub fluctuation: DVector<f64>,
    /// Cycle duration [s].
    pub period: f64,
    pub rng_seed: u64,
    /// `(day index, per-node multiplier)`: from that day on, the
    /// baseline amplitude is `amplitudes ∘ multiplier` until a later
    /// entry replaces it. Days count from zero.
    pub step_schedule: Vec<(usize, DVector<f64>)>,
    /// Optional per-day fluctuation amplitudes; day `d` uses entry `d`.
    /// Overrides `fluctuation` when nonempty.
    pub fluctuation_schedule: Vec<DVector<f64>>,
}

impl SyntheticDemandSpec {
    pub fn new(amplitudes: DVector<f64>, fluctuation: DVector<f64>, period: f64, seed: u64) -> Self {
        assert!(period > 0.0, "period must be positive");
        assert!(amplitudes.iter().all(|&h| h >= 0.0), "amplitudes must be nonnegative");
        assert!(fluctuation.iter().all(|&g| g >= 0.0), "fluctuation must be nonnegative");
        Self {
            amplitudes,
            fluctuation,
            period,
            rng_seed: seed,
            step_schedule: Vec::new(),
            fluctuation_schedule: Vec::new(),
        }
    }

    /// Fluctuation amplitude applying on the given day.
    fn active_fluctuation(&self, day: usize) -> &DVector<f64> {
        if self.fluctuation_schedule.is_empty() {
            &self.fluctuation
        } else {
            &self.fluctuation_schedule[day.min(self.fluctuation_schedule.len() - 1)]
        }
    }

    /// Active per-node amplitude on the given day.
    fn active_amplitudes(&self, day: usize) -> DVector<f64> {
        let mut mult = DVector::from_element(self.amplitudes.len(), 1.0);
        for (d, m) in &self.step_schedule {
            if *d <= day {
                mult = m.clone();
            }
        }
        self.amplitudes.component_mul(&mult)
    }
}

/// Consumer class for a node in the load-profile scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    H0,
    G1,
    G4,
    /// Equal-thirds average of the other three classes.
    Mixed,
}

/// Day type selecting a column of the profile tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayType {
    Weekday,
    Saturday,
    Sunday,
}

/// Standard-load-profile demand: per-minute base curves by day type
/// with multiplicative uniform noise.
#[derive(Debug, Clone)]
pub struct LoadProfileSpec {
    /// Profile class per node.
    pub assignments: Vec<ProfileKind>,
    /// Power that the profile peak maps to [W/W in the per-unit frame].
    pub norm_power: f64,
    /// Relative noise bound; each minute's value is scaled by
    /// `1 + noise_fraction · ξ` with `ξ ~ U(−1, 1)`.
    pub noise_fraction: f64,
    /// Day types for consecutive cycles; must cover the horizon.
    pub calendar: Vec<DayType>,
    pub rng_seed: u64,
    /// Cycle duration [s]; minutes scale with it under compression.
    pub period: f64,
}

impl LoadProfileSpec {
    /// Five-week default: Monday start, `weekday×5, Sat, Sun` repeated.
    pub fn five_week_calendar() -> Vec<DayType> {
        let mut cal = Vec::with_capacity(35);
        for _ in 0..5 {
            for _ in 0..5 {
                cal.push(DayType::Weekday);
            }
            cal.push(DayType::Saturday);
            cal.push(DayType::Sunday);
        }
        cal
    }
}

/// Piecewise-linear demand over a finite horizon, split into periodic
/// and fluctuating components. Deterministic given its spec and seed.
#[derive(Debug, Clone)]
pub struct DemandTrace {
    /// Strictly increasing breakpoint times [s], starting at 0.
    times: Vec<f64>,
    /// Node-by-breakpoint total demand.
    total: DMatrix<f64>,
    /// Node-by-breakpoint periodic component.
    periodic: DMatrix<f64>,
}

impl DemandTrace {
    fn from_samples(times: Vec<f64>, total: DMatrix<f64>, periodic: DMatrix<f64>) -> Self {
        debug_assert_eq!(times.len(), total.ncols());
        debug_assert_eq!(times.len(), periodic.ncols());
        Self {
            times,
            total,
            periodic,
        }
    }

    /// Flat demand at `level` W on every node over `[0, end]`. The
    /// periodic component carries the whole level, so the fluctuating
    /// part is identically zero.
    pub fn constant(n_nodes: usize, level: f64, end: f64) -> Self {
        assert!(end > 0.0, "trace needs a positive horizon");
        let times = vec![0.0, end];
        let vals = DMatrix::from_element(n_nodes, 2, level);
        Self::from_samples(times, vals.clone(), vals)
    }

    pub fn n_nodes(&self) -> usize {
        self.total.nrows()
    }

    /// Time of the last breakpoint; the trace is defined on `[0, end]`.
    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Interpolation breakpoints, for use as solver stop points.
    pub fn breakpoints(&self) -> &[f64] {
        &self.times
    }

    /// Total demand at time `t` (clamped to the trace's domain).
    pub fn eval(&self, t: f64) -> DVector<f64> {
        self.interp(&self.total, t)
    }

    /// Periodic component at time `t`.
    pub fn eval_periodic(&self, t: f64) -> DVector<f64> {
        self.interp(&self.periodic, t)
    }

    /// Fluctuating component at time `t` (total minus periodic).
    pub fn eval_fluctuation(&self, t: f64) -> DVector<f64> {
        self.eval(t) - self.eval_periodic(t)
    }

    /// Exact time average of the total demand over `[t0, t1]`
    /// (trapezoid over the containing breakpoints, exact for a
    /// piecewise-linear trace).
    pub fn mean(&self, t0: f64, t1: f64) -> DVector<f64> {
        assert!(t1 > t0, "averaging window must have positive length");
        let lo = self.times.partition_point(|&bp| bp <= t0);
        let hi = self.times.partition_point(|&bp| bp < t1);
        let mut acc = DVector::zeros(self.n_nodes());
        let mut prev_t = t0;
        let mut prev_v = self.eval(t0);
        for &bp in &self.times[lo..hi] {
            let v = self.eval(bp);
            acc += (&prev_v + &v) * (0.5 * (bp - prev_t));
            prev_t = bp;
            prev_v = v;
        }
        let v1 = self.eval(t1);
        acc += (&prev_v + &v1) * (0.5 * (t1 - prev_t));
        acc / (t1 - t0)
    }

    fn interp(&self, values: &DMatrix<f64>, t: f64) -> DVector<f64> {
        let times = &self.times;
        let t = t.clamp(times[0], *times.last().unwrap());
        let idx = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return values.column(i).into_owned(),
            Err(i) => i,
        };
        let (i0, i1) = (idx - 1, idx);
        let w = (t - times[i0]) / (times[i1] - times[i0]);
        values.column(i0) * (1.0 - w) + values.column(i1) * w
    }
}

/// Continuous periodic baseline `H_j sin²(π t / T)` with any scheduled
/// amplitude step applied by the day `t` falls in.
pub fn synthetic_periodic(spec: &SyntheticDemandSpec, t: f64) -> DVector<f64> {
    assert!(t >= 0.0, "time must be nonnegative");
    let day = (t / spec.period).floor() as usize;
    let s = (std::f64::consts::PI * t / spec.period).sin();
    spec.active_amplitudes(day) * (s * s)
}

/// Samples the synthetic demand at 24 update instants per cycle and
/// interpolates linearly between them, as the plant sees it.
pub fn synthetic_trace(spec: &SyntheticDemandSpec, horizon_days: usize) -> DemandTrace {
    assert!(horizon_days >= 1, "horizon must cover at least one day");
    let n = spec.amplitudes.len();
    let seg = spec.period / 24.0;
    let n_pts = horizon_days * 24 + 1;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.rng_seed);
    let gauss = Normal::new(0.0, 1.0).unwrap();

    let mut times = Vec::with_capacity(n_pts);
    let mut total = DMatrix::<f64>::zeros(n, n_pts);
    let mut periodic = DMatrix::<f64>::zeros(n, n_pts);
    for g in 0..n_pts {
        let t = g as f64 * seg;
        times.push(t);
        let p = synthetic_periodic(spec, t);
        let day = (g / 24).min(horizon_days - 1);
        let fluct = spec.active_fluctuation(day);
        for j in 0..n {
            let eta: f64 = gauss.sample(&mut rng);
            periodic[(j, g)] = p[j];
            total[(j, g)] = p[j] + fluct[j] * eta;
        }
    }
    DemandTrace::from_samples(times, total, periodic)
}

/// One profile table: 1440 minutes × three day types, watts.
struct ProfileTable {
    weekday: Vec<f64>,
    saturday: Vec<f64>,
    sunday: Vec<f64>,
}

impl ProfileTable {
    fn parse(csv: &str, name: &str) -> Result<Self> {
        let mut weekday = Vec::with_capacity(1440);
        let mut saturday = Vec::with_capacity(1440);
        let mut sunday = Vec::with_capacity(1440);
        for (i, line) in csv.lines().enumerate() {
            if i == 0 {
                if line.trim() != "minute,weekday,saturday,sunday" {
                    return Err(Error::Profile(format!("{name}: unexpected header")));
                }
                continue;
            }
            let mut fields = line.split(',');
            let minute: usize = fields
                .next()
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::Profile(format!("{name}:{}: bad minute", i + 1)))?;
            if minute != i - 1 {
                return Err(Error::Profile(format!("{name}:{}: minutes out of order", i + 1)));
            }
            for col in [&mut weekday, &mut saturday, &mut sunday] {
                let v: f64 = fields
                    .next()
                    .and_then(|f| f.trim().parse().ok())
                    .ok_or_else(|| Error::Profile(format!("{name}:{}: bad value", i + 1)))?;
                col.push(v);
            }
        }
        if weekday.len() != 1440 {
            return Err(Error::Profile(format!(
                "{name}: expected 1440 rows, got {}",
                weekday.len()
            )));
        }
        Ok(Self {
            weekday,
            saturday,
            sunday,
        })
    }

    fn column(&self, day: DayType) -> &[f64] {
        match day {
            DayType::Weekday => &self.weekday,
            DayType::Saturday => &self.saturday,
            DayType::Sunday => &self.sunday,
        }
    }

    fn peak(&self) -> f64 {
        self.weekday
            .iter()
            .chain(&self.saturday)
            .chain(&self.sunday)
            .fold(0.0f64, |a, &b| a.max(b))
    }
}

const H0_CSV: &str = include_str!("../../../data/h0.csv");
const G1_CSV: &str = include_str!("../../../data/g1.csv");
const G4_CSV: &str = include_str!("../../../data/g4.csv");

/// Per-minute base value of one node's assigned profile, peak-scaled
/// to `norm_power`. `Mixed` averages the three classes equal-thirds.
fn base_minute_value(
    kind: ProfileKind,
    tables: &[ProfileTable; 3],
    day: DayType,
    minute: usize,
    norm_power: f64,
) -> f64 {
    // tables: [h0, g1, g4], each scaled by its own peak
    let scaled = |i: usize| tables[i].column(day)[minute] / tables[i].peak() * norm_power;
    match kind {
        ProfileKind::H0 => scaled(0),
        ProfileKind::G1 => scaled(1),
        ProfileKind::G4 => scaled(2),
        ProfileKind::Mixed => (scaled(0) + scaled(1) + scaled(2)) / 3.0,
    }
}

/// Builds the load-profile demand trace: minute-resolution breakpoints,
/// per-minute multiplicative noise, linear interpolation in between.
pub fn load_profile_trace(spec: &LoadProfileSpec, horizon_days: usize) -> Result<DemandTrace> {
    if spec.noise_fraction < 0.0 || spec.noise_fraction > 0.1 {
        return Err(Error::InvalidParams(
            "noise fraction must lie in [0, 0.1]".into(),
        ));
    }
    if spec.calendar.len() < horizon_days {
        return Err(Error::Horizon(format!(
            "calendar covers {} days, horizon needs {horizon_days}",
            spec.calendar.len()
        )));
    }
    let tables = [
        ProfileTable::parse(H0_CSV, "h0")?,
        ProfileTable::parse(G1_CSV, "g1")?,
        ProfileTable::parse(G4_CSV, "g4")?,
    ];
    let n = spec.assignments.len();
    let minute_len = spec.period / 1440.0;
    let n_pts = horizon_days * 1440 + 1;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.rng_seed);
    let noise = Uniform::new_inclusive(-1.0f64, 1.0);

    let mut times = Vec::with_capacity(n_pts);
    let mut total = DMatrix::<f64>::zeros(n, n_pts);
    let mut periodic = DMatrix::<f64>::zeros(n, n_pts);
    for g in 0..n_pts {
        // the final breakpoint wraps to the first minute of the next day
        let day_idx = (g / 1440).min(horizon_days - 1);
        let minute = if g == horizon_days * 1440 { 0 } else { g % 1440 };
        let day = if g == horizon_days * 1440 && spec.calendar.len() > horizon_days {
            spec.calendar[horizon_days]
        } else {
            spec.calendar[day_idx]
        };
        times.push(g as f64 * minute_len);
        for (j, &kind) in spec.assignments.iter().enumerate() {
            let base = base_minute_value(kind, &tables, day, minute, spec.norm_power);
            let xi: f64 = noise.sample(&mut rng);
            periodic[(j, g)] = base;
            total[(j, g)] = base * (1.0 + spec.noise_fraction * xi);
        }
    }
    Ok(DemandTrace::from_samples(times, total, periodic))
}
