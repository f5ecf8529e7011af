//! Exact sampling of the switching process and of its induced chain.
//!
//! Between jumps the state follows the closed-form flow, so there is no
//! discretisation error anywhere. Holding times in mode `i` are exponential
//! with rate `α_{i(1-i)}`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, Point, SwitchingSystem};
use crate::rng::{SeedSpec, StreamRng};

/// One recorded state: the first event is the initial condition, every later
/// event is a jump (the mode is the one entered).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub mode: Mode,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub events: Vec<Event>,
    pub t_end: f64,
    pub x_end: Vec<f64>,
    pub i_end: Mode,
}

fn check_start(sys: &SwitchingSystem, x0: &[f64]) -> Result<()> {
    if x0.len() != sys.dim() {
        return Err(Error::invalid(format!(
            "initial point has length {} but the system has dimension {}",
            x0.len(),
            sys.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial point has non-finite entries"));
    }
    Ok(())
}

/// Strictly positive exponential draw.
fn holding_time(rng: &mut StreamRng, rate: f64) -> f64 {
    loop {
        let t = rng.exponential(rate);
        if t > 0.0 {
            return t;
        }
    }
}

/// Walks one path on `[0, t_end]`. `on_jump(t, new_mode, x)` fires at every
/// jump; `on_sample(x, mode)` fires at `first + k * stride` for `k >= 0`
/// while that time is `<= t_end` (no samples when `stride` is `None`).
#[allow(clippy::too_many_arguments)]
fn walk<J, S>(
    sys: &SwitchingSystem,
    x0: &[f64],
    i0: Mode,
    t_end: f64,
    rng: &mut StreamRng,
    sampling: Option<(f64, f64)>,
    mut on_jump: J,
    mut on_sample: S,
) -> (Vec<f64>, Mode)
where
    J: FnMut(f64, Mode, &[f64]),
    S: FnMut(&[f64], Mode),
{
    let d = sys.dim();
    let mut x = x0.to_vec();
    let mut out = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut mode = i0;
    let mut t = 0.0;
    let mut k: u64 = 0;
    loop {
        let tau = holding_time(rng, sys.rate_out(mode));
        let seg_end = (t + tau).min(t_end);
        if let Some((first, stride)) = sampling {
            loop {
                let s = first + k as f64 * stride;
                if s > seg_end {
                    break;
                }
                if s >= t {
                    sys.flow_into(mode, s - t, &x, &mut out, &mut scratch);
                    on_sample(&out, mode);
                }
                k += 1;
            }
        }
        sys.flow_in_place(mode, seg_end - t, &mut x, &mut scratch);
        t = seg_end;
        if t >= t_end {
            return (x, mode);
        }
        mode = mode.flip();
        on_jump(t, mode, &x);
    }
}

/// Samples one path of the continuous-time process up to `t_max`.
pub fn simulate_pdmp(
    sys: &SwitchingSystem,
    x0: &Point,
    i0: Mode,
    t_max: f64,
    seed: SeedSpec,
) -> Result<Trajectory> {
    check_start(sys, x0.as_slice())?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    let mut rng = seed.rng();
    let mut events = vec![Event {
        t: 0.0,
        mode: i0,
        x: x0.as_slice().to_vec(),
    }];
    let (x_end, i_end) = walk(
        sys,
        x0.as_slice(),
        i0,
        t_max,
        &mut rng,
        None,
        |t, mode, x| {
            events.push(Event {
                t,
                mode,
                x: x.to_vec(),
            })
        },
        |_, _| {},
    );
    Ok(Trajectory {
        events,
        t_end: t_max,
        x_end,
        i_end,
    })
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.events[0].x.len()
    }

    /// Jump times (every event after the initial one).
    pub fn jump_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events[1..].iter().map(|e| e.t)
    }

    /// Index of the last event at or before `t`.
    fn segment(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.t <= t).saturating_sub(1)
    }

    /// `(X_t, I_t)` by flowing from the last event at or before `t`.
    pub fn sample_position(&self, sys: &SwitchingSystem, t: f64) -> Result<(Point, Mode)> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::invalid(format!(
                "time {t} outside the trajectory range [0, {}]",
                self.t_end
            )));
        }
        if sys.dim() != self.dim() {
            return Err(Error::invalid("system dimension does not match the trajectory"));
        }
        let e = &self.events[self.segment(t)];
        let x = sys.flow(e.mode, t - e.t, &Point::from_column_slice(&e.x))?;
        Ok((x, e.mode))
    }

    /// Fraction of `[0, t_end]` spent in mode 1.
    pub fn occupation_one(&self) -> f64 {
        let mut total = 0.0;
        for (k, e) in self.events.iter().enumerate() {
            let next = self.events.get(k + 1).map_or(self.t_end, |n| n.t);
            if e.mode == Mode::One {
                total += next - e.t;
            }
        }
        total / self.t_end
    }

    /// CSV with header `t,mode,x1,...,xd`: one row per event, plus rows every
    /// `stride` time units when given, plus the final state.
    pub fn write_csv<W: Write>(
        &self,
        sys: &SwitchingSystem,
        stride: Option<f64>,
        w: &mut W,
    ) -> Result<()> {
        let d = self.dim();
        write_header(w, Some("t"), d)?;
        let mut rows: Vec<(f64, Mode, Vec<f64>)> = self
            .events
            .iter()
            .map(|e| (e.t, e.mode, e.x.clone()))
            .collect();
        if let Some(h) = stride {
            if h.is_nan() || h <= 0.0 {
                return Err(Error::invalid("stride must be positive"));
            }
            let mut k = 1u64;
            loop {
                let s = k as f64 * h;
                if s >= self.t_end {
                    break;
                }
                let (x, m) = self.sample_position(sys, s)?;
                rows.push((s, m, x.as_slice().to_vec()));
                k += 1;
            }
        }
        rows.push((self.t_end, self.i_end, self.x_end.clone()));
        // stable sort keeps an event ahead of a stride sample at the same time
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, m, x) in rows {
            write!(w, "{t:.16e},{m}")?;
            for v in x {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn write_header<W: Write>(w: &mut W, first: Option<&str>, d: usize) -> Result<()> {
    if let Some(f) = first {
        write!(w, "{f},")?;
    }
    write!(w, "mode")?;
    for k in 1..=d {
        write!(w, ",x{k}")?;
    }
    writeln!(w)?;
    Ok(())
}

/// Positions and modes of the induced chain, with the holding times used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub steps: Vec<(Vec<f64>, Mode)>,
    pub holding_times: Vec<f64>,
}

fn check_chain_rate(sys: &SwitchingSystem, alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > sys.max_rate()) {
        return Err(Error::invalid(format!(
            "the induced chain needs alpha > max(alpha01, alpha10) = {}, got {alpha}",
            sys.max_rate()
        )));
    }
    Ok(())
}

/// Streams the chain `X_{n+1} = Φ_{I_n}^{τ_{n+1}}(X_n)`, `τ ~ Exp(α)`, with
/// modes moved by `U`. The callback sees `(n, X_n, I_n-1, I_n)` for
/// `n = 1..=steps`; `I_{n-1}` is the mode that drove the last flow.
#[allow(clippy::too_many_arguments)]
pub fn chain_for_each<F>(
    sys: &SwitchingSystem,
    alpha: f64,
    steps: u64,
    x0: &[f64],
    i0: Mode,
    seed: SeedSpec,
    mut f: F,
) -> Result<(Vec<f64>, Mode)>
where
    F: FnMut(u64, f64, &[f64], Mode, Mode),
{
    check_chain_rate(sys, alpha)?;
    check_start(sys, x0)?;
    let mut rng = seed.rng();
    let mut x = x0.to_vec();
    let mut scratch = vec![0.0; x.len()];
    let mut mode = i0;
    for n in 1..=steps {
        let tau = holding_time(&mut rng, alpha);
        sys.flow_in_place(mode, tau, &mut x, &mut scratch);
        let prev = mode;
        if rng.bernoulli(sys.rate_out(mode) / alpha) {
            mode = mode.flip();
        }
        f(n, tau, &x, prev, mode);
    }
    Ok((x, mode))
}

pub fn simulate_chain(
    sys: &SwitchingSystem,
    alpha: f64,
    n: usize,
    x0: &Point,
    i0: Mode,
    seed: SeedSpec,
) -> Result<ChainSample> {
    let mut steps = Vec::with_capacity(n + 1);
    let mut holding_times = Vec::with_capacity(n);
    steps.push((x0.as_slice().to_vec(), i0));
    chain_for_each(sys, alpha, n as u64, x0.as_slice(), i0, seed, |_, tau, x, _, m| {
        holding_times.push(tau);
        steps.push((x.to_vec(), m));
    })?;
    Ok(ChainSample {
        steps,
        holding_times,
    })
}

/// Receiver for ensemble samples. `merge` must be associative; ensembles
/// combine per-chain sinks in chain order, so the result never depends on
/// thread scheduling.
pub trait SampleSink: Send + Sized {
    fn record(&mut self, x: &[f64], mode: Mode);
    fn merge(&mut self, other: Self);
}

/// Keeps every sample, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleBuffer {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub modes: Vec<Mode>,
}

impl SampleBuffer {
    pub fn new(dim: usize) -> Self {
        SampleBuffer {
            dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    /// CSV with header `mode,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, None, self.dim)?;
        for k in 0..self.len() {
            write!(w, "{}", self.modes[k])?;
            for v in self.point(k) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

impl SampleSink for SampleBuffer {
    fn record(&mut self, x: &[f64], mode: Mode) {
        self.coords.extend_from_slice(x);
        self.modes.push(mode);
    }

    fn merge(&mut self, mut other: Self) {
        self.coords.append(&mut other.coords);
        self.modes.append(&mut other.modes);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// States every `stride` time units after burn-in.
    TimeAveraged { stride: f64 },
    /// Only the state at the final time.
    Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_chains: usize,
    /// Sampling window length after burn-in.
    pub t_max: f64,
    pub burn_in: f64,
    pub sampling: Sampling,
    /// Starting point for every chain; the origin when absent.
    pub x0: Option<Vec<f64>>,
    pub i0: Mode,
    /// Chain `c` uses stream `seed.stream + c`.
    pub seed: SeedSpec,
}

/// `20 / min(|Λ_d|, α01, α10)`.
pub fn default_burn_in(sys: &SwitchingSystem) -> f64 {
    let slowest = sys
        .spectrum()
        .lambda_max()
        .abs()
        .min(sys.alpha01())
        .min(sys.alpha10());
    20.0 / slowest
}

/// `0.1 / max(α01, α10)`.
pub fn default_stride(sys: &SwitchingSystem) -> f64 {
    0.1 / sys.max_rate()
}

impl EnsembleConfig {
    /// Time-averaged sampling with the default burn-in and stride.
    pub fn new(sys: &SwitchingSystem, n_chains: usize, t_max: f64, seed: SeedSpec) -> Self {
        EnsembleConfig {
            n_chains,
            t_max,
            burn_in: default_burn_in(sys),
            sampling: Sampling::TimeAveraged {
                stride: default_stride(sys),
            },
            x0: None,
            i0: Mode::Zero,
            seed,
        }
    }

    /// `t_max` chosen so that the ensemble yields about `total` samples.
    pub fn with_total_samples(sys: &SwitchingSystem, n_chains: usize, total: u64, seed: SeedSpec) -> Self {
        let stride = default_stride(sys);
        let per_chain = total.div_ceil(n_chains.max(1) as u64) as f64;
        // half a stride of slack keeps rounding from dropping the last sample
        Self::new(sys, n_chains, (per_chain + 0.5) * stride, seed)
    }

    fn validate(&self, sys: &SwitchingSystem) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("n_chains must be at least 1"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid("t_max must be positive"));
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return Err(Error::invalid("burn_in must be nonnegative"));
        }
        if let Sampling::TimeAveraged { stride } = self.sampling {
            if !(stride.is_finite() && stride > 0.0) {
                return Err(Error::invalid("stride must be positive"));
            }
        }
        if let Some(x0) = &self.x0 {
            check_start(sys, x0)?;
        }
        Ok(())
    }
}

/// Runs one ensemble member into a fresh sink.
fn run_member<S, M>(sys: &SwitchingSystem, cfg: &EnsembleConfig, chain: usize, make: &M) -> S
where
    S: SampleSink,
    M: Fn() -> S,
{
    let mut sink = make();
    let zero = vec![0.0; sys.dim()];
    let x0 = cfg.x0.as_deref().unwrap_or(&zero);
    let mut rng = cfg
        .seed
        .with_stream(cfg.seed.stream.wrapping_add(chain as u64))
        .rng();
    let t_end = cfg.burn_in + cfg.t_max;
    match cfg.sampling {
        Sampling::TimeAveraged { stride } => {
            walk(
                sys,
                x0,
                cfg.i0,
                t_end,
                &mut rng,
                Some((cfg.burn_in + stride, stride)),
                |_, _, _| {},
                |x, m| sink.record(x, m),
            );
        }
        Sampling::Endpoint => {
            let (x, m) = walk(sys, x0, cfg.i0, t_end, &mut rng, None, |_, _, _| {}, |_, _| {});
            sink.record(&x, m);
        }
    }
    sink
}

/// Runs `n_chains` independent paths in parallel and merges their sinks in
/// chain order.
pub fn ensemble<S, M>(sys: &SwitchingSystem, cfg: &EnsembleConfig, make: M) -> Result<S>
where
    S: SampleSink,
    M: Fn() -> S + Sync,
{
    cfg.validate(sys)?;
    let merged = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| run_member(sys, cfg, c, &make))
        .reduce_with(|mut a, b| {
            a.merge(b);
            a
        })
        .expect("at least one chain");
    Ok(merged)
}

/// Same as [`ensemble`] with the induced chain, recording `(X_n, I_n)` ~ π
/// after `burn_in` steps. Chain `c` uses stream `seed.stream + c`.
#[allow(clippy::too_many_arguments)]
pub fn chain_ensemble<S, M>(
    sys: &SwitchingSystem,
    alpha: f64,
    n_chains: usize,
    steps_per_chain: u64,
    burn_in_steps: u64,
    seed: SeedSpec,
    make: M,
) -> Result<S>
where
    S: SampleSink,
    M: Fn() -> S + Sync,
{
    check_chain_rate(sys, alpha)?;
    if n_chains == 0 {
        return Err(Error::invalid("n_chains must be at least 1"));
    }
    let zero = vec![0.0; sys.dim()];
    let sinks: Result<Vec<S>> = (0..n_chains)
        .into_par_iter()
        .map(|c| {
            let mut sink = make();
            let s = seed.with_stream(seed.stream.wrapping_add(c as u64));
            chain_for_each(
                sys,
                alpha,
                burn_in_steps + steps_per_chain,
                &zero,
                Mode::Zero,
                s,
                |n, _, x, _, m| {
                    if n > burn_in_steps {
                        sink.record(x, m)
                    }
                },
            )?;
            Ok(sink)
        })
        .collect();
    let mut it = sinks?.into_iter();
    let mut first = it.next().expect("at least one chain");
    for s in it {
        first.merge(s);
    }
    Ok(first)
}
