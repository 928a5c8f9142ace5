//! Per-step message schedule of the direct tracker.
//!
//! Each call to [`Tracker::step`] consumes one snapshot:
//!
//! 1. every alive track is predicted and its reflectivity re-estimated at the
//!    prediction,
//! 2. track by track, a new data message is projected and the inner sweeps
//!    re-fuse the stored data messages with the kinematic chain and refresh
//!    the process-noise belief,
//! 3. reflectivities and existence means are updated jointly,
//! 4. tracks whose existence falls below the prune threshold die,
//! 5. new tracks are seeded from a grid search over the unexplained signal.

mod birth;
mod config;
mod state;

use std::sync::Arc;

pub use birth::{best_candidate, grid_projections, max_matched_power, BirthGrid};
pub use config::{BirthGridSpec, TrackerConfig};
pub use state::{extract_estimates, Checkpoint, Estimate, ReflectivityMarginal, TrackState};

use crate::radar_sim::{RadarConfig, Snapshot};
use crate::steering::SteeringModel;
use crate::vmp::{
    fuse_gaussian_messages, kinematic_message, project_data_message, update_process_noise,
    Direction, ExistencePrior, GaussianBelief, GaussianMessage, MeasurementContext, MotionModel,
    Projection, ReflectivityBelief, ReflectivityModel,
};
use crate::{Error, Result};

/// Sweeps of the joint reflectivity/existence update per call.
const JOINT_SWEEPS: usize = 20;

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    model: Arc<SteeringModel>,
    motion: MotionModel,
    prior_precision: f64,
    grid: BirthGrid,
    tracks: Vec<TrackState>,
    next_id: u64,
    last_step: Option<usize>,
}

impl Tracker {
    pub fn new(radar: &RadarConfig, config: TrackerConfig) -> Result<Self> {
        Self::with_model(radar, config, Arc::new(SteeringModel::new(radar)?))
    }

    /// Shares a precomputed steering model, e.g. with the simulator.
    pub fn with_model(
        radar: &RadarConfig,
        config: TrackerConfig,
        model: Arc<SteeringModel>,
    ) -> Result<Self> {
        config.validate()?;
        radar.validate()?;
        if model.len() != radar.snapshot_len() {
            return Err(Error::Dimension { expected: radar.snapshot_len(), got: model.len() });
        }
        Ok(Self {
            motion: MotionModel::constant_velocity(radar.dt())?,
            prior_precision: config.reflectivity_precision(radar),
            grid: BirthGrid::new(&config.birth_grid, radar)?,
            config,
            model,
            tracks: Vec::new(),
            next_id: 0,
            last_step: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn grid(&self) -> &BirthGrid {
        &self.grid
    }

    pub fn motion(&self) -> &MotionModel {
        &self.motion
    }

    pub fn prior_precision(&self) -> f64 {
        self.prior_precision
    }

    /// Every track ever created, pruned ones included.
    pub fn tracks(&self) -> &[TrackState] {
        &self.tracks
    }

    pub fn alive_count(&self) -> usize {
        self.tracks.iter().filter(|t| t.is_alive()).count()
    }

    pub fn last_step(&self) -> Option<usize> {
        self.last_step
    }

    pub fn estimates(&self, step: usize) -> Vec<Estimate> {
        extract_estimates(&self.tracks, step, self.config.report_threshold)
    }

    pub fn checkpoint(&self, seed: Option<u64>) -> Checkpoint {
        Checkpoint { seed, last_step: self.last_step, tracks: self.tracks.clone() }
    }

    /// Processes the snapshot of the next step and returns the reported
    /// objects at that step.
    pub fn step(&mut self, snapshot: &Snapshot) -> Result<Vec<Estimate>> {
        let n = snapshot.step_index;
        if let Some(last) = self.last_step {
            if n != last + 1 {
                return Err(Error::Config(format!("expected step {}, got {n}", last + 1)));
            }
        }
        let model = Arc::clone(&self.model);
        let ctx = MeasurementContext::new(&model, snapshot)?;

        let alive = self.predict(n);
        if !alive.is_empty() {
            self.update_states(&ctx, n, &alive)?;
            let alive = self.alive_indices();
            self.refresh(&ctx, n, &alive)?;
            self.prune(n, &alive);
        }
        self.births(&ctx, n)?;

        self.last_step = Some(n);
        Ok(self.estimates(n))
    }

    fn alive_indices(&self) -> Vec<usize> {
        (0..self.tracks.len()).filter(|&i| self.tracks[i].is_alive()).collect()
    }

    fn existence_prior(&self) -> ExistencePrior {
        self.config.existence_prior()
    }

    /// Linear existence coefficient of track `i` at step `n`.
    fn g(&self, i: usize, n: usize) -> f64 {
        let prev = n.checked_sub(1).map_or(0.0, |p| self.tracks[i].existence_at(p));
        self.existence_prior().g(prev)
    }

    /// Appends the predicted step to every alive track; tracks predicted out
    /// of the field of view are pruned. Returns the survivors.
    fn predict(&mut self, n: usize) -> Vec<usize> {
        let mut alive = Vec::new();
        for (i, t) in self.tracks.iter_mut().enumerate() {
            if !t.is_alive() {
                continue;
            }
            let pred = self.motion.predict(t.current(), &t.process_noise);
            let xi = t.current_existence();
            let refl = *t.reflectivity.last().expect("non-empty");
            t.beliefs.push(pred);
            t.existence.push(xi);
            t.reflectivity.push(refl);
            t.data_messages.push(GaussianMessage::uninformative(pred.mean));
            if self.model.jet(pred.position()).is_ok() {
                alive.push(i);
            } else {
                kill(t, n);
            }
        }
        alive
    }

    fn current_beliefs(&self, idx: &[usize]) -> Vec<GaussianBelief> {
        idx.iter().map(|&i| *self.tracks[i].current()).collect()
    }

    fn current_existence(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.tracks[i].current_existence()).collect()
    }

    /// Data messages and inner sweeps, one track after the other.
    fn update_states(&mut self, ctx: &MeasurementContext<'_>, n: usize, alive: &[usize]) -> Result<()> {
        let xi = self.current_existence(alive);
        let g: Vec<f64> = alive.iter().map(|&i| self.g(i, n)).collect();
        let predicted = self.current_beliefs(alive);
        let refl = ReflectivityModel::from_beliefs(ctx, &predicted, g, self.prior_precision)?
            .posterior(&xi)?;
        let marginals = refl.marginals()?;
        let mut jets = ctx.jets(&predicted)?;
        let options = self.config.projection_options();
        for (slot, &i) in alive.iter().enumerate() {
            let start = predicted[slot].position();
            let projection = project_data_message(ctx, &jets, &marginals, &xi, slot, start, &options)
                .unwrap_or_else(|_| Projection::uninformative(start));
            let t = &mut self.tracks[i];
            *t.data_messages.last_mut().expect("non-empty") = projection.message();
            smooth(t, &self.motion, &self.config)?;
            match ctx.model.jet(t.current().position()) {
                Ok(j) => jets[slot] = j,
                Err(_) => kill(t, n),
            }
        }
        Ok(())
    }

    /// Joint reflectivity/existence update of the tracks `idx` at step `n`.
    fn refresh(&mut self, ctx: &MeasurementContext<'_>, n: usize, idx: &[usize]) -> Result<()> {
        if idx.is_empty() {
            return Ok(());
        }
        let beliefs = self.current_beliefs(idx);
        let g: Vec<f64> = idx.iter().map(|&i| self.g(i, n)).collect();
        let model = ReflectivityModel::from_beliefs(ctx, &beliefs, g, self.prior_precision)?;
        let mut xi = self.current_existence(idx);
        let q = joint_update(&model, &mut xi)?;
        for ((&i, x), (mean, var)) in idx.iter().zip(&xi).zip(q.marginals()?) {
            let t = &mut self.tracks[i];
            *t.existence.last_mut().expect("non-empty") = *x;
            *t.reflectivity.last_mut().expect("non-empty") = ReflectivityMarginal::new(mean, var);
        }
        Ok(())
    }

    fn prune(&mut self, n: usize, idx: &[usize]) {
        for &i in idx {
            let t = &mut self.tracks[i];
            if t.is_alive() && t.current_existence() < self.config.prune_threshold {
                kill(t, n);
            }
        }
    }

    /// Grid search for objects the current tracks do not explain.
    fn births(&mut self, ctx: &MeasurementContext<'_>, n: usize) -> Result<()> {
        let projections = grid_projections(ctx, &self.grid);
        let g_birth = self.existence_prior().g(0.0);
        let options = self.config.projection_options();
        for _ in 0..self.config.max_births_per_step {
            let alive = self.alive_indices();
            let mut beliefs = self.current_beliefs(&alive);
            let mut xi = self.current_existence(&alive);
            let mut g: Vec<f64> = alive.iter().map(|&i| self.g(i, n)).collect();
            let mut jets = ctx.jets(&beliefs)?;
            let tracks = ReflectivityModel::from_beliefs(ctx, &beliefs, g.clone(), self.prior_precision)?;
            let Some((cell, objective)) =
                best_candidate(ctx, &self.grid, &projections, &tracks, &jets, &xi, g_birth)?
            else {
                break;
            };
            if objective.argmax() <= self.config.birth_threshold {
                break;
            }

            // seed the state from the data message of the new object
            let prior = self.grid.prior(cell, self.config.birth_velocity_std);
            let start = prior.position();
            beliefs.push(prior);
            xi.push(1.0);
            g.push(g_birth);
            jets.push(ctx.model.jet(start)?);
            let with_new = ReflectivityModel::from_beliefs(ctx, &beliefs, g, self.prior_precision)?;
            let marginals = with_new.posterior(&xi)?.marginals()?;
            let k = beliefs.len() - 1;
            let projection = project_data_message(ctx, &jets, &marginals, &xi, k, start, &options)
                .unwrap_or_else(|_| Projection::uninformative(start));
            let birth_prior = prior.to_message()?;
            let mut belief = fuse_gaussian_messages(&[projection.message(), birth_prior])?;
            if ctx.model.jet(belief.position()).is_err() {
                belief = prior;
            }
            let (mean, var) = marginals[k];
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(TrackState {
                id,
                birth_step: n,
                beliefs: vec![belief],
                existence: vec![1.0],
                reflectivity: vec![ReflectivityMarginal::new(mean, var)],
                data_messages: vec![projection.message()],
                birth_prior,
                process_noise: self.config.process_noise.belief(),
                pruned_at: None,
            });

            let alive = self.alive_indices();
            self.refresh(ctx, n, &alive)?;
            let newborn = self.tracks.len() - 1;
            if self.tracks[newborn].current_existence() < self.config.prune_threshold {
                // not supported after all: forget it rather than keep a stub
                self.tracks.pop();
                self.next_id -= 1;
                self.refresh(ctx, n, &self.alive_indices())?;
                self.prune(n, &self.alive_indices());
                break;
            }
            self.prune(n, &alive);
        }
        Ok(())
    }
}

fn kill(t: &mut TrackState, n: usize) {
    *t.existence.last_mut().expect("non-empty") = 0.0;
    t.pruned_at = Some(n);
}

/// Repeated coordinate sweeps of the joint existence update until the means
/// settle; returns the matching reflectivity proxy.
fn joint_update(model: &ReflectivityModel, xi: &mut [f64]) -> Result<ReflectivityBelief> {
    let mut q = model.posterior(xi)?;
    for _ in 0..JOINT_SWEEPS {
        let before = xi.to_vec();
        q = model.update_xi_sweep(xi)?;
        let change = before.iter().zip(xi.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < 1e-9 {
            break;
        }
    }
    Ok(q)
}

/// Inner sweeps over the track history: every state belief is re-fused from
/// its stored data message, its kinematic neighbours and (at birth) the birth
/// prior, then the process-noise belief is refreshed. Sweeps alternate in
/// direction and stop early once no mean moves by more than the tolerance.
fn smooth(t: &mut TrackState, motion: &MotionModel, config: &TrackerConfig) -> Result<()> {
    let len = t.len();
    let start = config.smoothing_window.map_or(0, |w| len.saturating_sub(w));
    let mut messages: Vec<GaussianMessage> = Vec::with_capacity(4);
    for sweep in 0..config.inner_iterations {
        let mut change: f64 = 0.0;
        let mut visit = |i: usize, t: &mut TrackState| -> Result<()> {
            messages.clear();
            if t.data_messages[i].is_informative() {
                messages.push(t.data_messages[i]);
            }
            if i == 0 {
                messages.push(t.birth_prior);
            } else {
                messages.push(kinematic_message(&t.beliefs[i - 1], Direction::Forward, motion, &t.process_noise)?);
            }
            if i + 1 < len {
                messages.push(kinematic_message(&t.beliefs[i + 1], Direction::Backward, motion, &t.process_noise)?);
            }
            let new = fuse_gaussian_messages(&messages)?;
            change = change.max((new.mean - t.beliefs[i].mean).amax());
            t.beliefs[i] = new;
            Ok(())
        };
        if sweep % 2 == 0 {
            for i in start..len {
                visit(i, t)?;
            }
        } else {
            for i in (start..len).rev() {
                visit(i, t)?;
            }
        }
        t.process_noise = update_process_noise(&t.beliefs, motion, &config.process_noise);
        if change < config.sweep_tolerance {
            break;
        }
    }
    Ok(())
}
