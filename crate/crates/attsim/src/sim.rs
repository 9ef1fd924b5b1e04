//! Closed-loop scenario runner, Monte Carlo driver, and error-norm sweep.
//!
//! A [`Scenario`] bundles everything one run needs. The runner propagates the
//! true state, hands the controller a measured copy (optionally perturbed by
//! the noise model), and logs truth plus the controller's decisions at every
//! step. Runs are bitwise deterministic for a fixed scenario, seed included.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{Quaternion, Vec3};
use crate::control::{
    lyapunov_quaternion, lyapunov_rotation, moment_quaternion, moment_rotation, ControllerGains,
    DesiredTrajectory,
};
use crate::dynamics::{step, BodyState, Inertia, IntegratorConfig};
use crate::error_kinematics::{
    attitude_error_vector, error_vector_of, omega_error, psi, quat_error, WeightMatrix,
};
use crate::pseudo::{
    classify_quaternion, classify_rotation, pseudo_quat_error, pseudo_rotation_error,
    PseudoConfig, Region,
};
use crate::{Error, Result};

/// Which feedback law closes the loop. Both error sets are logged either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Quaternion,
    So3,
}

impl Representation {
    pub fn label(&self) -> &'static str {
        match self {
            Representation::Quaternion => "quaternion",
            Representation::So3 => "so3",
        }
    }
}

/// Measurement noise: a multiplicative attitude perturbation (exponential map
/// of a zero-mean Gaussian rotation vector) and additive rate noise, redrawn
/// at every control step. Truth is never perturbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub sigma_attitude: f64,
    pub sigma_omega: f64,
}

impl NoiseConfig {
    pub fn new(enabled: bool, sigma_attitude: f64, sigma_omega: f64) -> Result<Self> {
        for (name, v) in [("sigma_attitude", sigma_attitude), ("sigma_omega", sigma_omega)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self { enabled, sigma_attitude, sigma_omega })
    }

    pub fn disabled() -> Self {
        Self { enabled: false, sigma_attitude: 0.01, sigma_omega: 0.01 }
    }
}

/// Complete description of one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub representation: Representation,
    pub initial: BodyState,
    pub desired: DesiredTrajectory,
    pub inertia: Inertia,
    pub gains: ControllerGains,
    pub weights: WeightMatrix,
    pub pseudo: PseudoConfig,
    pub noise: NoiseConfig,
    pub integrator: IntegratorConfig,
    pub duration: f64,
    pub seed: u64,
}

impl Scenario {
    /// Cross-field checks that individual constructors cannot see.
    pub fn validate(&self) -> Result<()> {
        if !self.duration.is_finite() || self.duration < self.integrator.dt {
            return Err(Error::InvalidParameter(format!(
                "duration must cover at least one step, got {} with dt {}",
                self.duration, self.integrator.dt
            )));
        }
        if self.pseudo.enabled && !self.pseudo.bands_disjoint(&self.weights) {
            return Err(Error::InvalidParameter(format!(
                "pseudo-target bands overlap: half-width {} needs weight saddle gaps above {}",
                self.pseudo.epsilon(),
                2.0 * self.pseudo.epsilon()
            )));
        }
        Ok(())
    }

    /// Rotates the initial attitude away from wherever it sits by `angle`
    /// radians about the body-frame `axis`. Half-turn setups start exactly on
    /// the stall point by default; this knob nudges them off it so the slow
    /// noise-driven escape can be studied from a known displacement.
    pub fn offset_initial(&mut self, axis: Vec3, angle: f64) -> Result<()> {
        if !angle.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "initial offset angle must be finite, got {angle}"
            )));
        }
        if angle == 0.0 {
            return Ok(());
        }
        let norm = axis.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidParameter(
                "initial offset axis must be a nonzero vector".into(),
            ));
        }
        let nudge = Quaternion::exp_map(&(axis * (angle / norm)));
        let q = self.initial.q * nudge;
        self.initial = BodyState::new(q, self.initial.omega);
        Ok(())
    }

    fn steps(&self) -> u64 {
        (self.duration / self.integrator.dt).round() as u64
    }
}

/// Everything worth knowing about one control step: the true state and
/// errors, the applied moment, and what the controller decided.
#[derive(Debug, Clone, Copy)]
pub struct Record {
    pub t: f64,
    pub q: [f64; 4],
    pub r: [f64; 9],
    pub omega: Vec3,
    pub q_e: [f64; 4],
    pub psi: f64,
    pub e_r_norm: f64,
    pub e_w_norm: f64,
    pub moment: Vec3,
    pub v: f64,
    /// Stall classification of the error the controller saw (measured, so it
    /// can disagree with the logged true errors when noise is on).
    pub region: Region,
    /// True when substitution actually fed the proportional term.
    pub pseudo_active: bool,
}

/// Per-step log of a run; one record per control step, including both
/// endpoints, so a run of `n` steps holds `n + 1` records.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub representation: Representation,
    pub dt: f64,
    pub records: Vec<Record>,
}

/// Convergence thresholds. A run converges when the attitude error metric of
/// its representation and the rate error both drop below these and stay
/// there to the end of the run.
pub const TOL_PSI: f64 = 0.01;
pub const TOL_QE0: f64 = 1e-4;
pub const TOL_OMEGA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// First time after which the tolerances hold to the end of the run.
    pub t_converge: Option<f64>,
    pub final_v: f64,
}

fn within_tolerance(rec: &Record, rep: Representation) -> bool {
    let attitude_ok = match rep {
        Representation::Quaternion => 1.0 - rec.q_e[0].abs() < TOL_QE0,
        Representation::So3 => rec.psi < TOL_PSI,
    };
    attitude_ok && rec.e_w_norm < TOL_OMEGA
}

impl TrajectoryLog {
    pub fn convergence(&self) -> ConvergenceReport {
        let final_v = self.records.last().map(|r| r.v).unwrap_or(0.0);
        // Walk backwards to the earliest suffix that satisfies the bounds.
        let mut first_ok: Option<usize> = None;
        for (i, rec) in self.records.iter().enumerate().rev() {
            if within_tolerance(rec, self.representation) {
                first_ok = Some(i);
            } else {
                break;
            }
        }
        match first_ok {
            Some(i) => ConvergenceReport {
                converged: true,
                t_converge: Some(self.records[i].t),
                final_v,
            },
            None => ConvergenceReport { converged: false, t_converge: None, final_v },
        }
    }

    /// CSV with one row per control step and full float precision (17
    /// significant digits, so values round-trip exactly).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 620 + 256);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for rec in &self.records {
            let mut fields: Vec<String> = Vec::with_capacity(31);
            fields.push(fmt_f64(rec.t));
            fields.extend(rec.q.iter().map(|v| fmt_f64(*v)));
            fields.extend(rec.r.iter().map(|v| fmt_f64(*v)));
            fields.extend(rec.omega.iter().map(|v| fmt_f64(*v)));
            fields.extend(rec.q_e.iter().map(|v| fmt_f64(*v)));
            fields.push(fmt_f64(rec.psi));
            fields.push(fmt_f64(rec.e_r_norm));
            fields.push(fmt_f64(rec.e_w_norm));
            fields.extend(rec.moment.iter().map(|v| fmt_f64(*v)));
            fields.push(fmt_f64(rec.v));
            fields.push(rec.region.label().to_string());
            fields.push(if rec.pseudo_active { "1" } else { "0" }.to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

pub const CSV_HEADER: &str = "t,q0,q1,q2,q3,r11,r12,r13,r21,r22,r23,r31,r32,r33,wx,wy,wz,qe0,qe1,qe2,qe3,psi,er_norm,ew_norm,mx,my,mz,v,region,pseudo_active";

/// 17 significant digits: enough for exact f64 round-trips, fixed width-ish
/// for easy diffing.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn measured(state: &BodyState, noise: &NoiseConfig, rng: &mut ChaCha8Rng) -> BodyState {
    if !noise.enabled {
        return *state;
    }
    let mut draw = |sigma: f64| -> Vec3 {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        let c: f64 = StandardNormal.sample(rng);
        Vec3::new(a, b, c) * sigma
    };
    let xi = draw(noise.sigma_attitude);
    let nu = draw(noise.sigma_omega);
    let dq = Quaternion::exp_map(&xi);
    BodyState {
        q: state.q.multiply(&dq),
        r: state.r * dq.to_rotation_matrix(),
        omega: state.omega + nu,
    }
}

/// Runs one scenario to completion and returns the full log.
pub fn run_scenario(sc: &Scenario) -> Result<TrajectoryLog> {
    sc.validate()?;
    let n_steps = sc.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut state = sc.initial;
    let mut records = Vec::with_capacity(n_steps as usize + 1);

    for i in 0..=n_steps {
        let t = i as f64 * sc.integrator.dt;
        let d = sc.desired.sample(t);
        let meas = measured(&state, &sc.noise, &mut rng);

        // Truth for the log.
        let q_e_true = quat_error(&d.q_d, &state.q);
        let psi_true = psi(&state.r, &d.r_d, &sc.weights);
        let e_r_true = attitude_error_vector(&state.r, &d.r_d, &sc.weights);
        let e_w_true = omega_error(&state.omega, &state.r, &d.r_d, &d.omega_d);

        // The controller decides from the measurement.
        let (moment, region, v) = match sc.representation {
            Representation::Quaternion => {
                let q_e_meas = quat_error(&d.q_d, &meas.q);
                let region = classify_quaternion(&q_e_meas, sc.pseudo.epsilon());
                let substitute = (sc.pseudo.enabled && region != Region::Nominal)
                    .then(|| pseudo_quat_error(&q_e_meas, &sc.pseudo));
                let m = moment_quaternion(
                    &meas,
                    &sc.desired,
                    t,
                    &sc.gains,
                    &sc.inertia,
                    substitute.as_ref(),
                );
                let v = lyapunov_quaternion(&state, &sc.desired, t, &sc.gains, &sc.inertia);
                (m, region, v)
            }
            Representation::So3 => {
                let psi_meas = psi(&meas.r, &d.r_d, &sc.weights);
                let region = classify_rotation(psi_meas, &sc.weights, sc.pseudo.epsilon());
                let substitute = (sc.pseudo.enabled && region != Region::Nominal)
                    .then(|| pseudo_rotation_error(&meas.r, &d.r_d, &sc.weights, &sc.pseudo));
                let m = moment_rotation(
                    &meas,
                    &sc.desired,
                    t,
                    &sc.gains,
                    &sc.weights,
                    &sc.inertia,
                    substitute.as_ref(),
                );
                let v =
                    lyapunov_rotation(&state, &sc.desired, t, &sc.gains, &sc.weights, &sc.inertia);
                (m, region, v)
            }
        };

        let rm = state.r.matrix();
        records.push(Record {
            t,
            q: state.q.as_array(),
            r: [
                rm[(0, 0)],
                rm[(0, 1)],
                rm[(0, 2)],
                rm[(1, 0)],
                rm[(1, 1)],
                rm[(1, 2)],
                rm[(2, 0)],
                rm[(2, 1)],
                rm[(2, 2)],
            ],
            omega: state.omega,
            q_e: q_e_true.as_array(),
            psi: psi_true,
            e_r_norm: e_r_true.norm(),
            e_w_norm: e_w_true.norm(),
            moment,
            v,
            region,
            pseudo_active: sc.pseudo.enabled && region != Region::Nominal,
        });

        if i < n_steps {
            state = step(&state, &moment, &sc.inertia, &sc.integrator, i)?;
        }
    }

    Ok(TrajectoryLog { representation: sc.representation, dt: sc.integrator.dt, records })
}

/// One Monte Carlo run: the seed it used and how it converged.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarloRun {
    pub seed: u64,
    pub report: ConvergenceReport,
}

/// Aggregate over seeds. Runs that never converge are censored at the
/// scenario duration for the quantile statistics and counted separately.
#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub runs: Vec<MonteCarloRun>,
    pub n_converged: usize,
    pub median_t: f64,
    pub q25_t: f64,
    pub q75_t: f64,
}

/// Runs `n_seeds` independent copies of the scenario, seeded `seed + i`.
/// Fully deterministic for a fixed `(scenario, n_seeds)`.
pub fn run_monte_carlo(sc: &Scenario, n_seeds: u64) -> Result<MonteCarloSummary> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("monte carlo needs at least one seed".into()));
    }
    let mut runs = Vec::with_capacity(n_seeds as usize);
    for i in 0..n_seeds {
        let mut run_sc = *sc;
        run_sc.seed = sc.seed.wrapping_add(i);
        let log = run_scenario(&run_sc)?;
        runs.push(MonteCarloRun { seed: run_sc.seed, report: log.convergence() });
    }
    let censored: Vec<f64> =
        runs.iter().map(|r| r.report.t_converge.unwrap_or(sc.duration)).collect();
    let n_converged = runs.iter().filter(|r| r.report.converged).count();
    Ok(MonteCarloSummary {
        n_converged,
        median_t: quantile(&censored, 0.5),
        q25_t: quantile(&censored, 0.25),
        q75_t: quantile(&censored, 0.75),
        runs,
    })
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty() && (0.0..=1.0).contains(&p));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// One row of the stall-profile sweep: both proportional-term norms for an
/// error of `beta_deg` degrees about a fixed axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub beta_deg: f64,
    pub qnorm: f64,
    pub ernorm: f64,
}

/// Sweeps the error angle from 0 to 180 degrees about `axis` and evaluates
/// the proportional-term norms of both laws: `|q_e0| |q_ev|` and `|e_R|`.
/// Both must peak mid-range and collapse at the half turn; that collapse is
/// the stall this crate exists to escape.
pub fn sweep_error_norms(weights: &WeightMatrix, axis: &Vec3, n_points: usize) -> Result<Vec<SweepRow>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("sweep needs at least two points".into()));
    }
    let norm = axis.norm();
    if !norm.is_finite() || norm < 1e-12 {
        return Err(Error::InvalidParameter("sweep axis has zero length".into()));
    }
    let axis = axis / norm;
    let mut rows = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let beta_deg = 180.0 * i as f64 / (n_points - 1) as f64;
        let beta = beta_deg.to_radians();
        let q_e = Quaternion::exp_map(&(axis * beta));
        let qnorm = (q_e.scalar() * q_e.vector()).norm();
        let re = crate::algebra::RotationMatrix::from_axis_angle(
            &crate::algebra::AxisAngle::new(axis, beta).unwrap_or_else(|_| {
                // beta = 0 hits the canonicalization happily; only axis
                // validity can fail and that was checked above.
                unreachable!()
            }),
        );
        let ernorm = error_vector_of(re.matrix(), weights).norm();
        rows.push(SweepRow { beta_deg, qnorm, ernorm });
    }
    Ok(rows)
}

/// CSV for the sweep table.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 72 + 32);
    out.push_str("beta_deg,qnorm,ernorm\n");
    for row in rows {
        out.push_str(&fmt_f64(row.beta_deg));
        out.push(',');
        out.push_str(&fmt_f64(row.qnorm));
        out.push(',');
        out.push_str(&fmt_f64(row.ernorm));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Preset;

    #[test]
    fn record_count_covers_both_endpoints() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 0.25;
        let log = run_scenario(&sc).unwrap();
        assert_eq!(log.records.len(), 251);
        assert_eq!(log.records[0].t, 0.0);
        let last = log.records.last().unwrap();
        assert!((last.t - 0.25).abs() < 1e-12);
    }

    #[test]
    fn identical_scenarios_produce_identical_bytes() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 0.5;
        sc.noise.enabled = true;
        let a = run_scenario(&sc).unwrap().to_csv();
        let b = run_scenario(&sc).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_diverge_under_noise() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 0.2;
        sc.noise.enabled = true;
        let a = run_scenario(&sc).unwrap().to_csv();
        sc.seed += 1;
        let b = run_scenario(&sc).unwrap().to_csv();
        assert_ne!(a, b);
    }

    #[test]
    fn stalled_run_reports_no_convergence() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 1.0;
        sc.pseudo.enabled = false;
        let log = run_scenario(&sc).unwrap();
        let report = log.convergence();
        assert!(!report.converged);
        assert_eq!(report.t_converge, None);
    }

    #[test]
    fn run_started_on_target_converges_at_time_zero() {
        let mut sc = Preset::Fig2.scenario();
        sc.initial = BodyState::new(
            match sc.desired {
                DesiredTrajectory::Setpoint { attitude } => attitude,
                _ => unreachable!(),
            },
            Vec3::zeros(),
        );
        sc.duration = 0.5;
        let log = run_scenario(&sc).unwrap();
        let report = log.convergence();
        assert!(report.converged);
        assert_eq!(report.t_converge, Some(0.0));
        assert!(report.final_v < 1e-9);
    }

    #[test]
    fn monte_carlo_with_one_seed_matches_the_plain_run() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 2.0;
        sc.noise.enabled = true;
        let summary = run_monte_carlo(&sc, 1).unwrap();
        let direct = run_scenario(&sc).unwrap().convergence();
        assert_eq!(summary.runs.len(), 1);
        assert_eq!(summary.runs[0].seed, sc.seed);
        assert_eq!(summary.runs[0].report, direct);
    }

    #[test]
    fn monte_carlo_without_noise_is_seed_invariant() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 2.0;
        let summary = run_monte_carlo(&sc, 4).unwrap();
        let first = summary.runs[0].report;
        for run in &summary.runs {
            assert_eq!(run.report, first);
        }
    }

    #[test]
    fn quantiles_interpolate_between_order_statistics() {
        let vals = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&vals, 0.5), 2.5);
        assert_eq!(quantile(&vals, 0.0), 1.0);
        assert_eq!(quantile(&vals, 1.0), 4.0);
    }

    #[test]
    fn csv_round_trips_full_precision() {
        let mut sc = Preset::Fig2.scenario();
        sc.duration = 0.01;
        let log = run_scenario(&sc).unwrap();
        let csv = log.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 30);
        let q0: f64 = row[1].parse().unwrap();
        assert_eq!(q0, log.records[0].q[0]);
        let psi: f64 = row[21].parse().unwrap();
        assert_eq!(psi, log.records[0].psi);
        assert_eq!(row[28], "half_turn");
        assert_eq!(row[29], "1");
    }

    #[test]
    fn measurement_noise_keeps_attitude_copies_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = NoiseConfig::new(true, 0.05, 0.02).unwrap();
        let q = Quaternion::exp_map(&Vec3::new(0.4, -0.2, 1.0));
        let state = BodyState::new(q, Vec3::new(0.1, 0.0, -0.3));
        for _ in 0..100 {
            let m = measured(&state, &noise, &mut rng);
            assert!(m.attitude_consistency() < 1e-9);
            assert!((m.q.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_sigma_noise_is_transparent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = NoiseConfig::new(true, 0.0, 0.0).unwrap();
        let state = BodyState::new(Quaternion::identity(), Vec3::new(0.2, 0.1, 0.0));
        let m = measured(&state, &noise, &mut rng);
        assert_eq!(m.q.as_array(), state.q.as_array());
        assert_eq!(m.omega, state.omega);
    }

    #[test]
    fn overlapping_bands_are_rejected_at_validation() {
        let mut sc = Preset::Fig3.scenario();
        sc.weights = WeightMatrix::new(1.0, 1.005, 3.0).unwrap();
        assert!(matches!(run_scenario(&sc), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn sweep_grid_is_inclusive_and_validated() {
        let k = WeightMatrix::new(1.0, 2.0, 3.0).unwrap();
        let rows = sweep_error_norms(&k, &Vec3::z(), 181).unwrap();
        assert_eq!(rows.len(), 181);
        assert_eq!(rows[0].beta_deg, 0.0);
        assert_eq!(rows[180].beta_deg, 180.0);
        assert!(sweep_error_norms(&k, &Vec3::z(), 1).is_err());
        assert!(sweep_error_norms(&k, &Vec3::zeros(), 5).is_err());
    }

    #[test]
    fn initial_offset_nudges_by_the_requested_angle() {
        let mut sc = Preset::Fig2.scenario();
        let base = sc.initial.q;
        sc.offset_initial(Vec3::x(), 0.0).unwrap();
        assert_eq!(sc.initial.q.as_array(), base.as_array());
        sc.offset_initial(Vec3::new(2.0, 0.0, 0.0), 0.05).unwrap();
        let gap = 2.0 * sc.initial.q.dot(&base).abs().min(1.0).acos();
        assert!((gap - 0.05).abs() < 1e-12, "moved {gap} rad");
        assert!(sc.offset_initial(Vec3::zeros(), 0.1).is_err());
        assert!(sc.offset_initial(Vec3::x(), f64::NAN).is_err());
    }
}
