//! Browser bindings: three interactive operations (error-norm sweep, one
//! maneuver run, a small Monte Carlo comparison) exchanged as plain JSON-ish
//! objects so the page needs no generated glue beyond wasm-bindgen's.
//!
//! The numeric layer lives in [`api`] on ordinary serde types and is tested
//! on the host; the `#[wasm_bindgen]` exports are thin `JsValue` shims.

use wasm_bindgen::prelude::*;

pub mod api {
    use serde::{Deserialize, Serialize};

    use attsim::algebra::Vec3;
    use attsim::dynamics::IntegratorConfig;
    use attsim::error_kinematics::WeightMatrix;
    use attsim::scenario::Preset;
    use attsim::sim::{
        run_monte_carlo, run_scenario, sweep_error_norms, Representation, TrajectoryLog,
    };
    use attsim::Result;

    #[derive(Debug, Deserialize)]
    pub struct SweepRequest {
        pub axis: [f64; 3],
        /// Strictly increasing positive weights.
        pub weights: [f64; 3],
        pub points: usize,
    }

    #[derive(Debug, Serialize)]
    pub struct SweepResponse {
        pub beta_deg: Vec<f64>,
        pub qnorm: Vec<f64>,
        pub ernorm: Vec<f64>,
    }

    pub fn sweep(req: &SweepRequest) -> Result<SweepResponse> {
        let weights = WeightMatrix::new(req.weights[0], req.weights[1], req.weights[2])?;
        let axis = Vec3::new(req.axis[0], req.axis[1], req.axis[2]);
        let rows = sweep_error_norms(&weights, &axis, req.points)?;
        let mut out = SweepResponse {
            beta_deg: Vec::with_capacity(rows.len()),
            qnorm: Vec::with_capacity(rows.len()),
            ernorm: Vec::with_capacity(rows.len()),
        };
        for row in rows {
            out.beta_deg.push(row.beta_deg);
            out.qnorm.push(row.qnorm);
            out.ernorm.push(row.ernorm);
        }
        Ok(out)
    }

    #[derive(Debug, Deserialize)]
    pub struct ManeuverRequest {
        /// Initial error angle about the third body axis, degrees.
        pub angle_deg: f64,
        /// "quat" or "so3".
        pub representation: String,
        pub pseudo: bool,
        pub noise: bool,
        pub seed: u64,
        /// Step and length; the page uses the stock 1e-3 and 20 s.
        pub dt: f64,
        pub duration: f64,
    }

    #[derive(Debug, Serialize)]
    pub struct ManeuverResponse {
        pub t: Vec<f64>,
        pub psi: Vec<f64>,
        pub qe0: Vec<f64>,
        pub er_norm: Vec<f64>,
        pub ew_norm: Vec<f64>,
        pub v: Vec<f64>,
        pub pseudo_active: Vec<bool>,
        pub converged: bool,
        pub t_converge: Option<f64>,
    }

    fn parse_representation(name: &str) -> Result<Representation> {
        match name {
            "quat" | "quaternion" => Ok(Representation::Quaternion),
            "so3" => Ok(Representation::So3),
            other => Err(attsim::Error::Scenario(format!(
                "unknown representation {other:?}, expected \"quat\" or \"so3\""
            ))),
        }
    }

    /// Caps response arrays near 500 samples so plots stay light even for
    /// fine steps.
    fn downsample_stride(n_records: usize) -> usize {
        n_records.div_ceil(500).max(1)
    }

    fn thin(log: &TrajectoryLog) -> ManeuverResponse {
        let report = log.convergence();
        let stride = downsample_stride(log.records.len());
        let mut out = ManeuverResponse {
            t: Vec::new(),
            psi: Vec::new(),
            qe0: Vec::new(),
            er_norm: Vec::new(),
            ew_norm: Vec::new(),
            v: Vec::new(),
            pseudo_active: Vec::new(),
            converged: report.converged,
            t_converge: report.t_converge,
        };
        for (i, rec) in log.records.iter().enumerate() {
            if i % stride != 0 && i != log.records.len() - 1 {
                continue;
            }
            out.t.push(rec.t);
            out.psi.push(rec.psi);
            out.qe0.push(rec.q_e[0]);
            out.er_norm.push(rec.e_r_norm);
            out.ew_norm.push(rec.e_w_norm);
            out.v.push(rec.v);
            out.pseudo_active.push(rec.pseudo_active);
        }
        out
    }

    pub fn simulate_maneuver(req: &ManeuverRequest) -> Result<ManeuverResponse> {
        let mut sc = Preset::Fig2.scenario();
        sc.representation = parse_representation(&req.representation)?;
        sc.pseudo.enabled = req.pseudo;
        sc.noise.enabled = req.noise;
        sc.seed = req.seed;
        sc.integrator = IntegratorConfig::new(req.dt, sc.integrator.scheme, 1)?;
        sc.duration = req.duration;
        // The preset already points the target a half turn about e3 away
        // from the identity start; steer the start instead of the target so
        // any requested angle keeps the same goal attitude.
        let remainder = req.angle_deg - 180.0;
        sc.offset_initial(Vec3::z(), remainder.to_radians())?;
        sc.validate()?;
        let log = run_scenario(&sc)?;
        Ok(thin(&log))
    }

    #[derive(Debug, Deserialize)]
    pub struct CompareRequest {
        pub seeds: u64,
        pub dt: f64,
        pub duration: f64,
    }

    #[derive(Debug, Serialize)]
    pub struct CompareResponse {
        /// Per-seed settling times, unconverged runs censored at `duration`.
        pub t_on: Vec<f64>,
        pub t_off: Vec<f64>,
        pub median_on: f64,
        pub median_off: f64,
    }

    /// Noisy half-turn comparison, substitution on vs. off, paired seeds.
    pub fn monte_carlo_compare(req: &CompareRequest) -> Result<CompareResponse> {
        let mut on = Preset::Fig2.scenario();
        on.noise.enabled = true;
        on.integrator = IntegratorConfig::new(req.dt, on.integrator.scheme, 1)?;
        on.duration = req.duration;
        let mut off = on;
        off.pseudo.enabled = false;
        let s_on = run_monte_carlo(&on, req.seeds)?;
        let s_off = run_monte_carlo(&off, req.seeds)?;
        let censor = |summary: &attsim::sim::MonteCarloSummary| -> Vec<f64> {
            summary
                .runs
                .iter()
                .map(|r| r.report.t_converge.unwrap_or(req.duration))
                .collect()
        };
        Ok(CompareResponse {
            t_on: censor(&s_on),
            t_off: censor(&s_off),
            median_on: s_on.median_t,
            median_off: s_off.median_t,
        })
    }
}

fn to_js<T: serde::Serialize>(value: &T) -> Result<JsValue, JsValue> {
    serde_wasm_bindgen::to_value(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

fn from_js<T: for<'de> serde::Deserialize<'de>>(value: JsValue) -> Result<T, JsValue> {
    serde_wasm_bindgen::from_value(value).map_err(|e| JsValue::from_str(&e.to_string()))
}

fn fail(err: attsim::Error) -> JsValue {
    JsValue::from_str(&err.to_string())
}

#[wasm_bindgen]
pub fn sweep(request: JsValue) -> Result<JsValue, JsValue> {
    let req: api::SweepRequest = from_js(request)?;
    to_js(&api::sweep(&req).map_err(fail)?)
}

#[wasm_bindgen]
pub fn simulate_maneuver(request: JsValue) -> Result<JsValue, JsValue> {
    let req: api::ManeuverRequest = from_js(request)?;
    to_js(&api::simulate_maneuver(&req).map_err(fail)?)
}

#[wasm_bindgen]
pub fn monte_carlo_compare(request: JsValue) -> Result<JsValue, JsValue> {
    let req: api::CompareRequest = from_js(request)?;
    to_js(&api::monte_carlo_compare(&req).map_err(fail)?)
}

#[cfg(test)]
mod tests {
    use super::api::*;

    #[test]
    fn sweep_matches_the_analytic_extremes() {
        let resp = sweep(&SweepRequest {
            axis: [0.0, 0.0, 1.0],
            weights: [1.0, 2.0, 3.0],
            points: 181,
        })
        .unwrap();
        assert_eq!(resp.beta_deg.len(), 181);
        assert!((resp.qnorm[90] - 0.5).abs() < 1e-12);
        assert!((resp.ernorm[90] - 1.5).abs() < 1e-12);
        assert!(resp.qnorm[180].abs() < 1e-12);
    }

    #[test]
    fn maneuver_runs_are_downsampled_and_converge_with_substitution() {
        let resp = simulate_maneuver(&ManeuverRequest {
            angle_deg: 180.0,
            representation: "quat".into(),
            pseudo: true,
            noise: false,
            seed: 7,
            dt: 1e-3,
            duration: 20.0,
        })
        .unwrap();
        assert!(resp.converged);
        assert!(resp.t_converge.unwrap() < 10.0);
        assert!(resp.t.len() <= 502, "kept {} samples", resp.t.len());
        assert_eq!(*resp.t.last().unwrap(), 20.0);
        assert!(resp.pseudo_active[0]);
    }

    #[test]
    fn smaller_requested_angles_start_closer_to_the_target() {
        let resp = simulate_maneuver(&ManeuverRequest {
            angle_deg: 90.0,
            representation: "so3".into(),
            pseudo: false,
            noise: false,
            seed: 7,
            dt: 1e-3,
            duration: 5.0,
        })
        .unwrap();
        // Psi for a 90 degree error about e3 with the stock weights.
        assert!((resp.psi[0] - 1.5).abs() < 1e-12, "psi0 = {}", resp.psi[0]);
        assert!(resp.converged);
    }

    #[test]
    fn comparison_censors_stalled_runs_at_the_duration() {
        let resp = monte_carlo_compare(&CompareRequest {
            seeds: 4,
            dt: 1e-3,
            duration: 2.0,
        })
        .unwrap();
        assert_eq!(resp.t_on.len(), 4);
        assert_eq!(resp.t_off.len(), 4);
        // Two seconds is too short for either variant to settle here, so
        // every entry sits at the censoring bound.
        assert!(resp.t_off.iter().all(|t| *t == 2.0));
        assert!(resp.median_on <= resp.median_off);
    }

    #[test]
    fn bad_requests_surface_as_errors() {
        assert!(simulate_maneuver(&ManeuverRequest {
            angle_deg: 180.0,
            representation: "euler".into(),
            pseudo: true,
            noise: false,
            seed: 7,
            dt: 1e-3,
            duration: 20.0,
        })
        .is_err());
        assert!(sweep(&SweepRequest {
            axis: [0.0, 0.0, 0.0],
            weights: [1.0, 2.0, 3.0],
            points: 10,
        })
        .is_err());
    }
}
