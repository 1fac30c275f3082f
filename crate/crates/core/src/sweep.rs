//! Design-space enumeration and evaluation of TUM + linkage candidates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MechError, MechResult};
use crate::linkage::{self, Branch, LinkageSpec};
use crate::tum::{self, TumSpec, DEFAULT_THETA_FLOOR, STROKE_CEILING_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl ParamRange {
    pub fn fixed(value: f64) -> Self {
        ParamRange { min: value, max: value, steps: 1 }
    }

    fn value(&self, k: usize) -> f64 {
        if self.steps <= 1 {
            self.min
        } else if k + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Objective {
    pub field: String,
    pub direction: Direction,
}

/// Per-parameter grids plus the fixed inputs every candidate shares.
///
/// Grid parameters are enumerated in declaration order, the first one
/// varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRanges {
    #[serde(rename = "radius_R")]
    pub radius: ParamRange,
    #[serde(rename = "strip_length_L")]
    pub strip_length: ParamRange,
    pub n_strips: ParamRange,
    #[serde(rename = "strip_width_w1")]
    pub strip_width: ParamRange,
    #[serde(rename = "top_plate_thickness_w2")]
    pub top_plate_thickness: ParamRange,
    #[serde(rename = "bottom_plate_thickness_w3")]
    pub bottom_plate_thickness: ParamRange,
    #[serde(rename = "link_R1")]
    pub link_r1: ParamRange,
    #[serde(rename = "link_R2")]
    pub link_r2: ParamRange,
    pub offset_a: ParamRange,
    pub offset_b: ParamRange,
    pub offset_c: ParamRange,
    #[serde(rename = "youngs_modulus_E")]
    pub youngs_modulus: f64,
    #[serde(rename = "second_moment_I")]
    pub second_moment: f64,
    #[serde(rename = "max_rotation_theta_max")]
    pub max_rotation: f64,
    pub reference_input_torque: f64,
    pub theta_ref: f64,
    #[serde(default)]
    pub branch: Branch,
    #[serde(default)]
    pub objectives: Vec<Objective>,
}

impl DesignRanges {
    fn params(&self) -> [&ParamRange; 11] {
        [
            &self.radius,
            &self.strip_length,
            &self.n_strips,
            &self.strip_width,
            &self.top_plate_thickness,
            &self.bottom_plate_thickness,
            &self.link_r1,
            &self.link_r2,
            &self.offset_a,
            &self.offset_b,
            &self.offset_c,
        ]
    }

    pub fn validate(&self) -> MechResult<()> {
        for p in self.params() {
            if !(p.min.is_finite() && p.max.is_finite() && p.min > 0.0) {
                return Err(MechError::invalid("range bounds must be positive and finite"));
            }
            if p.min > p.max {
                return Err(MechError::invalid(format!("range min {} exceeds max {}", p.min, p.max)));
            }
        }
        for (name, v) in [
            ("youngs_modulus_E", self.youngs_modulus),
            ("second_moment_I", self.second_moment),
            ("max_rotation_theta_max", self.max_rotation),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MechError::invalid(format!("{name} must be positive")));
            }
        }
        if !self.reference_input_torque.is_finite() || !self.theta_ref.is_finite() {
            return Err(MechError::invalid("reference torque and angle must be finite"));
        }
        for o in &self.objectives {
            field_index(&o.field)?;
        }
        Ok(())
    }

    /// Number of grid points: the product of all step counts.
    pub fn grid_size(&self) -> usize {
        self.params().iter().map(|p| p.steps).product()
    }

    fn candidate(&self, index: usize, v: [f64; 11]) -> Candidate {
        let [r, l, n, w1, w2, w3, r1, r2, a, b, c] = v;
        let n_strips = n.round().max(1.0) as u32;
        let tum = TumSpec {
            radius: r,
            strip_length: l,
            n_strips,
            strip_width: w1,
            top_plate_thickness: w2,
            bottom_plate_thickness: w3,
            youngs_modulus: self.youngs_modulus,
            second_moment: self.second_moment,
            max_rotation: self.max_rotation.min(STROKE_CEILING_FRACTION * l / r),
            theta_floor: DEFAULT_THETA_FLOOR,
        };
        let linkage = LinkageSpec {
            offset_a: a,
            offset_b: b,
            offset_c: c,
            link_r1: r1,
            link_r2: r2,
            tum_length: l,
            branch: self.branch,
        };
        Candidate { index, tum, linkage }
    }
}

/// One design point; `index` is its position in the enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub index: usize,
    pub tum: TumSpec,
    pub linkage: LinkageSpec,
}

/// Lexicographic Cartesian grid over the ranges. Any zero step count gives
/// an empty stream.
pub fn enumerate(ranges: &DesignRanges) -> impl Iterator<Item = Candidate> + '_ {
    let params = ranges.params();
    let total = ranges.grid_size();
    (0..total).map(move |index| {
        let mut rest = index;
        let mut values = [0.0; 11];
        for (slot, p) in values.iter_mut().zip(params.iter()).rev() {
            let k = rest % p.steps;
            rest /= p.steps;
            *slot = p.value(k);
        }
        ranges.candidate(index, values)
    })
}

/// `count` candidates drawn uniformly inside the ranges from a seeded stream.
pub fn sample(ranges: &DesignRanges, count: usize, seed: u64) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ranges.params();
    (0..count)
        .map(|index| {
            let mut values = [0.0; 11];
            for (slot, p) in values.iter_mut().zip(params.iter()) {
                *slot = if p.max > p.min { rng.gen_range(p.min..=p.max) } else { p.min };
            }
            ranges.candidate(index, values)
        })
        .collect()
}

/// Feasibility and performance of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub index: usize,
    pub tum: TumSpec,
    pub linkage: LinkageSpec,
    pub constraint_pass: bool,
    pub margin_mm: f64,
    pub stroke_mm: Option<f64>,
    pub finger_range_deg: Option<f64>,
    #[serde(rename = "required_holding_torque_Nmm")]
    pub required_holding_torque: Option<f64>,
    #[serde(rename = "grasp_torque_at_reference_input_Nmm")]
    pub grasp_torque_at_reference_input: Option<f64>,
    /// Set when the candidate cannot be evaluated over its stroke.
    pub feasibility_failure: Option<String>,
}

/// Names accepted in objectives, in report column order.
pub const OBJECTIVE_FIELDS: [&str; 5] = [
    "margin_mm",
    "stroke_mm",
    "finger_range_deg",
    "required_holding_torque_Nmm",
    "grasp_torque_at_reference_input_Nmm",
];

fn field_index(name: &str) -> MechResult<usize> {
    OBJECTIVE_FIELDS
        .iter()
        .position(|f| *f == name)
        .ok_or_else(|| MechError::Config {
            what: format!("unknown report field {name:?}; expected one of {OBJECTIVE_FIELDS:?}"),
        })
}

impl DesignReport {
    /// Numeric field by report column name; `None` for unpopulated fields.
    pub fn field(&self, name: &str) -> MechResult<Option<f64>> {
        Ok(match field_index(name)? {
            0 => Some(self.margin_mm),
            1 => self.stroke_mm,
            2 => self.finger_range_deg,
            3 => self.required_holding_torque,
            _ => self.grasp_torque_at_reference_input,
        })
    }

    pub fn feasible(&self) -> bool {
        self.feasibility_failure.is_none()
    }
}

struct Performance {
    stroke: f64,
    finger_range_deg: f64,
    holding: f64,
    grasp: f64,
}

fn tag(kind: &'static str) -> impl Fn(MechError) -> String {
    move |e| format!("{kind}: {e}")
}

fn performance(c: &Candidate, reference_input_torque: f64, theta_ref: f64) -> Result<Performance, String> {
    c.tum.validate().map_err(tag("tum"))?;
    let stroke = tum::contraction(&c.tum, c.tum.stroke_limit()).map_err(tag("tum"))?;
    let travel = linkage::finger_travel(&c.linkage, stroke).map_err(tag("linkage"))?;
    let (_, holding) = tum::max_holding_torque(&c.tum).map_err(tag("tum"))?;
    let grasp = linkage::grasp_torque(&c.linkage, &c.tum, theta_ref, reference_input_torque)
        .map_err(tag("reference"))?;
    Ok(Performance {
        stroke,
        finger_range_deg: travel.abs().to_degrees(),
        holding,
        grasp,
    })
}

/// Fills every report field by delegating to the model modules. Infeasible
/// candidates produce a report with a failure tag rather than an error.
pub fn evaluate(c: &Candidate, reference_input_torque: f64, theta_ref: f64) -> DesignReport {
    let (constraint_pass, margin_mm) = match tum::check_radius_constraint(&c.tum) {
        Ok(r) => (r.pass, r.margin_mm),
        Err(_) => (false, f64::NAN),
    };
    let perf = performance(c, reference_input_torque, theta_ref);
    let mut report = DesignReport {
        index: c.index,
        tum: c.tum.clone(),
        linkage: c.linkage.clone(),
        constraint_pass,
        margin_mm,
        stroke_mm: None,
        finger_range_deg: None,
        required_holding_torque: None,
        grasp_torque_at_reference_input: None,
        feasibility_failure: None,
    };
    match perf {
        Ok(p) => {
            report.stroke_mm = Some(p.stroke);
            report.finger_range_deg = Some(p.finger_range_deg);
            report.required_holding_torque = Some(p.holding);
            report.grasp_torque_at_reference_input = Some(p.grasp);
        }
        Err(tag) => report.feasibility_failure = Some(tag),
    }
    report
}

/// Evaluates candidates one after another on the calling thread.
pub fn evaluate_all_sequential(
    candidates: &[Candidate],
    reference_input_torque: f64,
    theta_ref: f64,
) -> Vec<DesignReport> {
    candidates
        .iter()
        .map(|c| evaluate(c, reference_input_torque, theta_ref))
        .collect()
}

/// Evaluates candidates on a rayon pool of `jobs` threads (`0` = rayon's
/// default). Output is ordered by candidate index.
#[cfg(feature = "parallel")]
pub fn evaluate_all_parallel(
    candidates: &[Candidate],
    reference_input_torque: f64,
    theta_ref: f64,
    jobs: usize,
) -> MechResult<Vec<DesignReport>> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| MechError::Config { what: format!("thread pool: {e}") })?;
    let mut reports: Vec<DesignReport> = pool.install(|| {
        candidates
            .par_iter()
            .map(|c| evaluate(c, reference_input_torque, theta_ref))
            .collect()
    });
    reports.sort_by_key(|r| r.index);
    Ok(reports)
}

/// Dispatches to the parallel path when built with `parallel` and
/// `jobs != 1`, otherwise runs sequentially.
pub fn evaluate_all(
    candidates: &[Candidate],
    reference_input_torque: f64,
    theta_ref: f64,
    jobs: usize,
) -> MechResult<Vec<DesignReport>> {
    #[cfg(feature = "parallel")]
    if jobs != 1 {
        return evaluate_all_parallel(candidates, reference_input_torque, theta_ref, jobs);
    }
    let _ = jobs;
    Ok(evaluate_all_sequential(candidates, reference_input_torque, theta_ref))
}

/// Evaluates the full grid described by `ranges`.
pub fn run_grid(ranges: &DesignRanges, jobs: usize) -> MechResult<Vec<DesignReport>> {
    ranges.validate()?;
    let candidates: Vec<Candidate> = enumerate(ranges).collect();
    evaluate_all(&candidates, ranges.reference_input_torque, ranges.theta_ref, jobs)
}

/// Non-dominated subset of the reports, in input order.
///
/// Reports missing any objective value are excluded. Equal objective
/// vectors do not dominate each other.
pub fn pareto_front<'a>(
    reports: &'a [DesignReport],
    objectives: &[Objective],
) -> MechResult<Vec<&'a DesignReport>> {
    if objectives.is_empty() {
        return Err(MechError::Config { what: "pareto front needs at least one objective".into() });
    }
    let mut points: Vec<(usize, Vec<f64>)> = Vec::with_capacity(reports.len());
    'reports: for (i, r) in reports.iter().enumerate() {
        let mut v = Vec::with_capacity(objectives.len());
        for o in objectives {
            match r.field(&o.field)? {
                Some(x) if x.is_finite() => v.push(match o.direction {
                    Direction::Maximize => x,
                    Direction::Minimize => -x,
                }),
                _ => continue 'reports,
            }
        }
        points.push((i, v));
    }
    // After a descending lexicographic sort no point can be dominated by a
    // later one, so each point is only compared with the front built so far.
    points.sort_by(|a, b| {
        b.1.iter()
            .zip(&a.1)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let mut front: Vec<(usize, Vec<f64>)> = Vec::new();
    for p in points {
        let dominated = front.iter().any(|f| {
            f.1.iter().zip(&p.1).all(|(x, y)| x >= y) && f.1.iter().zip(&p.1).any(|(x, y)| x > y)
        });
        if !dominated {
            front.push(p);
        }
    }
    let mut idx: Vec<usize> = front.into_iter().map(|(i, _)| i).collect();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| &reports[i]).collect())
}
