//! Crater identification: project catalog craters through the estimated
//! pose, pair detections with them by least squares, and reject pairs whose
//! image translation disagrees with the consensus.

use std::cmp::Ordering;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{CraterCatalog, CraterRecord, DiameterRange};
use crate::detect::DetectedCrater;
use crate::geometry::{footprint_bounds, project_unclipped, CameraModel, CameraPose, GeometryError, MOON_RADIUS_M};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RansacModel {
    Translation,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchParams {
    /// Weight of the squared diameter difference in the pairing cost.
    pub diameter_weight: f64,
    /// Pairs with √cost above this many pixels are dropped.
    pub gate_px: f64,
    pub inlier_tol_px: f64,
    pub min_pairs: usize,
    pub iterations: usize,
    pub model: RansacModel,
    /// Image margin, as a fraction of the image size, for expected craters
    /// and the catalog footprint query.
    pub margin: f64,
    pub min_diameter_m: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            diameter_weight: 1.0,
            gate_px: 0.15 * 256.0,
            inlier_tol_px: 5.0,
            min_pairs: 3,
            iterations: 64,
            model: RansacModel::Translation,
            margin: 0.1,
            min_diameter_m: 5_000.0,
        }
    }
}

/// A catalog crater projected through a pose estimate.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedCrater<'a> {
    pub record: &'a CraterRecord,
    pub u: f64,
    pub v: f64,
    pub diameter_px: f64,
}

pub fn expected_craters<'a>(
    pose: &CameraPose,
    cam: &CameraModel,
    catalog: &'a CraterCatalog,
    params: &MatchParams,
) -> Result<Vec<ExpectedCrater<'a>>, GeometryError> {
    let bounds = footprint_bounds(pose, cam, MOON_RADIUS_M, params.margin)?;
    let diameters = DiameterRange { min_m: params.min_diameter_m, max_m: f64::INFINITY };
    Ok(catalog
        .query_box(&bounds, &diameters)
        .into_iter()
        .filter_map(|record| {
            let (u, v, depth) = project_unclipped(&record.position(), pose, cam)?;
            cam.contains(u, v, params.margin).then(|| ExpectedCrater {
                record,
                u,
                v,
                diameter_px: cam.focal_px * record.diameter_m / depth,
            })
        })
        .collect())
}

/// Detection `detection` paired with expected crater `expected`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub detection: usize,
    pub expected: usize,
    pub cost: f64,
}

pub fn pair_cost(d: &DetectedCrater, e: &ExpectedCrater<'_>, diameter_weight: f64) -> f64 {
    (d.u - e.u).powi(2) + (d.v - e.v).powi(2) + diameter_weight * (d.diameter() - e.diameter_px).powi(2)
}

fn detection_key(a: &DetectedCrater, b: &DetectedCrater) -> Ordering {
    a.u.total_cmp(&b.u)
        .then(a.v.total_cmp(&b.v))
        .then(a.major_axis.total_cmp(&b.major_axis))
        .then(a.minor_axis.total_cmp(&b.minor_axis))
}

/// Least-squares pairing: the one-to-one assignment minimizing the summed
/// pair cost, where leaving a detection unpaired costs `gate²`, so no pair
/// above the gate is ever formed. Equal-cost alternatives go to the lower
/// expected-crater id, and the result does not depend on detection order.
/// Output is ordered by expected-crater id.
pub fn lms_pair(detections: &[DetectedCrater], expected: &[ExpectedCrater<'_>], params: &MatchParams) -> Vec<CandidatePair> {
    let (n, m) = (detections.len(), expected.len());
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let gate2 = params.gate_px * params.gate_px;
    let blocked = 2.0 * gate2 + 1.0;
    let mut det_order: Vec<usize> = (0..n).collect();
    det_order.sort_by(|&a, &b| detection_key(&detections[a], &detections[b]));
    let mut exp_order: Vec<usize> = (0..m).collect();
    exp_order.sort_by(|&a, &b| expected[a].record.id.cmp(&expected[b].record.id));

    let pair = |r: usize, c: usize| pair_cost(&detections[det_order[r]], &expected[exp_order[c]], params.diameter_weight);
    // columns: expected craters, then one "unpaired" slot per detection
    let assignment = min_cost_assignment(n, m + n, |r, c| {
        if c >= m {
            return gate2;
        }
        let k = pair(r, c);
        if k.is_finite() && k <= gate2 {
            k
        } else {
            blocked
        }
    });
    let mut out: Vec<CandidatePair> = assignment
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c < m)
        .filter_map(|(r, c)| {
            let cost = pair(r, c);
            (cost <= gate2).then_some(CandidatePair { detection: det_order[r], expected: exp_order[c], cost })
        })
        .collect();
    out.sort_by(|a, b| expected[a.expected].record.id.cmp(&expected[b.expected].record.id));
    out
}

/// Hungarian method for an `rows × cols` cost matrix with `rows ≤ cols`;
/// returns the column assigned to each row. Among equal reductions the
/// lowest column index wins.
fn min_cost_assignment(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(rows <= cols);
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    // row matched to each column, 1-based; 0 means free
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

/// Correspondence fed to RANSAC: detected center and expected center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub detected: Vector2<f64>,
    pub expected: Vector2<f64>,
}

impl Correspondence {
    /// Image translation, expected minus detected.
    pub fn translation(&self) -> Vector2<f64> {
        self.expected - self.detected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    pub inliers: Vec<usize>,
    pub outliers: Vec<usize>,
    /// Set when too few pairs were available to test consistency.
    pub low_confidence: bool,
    pub model: Option<ConsensusModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConsensusModel {
    Translation(Vector2<f64>),
    /// expected ≈ A · detected + b
    Affine { a: nalgebra::Matrix2<f64>, b: Vector2<f64> },
}

impl ConsensusModel {
    fn residual(&self, c: &Correspondence) -> f64 {
        match self {
            ConsensusModel::Translation(t) => (c.translation() - t).norm(),
            ConsensusModel::Affine { a, b } => (a * c.detected + b - c.expected).norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub inlier_tol_px: f64,
    pub min_pairs: usize,
    pub iterations: usize,
    pub model: RansacModel,
}

impl From<&MatchParams> for RansacParams {
    fn from(p: &MatchParams) -> Self {
        Self { inlier_tol_px: p.inlier_tol_px, min_pairs: p.min_pairs, iterations: p.iterations, model: p.model }
    }
}

fn mean_translation(pairs: &[Correspondence], idx: &[usize]) -> Vector2<f64> {
    idx.iter().map(|&i| pairs[i].translation()).sum::<Vector2<f64>>() / idx.len() as f64
}

fn fit_affine(pairs: &[Correspondence], idx: &[usize]) -> Option<ConsensusModel> {
    // Normal equations for each output coordinate over [x, y, 1].
    let mut ata = Matrix3::zeros();
    let mut atu = Vector3::zeros();
    let mut atv = Vector3::zeros();
    for &i in idx {
        let c = &pairs[i];
        let row = Vector3::new(c.detected.x, c.detected.y, 1.0);
        ata += row * row.transpose();
        atu += row * c.expected.x;
        atv += row * c.expected.y;
    }
    let inv = ata.try_inverse()?;
    let pu = inv * atu;
    let pv = inv * atv;
    let model = ConsensusModel::Affine {
        a: nalgebra::Matrix2::new(pu[0], pu[1], pv[0], pv[1]),
        b: Vector2::new(pu[2], pv[2]),
    };
    let finite = match &model {
        ConsensusModel::Affine { a, b } => a.iter().chain(b.iter()).all(|x| x.is_finite()),
        _ => true,
    };
    finite.then_some(model)
}

fn consensus(pairs: &[Correspondence], model: &ConsensusModel, tol: f64) -> Vec<usize> {
    (0..pairs.len()).filter(|&i| model.residual(&pairs[i]) <= tol).collect()
}

fn refine(pairs: &[Correspondence], mut inliers: Vec<usize>, kind: RansacModel, tol: f64) -> (Vec<usize>, Option<ConsensusModel>) {
    let mut model = None;
    for _ in 0..4 {
        let m = match kind {
            RansacModel::Translation => Some(ConsensusModel::Translation(mean_translation(pairs, &inliers))),
            RansacModel::Affine => fit_affine(pairs, &inliers),
        };
        let Some(m) = m else { break };
        let next = consensus(pairs, &m, tol);
        if next.is_empty() {
            break;
        }
        model = Some(m);
        if next == inliers {
            break;
        }
        inliers = next;
    }
    (inliers, model)
}

/// Consensus over pair translations. The affine model is only used with at
/// least six pairs; otherwise the translation model applies. When there are
/// fewer pairs than `min_pairs` everything is returned as an inlier with
/// `low_confidence` set.
pub fn ransac_filter<R: Rng + ?Sized>(pairs: &[Correspondence], params: &RansacParams, rng: &mut R) -> RansacOutcome {
    let n = pairs.len();
    if n < params.min_pairs.max(1) {
        return RansacOutcome { inliers: (0..n).collect(), outliers: Vec::new(), low_confidence: true, model: None };
    }
    let kind = if params.model == RansacModel::Affine && n >= 6 { RansacModel::Affine } else { RansacModel::Translation };
    let sample_size = match kind {
        RansacModel::Translation => 1,
        RansacModel::Affine => 3,
    };
    let iterations = params.iterations.max(1);

    let mut best: Vec<usize> = Vec::new();
    let try_sample = |sample: &[usize], best: &mut Vec<usize>| {
        let model = match kind {
            RansacModel::Translation => Some(ConsensusModel::Translation(pairs[sample[0]].translation())),
            RansacModel::Affine => fit_affine(pairs, sample),
        };
        if let Some(m) = model {
            let c = consensus(pairs, &m, params.inlier_tol_px);
            if c.len() > best.len() {
                *best = c;
            }
        }
    };
    if sample_size == 1 && iterations >= n {
        // every hypothesis fits in the budget: enumerate them
        for i in 0..n {
            try_sample(&[i], &mut best);
        }
    } else {
        for _ in 0..iterations {
            let sample = rand::seq::index::sample(rng, n, sample_size).into_vec();
            try_sample(&sample, &mut best);
        }
    }
    if best.is_empty() {
        best = vec![0];
    }
    let (inliers, model) = refine(pairs, best, kind, params.inlier_tol_px);
    let outliers = (0..n).filter(|i| !inliers.contains(i)).collect();
    RansacOutcome { inliers, outliers, low_confidence: false, model }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CraterMatch {
    pub detection: DetectedCrater,
    pub record: CraterRecord,
    /// Expected center minus detected center, pixels.
    pub translation: Vector2<f64>,
    pub cost: f64,
    /// Index of the detection in the input list.
    pub detection_index: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifyDiagnostics {
    pub detections: usize,
    pub expected: usize,
    pub candidates: usize,
    /// Detections left without an admissible pair.
    pub gated: usize,
    pub outliers: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub matches: Vec<CraterMatch>,
    pub diagnostics: IdentifyDiagnostics,
}

/// expected craters → least-squares pairing → RANSAC.
pub fn identify<R: Rng + ?Sized>(
    detections: &[DetectedCrater],
    pose_estimate: &CameraPose,
    cam: &CameraModel,
    catalog: &CraterCatalog,
    params: &MatchParams,
    rng: &mut R,
) -> Result<Identification, GeometryError> {
    let mut diagnostics = IdentifyDiagnostics { detections: detections.len(), ..Default::default() };
    if detections.is_empty() {
        return Ok(Identification { matches: Vec::new(), diagnostics: IdentifyDiagnostics::default() });
    }
    let expected = expected_craters(pose_estimate, cam, catalog, params)?;
    diagnostics.expected = expected.len();
    let pairs = lms_pair(detections, &expected, params);
    diagnostics.candidates = pairs.len();
    diagnostics.gated = detections.len() - pairs.len();
    let corr: Vec<Correspondence> = pairs
        .iter()
        .map(|p| {
            let d = &detections[p.detection];
            let e = &expected[p.expected];
            Correspondence { detected: Vector2::new(d.u, d.v), expected: Vector2::new(e.u, e.v) }
        })
        .collect();
    let outcome = ransac_filter(&corr, &RansacParams::from(params), rng);
    diagnostics.outliers = outcome.outliers.len();
    diagnostics.low_confidence = outcome.low_confidence;
    let matches = outcome
        .inliers
        .iter()
        .map(|&k| {
            let p = &pairs[k];
            CraterMatch {
                detection: detections[p.detection],
                record: expected[p.expected].record.clone(),
                translation: corr[k].translation(),
                cost: p.cost,
                detection_index: p.detection,
            }
        })
        .collect();
    Ok(Identification { matches, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CatalogSource;
    use crate::geometry::{geodetic_to_lclf, nadir_pose, Geodetic, Lclf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(id: &str) -> CraterRecord {
        CraterRecord { id: id.into(), center: Geodetic::surface(0.0, 0.0).unwrap(), diameter_m: 6000.0, source: CatalogSource::Synthetic }
    }

    #[test]
    fn expected_empty_and_nadir() {
        let cam = CameraModel::default();
        let pose = nadir_pose(&Lclf::new(MOON_RADIUS_M + 100_000.0, 0.0, 0.0), &Vector3::z()).unwrap();
        let params = MatchParams::default();
        assert!(expected_craters(&pose, &cam, &CraterCatalog::empty(), &params).unwrap().is_empty());
        let cat = CraterCatalog::new(vec![CraterRecord { diameter_m: 10_000.0, ..record("N") }]).unwrap();
        let e = expected_craters(&pose, &cam, &cat, &params).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0].u - cam.cu).abs() < 1e-9 && (e[0].v - cam.cv).abs() < 1e-9);
        // similar triangles: D·f/Z at 100 km range
        assert!((e[0].diameter_px - cam.focal_px * 10_000.0 / 100_000.0).abs() < 1e-9);
    }

    #[test]
    fn pixel_diameter_off_nadir() {
        let cam = CameraModel::default();
        let pos = Lclf::new(MOON_RADIUS_M + 100_000.0, 0.0, 0.0);
        let pose = nadir_pose(&pos, &Vector3::z()).unwrap();
        let g = Geodetic::surface(0.004, -0.006).unwrap();
        let cat = CraterCatalog::new(vec![CraterRecord { center: g, diameter_m: 12_000.0, ..record("X") }]).unwrap();
        let e = expected_craters(&pose, &cam, &cat, &MatchParams::default()).unwrap();
        let depth = pose.to_camera(&geodetic_to_lclf(&g)).z;
        assert!((e[0].diameter_px - cam.focal_px * 12_000.0 / depth).abs() < 1e-9);
    }

    fn exp<'a>(r: &'a CraterRecord, u: f64, v: f64, d: f64) -> ExpectedCrater<'a> {
        ExpectedCrater { record: r, u, v, diameter_px: d }
    }

    #[test]
    fn identity_pairing() {
        let recs: Vec<_> = ["A", "B", "C"].iter().map(|s| record(s)).collect();
        let ex: Vec<_> = recs.iter().enumerate().map(|(k, r)| exp(r, 30.0 * k as f64 + 20.0, 50.0, 15.0)).collect();
        let dets: Vec<_> = ex.iter().rev().map(|e| DetectedCrater::circle(e.u, e.v, e.diameter_px)).collect();
        let pairs = lms_pair(&dets, &ex, &MatchParams::default());
        assert_eq!(pairs.len(), 3);
        for p in &pairs {
            assert_eq!(p.cost, 0.0);
            assert_eq!(p.detection, 2 - p.expected);
        }
    }

    #[test]
    fn tie_goes_to_lower_id() {
        let (a, b) = (record("A"), record("B"));
        let ex = [exp(&b, 60.0, 50.0, 15.0), exp(&a, 40.0, 50.0, 15.0)];
        let dets = [DetectedCrater::circle(50.0, 50.0, 15.0)];
        let pairs = lms_pair(&dets, &ex, &MatchParams::default());
        assert_eq!(pairs.len(), 1);
        assert_eq!(ex[pairs[0].expected].record.id, "A");
    }

    #[test]
    fn summed_cost_beats_greedy() {
        // greedy would take p–A (1) then q–B (132.25)
        let (a, b) = (record("A"), record("B"));
        let ex = [exp(&a, 100.0, 50.0, 15.0), exp(&b, 110.0, 50.0, 15.0)];
        let dets = [DetectedCrater::circle(101.0, 50.0, 15.0), DetectedCrater::circle(98.5, 50.0, 15.0)];
        let pairs = lms_pair(&dets, &ex, &MatchParams::default());
        assert_eq!(pairs.len(), 2);
        assert_eq!((pairs[0].expected, pairs[0].detection), (0, 1));
        assert_eq!((pairs[1].expected, pairs[1].detection), (1, 0));
        assert!((pairs.iter().map(|p| p.cost).sum::<f64>() - 83.25).abs() < 1e-9);
    }

    #[test]
    fn pairing_ignores_detection_order() {
        let recs: Vec<_> = (0..5).map(|k| record(&format!("R{k}"))).collect();
        let ex: Vec<_> = recs.iter().enumerate().map(|(k, r)| exp(r, 20.0 + 9.0 * k as f64, 40.0, 12.0)).collect();
        let dets: Vec<_> = (0..6).map(|k| DetectedCrater::circle(22.0 + 8.0 * k as f64, 43.0, 12.0 + k as f64)).collect();
        let key = |ps: Vec<CandidatePair>, d: &[DetectedCrater]| -> Vec<(usize, (u64, u64))> {
            ps.iter().map(|p| (p.expected, (d[p.detection].u.to_bits(), d[p.detection].v.to_bits()))).collect()
        };
        let forward = key(lms_pair(&dets, &ex, &MatchParams::default()), &dets);
        let rev: Vec<_> = dets.iter().rev().copied().collect();
        assert_eq!(forward, key(lms_pair(&rev, &ex, &MatchParams::default()), &rev));
    }

    #[test]
    fn gate_drops_far_pairs() {
        let a = record("A");
        let ex = [exp(&a, 10.0, 10.0, 15.0)];
        let dets = [DetectedCrater::circle(200.0, 200.0, 15.0)];
        assert!(lms_pair(&dets, &ex, &MatchParams::default()).is_empty());
    }

    fn corr(t: (f64, f64), at: (f64, f64)) -> Correspondence {
        Correspondence { detected: Vector2::new(at.0, at.1), expected: Vector2::new(at.0 + t.0, at.1 + t.1) }
    }

    #[test]
    fn consistent_translations_all_inliers() {
        let pairs: Vec<_> = (0..8).map(|k| corr((2.0, -1.0), (10.0 * k as f64, 5.0 * k as f64))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = ransac_filter(&pairs, &RansacParams::from(&MatchParams::default()), &mut rng);
        assert_eq!(out.inliers.len(), 8);
        assert!(!out.low_confidence);
    }

    #[test]
    fn single_offset_pair_is_sole_outlier() {
        let mut pairs: Vec<_> = (0..7).map(|k| corr((1.0 + 0.3 * (k % 3) as f64, -0.5), (20.0 * k as f64, 30.0))).collect();
        pairs.push(corr((51.0, -0.5), (100.0, 100.0)));
        // brute-force consensus oracle: count agreement for every pair as hypothesis
        let counts: Vec<usize> = pairs
            .iter()
            .map(|h| pairs.iter().filter(|p| (p.translation() - h.translation()).norm() <= 5.0).count())
            .collect();
        let best = *counts.iter().max().unwrap();
        assert_eq!(best, 7);
        assert_eq!(counts[7], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = ransac_filter(&pairs, &RansacParams::from(&MatchParams::default()), &mut rng);
        assert_eq!(out.outliers, vec![7]);
    }

    #[test]
    fn too_few_pairs_low_confidence() {
        let pairs = [corr((0.0, 0.0), (0.0, 0.0)), corr((90.0, 0.0), (5.0, 5.0))];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = ransac_filter(&pairs, &RansacParams::from(&MatchParams::default()), &mut rng);
        assert_eq!(out.inliers, vec![0, 1]);
        assert!(out.low_confidence);
    }

    #[test]
    fn affine_model_rejects_outlier() {
        let a = nalgebra::Matrix2::new(1.01, 0.02, -0.01, 0.99);
        let b = Vector2::new(3.0, -2.0);
        let mut pairs: Vec<_> = (0..9)
            .map(|k| {
                let d = Vector2::new(25.0 * (k % 3) as f64 + 30.0, 40.0 * (k / 3) as f64 + 20.0);
                Correspondence { detected: d, expected: a * d + b }
            })
            .collect();
        pairs[4].expected += Vector2::new(0.0, 30.0);
        let params = RansacParams { model: RansacModel::Affine, iterations: 200, ..RansacParams::from(&MatchParams::default()) };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = ransac_filter(&pairs, &params, &mut rng);
        assert_eq!(out.outliers, vec![4]);
        assert!(matches!(out.model, Some(ConsensusModel::Affine { .. })));
    }

    #[test]
    fn identify_no_detections() {
        let cam = CameraModel::default();
        let pose = nadir_pose(&Lclf::new(MOON_RADIUS_M + 100_000.0, 0.0, 0.0), &Vector3::z()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let id = identify(&[], &pose, &cam, &CraterCatalog::empty(), &MatchParams::default(), &mut rng).unwrap();
        assert!(id.matches.is_empty());
        assert_eq!(id.diagnostics, IdentifyDiagnostics::default());
    }
}
