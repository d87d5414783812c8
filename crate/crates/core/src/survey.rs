//! Ground-truth marker maps from surveyed tag outlines.
//!
//! Each square tag is surveyed at five points: the corner and two points
//! along each of the two edges that meet there. Aligning the canonical
//! template to an observation gives the tag's pose in the instrument frame;
//! two tags seen from one station give their relative pose, and chaining
//! those relative poses places every marker in the first marker's frame.

use nalgebra::{Matrix3, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::types::{Mat3, Se3Transform, Vec3};

/// Points per surveyed tag.
pub const TAG_POINTS: usize = 5;

/// Default tag side length, m.
pub const DEFAULT_TAG_SIDE: f64 = 0.28;

/// Rigid transform with its fit quality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alignment {
    pub transform: Se3Transform,
    /// Root-mean-square distance between transformed source and target.
    pub rms: f64,
}

/// Least-squares rigid transform (no scale) taking `source[i]` onto
/// `target[i]`. A reflection is never returned.
pub fn umeyama_align(source: &[Vec3], target: &[Vec3]) -> Result<Alignment> {
    if source.len() != target.len() {
        return invalid(format!(
            "point counts differ: {} vs {}",
            source.len(),
            target.len()
        ));
    }
    if source.len() < 3 {
        return invalid(format!(
            "need at least 3 correspondences, got {}",
            source.len()
        ));
    }
    if source
        .iter()
        .chain(target)
        .any(|p| !p.iter().all(|c| c.is_finite()))
    {
        return invalid("points must be finite");
    }
    let n = source.len() as f64;
    let mu_s = source.iter().sum::<Vec3>() / n;
    let mu_t = target.iter().sum::<Vec3>() / n;

    let spread = source
        .iter()
        .map(|s| (s - mu_s) * (s - mu_s).transpose())
        .sum::<Mat3>();
    let sv = spread.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sv.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    if ev[2] <= 0.0 || ev[1] <= 1e-12 * ev[2] {
        return Err(Error::RankDeficient);
    }

    let cross = source
        .iter()
        .zip(target)
        .map(|(s, t)| (t - mu_t) * (s - mu_s).transpose())
        .sum::<Mat3>()
        / n;
    let svd = SVD::new(cross, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD did not converge".into())),
    };
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = u * d * v_t;
    let t = mu_t - r * mu_s;
    let transform = Se3Transform::new(r, t)?;
    let rms = (source
        .iter()
        .zip(target)
        .map(|(s, q)| (r * s + t - q).norm_squared())
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Alignment { transform, rms })
}

/// Canonical tag points in the tag frame: corner at the origin, edges along
/// +x and +y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagTemplate {
    pub side: f64,
}

impl Default for TagTemplate {
    fn default() -> Self {
        Self {
            side: DEFAULT_TAG_SIDE,
        }
    }
}

impl TagTemplate {
    /// Corner, then 1/3 and 2/3 along the x edge, then 1/3 and 2/3 along y.
    pub fn points(&self) -> [Vec3; TAG_POINTS] {
        let s = self.side;
        [
            Vec3::zeros(),
            Vec3::new(s / 3.0, 0.0, 0.0),
            Vec3::new(2.0 * s / 3.0, 0.0, 0.0),
            Vec3::new(0.0, s / 3.0, 0.0),
            Vec3::new(0.0, 2.0 * s / 3.0, 0.0),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerObservation {
    pub marker_id: u32,
    pub station_id: u32,
    /// Surveyed points in the instrument frame, in template order.
    pub points: Vec<Vec3>,
}

impl MarkerObservation {
    fn validate(&self) -> Result<()> {
        if self.points.len() != TAG_POINTS {
            return invalid(format!(
                "marker {} has {} points, expected {TAG_POINTS}",
                self.marker_id,
                self.points.len()
            ));
        }
        Ok(())
    }

    /// Pose of the tag in the instrument frame (tag → instrument).
    pub fn tag_pose(&self, template: &TagTemplate) -> Result<Alignment> {
        self.validate()?;
        umeyama_align(&template.points(), &self.points)
    }
}

/// Relative pose mapping tag-`i` coordinates into tag-`next` coordinates.
pub fn frame_to_frame(
    obs_i: &MarkerObservation,
    obs_next: &MarkerObservation,
    template: &TagTemplate,
) -> Result<Se3Transform> {
    if obs_i.station_id != obs_next.station_id {
        return invalid(format!(
            "observations come from different stations ({} and {})",
            obs_i.station_id, obs_next.station_id
        ));
    }
    let instrument_from_i = obs_i.tag_pose(template)?.transform;
    let instrument_from_next = obs_next.tag_pose(template)?.transform;
    Ok(instrument_from_next.inverse() * instrument_from_i)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub id: u32,
    pub pos: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerMap {
    pub markers: Vec<Marker>,
    #[serde(rename = "loop_closure_m")]
    pub loop_closure_error: Option<f64>,
    #[serde(rename = "path_length_m")]
    pub path_length: f64,
}

impl MarkerMap {
    /// Map with consecutive ids from zero and no closure estimate.
    pub fn from_positions(positions: &[Vec3]) -> Self {
        let markers: Vec<Marker> = positions
            .iter()
            .enumerate()
            .map(|(i, p)| Marker {
                id: i as u32,
                pos: *p,
            })
            .collect();
        let path_length = positions.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        Self {
            markers,
            loop_closure_error: None,
            path_length,
        }
    }

    pub fn position(&self, id: u32) -> Option<Vec3> {
        self.markers.iter().find(|m| m.id == id).map(|m| m.pos)
    }

    /// Marker with the largest cumulative surveyed path from the first.
    pub fn furthest(&self) -> Option<&Marker> {
        let mut best = self.markers.first()?;
        let mut best_dist = 0.0;
        let mut dist = 0.0;
        for w in self.markers.windows(2) {
            dist += (w[1].pos - w[0].pos).norm();
            if dist > best_dist {
                best_dist = dist;
                best = &w[1];
            }
        }
        Some(best)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let map: MarkerMap = serde_json::from_str(s)?;
        if map.markers.is_empty() {
            return invalid("marker map is empty");
        }
        Ok(map)
    }
}

/// Chains `forward[i] = T_{i+1,i}` into marker positions in the frame of
/// marker 0. `reverse`, if given, is the chain surveyed from the far end
/// back: `reverse[0] = T_{N−1,N}`, …, `reverse[N−1] = T_{0,1}`.
pub fn build_map(
    forward: &[Se3Transform],
    reverse: Option<&[Se3Transform]>,
    ids: Option<&[u32]>,
) -> Result<MarkerMap> {
    if forward.is_empty() {
        return invalid("need at least one frame-to-frame transform");
    }
    let n = forward.len() + 1;
    if let Some(ids) = ids {
        if ids.len() != n {
            return invalid(format!("{} ids for {n} markers", ids.len()));
        }
    }
    // pose of marker k in the frame of marker 0
    let mut pose = Se3Transform::identity();
    let mut positions = vec![Vec3::zeros()];
    for t in forward {
        pose = pose * t.inverse();
        positions.push(*pose.translation());
    }
    let mut map = MarkerMap::from_positions(&positions);
    if let Some(ids) = ids {
        for (m, &id) in map.markers.iter_mut().zip(ids) {
            m.id = id;
        }
    }
    if let Some(rev) = reverse {
        if rev.len() != forward.len() {
            return invalid(format!(
                "reverse chain has {} transforms, forward has {}",
                rev.len(),
                forward.len()
            ));
        }
        let far_from_reverse = rev
            .iter()
            .rev()
            .fold(Se3Transform::identity(), |acc, t| acc * *t);
        map.loop_closure_error = Some((positions[n - 1] - far_from_reverse.translation()).norm());
    }
    Ok(map)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyObservation {
    pub marker_id: u32,
    pub points: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyStation {
    pub station_id: u32,
    pub observations: Vec<SurveyObservation>,
}

/// Survey file: each station sights two adjacent markers. Listing the lower
/// id first makes a forward step; listing the higher id first makes a
/// reverse step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurveyInput {
    pub stations: Vec<SurveyStation>,
}

impl SurveyInput {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn observation(station: &SurveyStation, obs: &SurveyObservation) -> MarkerObservation {
    MarkerObservation {
        marker_id: obs.marker_id,
        station_id: station.station_id,
        points: obs
            .points
            .iter()
            .map(|p| Vec3::new(p[0], p[1], p[2]))
            .collect(),
    }
}

/// Builds the marker map from a survey file.
pub fn map_from_survey(input: &SurveyInput, template: &TagTemplate) -> Result<MarkerMap> {
    let mut forward: Vec<(u32, u32, Se3Transform)> = Vec::new();
    let mut reverse: Vec<(u32, u32, Se3Transform)> = Vec::new();
    for st in &input.stations {
        let [a, b] = st.observations.as_slice() else {
            return invalid(format!(
                "station {} must sight exactly two markers",
                st.station_id
            ));
        };
        let t = frame_to_frame(&observation(st, a), &observation(st, b), template)?;
        match b.marker_id.checked_sub(a.marker_id) {
            Some(1) => forward.push((a.marker_id, b.marker_id, t)),
            None if a.marker_id - b.marker_id == 1 => reverse.push((a.marker_id, b.marker_id, t)),
            _ => {
                return invalid(format!(
                    "station {} sights non-adjacent markers {} and {}",
                    st.station_id, a.marker_id, b.marker_id
                ))
            }
        }
    }
    forward.sort_by_key(|f| f.0);
    if forward.is_empty() {
        return invalid("survey has no forward steps");
    }
    if forward.windows(2).any(|w| w[1].0 != w[0].1) {
        return invalid("forward steps do not form a single chain");
    }
    let ids: Vec<u32> = std::iter::once(forward[0].0)
        .chain(forward.iter().map(|f| f.1))
        .collect();
    let chain: Vec<Se3Transform> = forward.iter().map(|f| f.2).collect();

    // reverse steps ordered from the far end back to the first marker
    reverse.sort_by_key(|r| std::cmp::Reverse(r.0));
    let reverse_chain: Option<Vec<Se3Transform>> = if reverse.is_empty() {
        None
    } else {
        let covers = reverse.len() == chain.len()
            && reverse.first().map(|r| r.0) == ids.last().copied()
            && reverse.windows(2).all(|w| w[1].0 == w[0].1);
        if !covers {
            return invalid("reverse steps must cover the whole forward chain");
        }
        Some(reverse.iter().map(|r| r.2).collect())
    };
    build_map(&chain, reverse_chain.as_deref(), Some(&ids))
}

/// Simulated survey of tags at the given poses (tag → navigation frame).
/// One station per adjacent pair in each direction, at a random pose near
/// the pair, with white point noise.
pub fn synthetic_survey(
    tag_poses: &[Se3Transform],
    template: &TagTemplate,
    noise_std: f64,
    with_reverse: bool,
    seed: u64,
) -> Result<SurveyInput> {
    if tag_poses.len() < 2 {
        return invalid("need at least two tags");
    }
    if noise_std.is_nan() || noise_std < 0.0 {
        return invalid("noise must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let pts = template.points();
    let mut stations = Vec::new();
    let mut sight = |from: usize, to: usize, normal: &mut dyn FnMut() -> f64| -> Result<()> {
        let mid = (tag_poses[from].translation() + tag_poses[to].translation()) / 2.0;
        let rot = crate::types::Quaternion::from_rotation_vector(&Vec3::new(
            0.05 * normal(),
            0.05 * normal(),
            3.0 * normal(),
        ));
        let offset = Vec3::new(normal(), normal(), 1.5 + 0.1 * normal());
        let nav_from_instrument = Se3Transform::from_quaternion(&rot, mid + offset)?;
        let instrument_from_nav = nav_from_instrument.inverse();
        let observations = [from, to]
            .iter()
            .map(|&k| SurveyObservation {
                marker_id: k as u32,
                points: pts
                    .iter()
                    .map(|p| {
                        let q = instrument_from_nav.apply(&tag_poses[k].apply(p))
                            + Vec3::new(normal(), normal(), normal()) * noise_std;
                        [q.x, q.y, q.z]
                    })
                    .collect(),
            })
            .collect();
        stations.push(SurveyStation {
            station_id: stations.len() as u32,
            observations,
        });
        Ok(())
    };
    for i in 0..tag_poses.len() - 1 {
        sight(i, i + 1, &mut normal)?;
    }
    if with_reverse {
        for i in (1..tag_poses.len()).rev() {
            sight(i, i - 1, &mut normal)?;
        }
    }
    Ok(SurveyInput { stations })
}
