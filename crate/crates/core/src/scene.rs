//! Scenario configuration and deterministic scene construction.
//!
//! A [`ScenarioConfig`] fully describes one simulated room: geometry and
//! surface reflectivities, ceiling-mounted access points, wall-mounted
//! mirror arrays, the angle-diversity receiver, user placement, noise, and
//! solver options. Randomized pieces (mirror poses, user positions) are
//! pure functions of an explicit seed.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::float::Real;
use crate::geometry::{BranchOrientation, MirrorPose, Vec3};
use crate::link::NoiseModel;

/// Configuration or validation failure, with the offending field path.
#[derive(Debug)]
pub enum ScenarioError {
    /// The document could not be parsed at all.
    Parse(serde_json::Error),
    /// A parsed value violates a scenario invariant.
    Invalid { field: String, message: String },
}

impl ScenarioError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(e) => write!(f, "scenario parse error: {e}"),
            Self::Invalid { field, message } => write!(f, "invalid scenario: {field}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Self::Parse(e) => Some(e),
            Self::Invalid { .. } => None,
        }
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(e)
    }
}

/// Diffuse reflectivity per surface role.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceReflectivity<F> {
    pub walls: F,
    pub floor: F,
    pub ceiling: F,
}

/// Rectangular room, one corner at the origin, `z` up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Room<F> {
    pub length_m: F,
    pub width_m: F,
    pub height_m: F,
    pub reflectivity: SurfaceReflectivity<F>,
}

impl<F: Real> Room<F> {
    /// True when `p` lies inside the room volume, boundary inclusive.
    pub fn contains(&self, p: Vec3<F>) -> bool {
        p.x >= F::zero()
            && p.x <= self.length_m
            && p.y >= F::zero()
            && p.y <= self.width_m
            && p.z >= F::zero()
            && p.z <= self.height_m
    }
}

/// One ceiling-mounted LED access point, modeled as a point Lambertian
/// source of total optical power `transmit_power_w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Real")]
pub struct ApConfig<F> {
    pub position_m: Vec3<F>,
    pub transmit_power_w: F,
    pub half_power_semiangle_deg: F,
    #[serde(default = "default_ap_normal")]
    pub normal: Vec3<F>,
}

/// Angle-diversity receiver: several narrow-FoV photodiode branches
/// sharing one detector position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Real")]
pub struct AdrConfig<F> {
    pub branches: Vec<BranchOrientation<F>>,
    pub pd_area_m2: F,
    pub responsivity_a_per_w: F,
    #[serde(default = "default_mount_height")]
    pub mount_height_m: F,
}

/// Vertical wall of the room, named by the plan-view coordinate it pins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wall {
    XMin,
    XMax,
    YMin,
    YMax,
}

/// In-wall coordinate frame: `origin + u_dir*u + v_dir*v` spans the wall,
/// `v` is height above the floor, `normal` points into the room.
#[derive(Clone, Copy, Debug)]
pub struct WallFrame<F> {
    pub origin: Vec3<F>,
    pub u_dir: Vec3<F>,
    pub v_dir: Vec3<F>,
    pub normal: Vec3<F>,
    pub u_len: F,
    pub v_len: F,
}

impl Wall {
    pub fn frame<F: Real>(self, room: &Room<F>) -> WallFrame<F> {
        let (l, w, h) = (room.length_m, room.width_m, room.height_m);
        match self {
            Wall::XMin => WallFrame {
                origin: Vec3::zero(),
                u_dir: Vec3::unit_y(),
                v_dir: Vec3::unit_z(),
                normal: Vec3::unit_x(),
                u_len: w,
                v_len: h,
            },
            Wall::XMax => WallFrame {
                origin: Vec3::new(l, F::zero(), F::zero()),
                u_dir: Vec3::unit_y(),
                v_dir: Vec3::unit_z(),
                normal: -Vec3::unit_x(),
                u_len: w,
                v_len: h,
            },
            Wall::YMin => WallFrame {
                origin: Vec3::zero(),
                u_dir: Vec3::unit_x(),
                v_dir: Vec3::unit_z(),
                normal: Vec3::unit_y(),
                u_len: l,
                v_len: h,
            },
            Wall::YMax => WallFrame {
                origin: Vec3::new(F::zero(), w, F::zero()),
                u_dir: Vec3::unit_x(),
                v_dir: Vec3::unit_z(),
                normal: -Vec3::unit_y(),
                u_len: l,
                v_len: h,
            },
        }
    }

    pub fn face(self) -> Face {
        match self {
            Wall::XMin => Face::WallXMin,
            Wall::XMax => Face::WallXMax,
            Wall::YMin => Face::WallYMin,
            Wall::YMax => Face::WallYMax,
        }
    }
}

/// Roll/yaw pair for one mirror, for explicitly posed arrays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseAngles<F> {
    pub roll_deg: F,
    pub yaw_deg: F,
}

/// Planar grid of identical flat mirrors on one wall.
///
/// The grid is `rows x cols` with flush element tiling, centered at
/// `(center_u_m, center_v_m)` in the wall frame (`u` along the wall,
/// `v` height above the floor). Mirror orientations come either from
/// `poses` (one entry per mirror, row-major from the bottom-left) or are
/// drawn uniformly from `rotation_range_deg` using `rng_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Real")]
pub struct MirrorArrayConfig<F> {
    pub wall: Wall,
    pub center_u_m: F,
    pub center_v_m: F,
    pub rows: usize,
    pub cols: usize,
    pub element_width_m: F,
    pub element_height_m: F,
    pub reflectivity: F,
    #[serde(default)]
    pub poses: Option<Vec<PoseAngles<F>>>,
    #[serde(default = "default_rotation_range")]
    pub rotation_range_deg: [F; 2],
    #[serde(default)]
    pub rng_seed: u64,
}

/// Randomized user placement parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomUsers {
    pub count: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

/// User positions: an explicit list, or a count placed uniformly at
/// random on the receiving plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UserPlacement<F> {
    Explicit(Vec<Vec3<F>>),
    Random(RandomUsers),
}

/// Discretization element sizes for the diffuse reflection engine. The
/// second-order grid is coarser because its cost is quadratic in the
/// element count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffuseGrid<F> {
    pub first_order_element_m: F,
    pub second_order_element_m: F,
}

/// Mirror-assignment strategy for the solver's second stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorStage {
    /// Exhaustive when `(K+1)^M` is within the search guard, else greedy.
    #[default]
    Auto,
    Greedy,
    Exhaustive,
}

/// Solver tuning knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Real")]
pub struct SolverOptions<F> {
    #[serde(default)]
    pub mirror_stage: MirrorStage,
    /// Additive floor inside `ln(rate + eps)` so fully blocked users keep
    /// the utility finite. Reported rates are not modified.
    #[serde(default = "default_utility_epsilon")]
    pub utility_epsilon: F,
}

impl<F: Real> Default for SolverOptions<F> {
    fn default() -> Self {
        Self {
            mirror_stage: MirrorStage::Auto,
            utility_epsilon: default_utility_epsilon(),
        }
    }
}

/// Complete description of one simulated deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "F: Real")]
pub struct ScenarioConfig<F> {
    pub room: Room<F>,
    pub aps: Vec<ApConfig<F>>,
    pub mirror_arrays: Vec<MirrorArrayConfig<F>>,
    pub users: UserPlacement<F>,
    pub adr: AdrConfig<F>,
    pub diffuse_grid: DiffuseGrid<F>,
    pub noise: NoiseModel<F>,
    #[serde(default)]
    pub solver: SolverOptions<F>,
    #[serde(default = "default_time_bin")]
    pub time_bin_ns: F,
}

fn default_ap_normal<F: Real>() -> Vec3<F> {
    -Vec3::unit_z()
}

fn default_mount_height<F: Real>() -> F {
    F::of(1.0)
}

fn default_rotation_range<F: Real>() -> [F; 2] {
    [F::of(-45.0), F::of(45.0)]
}

fn default_utility_epsilon<F: Real>() -> F {
    F::of(1e-12)
}

fn default_time_bin<F: Real>() -> F {
    F::of(0.5)
}

/// Reference deployment: 5x5x3 m room with wall/floor/ceiling
/// reflectivities 0.8/0.3/0.8, four 2 W APs with 60 degree half-power
/// semi-angle in a symmetric ceiling grid, two 5x5 arrays of 0.25x0.15 m
/// mirrors (reflectivity 0.95) on opposite walls, a four-branch ADR
/// (azimuths 0/90/180/270, elevation 60, FoV 25, 20 mm^2, 0.4 A/W),
/// 20 MHz bandwidth, 0.05 m / 0.20 m diffuse grids, and four randomly
/// placed users.
///
/// The mirror arrays are centered horizontally on the walls `y=0` and
/// `y=5` with the top mirror row flush against the ceiling. Mounting them
/// high keeps reflected rays arriving at the receiving plane steep enough
/// to clear the upward-tilted ADR branches' 25 degree FoV.
pub fn default_scenario<F: Real>() -> ScenarioConfig<F> {
    let ap = |x: f64, y: f64| ApConfig {
        position_m: Vec3::new(F::of(x), F::of(y), F::of(3.0)),
        transmit_power_w: F::of(2.0),
        half_power_semiangle_deg: F::of(60.0),
        normal: default_ap_normal(),
    };
    let array = |wall: Wall, rng_seed: u64| MirrorArrayConfig {
        wall,
        center_u_m: F::of(2.5),
        // Rows span 2.25..3.0 m so the array hugs the ceiling.
        center_v_m: F::of(2.625),
        rows: 5,
        cols: 5,
        element_width_m: F::of(0.25),
        element_height_m: F::of(0.15),
        reflectivity: F::of(0.95),
        poses: None,
        rotation_range_deg: default_rotation_range(),
        rng_seed,
    };
    let branch = |azimuth_deg: f64| BranchOrientation {
        azimuth_deg: F::of(azimuth_deg),
        elevation_deg: F::of(60.0),
        fov_deg: F::of(25.0),
    };
    ScenarioConfig {
        room: Room {
            length_m: F::of(5.0),
            width_m: F::of(5.0),
            height_m: F::of(3.0),
            reflectivity: SurfaceReflectivity {
                walls: F::of(0.8),
                floor: F::of(0.3),
                ceiling: F::of(0.8),
            },
        },
        aps: vec![ap(1.5, 1.5), ap(1.5, 3.5), ap(3.5, 1.5), ap(3.5, 3.5)],
        mirror_arrays: vec![array(Wall::YMin, 1), array(Wall::YMax, 2)],
        users: UserPlacement::Random(RandomUsers {
            count: 4,
            rng_seed: 7,
        }),
        adr: AdrConfig {
            branches: vec![branch(0.0), branch(90.0), branch(180.0), branch(270.0)],
            pd_area_m2: F::of(20e-6),
            responsivity_a_per_w: F::of(0.4),
            mount_height_m: default_mount_height(),
        },
        diffuse_grid: DiffuseGrid {
            first_order_element_m: F::of(0.05),
            second_order_element_m: F::of(0.20),
        },
        noise: NoiseModel {
            noise_psd_a2_per_hz: F::of(1e-21),
            bandwidth_hz: F::of(20e6),
        },
        solver: SolverOptions::default(),
        time_bin_ns: default_time_bin(),
    }
}

/// Room surface a diffuse element belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    Floor,
    Ceiling,
    WallXMin,
    WallXMax,
    WallYMin,
    WallYMax,
}

/// One diffusely reflecting patch of a room surface.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceElement<F> {
    pub center: Vec3<F>,
    pub normal: Vec3<F>,
    pub area_m2: F,
    pub reflectivity: F,
    pub face: Face,
}

/// Tiles all six room surfaces with square elements of side `element_m`,
/// shrinking the last row/column so partial edges keep total coverage
/// exact. Element order is fixed: floor, ceiling, then walls x_min,
/// x_max, y_min, y_max, each scanned row-major.
pub fn discretize_surfaces<F: Real>(
    room: &Room<F>,
    element_m: F,
) -> Result<Vec<SurfaceElement<F>>, ScenarioError> {
    if element_m <= F::zero() {
        return Err(ScenarioError::invalid(
            "diffuse_grid",
            "element size must be positive",
        ));
    }
    let min_dim = room.length_m.min(room.width_m).min(room.height_m);
    if element_m > min_dim {
        return Err(ScenarioError::invalid(
            "diffuse_grid",
            format!("element size {element_m} exceeds the smallest room dimension {min_dim}"),
        ));
    }
    let (l, w, h) = (room.length_m, room.width_m, room.height_m);
    let refl = room.reflectivity;
    let mut out = Vec::new();
    let mut tile = |origin: Vec3<F>,
                    u_dir: Vec3<F>,
                    v_dir: Vec3<F>,
                    u_len: F,
                    v_len: F,
                    normal: Vec3<F>,
                    reflectivity: F,
                    face: Face| {
        let cells = |len: F| -> usize {
            let n = (len / element_m).ceil();
            n.to_usize().unwrap_or(1).max(1)
        };
        let (nu, nv) = (cells(u_len), cells(v_len));
        for j in 0..nv {
            let v0 = element_m * F::from_usize(j).unwrap();
            let v1 = (v0 + element_m).min(v_len);
            if v1 <= v0 {
                continue;
            }
            for i in 0..nu {
                let u0 = element_m * F::from_usize(i).unwrap();
                let u1 = (u0 + element_m).min(u_len);
                if u1 <= u0 {
                    continue;
                }
                let half = F::of(0.5);
                let center =
                    origin + u_dir * ((u0 + u1) * half) + v_dir * ((v0 + v1) * half);
                out.push(SurfaceElement {
                    center,
                    normal,
                    area_m2: (u1 - u0) * (v1 - v0),
                    reflectivity,
                    face,
                });
            }
        }
    };
    let x = Vec3::unit_x();
    let y = Vec3::unit_y();
    let z = Vec3::unit_z();
    tile(Vec3::zero(), x, y, l, w, z, refl.floor, Face::Floor);
    tile(Vec3::new(F::zero(), F::zero(), h), x, y, l, w, -z, refl.ceiling, Face::Ceiling);
    tile(Vec3::zero(), y, z, w, h, x, refl.walls, Face::WallXMin);
    tile(Vec3::new(l, F::zero(), F::zero()), y, z, w, h, -x, refl.walls, Face::WallXMax);
    tile(Vec3::zero(), x, z, l, h, y, refl.walls, Face::WallYMin);
    tile(Vec3::new(F::zero(), w, F::zero()), x, z, l, h, -y, refl.walls, Face::WallYMax);
    Ok(out)
}

/// Pitch of one array cell and total array extent in the wall frame.
fn array_extent<F: Real>(array: &MirrorArrayConfig<F>) -> (F, F) {
    (
        array.element_width_m * F::from_usize(array.cols).unwrap(),
        array.element_height_m * F::from_usize(array.rows).unwrap(),
    )
}

/// Lays out the array's mirrors on their wall and orients each one.
///
/// Mirrors are indexed row-major from the bottom-left cell. Orientations
/// come from `array.poses` when present (must hold `rows*cols` entries),
/// otherwise roll and yaw are drawn per mirror, in index order, uniformly
/// from `rotation_range_deg` using a generator seeded with `rng_seed`.
/// Pure: identical inputs give identical poses. Geometry validity
/// (extents inside the wall) is the caller's contract, enforced by
/// [`ScenarioConfig::validate`].
pub fn generate_mirror_poses<F: Real>(
    array: &MirrorArrayConfig<F>,
    room: &Room<F>,
    rng_seed: u64,
) -> Vec<MirrorPose<F>> {
    let frame = array.wall.frame(room);
    let (total_w, total_h) = array_extent(array);
    let half = F::of(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (lo, hi) = (
        array.rotation_range_deg[0].to_f64().unwrap(),
        array.rotation_range_deg[1].to_f64().unwrap(),
    );
    let mut poses = Vec::with_capacity(array.rows * array.cols);
    for r in 0..array.rows {
        for c in 0..array.cols {
            let (roll_deg, yaw_deg) = match &array.poses {
                Some(list) => {
                    let angles = list
                        .get(r * array.cols + c)
                        .expect("poses list shorter than rows*cols");
                    (angles.roll_deg, angles.yaw_deg)
                }
                // Angles are drawn as f64 so pose streams agree across
                // scalar widths.
                None => (
                    F::of(rng.random_range(lo..=hi)),
                    F::of(rng.random_range(lo..=hi)),
                ),
            };
            let u = array.center_u_m - total_w * half
                + array.element_width_m * (F::from_usize(c).unwrap() + half);
            let v = array.center_v_m - total_h * half
                + array.element_height_m * (F::from_usize(r).unwrap() + half);
            poses.push(MirrorPose {
                center: frame.origin + frame.u_dir * u + frame.v_dir * v,
                base_normal: frame.normal,
                roll_deg,
                yaw_deg,
                half_width_m: array.element_width_m * half,
                half_height_m: array.element_height_m * half,
            });
        }
    }
    poses
}

/// Resolves user positions onto the receiving plane.
///
/// Explicit lists pass through unchanged (after an in-room check);
/// randomized placement draws `x`, `y` uniformly over the plane at
/// `mount_height_m` from a generator seeded with `rng_seed`, ignoring the
/// seed stored in the placement itself.
pub fn place_users<F: Real>(
    placement: &UserPlacement<F>,
    room: &Room<F>,
    mount_height_m: F,
    rng_seed: u64,
) -> Result<Vec<Vec3<F>>, ScenarioError> {
    match placement {
        UserPlacement::Explicit(positions) => {
            for (k, p) in positions.iter().enumerate() {
                if !room.contains(*p) {
                    return Err(ScenarioError::invalid(
                        format!("users[{k}]"),
                        "position outside the room",
                    ));
                }
            }
            Ok(positions.clone())
        }
        UserPlacement::Random(spec) => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let l = room.length_m.to_f64().unwrap();
            let w = room.width_m.to_f64().unwrap();
            Ok((0..spec.count)
                .map(|_| {
                    let x = rng.random_range(0.0..l);
                    let y = rng.random_range(0.0..w);
                    Vec3::new(F::of(x), F::of(y), mount_height_m)
                })
                .collect())
        }
    }
}

/// Parses and fully validates a scenario document (JSON).
///
/// Unknown keys anywhere in the document are rejected, as are invariant
/// violations; errors name the offending field.
pub fn load_scenario<F: Real>(text: &str) -> Result<ScenarioConfig<F>, ScenarioError> {
    let config: ScenarioConfig<F> = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

impl<F: Real> ScenarioConfig<F> {
    /// Checks every scenario invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn err(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
            ScenarioError::invalid(field, message)
        }
        let unit_tol = F::of(1e-12).max(F::epsilon() * F::of(16.0));
        let room = &self.room;
        if room.length_m <= F::zero() || room.width_m <= F::zero() || room.height_m <= F::zero() {
            return Err(err("room", "dimensions must be positive"));
        }
        for (name, rho) in [
            ("room.reflectivity.walls", room.reflectivity.walls),
            ("room.reflectivity.floor", room.reflectivity.floor),
            ("room.reflectivity.ceiling", room.reflectivity.ceiling),
        ] {
            if rho < F::zero() || rho > F::one() {
                return Err(err(name, "reflectivity must lie in [0, 1]"));
            }
        }

        if self.aps.is_empty() {
            return Err(err("aps", "at least one access point is required"));
        }
        for (l, ap) in self.aps.iter().enumerate() {
            let p = ap.position_m;
            if (p.z - room.height_m).abs() > unit_tol || !room.contains(Vec3::new(p.x, p.y, room.height_m)) {
                return Err(err(format!("aps[{l}].position_m"), "AP must lie on ceiling plane"));
            }
            if ap.transmit_power_w <= F::zero() {
                return Err(err(format!("aps[{l}].transmit_power_w"), "must be positive"));
            }
            if ap.half_power_semiangle_deg <= F::zero() || ap.half_power_semiangle_deg >= F::of(90.0) {
                return Err(err(
                    format!("aps[{l}].half_power_semiangle_deg"),
                    "must lie strictly between 0 and 90 degrees",
                ));
            }
            if (ap.normal.norm() - F::one()).abs() > unit_tol {
                return Err(err(format!("aps[{l}].normal"), "must be a unit vector"));
            }
        }

        let adr = &self.adr;
        if adr.branches.is_empty() {
            return Err(err("adr.branches", "at least one branch is required"));
        }
        for (b, branch) in adr.branches.iter().enumerate() {
            if branch.fov_deg <= F::zero() || branch.fov_deg > F::of(90.0) {
                return Err(err(
                    format!("adr.branches[{b}].fov_deg"),
                    "must lie in (0, 90] degrees",
                ));
            }
        }
        if adr.pd_area_m2 <= F::zero() {
            return Err(err("adr.pd_area_m2", "must be positive"));
        }
        if adr.responsivity_a_per_w <= F::zero() {
            return Err(err("adr.responsivity_a_per_w", "must be positive"));
        }
        if adr.mount_height_m <= F::zero() || adr.mount_height_m >= room.height_m {
            return Err(err(
                "adr.mount_height_m",
                "must lie strictly between floor and ceiling",
            ));
        }

        for (a, array) in self.mirror_arrays.iter().enumerate() {
            let field = |tail: &str| format!("mirror_arrays[{a}].{tail}");
            if array.rows == 0 || array.cols == 0 {
                return Err(err(field("rows"), "rows and cols must be at least 1"));
            }
            if array.element_width_m <= F::zero() || array.element_height_m <= F::zero() {
                return Err(err(field("element_width_m"), "element sides must be positive"));
            }
            if array.reflectivity < F::zero() || array.reflectivity > F::one() {
                return Err(err(field("reflectivity"), "reflectivity must lie in [0, 1]"));
            }
            if let Some(poses) = &array.poses {
                if poses.len() != array.rows * array.cols {
                    return Err(err(
                        field("poses"),
                        format!("expected {} entries, got {}", array.rows * array.cols, poses.len()),
                    ));
                }
            }
            if array.rotation_range_deg[0] > array.rotation_range_deg[1] {
                return Err(err(field("rotation_range_deg"), "range must be ordered low, high"));
            }
            let frame = array.wall.frame(room);
            let (total_w, total_h) = array_extent(array);
            let half = F::of(0.5);
            let (u0, u1) = (array.center_u_m - total_w * half, array.center_u_m + total_w * half);
            let (v0, v1) = (array.center_v_m - total_h * half, array.center_v_m + total_h * half);
            if u0 < -unit_tol || u1 > frame.u_len + unit_tol || v0 < -unit_tol || v1 > frame.v_len + unit_tol {
                return Err(err(field("center_u_m"), "array extends beyond its wall"));
            }
        }

        match &self.users {
            UserPlacement::Explicit(positions) => {
                for (k, p) in positions.iter().enumerate() {
                    if !room.contains(*p) {
                        return Err(err(format!("users[{k}]"), "position outside the room"));
                    }
                    if (p.z - adr.mount_height_m).abs() > unit_tol {
                        return Err(err(
                            format!("users[{k}]"),
                            "user must sit on the receiving plane (adr.mount_height_m)",
                        ));
                    }
                }
            }
            UserPlacement::Random(spec) => {
                if spec.count == 0 {
                    return Err(err("users.count", "at least one user is required"));
                }
            }
        }

        let grid = &self.diffuse_grid;
        if grid.first_order_element_m <= F::zero() || grid.second_order_element_m <= F::zero() {
            return Err(err("diffuse_grid", "element sizes must be positive"));
        }
        if grid.second_order_element_m < grid.first_order_element_m {
            return Err(err(
                "diffuse_grid.second_order_element_m",
                "second-order grid must be at least as coarse as first-order",
            ));
        }

        if self.noise.noise_psd_a2_per_hz <= F::zero() || self.noise.bandwidth_hz <= F::zero() {
            return Err(err("noise", "noise PSD and bandwidth must be positive"));
        }
        if self.solver.utility_epsilon <= F::zero() {
            return Err(err("solver.utility_epsilon", "must be positive"));
        }
        if self.time_bin_ns <= F::zero() {
            return Err(err("time_bin_ns", "must be positive"));
        }
        Ok(())
    }
}
