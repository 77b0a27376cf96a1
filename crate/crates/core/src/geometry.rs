//! Constellation geometry: circular Keplerian propagation, latitude-zone user
//! sampling, slant distances, and satellite-user association.
//!
//! All distances are computed in an Earth-fixed frame. Satellite positions are
//! propagated inertially and rotated by the Earth rotation angle so that user
//! positions stay constant within an episode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ConstellationConfig, EARTH_RADIUS_KM, EARTH_ROTATION_RAD_S};
use crate::Error;

/// Latitude zone of a user terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Latitude in [-30, 30] degrees.
    Equatorial,
    /// Latitude in (30, 70] degrees.
    NorthHigh,
    /// Latitude in [-70, -30) degrees.
    SouthHigh,
}

impl Region {
    pub fn of_latitude(lat_deg: f64) -> Region {
        if (-30.0..=30.0).contains(&lat_deg) {
            Region::Equatorial
        } else if lat_deg > 30.0 {
            Region::NorthHigh
        } else {
            Region::SouthHigh
        }
    }

    pub fn one_hot(&self) -> [f64; 3] {
        match self {
            Region::Equatorial => [1.0, 0.0, 0.0],
            Region::NorthHigh => [0.0, 1.0, 0.0],
            Region::SouthHigh => [0.0, 0.0, 1.0],
        }
    }
}

/// Satellite position snapshot in the Earth-fixed frame.
#[derive(Debug, Clone)]
pub struct SatelliteState {
    pub id: usize,
    /// Position, km, Earth-centred Earth-fixed.
    pub position: [f64; 3],
    pub epoch_s: f64,
}

/// A fixed ground terminal.
#[derive(Debug, Clone)]
pub struct UserTerminal {
    pub id: usize,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub region: Region,
    /// Position, km, Earth-centred Earth-fixed, on the spherical Earth.
    pub position: [f64; 3],
}

impl UserTerminal {
    pub fn new(id: usize, latitude_deg: f64, longitude_deg: f64) -> Self {
        let lat = latitude_deg.to_radians();
        let lon = longitude_deg.to_radians();
        let position = [
            EARTH_RADIUS_KM * lat.cos() * lon.cos(),
            EARTH_RADIUS_KM * lat.cos() * lon.sin(),
            EARTH_RADIUS_KM * lat.sin(),
        ];
        Self {
            id,
            latitude_deg,
            longitude_deg,
            region: Region::of_latitude(latitude_deg),
            position,
        }
    }
}

/// Propagate all satellites to time `t` (seconds since epoch).
///
/// Satellite k sits at RAAN `k * 360/N_s` degrees with a common in-plane
/// phase advanced by the mean motion; inertial positions are rotated into the
/// Earth-fixed frame.
pub fn propagate(config: &ConstellationConfig, t: f64) -> Result<Vec<SatelliteState>, Error> {
    config.validate()?;
    if t < 0.0 {
        return Err(Error::Domain("propagation time must be >= 0".into()));
    }
    let r = config.orbital_radius_km();
    let n = config.mean_motion_rad_s();
    let incl = config.inclination_deg.to_radians();
    let phase = config.initial_phase_deg.to_radians() + n * t;
    let earth_angle = EARTH_ROTATION_RAD_S * t;

    let mut out = Vec::with_capacity(config.num_satellites);
    for k in 0..config.num_satellites {
        let raan = (k as f64 * config.raan_spacing_deg()).to_radians();
        // Circular orbit: argument of latitude equals the mean anomaly phase.
        let (su, cu) = phase.sin_cos();
        let (sr, cr) = raan.sin_cos();
        let (si, ci) = incl.sin_cos();
        let eci = [
            r * (cr * cu - sr * su * ci),
            r * (sr * cu + cr * su * ci),
            r * su * si,
        ];
        // Rotate by -earth_angle about z: ECI -> ECEF.
        let (se, ce) = earth_angle.sin_cos();
        let position = [eci[0] * ce + eci[1] * se, -eci[0] * se + eci[1] * ce, eci[2]];
        out.push(SatelliteState { id: k, position, epoch_s: t });
    }
    Ok(out)
}

/// Inertial-frame position of one satellite (used by periodicity checks).
pub fn propagate_inertial(config: &ConstellationConfig, id: usize, t: f64) -> [f64; 3] {
    let r = config.orbital_radius_km();
    let n = config.mean_motion_rad_s();
    let incl = config.inclination_deg.to_radians();
    let phase = config.initial_phase_deg.to_radians() + n * t;
    let raan = (id as f64 * config.raan_spacing_deg()).to_radians();
    let (su, cu) = phase.sin_cos();
    let (sr, cr) = raan.sin_cos();
    let (si, ci) = incl.sin_cos();
    [
        r * (cr * cu - sr * su * ci),
        r * (sr * cu + cr * su * ci),
        r * su * si,
    ]
}

/// Sample `num_users` terminals across the three latitude zones.
///
/// Zone counts come from a largest-remainder split of the fractions; the 0.5
/// rounding tie goes north before south, with any leftover seat falling to the
/// equatorial zone. Latitudes are uniform within each zone, longitudes uniform
/// in [-180, 180).
pub fn sample_users(
    num_users: usize,
    zone_fractions: [f64; 3],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<UserTerminal>, Error> {
    if num_users < 1 {
        return Err(Error::Config("num_users must be >= 1".into()));
    }
    let fsum: f64 = zone_fractions.iter().sum();
    if (fsum - 1.0).abs() > 1e-9 {
        return Err(Error::Config("zone fractions must sum to 1".into()));
    }
    let counts = zone_counts(num_users, zone_fractions);
    let bounds = [(-30.0, 30.0), (30.0, 70.0), (-70.0, -30.0)];
    let mut users = Vec::with_capacity(num_users);
    for (zone, &count) in counts.iter().enumerate() {
        let (lo, hi) = bounds[zone];
        for _ in 0..count {
            let lat = rng.random_range(lo..hi);
            let lon = rng.random_range(-180.0..180.0);
            users.push(UserTerminal::new(users.len(), lat, lon));
        }
    }
    Ok(users)
}

/// Zone counts (equatorial, north, south) for the deterministic split.
pub fn zone_counts(num_users: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * num_users as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    // Seat order by descending fractional part; ties north before south
    // before equatorial.
    let tie_rank = [2usize, 0, 1]; // equatorial last, north first
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa)
            .unwrap()
            .then(tie_rank[a].cmp(&tie_rank[b]))
    });
    for i in 0..(num_users - assigned) {
        counts[order[i % 3]] += 1;
    }
    [counts[0], counts[1], counts[2]]
}

/// Euclidean slant distance between a satellite and a user, km.
pub fn slant_distance(sat: &SatelliteState, user: &UserTerminal) -> f64 {
    let dx = sat.position[0] - user.position[0];
    let dy = sat.position[1] - user.position[1];
    let dz = sat.position[2] - user.position[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Elevation angle of the satellite as seen from the user, degrees.
pub fn elevation_deg(sat: &SatelliteState, user: &UserTerminal) -> f64 {
    let d = slant_distance(sat, user);
    let up_dot = (sat.position[0] - user.position[0]) * user.position[0]
        + (sat.position[1] - user.position[1]) * user.position[1]
        + (sat.position[2] - user.position[2]) * user.position[2];
    (up_dot / (d * EARTH_RADIUS_KM)).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Associate each user to the satellite with the lowest total loss (highest
/// received power at fixed EIRP), considering only satellites above the
/// elevation mask; ties break to the lowest satellite id.
///
/// `losses[s][u]` is the total loss in dB, `visible[s][u]` the mask. A user
/// with no visible satellite falls back to the lowest-loss satellite overall;
/// such a link will usually be in outage.
pub fn associate(
    num_satellites: usize,
    num_users: usize,
    losses: &[Vec<f64>],
    visible: &[Vec<bool>],
) -> Result<Vec<usize>, Error> {
    if num_satellites == 0 {
        return Err(Error::Association("no satellites to associate".into()));
    }
    let mut assoc = Vec::with_capacity(num_users);
    for u in 0..num_users {
        let pick = |restrict: bool| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for s in 0..num_satellites {
                if restrict && !visible[s][u] {
                    continue;
                }
                let l = losses[s][u];
                match best {
                    Some((_, bl)) if l >= bl => {}
                    _ => best = Some((s, l)),
                }
            }
            best.map(|(s, _)| s)
        };
        let s = pick(true).or_else(|| pick(false)).ok_or_else(|| {
            Error::Association(format!("no candidate satellite for user {u}"))
        })?;
        assoc.push(s);
    }
    Ok(assoc)
}
