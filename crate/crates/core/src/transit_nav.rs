//! Transit directions fixtures and GPS-distance instruction triggering.
//!
//! Plans are read from recorded directions-API responses (`routes[0].legs[0].steps`),
//! never from a live service. Walking along a GPS track, the next step's
//! instruction fires once the fix comes within `trigger_radius` of the step's
//! start waypoint.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;
pub const DEFAULT_TRIGGER_RADIUS_M: f64 = 15.0;

#[derive(Debug, Error)]
pub enum TransitError {
    #[error("directions document: missing or invalid `{path}`")]
    Field { path: String },
    #[error("directions document has no routes")]
    NoRoutes,
    #[error("directions document is not JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("coordinate ({lat}, {lon}) out of range")]
    Coord { lat: f64, lon: f64 },
    #[error("GPS feed line {line}: {message}")]
    Feed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    pub lat: f64,
    pub lon: f64,
}

impl GeoCoord {
    pub fn new(lat: f64, lon: f64) -> Result<Self, TransitError> {
        let ok = lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon);
        if ok {
            Ok(Self { lat, lon })
        } else {
            Err(TransitError::Coord { lat, lon })
        }
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: GeoCoord, b: GeoCoord) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from `a` to `b`, degrees clockwise from north in `[0, 360)`.
pub fn initial_bearing(a: GeoCoord, b: GeoCoord) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lon - a.lon).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    crate::scalar::normalize_degrees(y.atan2(x).to_degrees())
}

/// Eight-point compass word for a bearing.
pub fn compass_word(bearing_deg: f64) -> &'static str {
    const WORDS: [&str; 8] = ["north", "north-east", "east", "south-east", "south", "south-west", "west", "north-west"];
    let idx = ((crate::scalar::normalize_degrees(bearing_deg) + 22.5) / 45.0).floor() as usize % 8;
    WORDS[idx]
}

/// Turn relative to the previous heading.
pub fn relative_turn(previous_bearing: f64, bearing: f64) -> &'static str {
    let d = crate::scalar::angle_diff_degrees(previous_bearing, bearing);
    if d.abs() <= 30.0 {
        "continue straight"
    } else if d > 0.0 {
        "turn right"
    } else {
        "turn left"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelMode {
    Walk,
    Transit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub mode: TravelMode,
    pub instruction: String,
    pub line: Option<String>,
    pub departure_stop: Option<String>,
    pub departure_time: Option<String>,
    /// Where the step starts; reaching it triggers the step's instruction.
    pub waypoint: GeoCoord,
    pub end: GeoCoord,
    pub distance_m: f64,
    pub duration_s: u64,
}

impl Step {
    pub fn duration_min(&self) -> f64 {
        self.duration_s as f64 / 60.0
    }

    pub fn bearing(&self) -> f64 {
        initial_bearing(self.waypoint, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitPlan {
    pub steps: Vec<Step>,
}

fn field<'a>(v: &'a Value, path: &str, key: &str) -> Result<&'a Value, TransitError> {
    v.get(key).ok_or_else(|| TransitError::Field {
        path: format!("{path}.{key}"),
    })
}

fn number(v: &Value, path: &str, key: &str) -> Result<f64, TransitError> {
    field(v, path, key)?.as_f64().ok_or_else(|| TransitError::Field {
        path: format!("{path}.{key}"),
    })
}

fn text(v: &Value, path: &str, key: &str) -> Result<String, TransitError> {
    field(v, path, key)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| TransitError::Field {
            path: format!("{path}.{key}"),
        })
}

fn coord(v: &Value, path: &str, key: &str) -> Result<GeoCoord, TransitError> {
    let loc = field(v, path, key)?;
    let p = format!("{path}.{key}");
    let lat = number(loc, &p, "lat")?;
    let lon = number(loc, &p, "lng")?;
    GeoCoord::new(lat, lon).map_err(|_| TransitError::Field { path: p })
}

/// Reads the first route's first leg into a plan.
pub fn parse_plan(fixture: &[u8]) -> Result<TransitPlan, TransitError> {
    let doc: Value = serde_json::from_slice(fixture)?;
    let routes = field(&doc, "$", "routes")?.as_array().ok_or_else(|| TransitError::Field {
        path: "$.routes".into(),
    })?;
    let route = routes.first().ok_or(TransitError::NoRoutes)?;
    let legs = field(route, "$.routes[0]", "legs")?;
    let leg = legs.get(0).ok_or_else(|| TransitError::Field {
        path: "$.routes[0].legs[0]".into(),
    })?;
    let raw_steps = field(leg, "$.routes[0].legs[0]", "steps")?
        .as_array()
        .ok_or_else(|| TransitError::Field {
            path: "$.routes[0].legs[0].steps".into(),
        })?;
    if raw_steps.is_empty() {
        return Err(TransitError::Field {
            path: "$.routes[0].legs[0].steps[0]".into(),
        });
    }

    let mut steps = Vec::with_capacity(raw_steps.len());
    for (i, s) in raw_steps.iter().enumerate() {
        let path = format!("$.routes[0].legs[0].steps[{i}]");
        let mode = match text(s, &path, "travel_mode")?.as_str() {
            "WALKING" => TravelMode::Walk,
            "TRANSIT" => TravelMode::Transit,
            _ => {
                return Err(TransitError::Field {
                    path: format!("{path}.travel_mode"),
                })
            }
        };
        let distance_m = number(field(s, &path, "distance")?, &format!("{path}.distance"), "value")?;
        let duration = number(field(s, &path, "duration")?, &format!("{path}.duration"), "value")?;
        if distance_m < 0.0 || duration < 0.0 {
            return Err(TransitError::Field {
                path: format!("{path}.distance"),
            });
        }
        let (mut line, mut departure_stop, mut departure_time) = (None, None, None);
        if mode == TravelMode::Transit {
            let tp = format!("{path}.transit_details");
            let details = field(s, &path, "transit_details")?;
            let l = field(details, &tp, "line")?;
            line = Some(
                text(l, &format!("{tp}.line"), "short_name").or_else(|_| text(l, &format!("{tp}.line"), "name"))?,
            );
            departure_stop = Some(text(field(details, &tp, "departure_stop")?, &format!("{tp}.departure_stop"), "name")?);
            departure_time = Some(text(field(details, &tp, "departure_time")?, &format!("{tp}.departure_time"), "text")?);
        }
        steps.push(Step {
            mode,
            instruction: text(s, &path, "html_instructions")?,
            line,
            departure_stop,
            departure_time,
            waypoint: coord(s, &path, "start_location")?,
            end: coord(s, &path, "end_location")?,
            distance_m,
            duration_s: duration.round() as u64,
        });
    }
    Ok(TransitPlan { steps })
}

/// Writes a plan back out in the directions-response shape read by [`parse_plan`].
pub fn serialize_plan(plan: &TransitPlan) -> Vec<u8> {
    let loc = |c: GeoCoord| json!({ "lat": c.lat, "lng": c.lon });
    let steps: Vec<Value> = plan
        .steps
        .iter()
        .map(|s| {
            let mut v = json!({
                "travel_mode": match s.mode { TravelMode::Walk => "WALKING", TravelMode::Transit => "TRANSIT" },
                "html_instructions": s.instruction,
                "distance": { "value": s.distance_m },
                "duration": { "value": s.duration_s },
                "start_location": loc(s.waypoint),
                "end_location": loc(s.end),
            });
            if s.mode == TravelMode::Transit {
                v["transit_details"] = json!({
                    "line": { "short_name": s.line },
                    "departure_stop": { "name": s.departure_stop },
                    "departure_time": { "text": s.departure_time },
                });
            }
            v
        })
        .collect();
    serde_json::to_vec_pretty(&json!({ "status": "OK", "routes": [{ "legs": [{ "steps": steps }] }] }))
        .expect("plan serializes")
}

/// Spoken form of step `index`: direction, distance in meters, duration in minutes.
pub fn render_instruction(plan: &TransitPlan, index: usize) -> String {
    let step = &plan.steps[index];
    let minutes = step.duration_min().round().max(1.0) as u64;
    let meters = step.distance_m.round() as u64;
    match step.mode {
        TravelMode::Walk => {
            let bearing = step.bearing();
            let direction = match index.checked_sub(1).map(|i| plan.steps[i].bearing()) {
                Some(prev) => format!("{}, then walk {}", capitalize(relative_turn(prev, bearing)), compass_word(bearing)),
                None => format!("Walk {}", compass_word(bearing)),
            };
            format!("{direction}, {meters} meters, {minutes} minutes. {}", step.instruction)
        }
        TravelMode::Transit => format!(
            "Take line {} from {} at {}, {meters} meters, {minutes} minutes. {}",
            step.line.as_deref().unwrap_or("?"),
            step.departure_stop.as_deref().unwrap_or("?"),
            step.departure_time.as_deref().unwrap_or("?"),
            step.instruction
        ),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState {
    pub plan: TransitPlan,
    /// Index of the step whose start waypoint is being approached.
    pub current_step: usize,
    pub trigger_radius: f64,
}

impl TriggerState {
    pub fn new(plan: TransitPlan, trigger_radius: f64) -> Self {
        Self {
            plan,
            current_step: 0,
            trigger_radius,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.current_step >= self.plan.steps.len()
    }
}

/// Emits the current step's instruction once `fix` is within the trigger
/// radius of its waypoint, advancing the state by one step.
pub fn next_instruction(state: &TriggerState, fix: GeoCoord) -> Option<(String, TriggerState)> {
    let step = state.plan.steps.get(state.current_step)?;
    if haversine(fix, step.waypoint) > state.trigger_radius {
        return None;
    }
    let text = render_instruction(&state.plan, state.current_step);
    let next = TriggerState {
        current_step: state.current_step + 1,
        ..state.clone()
    };
    Some((text, next))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsFix {
    pub coord: GeoCoord,
    pub timestamp: f64,
}

/// Parses newline-delimited `lat,lon,timestamp` records; blank lines are skipped.
pub fn parse_gps_feed(text: &str) -> Result<Vec<GpsFix>, TransitError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |message: &str| TransitError::Feed {
                line: i + 1,
                message: message.to_string(),
            };
            let parts: Vec<&str> = l.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("expected lat,lon,timestamp"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("not a number"));
            let coord = GeoCoord::new(num(parts[0])?, num(parts[1])?).map_err(|_| bad("coordinate out of range"))?;
            Ok(GpsFix {
                coord,
                timestamp: num(parts[2])?,
            })
        })
        .collect()
}

/// Source of transit plans. Fixture-backed here; a live client can implement it too.
pub trait DirectionsProvider {
    fn directions(&self, origin: GeoCoord, destination: &str) -> Result<TransitPlan, TransitError>;
}

/// Serves `<dir>/<destination>.json` fixture files.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    pub dir: PathBuf,
}

impl DirectionsProvider for FixtureProvider {
    fn directions(&self, _origin: GeoCoord, destination: &str) -> Result<TransitPlan, TransitError> {
        let bytes = std::fs::read(self.dir.join(format!("{destination}.json")))?;
        parse_plan(&bytes)
    }
}
