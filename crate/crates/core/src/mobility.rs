//! Random-waypoint mobility.
//!
//! A UE travels in a straight line towards its waypoint at a constant speed.
//! Once it is within one tick of travel it snaps onto the waypoint, pauses for
//! a uniform time in `[0, pause_max]`, then draws a fresh uniform waypoint in
//! the area and a fresh uniform speed in `[speed_min, speed_max]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Area, Motion, Point, UserEquipment};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub area: Area,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_max_s: f64,
    pub tick_duration_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            area: Area {
                width: 500.0,
                height: 500.0,
            },
            speed_min: 0.0,
            speed_max: 20.0,
            pause_max_s: 2.0,
            tick_duration_s: 0.1,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !(finite_pos(self.area.width) && finite_pos(self.area.height)) {
            return Err(Error::invalid("area", "width and height must be > 0"));
        }
        if !(self.speed_min.is_finite() && self.speed_max.is_finite())
            || self.speed_min < 0.0
            || self.speed_min > self.speed_max
        {
            return Err(Error::invalid("speed", "need 0 <= speed_min <= speed_max"));
        }
        if !(self.pause_max_s.is_finite() && self.pause_max_s >= 0.0) {
            return Err(Error::invalid("pause_max_s", "must be >= 0"));
        }
        if !finite_pos(self.tick_duration_s) {
            return Err(Error::invalid("tick_duration_s", "must be > 0"));
        }
        Ok(())
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            rng.random_range(0.0..=self.area.width),
            rng.random_range(0.0..=self.area.height),
        )
    }

    pub fn random_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.speed_min..=self.speed_max)
    }

    pub fn random_pause<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(0.0..=self.pause_max_s)
    }

    /// Fresh motion state for a UE that starts moving immediately.
    pub fn initial_motion<R: Rng + ?Sized>(&self, rng: &mut R) -> Motion {
        Motion {
            waypoint: self.random_point(rng),
            speed: self.random_speed(rng),
            pause_left_s: 0.0,
        }
    }
}

/// Advances `ue` by one tick.
pub fn step_mobility<R: Rng + ?Sized>(
    ue: &UserEquipment,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> UserEquipment {
    let mut next = ue.clone();
    let dt = cfg.tick_duration_s;
    let mut motion = ue.motion;

    if motion.pause_left_s > 0.0 {
        motion.pause_left_s = (motion.pause_left_s - dt).max(0.0);
        if motion.pause_left_s == 0.0 {
            motion.waypoint = cfg.random_point(rng);
            motion.speed = cfg.random_speed(rng);
        }
        next.velocity = Point::default();
        next.motion = motion;
        return next;
    }

    let travel = motion.speed * dt;
    let remaining = ue.position.distance(motion.waypoint);
    if remaining <= travel {
        next.position = motion.waypoint;
        motion.pause_left_s = cfg.random_pause(rng);
        if motion.pause_left_s == 0.0 {
            motion.waypoint = cfg.random_point(rng);
            motion.speed = cfg.random_speed(rng);
        }
    } else {
        let ratio = travel / remaining;
        next.position = cfg.area.clamp(Point::new(
            ue.position.x + (motion.waypoint.x - ue.position.x) * ratio,
            ue.position.y + (motion.waypoint.y - ue.position.y) * ratio,
        ));
    }
    next.velocity = Point::new(
        (next.position.x - ue.position.x) / dt,
        (next.position.y - ue.position.y) / dt,
    );
    next.motion = motion;
    next
}

/// Speed estimated from the location change over one tick.
pub fn observed_speed(prev: Point, new: Point, tick_duration_s: f64) -> f64 {
    prev.distance(new) / tick_duration_s
}
