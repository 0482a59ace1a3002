//! C ABI for kdnsim.
//!
//! All objects are opaque handles created by a `kdn_*_new`/`kdn_*_load`
//! function and released with the matching `kdn_*_free`. Every fallible call
//! returns a [`KdnStatus`]; on failure the message is available from
//! [`kdn_last_error`] on the same thread until the next failing call.
//! Out-parameters are written only on success. No function panics across the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kdnsim::agent::{
    greedy_index, load_qtable, save_qtable, Action, QTable, TableHeader, TelemetrySample,
};
use kdnsim::bridge::observation_of;
use kdnsim::cli::parse_scenario_str;
use kdnsim::engine::{train, Episode, Scenario};
use kdnsim::Error;

/// Number of observation features, in order: packet loss (fraction),
/// latency (ms), throughput (bit/s), speed (m/s), distance to serving
/// station (m), serving station load ratio.
pub const KDN_OBSERVATION_LEN: usize = 6;
/// Number of actions: 0 no-op, 1..=3 handover to the r-th nearest other
/// station, 4 power up, 5 power down.
pub const KDN_ACTION_COUNT: usize = 6;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KdnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    IncompatibleTable = 5,
    TableFormat = 6,
    EpisodeFinished = 7,
    Runtime = 8,
    Panic = 9,
}

/// Scenario handle.
pub struct KdnScenario {
    inner: Scenario,
}

/// Running episode handle.
pub struct KdnEnv {
    inner: Episode,
}

/// Q-table handle.
pub struct KdnQTable {
    inner: QTable,
}

/// Episode-level KPIs.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KdnEpisodeStats {
    pub ticks: u32,
    pub mean_throughput_bps: f64,
    pub mean_latency_ms: f64,
    pub mean_packet_loss: f64,
    pub cumulative_reward: f64,
    pub handovers: u64,
    pub power_changes: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KdnStatus {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidTelemetry(_) => KdnStatus::InvalidArgument,
        Error::Config { .. } => KdnStatus::Config,
        Error::IncompatibleTable(_) => KdnStatus::IncompatibleTable,
        Error::TableFormat(_) => KdnStatus::TableFormat,
        Error::Protocol(m) if m == "episode finished" => KdnStatus::EpisodeFinished,
        _ if e.is_io() => KdnStatus::Io,
        _ => KdnStatus::Runtime,
    }
}

struct Fail(KdnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KdnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KdnStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KdnStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(KdnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            KdnStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn write_observation(t: &TelemetrySample, dst: *mut f64) {
    let obs = observation_of(t);
    // SAFETY: callers check `dst` for null; the caller promises room for
    // KDN_OBSERVATION_LEN values.
    unsafe { ptr::copy_nonoverlapping(obs.as_ptr(), dst, KDN_OBSERVATION_LEN) };
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kdn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kdn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a scenario with all defaults.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_new_default(out: *mut *mut KdnScenario) -> KdnStatus {
    guard(|| {
        *self::out(out, "out")? = into_handle(KdnScenario {
            inner: Scenario::default(),
        });
        Ok(())
    })
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` as in
/// [`kdn_scenario_new_default`].
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut KdnScenario,
) -> KdnStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let out = self::out(out, "out")?;
        let inner = parse_scenario_str(text, Path::new("<toml>"))?;
        *out = into_handle(KdnScenario { inner });
        Ok(())
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as in
/// [`kdn_scenario_new_default`].
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_load(
    path: *const c_char,
    out: *mut *mut KdnScenario,
) -> KdnStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = self::out(out, "out")?;
        let (inner, _) = kdnsim::cli::parse_scenario(Path::new(path))?;
        *out = into_handle(KdnScenario { inner });
        Ok(())
    })
}

/// Sets the base seed.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_set_seed(scenario: *mut KdnScenario, seed: u64) -> KdnStatus {
    guard(|| {
        borrow_mut(scenario, "scenario")?.inner.seed = seed;
        Ok(())
    })
}

/// Sets the number of UEs (must be at least 1).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_set_ue_count(
    scenario: *mut KdnScenario,
    ue_count: u32,
) -> KdnStatus {
    guard(|| {
        let s = borrow_mut(scenario, "scenario")?;
        if ue_count == 0 {
            return Err(Fail(KdnStatus::InvalidArgument, "ue_count ≥ 1".into()));
        }
        s.inner.ue_count = ue_count;
        Ok(())
    })
}

/// Sets the number of ticks per episode.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_set_ticks(
    scenario: *mut KdnScenario,
    ticks: u32,
) -> KdnStatus {
    guard(|| {
        borrow_mut(scenario, "scenario")?
            .inner
            .agent
            .ticks_per_episode = ticks;
        Ok(())
    })
}

/// Sets the number of training episodes.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_set_episodes(
    scenario: *mut KdnScenario,
    episodes: u32,
) -> KdnStatus {
    guard(|| {
        borrow_mut(scenario, "scenario")?.inner.agent.episodes = episodes;
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kdn_scenario_free(scenario: *mut KdnScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Starts an episode of `scenario` on the world seeded by `seed`. The env
/// keeps its own copy of the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_env_new(
    scenario: *const KdnScenario,
    seed: u64,
    out: *mut *mut KdnEnv,
) -> KdnStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let out = self::out(out, "out")?;
        let inner = Episode::new(&s.inner, seed)?;
        *out = into_handle(KdnEnv { inner });
        Ok(())
    })
}

/// Advances mobility by one tick and reports whose turn it is. Calling it
/// again before [`kdn_env_step`] returns the same decision point.
///
/// # Safety
/// `env` must be a live handle; `ue_id` writable; `observation` must hold
/// `KDN_OBSERVATION_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdn_env_begin_tick(
    env: *mut KdnEnv,
    ue_id: *mut u32,
    observation: *mut f64,
) -> KdnStatus {
    guard(|| {
        let env = borrow_mut(env, "env")?;
        let ue_out = out(ue_id, "ue_id")?;
        if observation.is_null() {
            return Err(null("observation"));
        }
        let obs = env.inner.begin_tick()?;
        *ue_out = obs.ue_id as u32;
        write_observation(&obs.telemetry, observation);
        Ok(())
    })
}

/// Applies `action` to `ue_id` and closes the tick. `post_observation` (may
/// be null) receives the UE's telemetry after the action.
///
/// # Safety
/// `env` must be a live handle; `reward` and `done` writable;
/// `post_observation` null or room for `KDN_OBSERVATION_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdn_env_step(
    env: *mut KdnEnv,
    ue_id: u32,
    action: u32,
    reward: *mut f64,
    done: *mut bool,
    post_observation: *mut f64,
) -> KdnStatus {
    guard(|| {
        let env = borrow_mut(env, "env")?;
        let reward = out(reward, "reward")?;
        let done = out(done, "done")?;
        let action = Action::from_ordinal(action as usize).ok_or_else(|| {
            Fail(
                KdnStatus::InvalidArgument,
                format!("unknown action {action}"),
            )
        })?;
        let o = env.inner.act(ue_id as usize, action)?;
        *reward = o.reward;
        *done = o.done;
        if !post_observation.is_null() {
            write_observation(&o.post, post_observation);
        }
        Ok(())
    })
}

/// Aggregate KPIs of the ticks completed so far.
///
/// # Safety
/// `env` must be a live handle; `stats` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_env_stats(
    env: *const KdnEnv,
    stats: *mut KdnEpisodeStats,
) -> KdnStatus {
    guard(|| {
        let env = borrow(env, "env")?;
        let stats = out(stats, "stats")?;
        let r = env.inner.result();
        *stats = KdnEpisodeStats {
            ticks: r.ticks.len() as u32,
            mean_throughput_bps: r.mean_throughput_bps,
            mean_latency_ms: r.mean_latency_ms,
            mean_packet_loss: r.mean_packet_loss,
            cumulative_reward: r.cumulative_reward,
            handovers: r.handovers,
            power_changes: r.power_changes,
        };
        Ok(())
    })
}

/// Releases an env. Null is ignored.
///
/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kdn_env_free(env: *mut KdnEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Trains a fresh table on `scenario` (same procedure as `kdnsim train`).
///
/// # Safety
/// `scenario` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_train(
    scenario: *const KdnScenario,
    out: *mut *mut KdnQTable,
) -> KdnStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let out = self::out(out, "out")?;
        let inner = train(&s.inner)?.q;
        *out = into_handle(KdnQTable { inner });
        Ok(())
    })
}

/// Loads a table file, checking it against the scenario's state bins.
///
/// # Safety
/// `path` NUL-terminated; `scenario` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_load(
    path: *const c_char,
    scenario: *const KdnScenario,
    out: *mut *mut KdnQTable,
) -> KdnStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let s = borrow(scenario, "scenario")?;
        let out = self::out(out, "out")?;
        let (inner, _) = load_qtable(Path::new(path), &s.inner.bins)?;
        *out = into_handle(KdnQTable { inner });
        Ok(())
    })
}

/// Writes a table file whose header records the scenario's bins and
/// hyperparameters.
///
/// # Safety
/// `table` and `scenario` live handles; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_save(
    table: *const KdnQTable,
    scenario: *const KdnScenario,
    path: *const c_char,
) -> KdnStatus {
    guard(|| {
        let q = borrow(table, "table")?;
        let s = borrow(scenario, "scenario")?;
        let path = str_arg(path, "path")?;
        let header = TableHeader::for_agent(&s.inner.bins, &s.inner.agent);
        save_qtable(Path::new(path), &q.inner, &header)?;
        Ok(())
    })
}

/// Table dimensions.
///
/// # Safety
/// `table` a live handle; `states` and `actions` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_shape(
    table: *const KdnQTable,
    states: *mut u64,
    actions: *mut u64,
) -> KdnStatus {
    guard(|| {
        let q = borrow(table, "table")?;
        *out(states, "states")? = q.inner.states() as u64;
        *out(actions, "actions")? = q.inner.actions() as u64;
        Ok(())
    })
}

/// Reads Q(state, action).
///
/// # Safety
/// `table` a live handle; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_get(
    table: *const KdnQTable,
    state: u64,
    action: u64,
    value: *mut f64,
) -> KdnStatus {
    guard(|| {
        let q = borrow(table, "table")?;
        let value = out(value, "value")?;
        if state >= q.inner.states() as u64 || action >= q.inner.actions() as u64 {
            return Err(Fail(
                KdnStatus::InvalidArgument,
                format!(
                    "({state}, {action}) outside {}x{}",
                    q.inner.states(),
                    q.inner.actions()
                ),
            ));
        }
        *value = q.inner.get(state as usize, action as usize);
        Ok(())
    })
}

/// Greedy action for a raw observation, discretized with the scenario's bins.
///
/// # Safety
/// `table` and `scenario` live handles; `observation` holds
/// `KDN_OBSERVATION_LEN` doubles; `action` writable.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_greedy(
    table: *const KdnQTable,
    scenario: *const KdnScenario,
    observation: *const f64,
    action: *mut u32,
) -> KdnStatus {
    guard(|| {
        let q = borrow(table, "table")?;
        let s = borrow(scenario, "scenario")?;
        if observation.is_null() {
            return Err(null("observation"));
        }
        let action = out(action, "action")?;
        let o = std::slice::from_raw_parts(observation, KDN_OBSERVATION_LEN);
        let sample = TelemetrySample {
            ue_id: 0,
            packet_loss: o[0],
            latency_ms: o[1],
            throughput_bps: o[2],
            speed_mps: o[3],
            distance_to_serving_m: o[4],
            serving_load_ratio: o[5],
        };
        let state = s.inner.bins.discretize(&sample)?;
        if q.inner.states() != s.inner.bins.state_count() {
            return Err(Fail(
                KdnStatus::IncompatibleTable,
                format!(
                    "table has {} states, scenario bins give {}",
                    q.inner.states(),
                    s.inner.bins.state_count()
                ),
            ));
        }
        *action = greedy_index(q.inner.row(state)) as u32;
        Ok(())
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kdn_qtable_free(table: *mut KdnQTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}
