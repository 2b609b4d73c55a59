"""Three-phase autonomous landing: state machine plus a closed-loop simulator.

Phases: search (hold, wait for a fix), align (centre the marker in the
image), orient (null the yaw error while coming down to about 1 m), descend
(constant sink rate with continuous corrections; the pipeline hands over to
the small-circle fix once the big circle leaves the view), touchdown (motor
cutoff once the LiDAR reads ground), done.  A fix lost for under a second is
coasted on (last corrections kept, descent continues); a longer loss holds
position, and past five seconds the vehicle aborts back up to the search
altitude.

Conventions: the drone state lives in the pad frame with yaw positive
counter-clockwise seen from above, while image angles are clockwise-positive;
the camera is mounted rotated 180 degrees about its optical axis (see
MarkerSpec.nominal_axis_deg), which is what makes the proportional laws
vx,vy = -Kp*offset and yaw_rate = -Kyaw*orientation converge as written.

The simulator closes the loop against synthetically rendered frames run
through the real detection pipeline, with first-order velocity dynamics and
median-filtered noisy LiDAR altimetry.  Identical (initial state, params,
seed) inputs give identical trajectory logs.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import Config, LanderParams
from .marker import MarkerPose
from .pipeline import Detector
from .shapes import CameraModel, MarkerSpec
from .synth import Background, Illumination, ScenePose, render

SEARCH = "search"
ALIGN = "align"
ORIENT = "orient"
DESCEND = "descend"
TOUCHDOWN = "touchdown"
DONE = "done"
ABORT = "abort"

PHASES = (SEARCH, ALIGN, ORIENT, DESCEND, TOUCHDOWN, DONE, ABORT)


@dataclass(frozen=True)
class LandingCommand:
    """Velocity setpoints; motors_off implies everything is zero."""

    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0  # negative = down
    yaw_rate: float = 0.0  # deg/s
    motors_off: bool = False


HOLD = LandingCommand()
MOTORS_OFF = LandingCommand(motors_off=True)


@dataclass
class DroneState:
    """Simulated vehicle state in the pad frame (metres, degrees).

    Yaw is positive counter-clockwise viewed from above; the marker's
    apparent image orientation equals +yaw under the flipped camera mounting.
    """

    x: float = 0.0
    y: float = 0.0
    altitude: float = 1.5
    yaw: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    yaw_rate: float = 0.0


class LandingController:
    """Ticks the landing state machine at a fixed control period."""

    def __init__(self, params: LanderParams | None = None):
        self.params = params or LanderParams()
        self.phase = SEARCH
        self._centred_ticks = 0
        self._last_pose: MarkerPose | None = None

    def _clamped(self, vx, vy, vz, yaw_rate) -> LandingCommand:
        p = self.params
        m = p.v_xy_max
        return LandingCommand(
            vx=min(max(vx, -m), m),
            vy=min(max(vy, -m), m),
            vz=min(max(vz, -p.vz_max), p.vz_max),
            yaw_rate=min(max(yaw_rate, -p.yaw_rate_max), p.yaw_rate_max),
        )

    def _xy(self, pose: MarkerPose) -> tuple[float, float]:
        k = self.params.kp_xy_per_cm
        return -k * pose.offset_cm[0], -k * pose.offset_cm[1]

    def _yaw(self, pose: MarkerPose) -> float:
        if pose.orientation_deg is None or not pose.orientation_fresh:
            return 0.0
        return -self.params.kp_yaw * pose.orientation_deg

    def step(
        self,
        pose: MarkerPose | None,
        altitude_lidar: float,
        elapsed_since_fix: float,
    ) -> LandingCommand:
        """One control tick; returns the clamped command for this period."""
        p = self.params
        if altitude_lidar <= 0.0 or altitude_lidar > p.lidar_max_m:
            return HOLD  # sensor fault: freeze until readings recover

        if self.phase == DONE:
            return MOTORS_OFF
        if self.phase == TOUCHDOWN:
            self.phase = DONE
            return MOTORS_OFF

        if self.phase == ABORT:
            if altitude_lidar >= p.abort_altitude_m:
                self.phase = SEARCH
                return HOLD
            return self._clamped(0.0, 0.0, p.descend_vz, 0.0)  # ascend

        if self.phase == SEARCH:
            if pose is None:
                return HOLD
            self.phase = ALIGN
            self._centred_ticks = 0

        # marker-loss policy for align/orient/descend
        fresh = pose is not None
        if fresh:
            self._last_pose = pose
        else:
            if elapsed_since_fix > p.loss_abort_s:
                self.phase = ABORT
                return self._clamped(0.0, 0.0, p.descend_vz, 0.0)
            if elapsed_since_fix > p.loss_hold_s or self._last_pose is None:
                return HOLD
            pose = self._last_pose  # coast briefly on the last fix

        vx, vy = self._xy(pose)
        centred = math.hypot(*pose.offset_px) < p.centring_px

        if self.phase == ALIGN:
            if fresh:
                self._centred_ticks = self._centred_ticks + 1 if centred else 0
                need = max(1, math.ceil(p.centring_hold_s / p.control_period_s))
                if self._centred_ticks >= need:
                    self.phase = ORIENT
            return self._clamped(vx, vy, 0.0, 0.0)

        if self.phase == ORIENT:
            vz = -p.descend_vz if altitude_lidar > p.orient_altitude_m else 0.0
            aligned = (
                fresh
                and pose.orientation_deg is not None
                and pose.orientation_fresh
                and abs(pose.orientation_deg) < p.yaw_band_deg
            )
            if aligned and centred:
                self.phase = DESCEND
            return self._clamped(vx, vy, vz, self._yaw(pose))

        # DESCEND
        if altitude_lidar <= p.touchdown_m:
            self.phase = TOUCHDOWN
            return MOTORS_OFF
        return self._clamped(vx, vy, -p.descend_vz, self._yaw(pose))


@dataclass
class TickLog:
    tick: int
    t: float
    phase: str
    state: DroneState
    lidar_m: float
    pose: MarkerPose | None
    command: LandingCommand
    latency_ms: float
    overrun: bool

    def to_record(self) -> dict:
        rec = {
            "tick": self.tick,
            "t": round(self.t, 6),
            "phase": self.phase,
            "state": dataclasses.asdict(self.state),
            "lidar_m": self.lidar_m,
            "pose": None,
            "command": dataclasses.asdict(self.command),
            "latency_ms": self.latency_ms,
            "overrun": self.overrun,
        }
        if self.pose is not None:
            rec["pose"] = {
                "centre_px": list(self.pose.centre_px),
                "offset_px": list(self.pose.offset_px),
                "offset_cm": list(self.pose.offset_cm),
                "orientation_deg": self.pose.orientation_deg,
                "source": self.pose.source,
            }
        return rec


@dataclass
class SimResult:
    landed: bool
    reason: str  # "done" or "timeout"
    final_state: DroneState
    ticks: list[TickLog] = field(default_factory=list)

    @property
    def final_ground_error_m(self) -> float:
        return math.hypot(self.final_state.x, self.final_state.y)

    @property
    def final_yaw_error_deg(self) -> float:
        from .marker import wrap_degrees

        return abs(wrap_degrees(self.final_state.yaw))


class _MedianFilter:
    """Running median over the last `window` samples (odd window)."""

    def __init__(self, window: int):
        self.window = window
        self._buf: list[float] = []

    def push(self, value: float) -> float:
        self._buf.append(value)
        if len(self._buf) > self.window:
            self._buf.pop(0)
        ordered = sorted(self._buf)
        return ordered[len(ordered) // 2]


def simulate(
    initial: DroneState,
    spec: MarkerSpec | None = None,
    cam: CameraModel | None = None,
    params: LanderParams | None = None,
    seed: int = 0,
    config: Config | None = None,
    marker_removed_after_s: float | None = None,
    background: Background | None = None,
    pixel_noise_sigma: float | None = None,
) -> SimResult:
    """Closed-loop landing run: render, detect, step, integrate, repeat.

    `cam` defaults to the reduced-size simulation camera from the params.
    `marker_removed_after_s` injects a marker-loss fault at that time.
    Terminates on the done phase or after `params.timeout_s` simulated
    seconds (reason "timeout").
    """
    base = config or Config()
    params = params or base.lander
    spec = spec or base.marker_spec
    cam = cam or params.sim_camera
    sigma = params.sim_noise_sigma if pixel_noise_sigma is None else pixel_noise_sigma
    background = background or Background(kind="uniform", level=150.0)

    detector = Detector(dataclasses.replace(base, camera=cam, marker_spec=spec, lander=params))
    controller = LandingController(params)
    lidar_filter = _MedianFilter(params.lidar_median_window)

    root = np.random.SeedSequence([seed, 0x73696D])
    lidar_seed, frame_seed = root.spawn(2)
    lidar_rng = np.random.default_rng(lidar_seed)
    frame_rng = np.random.default_rng(frame_seed)

    dt = params.control_period_s
    alpha = dt / params.tau_s
    state = dataclasses.replace(initial)
    max_ticks = int(round(params.timeout_s / dt))
    ticks: list[TickLog] = []
    last_fix_t = -math.inf

    for tick in range(max_ticks):
        t = tick * dt
        include_marker = marker_removed_after_s is None or t < marker_removed_after_s

        # scene as the flipped, body-fixed camera sees it
        a = math.radians(state.yaw)
        c, s = math.cos(a), math.sin(a)
        scene = ScenePose(
            position=(-(c * state.x - s * state.y), -(s * state.x + c * state.y)),
            altitude=max(state.altitude, 0.051),
            yaw_deg=state.yaw + 180.0,
            illumination=Illumination(),
            noise_sigma=sigma,
            background=background,
        )
        frame, _ = render(
            spec,
            cam,
            scene,
            seed=int(frame_rng.integers(0, 2**63 - 1)),
            frame_index=tick,
            include_marker=include_marker,
            supersample=params.sim_supersample,
        )
        lidar = lidar_filter.push(
            state.altitude + float(lidar_rng.normal(0.0, params.lidar_sigma_m))
        )

        t0 = time.perf_counter()
        result = detector.process(frame, max(lidar, 0.06))
        latency_ms = (time.perf_counter() - t0) * 1e3

        pose = result.pose
        if pose is not None:
            last_fix_t = t
        command = controller.step(pose, lidar, t - last_fix_t)

        ticks.append(
            TickLog(
                tick=tick,
                t=t,
                phase=controller.phase,
                state=dataclasses.replace(state),
                lidar_m=lidar,
                pose=pose,
                command=command,
                latency_ms=latency_ms,
                overrun=latency_ms > dt * 1e3,
            )
        )

        if controller.phase == DONE:
            return SimResult(landed=True, reason="done", final_state=state, ticks=ticks)

        # first-order velocity response toward the setpoint, then integrate.
        # body-frame commands rotate into the pad frame by the vehicle yaw.
        wx = c * command.vx + s * command.vy
        wy = -s * command.vx + c * command.vy
        state.vx += (wx - state.vx) * alpha
        state.vy += (wy - state.vy) * alpha
        state.vz += (command.vz - state.vz) * alpha
        state.yaw_rate += (command.yaw_rate - state.yaw_rate) * alpha
        state.x += state.vx * dt
        state.y += state.vy * dt
        state.altitude = max(state.altitude + state.vz * dt, 0.0)
        state.yaw += state.yaw_rate * dt

    return SimResult(landed=False, reason="timeout", final_state=state, ticks=ticks)
