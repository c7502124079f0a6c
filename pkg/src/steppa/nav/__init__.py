"""Navigation episodes, offline experience trials and disturbance scripts."""

from .episode import (
    DisturbanceScript,
    EpisodeReport,
    NavConfig,
    NavState,
    SpawnCommand,
    initial_state,
    parse_spawn,
    parse_spawns,
    replan,
    run_episode,
    tick,
)
from .events import EventKind, NavEvent, check_causality, events_to_csv
from .perception import PerceivedRegion, camera_pose
from .trials import TrialConfig, TrialReport, run_offline_trials, trials_to_json
