"""
Spectrum Sharing Simulator Configuration
Centralized defaults, the runtime SimConfig type and the key=value config loader.
"""
import dataclasses
import logging
import math
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from spectrum_sim.errors import ConfigError
from spectrum_sim.utils import db_to_linear, dbm_to_watts

logger = logging.getLogger(__name__)


class Config:
    """Default values for every tunable of the experiment"""

    # ============================================================================
    # GEOMETRY SETTINGS
    # ============================================================================
    # Side of the square building floor (meters)
    AREA_SIDE_M = 20.0
    SBS_PER_OP = 4
    # Each UE lies within this radius of its serving SBS (meters)
    UE_MAX_DIST_M = 5.0
    # Distances below this are clamped before evaluating the pathloss
    MIN_DIST_M = 0.1

    # ============================================================================
    # PROPAGATION SETTINGS
    # ============================================================================
    PL_CONST_DB = 37.0
    PL_SLOPE_DB = 20.0
    # 20 dB/decade corresponds to alpha = 2; the expected-rate formula needs 4
    PATHLOSS_EXPONENT = 2.0
    WALL_LOSS_DB = 15.0
    WALL_MODEL_ENABLED = False
    SHADOW_SIGMA_DB = 4.0
    NOISE_POWER_DBM = -120.0

    # ============================================================================
    # POWER SETTINGS
    # ============================================================================
    P_TOT_DBM = 10.0
    NUM_POWER_LEVELS = 4
    SINR_TH_DB = 3.0
    # Rates only count when the QoS threshold is met
    QOS_GATE = True
    POWER_MODES = ('uniform', 'full', 'qlearning')
    POWER_MODE = 'qlearning'

    # ============================================================================
    # GAME SETTINGS
    # ============================================================================
    NUM_RBS = 5
    RB_CAPACITY = 4
    RB_QUOTA = (2, 3, 4)
    OP_WEIGHT = 1.0
    SBS_WEIGHT = 1.0

    # c-vectors of the CDF experiments, keyed by number of operators
    QUOTAS_BY_NUM_OPS = {
        3: (2, 3, 4),
        4: (2, 3, 4, 2),
        5: (2, 3, 4, 2, 2),
        6: (2, 3, 4, 4, 5, 2),
    }
    # c-vectors of the per-operator average experiment (K=4 differs)
    AVERAGE_QUOTAS_BY_NUM_OPS = {
        3: (2, 3, 4),
        4: (2, 5, 4, 2),
        5: (2, 3, 4, 2, 2),
        6: (2, 3, 4, 4, 5, 2),
    }

    # ============================================================================
    # LEARNING SETTINGS
    # ============================================================================
    GAMMA = 0.9
    LEARNING_RATE = 0.1
    LR_DECAY = True
    TEMP_TP = 0.5
    EPISODES = 500

    # ============================================================================
    # SOLVER SETTINGS
    # ============================================================================
    SOLVERS = ('greedy', 'mcmc')
    SOLVER = 'mcmc'
    GREEDY_MAX_ITERATIONS = 2000
    MCMC_MAX_ITERATIONS = 5000
    TEMP_TB = 1.0
    # Monte Carlo fade draws behind each desirability estimate
    FADE_DRAWS = 64

    # Exhaustive oracle limits
    ORACLE_MAX_CHILDREN = 6
    ORACLE_MAX_RBS = 4

    # ============================================================================
    # EXPERIMENT SETTINGS
    # ============================================================================
    SAMPLES = 2500
    SEED = 2017
    WORKERS = 1
    WORKERS_ENV = 'SPECTRUM_SIM_WORKERS'
    # Matching <-> learning outer loop
    CONVERGENCE_TOL = 1e-4
    MAX_ROUNDS = 20

    # Cache size for memoization (number of function calls)
    CACHE_SIZE = 4096

    # ============================================================================
    # OUTPUT SETTINGS
    # ============================================================================
    DEFAULT_OUTPUT_DIR = 'results'
    FLOAT_FORMAT = '%.9g'
    SAMPLES_FILE = 'samples.csv'
    CDF_FILE = 'cdf.csv'
    TRACE_FILE = 'trace.csv'
    POWER_FILE = 'power.csv'
    SUMMARY_FILE = 'summary.json'

    @classmethod
    def default_iterations(cls, solver: str) -> int:
        return cls.GREEDY_MAX_ITERATIONS if solver == 'greedy' else cls.MCMC_MAX_ITERATIONS

    @classmethod
    def resolve_workers(cls, requested: Optional[int] = None) -> int:
        """Worker count: environment variable first, then the explicit request."""
        env_value = os.environ.get(cls.WORKERS_ENV)
        if env_value:
            try:
                workers = int(env_value)
            except ValueError:
                raise ConfigError(f"{cls.WORKERS_ENV} must be an integer, got {env_value!r}")
        else:
            workers = requested if requested is not None else cls.WORKERS
        if workers < 1:
            raise ConfigError(f"worker count must be >= 1, got {workers}")
        return workers


# ============================================================================
# RUNTIME CONFIGURATION
# ============================================================================

@dataclass(frozen=True)
class SimConfig:
    """
    Every tunable of one experiment.

    Transmit power, noise power and the SINR threshold are held in linear units
    (watts, watts, ratio). Pathloss model parameters stay in dB because they are
    only evaluated inside the dB pathloss formula.
    """
    # geometry
    area_side: float = Config.AREA_SIDE_M
    sbs_per_op: int = Config.SBS_PER_OP
    ue_max_dist: float = Config.UE_MAX_DIST_M
    min_dist: float = Config.MIN_DIST_M
    # propagation
    pl_const: float = Config.PL_CONST_DB
    pl_slope: float = Config.PL_SLOPE_DB
    pathloss_exponent: float = Config.PATHLOSS_EXPONENT
    wall_loss: float = Config.WALL_LOSS_DB
    wall_model: bool = Config.WALL_MODEL_ENABLED
    shadow_sigma: float = Config.SHADOW_SIGMA_DB
    noise_power: float = dbm_to_watts(Config.NOISE_POWER_DBM)
    # power
    p_tot: float = dbm_to_watts(Config.P_TOT_DBM)
    num_power_levels: int = Config.NUM_POWER_LEVELS
    sinr_th: float = db_to_linear(Config.SINR_TH_DB)
    qos_gate: bool = Config.QOS_GATE
    power_mode: str = Config.POWER_MODE
    # game
    num_rbs: int = Config.NUM_RBS
    rb_capacity: Tuple[int, ...] = (Config.RB_CAPACITY,) * Config.NUM_RBS
    rb_quota: Tuple[int, ...] = Config.RB_QUOTA
    op_weight: Tuple[float, ...] = (Config.OP_WEIGHT,) * len(Config.RB_QUOTA)
    sbs_weight: float = Config.SBS_WEIGHT
    # learning
    gamma: float = Config.GAMMA
    lr: float = Config.LEARNING_RATE
    lr_decay: bool = Config.LR_DECAY
    temp_tp: float = Config.TEMP_TP
    episodes: int = Config.EPISODES
    # solver
    solver: str = Config.SOLVER
    max_iterations: int = Config.MCMC_MAX_ITERATIONS
    temp_tb: float = Config.TEMP_TB
    fade_draws: int = Config.FADE_DRAWS
    # experiment
    samples: int = Config.SAMPLES
    seed: int = Config.SEED
    workers: int = Config.WORKERS
    convergence_tol: float = Config.CONVERGENCE_TOL
    max_rounds: int = Config.MAX_ROUNDS

    def __post_init__(self) -> None:
        self.validate()

    # ── Derived quantities ───────────────────────────────────────────────────

    @property
    def num_ops(self) -> int:
        return len(self.rb_quota)

    @property
    def num_sbs(self) -> int:
        return self.num_ops * self.sbs_per_op

    @property
    def power_quantum(self) -> float:
        """delta = p_tot / N (watts)"""
        return self.p_tot / self.num_power_levels

    @property
    def num_children(self) -> int:
        return int(sum(self.rb_quota))

    # ── Validation ───────────────────────────────────────────────────────────

    def validate(self) -> None:
        """Raise ConfigError when the configuration is invalid or infeasible."""
        if not self.rb_quota:
            raise ConfigError("game.rb_quota must list at least one operator")
        if any(c < 1 for c in self.rb_quota):
            raise ConfigError(f"every rb_quota entry must be >= 1, got {list(self.rb_quota)}")
        if self.num_rbs < 1:
            raise ConfigError(f"game.num_rbs must be >= 1, got {self.num_rbs}")
        if len(self.rb_capacity) != self.num_rbs:
            raise ConfigError(
                f"game.rb_capacity lists {len(self.rb_capacity)} RBs but num_rbs is {self.num_rbs}"
            )
        if any(b < 1 for b in self.rb_capacity):
            raise ConfigError(f"every rb_capacity entry must be >= 1, got {list(self.rb_capacity)}")
        if sum(self.rb_capacity) < sum(self.rb_quota):
            raise ConfigError(
                f"infeasible: total RB capacity {sum(self.rb_capacity)} "
                f"< total quota {sum(self.rb_quota)}"
            )
        if len(self.op_weight) != self.num_ops:
            raise ConfigError(
                f"game.op_weight lists {len(self.op_weight)} weights for {self.num_ops} operators"
            )
        if self.num_power_levels < 1:
            raise ConfigError(f"power.num_levels must be >= 1, got {self.num_power_levels}")
        if not math.isclose(self.power_quantum * self.num_power_levels, self.p_tot, rel_tol=1e-9):
            raise ConfigError("power quantum does not tile p_tot")
        for name in ('area_side', 'ue_max_dist', 'min_dist', 'noise_power', 'p_tot',
                     'sinr_th', 'temp_tp', 'temp_tb', 'pathloss_exponent'):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.shadow_sigma < 0:
            raise ConfigError(f"shadow_sigma must be >= 0, got {self.shadow_sigma}")
        if self.sbs_per_op < 1:
            raise ConfigError(f"geometry.sbs_per_op must be >= 1, got {self.sbs_per_op}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"learning.gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 < self.lr <= 1.0:
            raise ConfigError(f"learning.lr must be in (0, 1], got {self.lr}")
        if self.solver not in Config.SOLVERS:
            raise ConfigError(f"solver.kind must be one of {Config.SOLVERS}, got {self.solver!r}")
        if self.power_mode not in Config.POWER_MODES:
            raise ConfigError(
                f"power.mode must be one of {Config.POWER_MODES}, got {self.power_mode!r}"
            )
        for name in ('episodes', 'max_iterations', 'samples', 'max_rounds'):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.fade_draws < 1:
            raise ConfigError(f"solver.fade_draws must be >= 1, got {self.fade_draws}")
        if self.workers < 1:
            raise ConfigError(f"experiment.workers must be >= 1, got {self.workers}")
        if self.convergence_tol < 0:
            raise ConfigError(f"experiment.convergence_tol must be >= 0, got {self.convergence_tol}")

    # ── Construction ─────────────────────────────────────────────────────────

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> 'SimConfig':
        """
        Build a validated SimConfig from dotted config-file keys.

        Args:
            mapping: e.g. {'game.rb_quota': '2,3,4', 'power.p_tot_dbm': '10'}

        Returns:
            SimConfig with every dB/dBm value converted to linear units
        """
        values: Dict[str, Any] = {}
        for key, raw in mapping.items():
            if key not in _KEY_SPECS:
                raise ConfigError(f"unknown config key {key!r}")
            field_name, parser = _KEY_SPECS[key]
            try:
                values[field_name] = parser(raw)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {key}: {raw!r} ({e})") from e

        return cls.from_values(values)

    @classmethod
    def from_values(cls, values: Mapping[str, Any]) -> 'SimConfig':
        """Apply defaults and broadcasting rules to already-parsed field values."""
        values = dict(values)
        num_ops = values.pop('num_ops', None)
        quota = tuple(values.get('rb_quota', Config.RB_QUOTA))
        if num_ops is not None and num_ops != len(quota):
            raise ConfigError(f"geometry.num_ops={num_ops} but rb_quota lists {len(quota)} operators")
        values['rb_quota'] = quota

        num_rbs = values.get('num_rbs', Config.NUM_RBS)
        values['rb_capacity'] = _broadcast(values.get('rb_capacity', Config.RB_CAPACITY),
                                           num_rbs, 'game.rb_capacity', int)
        values['op_weight'] = _broadcast(values.get('op_weight', Config.OP_WEIGHT),
                                         len(quota), 'game.op_weight', float)

        if values.get('max_iterations') is None:
            values['max_iterations'] = Config.default_iterations(values.get('solver', Config.SOLVER))

        try:
            sim_config = cls(**values)
        except TypeError as e:
            raise ConfigError(str(e)) from e

        if not math.isclose(sim_config.pl_slope, 10.0 * sim_config.pathloss_exponent):
            logger.warning(
                f"pl_slope={sim_config.pl_slope} dB/decade implies alpha="
                f"{sim_config.pl_slope / 10.0:g} but pathloss_exponent={sim_config.pathloss_exponent:g}; "
                "the simulation uses pl_slope, the expected-rate analysis uses pathloss_exponent"
            )
        return sim_config

    def with_overrides(self, **changes: Any) -> 'SimConfig':
        """Validated copy with some fields replaced (None values are ignored)."""
        changes = {k: v for k, v in changes.items() if v is not None}
        if not changes:
            return self
        # an explicit iteration cap survives a solver switch
        if ('max_iterations' not in changes and changes.get('solver', self.solver) != self.solver
                and self.max_iterations == Config.default_iterations(self.solver)):
            changes['max_iterations'] = Config.default_iterations(changes['solver'])
        if 'rb_quota' in changes and 'op_weight' not in changes:
            changes['op_weight'] = (self.op_weight[0],) * len(changes['rb_quota'])
        if 'num_rbs' in changes and 'rb_capacity' not in changes:
            changes['rb_capacity'] = (self.rb_capacity[0],) * changes['num_rbs']
        try:
            return dataclasses.replace(self, **changes)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> Dict[str, Any]:
        """Plain JSON-friendly echo of every field."""
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in dataclasses.asdict(self).items()}


# ============================================================================
# CONFIG FILE PARSING
# ============================================================================

def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError("expected a boolean")


def _parse_int_list(raw: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in raw.split(',') if part.strip())


def _parse_number_or_list(cast: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(raw: str) -> Any:
        parts = [p for p in raw.split(',') if p.strip()]
        if len(parts) == 1:
            return cast(parts[0])
        return tuple(cast(p) for p in parts)
    return parse


def _broadcast(value: Any, length: int, key: str, cast: Callable[[Any], Any]) -> tuple:
    if isinstance(value, (tuple, list)):
        if len(value) == 1:
            return (cast(value[0]),) * length
        if len(value) != length:
            raise ConfigError(f"{key} lists {len(value)} values, expected 1 or {length}")
        return tuple(cast(v) for v in value)
    return (cast(value),) * length


def _optional_int(raw: str) -> Optional[int]:
    return None if raw.strip().lower() in ('', 'auto') else int(raw)


_KEY_SPECS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    'geometry.area_side': ('area_side', float),
    'geometry.num_ops': ('num_ops', int),
    'geometry.sbs_per_op': ('sbs_per_op', int),
    'geometry.ue_max_dist': ('ue_max_dist', float),
    'geometry.min_dist': ('min_dist', float),
    'propagation.pl_const': ('pl_const', float),
    'propagation.pl_slope': ('pl_slope', float),
    'propagation.pathloss_exponent': ('pathloss_exponent', float),
    'propagation.wall_loss': ('wall_loss', float),
    'propagation.wall_model': ('wall_model', _parse_bool),
    'propagation.shadow_sigma': ('shadow_sigma', float),
    'propagation.noise_power_dbm': ('noise_power', lambda raw: dbm_to_watts(float(raw))),
    'power.p_tot_dbm': ('p_tot', lambda raw: dbm_to_watts(float(raw))),
    'power.num_levels': ('num_power_levels', int),
    'power.sinr_th_db': ('sinr_th', lambda raw: db_to_linear(float(raw))),
    'power.qos_gate': ('qos_gate', _parse_bool),
    'power.mode': ('power_mode', str.strip),
    'game.num_rbs': ('num_rbs', int),
    'game.rb_capacity': ('rb_capacity', _parse_number_or_list(int)),
    'game.rb_quota': ('rb_quota', _parse_int_list),
    'game.op_weight': ('op_weight', _parse_number_or_list(float)),
    'game.sbs_weight': ('sbs_weight', float),
    'learning.gamma': ('gamma', float),
    'learning.lr': ('lr', float),
    'learning.lr_decay': ('lr_decay', _parse_bool),
    'learning.temp_tp': ('temp_tp', float),
    'learning.episodes': ('episodes', int),
    'solver.kind': ('solver', str.strip),
    'solver.max_iterations': ('max_iterations', _optional_int),
    'solver.temp_tb': ('temp_tb', float),
    'solver.fade_draws': ('fade_draws', int),
    'experiment.samples': ('samples', int),
    'experiment.seed': ('seed', int),
    'experiment.workers': ('workers', int),
    'experiment.convergence_tol': ('convergence_tol', float),
    'experiment.max_rounds': ('max_rounds', int),
}


def parse_config_text(text: str, source: str = '<string>') -> Dict[str, str]:
    """
    Parse flat key=value text with section prefixes.

    Args:
        text: Config file contents
        source: Name used in error messages

    Returns:
        Dict of dotted key -> raw string value
    """
    mapping: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in _KEY_SPECS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in mapping:
            raise ConfigError(f"{source}:{lineno}: duplicate config key {key!r}")
        mapping[key] = value
    return mapping


def load_config(path: str) -> SimConfig:
    """Read a config file from disk and build the SimConfig."""
    try:
        with open(path, encoding='utf-8') as handle:
            text = handle.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror or e}") from e
    return SimConfig.from_mapping(parse_config_text(text, source=path))
