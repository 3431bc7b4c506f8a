"""Pydantic schemas for shotsort configuration."""

import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.probe import ProbeGeometry, standard_probe

DriftKind = Literal["none", "slow", "fast", "non_rigid"]

# Per-kind defaults for DriftSpec fields left unset.
DRIFT_DEFAULTS = {
    "none": {"velocity_um_per_s": 0.0, "range_um": 0.0, "jump_period_s": 0.0, "jump_max_um": 0.0},
    "slow": {"velocity_um_per_s": 10.0, "range_um": 30.0, "jump_period_s": 0.0, "jump_max_um": 0.0},
    "fast": {"velocity_um_per_s": 0.0, "range_um": 0.0, "jump_period_s": 20.0, "jump_max_um": 15.0},
    "non_rigid": {"velocity_um_per_s": 80.0, "range_um": 10.0, "jump_period_s": 0.0, "jump_max_um": 0.0},
}


class ConfigModel(BaseModel):
    """Base for configuration sections: unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid", frozen=True)


class DriftSpec(ConfigModel):
    """Probe/neuron drift along z."""
    kind: DriftKind = "none"
    velocity_um_per_s: Optional[float] = None
    range_um: Optional[float] = None
    jump_period_s: Optional[float] = None
    jump_max_um: Optional[float] = None

    @model_validator(mode='before')
    @classmethod
    def fill_kind_defaults(cls, data):
        if isinstance(data, dict):
            kind = data.get('kind', 'none')
            defaults = DRIFT_DEFAULTS.get(kind)
            if defaults is not None:
                data = dict(data)
                for key, value in defaults.items():
                    if data.get(key) is None:
                        data[key] = value
        return data

    @model_validator(mode='after')
    def numbers_valid(self):
        if self.kind in ("slow", "non_rigid"):
            if not self.velocity_um_per_s > 0 or not self.range_um > 0:
                raise ValueError(f'{self.kind} drift needs positive velocity and range')
        if self.kind == "fast":
            if not self.jump_period_s > 0 or self.jump_max_um < 0 or self.range_um < 0:
                raise ValueError('fast drift needs a positive jump period and non-negative jump/range')
        return self


class SynthConfig(ConfigModel):
    """Synthetic recording parameters."""
    probe: ProbeGeometry = Field(default_factory=lambda: standard_probe("sparse16"))
    n_neurons: int = Field(20, ge=1)
    duration_s: float = Field(100.0, gt=0)
    noise_uv: float = Field(10.0, ge=0)
    drift: DriftSpec = Field(default_factory=DriftSpec)
    sample_rate_hz: float = Field(30000.0, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    firing_rate_range_hz: Tuple[float, float] = (2.0, 8.0)
    amplitude_range_uv: Tuple[float, float] = (60.0, 200.0)
    decay_um: float = Field(25.0, gt=0)
    refractory_ms: float = Field(2.0, ge=0)
    hull_margin_um: float = Field(50.0, ge=0)
    name: str = "synthetic"

    @field_validator('firing_rate_range_hz', 'amplitude_range_uv')
    @classmethod
    def range_positive(cls, v):
        low, high = v
        if not (0 < low <= high):
            raise ValueError(f'Range must satisfy 0 < low <= high, got {v}')
        return v

    @model_validator(mode='after')
    def enough_spikes(self):
        expected = self.firing_rate_range_hz[0] * self.duration_s
        if expected < 1:
            raise ValueError(
                f'Expected spikes per neuron is {expected:.3f} < 1 '
                f'(duration {self.duration_s} s at minimum rate {self.firing_rate_range_hz[0]} Hz); '
                'the recording is too short for training use'
            )
        if self.refractory_ms * 1e-3 * self.firing_rate_range_hz[1] >= 1:
            raise ValueError('Firing rate is incompatible with the refractory period')
        return self


class WindowSpec(ConfigModel):
    """Window geometry for dataset construction."""
    t_window: int = 61
    t_shift: int = 5
    center_tolerance: int = Field(0, ge=0)

    @model_validator(mode='after')
    def window_valid(self):
        if self.t_window < 3 or self.t_window % 2 == 0:
            raise ValueError(f't_window must be odd and >= 3, got {self.t_window}')
        if not (0 <= self.t_shift < self.t_window / 2):
            raise ValueError(f't_shift must lie in [0, t_window/2), got {self.t_shift}')
        return self

    @property
    def half(self) -> int:
        return self.t_window // 2

    @classmethod
    def for_sample_rate(cls, sample_rate_hz: float, t_shift: int = 5) -> "WindowSpec":
        """Two milliseconds of samples, rounded up to odd."""
        t_window = int(math.ceil(2e-3 * sample_rate_hz))
        if t_window % 2 == 0:
            t_window += 1
        return cls(t_window=max(t_window, 3), t_shift=t_shift)


class BackboneConfig(ConfigModel):
    """Feature-map counts and kernel lengths of the backbone."""
    c_t1: int = Field(16, ge=1)
    c_t2: int = Field(8, ge=1)
    c_s: int = Field(32, ge=1)
    k_t1: int = Field(11, ge=1)
    k_t2: int = Field(5, ge=1)

    @field_validator('k_t1', 'k_t2')
    @classmethod
    def kernel_odd(cls, v):
        if v % 2 == 0:
            raise ValueError(f'Kernel length must be odd, got {v}')
        return v


class TrainConfig(ConfigModel):
    """Optimizer and schedule settings."""
    epochs: int = Field(50, ge=1)
    learning_rate: float = Field(5e-3, ge=0)
    batch_size: int = Field(64, ge=1)
    adam_beta1: float = Field(0.9, ge=0, lt=1)
    adam_beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)


class TrainSettings(TrainConfig):
    """Training section of a run config, with the few-shot selection."""
    n_ft: Optional[int] = Field(None, ge=1)
    selection: Literal["random", "earliest"] = "random"

    def train_config(self) -> TrainConfig:
        return TrainConfig(**self.model_dump(exclude={'n_ft', 'selection'}))


class PostprocConfig(ConfigModel):
    """Triangle filter width and detection threshold."""
    triangle_half_width: int = Field(5, ge=0)
    threshold: float = Field(0.5, gt=0, le=1)

    def taps(self) -> List[float]:
        """Triangle kernel [1, 2, ..., h+1, ..., 2, 1] / (h+1)**2."""
        h = self.triangle_half_width
        norm = float((h + 1) ** 2)
        return [(h + 1 - abs(i)) / norm for i in range(-h, h + 1)]


class MatchConfig(ConfigModel):
    """Spike matching tolerance."""
    tolerance_samples: int = Field(12, ge=0)

    @classmethod
    def for_sample_rate(cls, sample_rate_hz: float, tolerance_ms: float = 0.4) -> "MatchConfig":
        return cls(tolerance_samples=int(round(tolerance_ms * 1e-3 * sample_rate_hz)))


class EvalSettings(MatchConfig):
    """Evaluation section of a run config."""
    boundary_s: float = Field(50.0, gt=0)
    n_ft_list: List[int] = Field(default_factory=lambda: list(range(3, 38)))

    def match_config(self) -> MatchConfig:
        return MatchConfig(tolerance_samples=self.tolerance_samples)


class RunConfig(ConfigModel):
    """Complete, self-describing configuration of a run."""
    synth: SynthConfig = Field(default_factory=SynthConfig)
    window: WindowSpec = Field(default_factory=WindowSpec)
    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    train: TrainSettings = Field(default_factory=TrainSettings)
    postproc: PostprocConfig = Field(default_factory=PostprocConfig)
    eval: EvalSettings = Field(default_factory=EvalSettings)
