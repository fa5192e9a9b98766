import json
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, computed_field, model_validator

from src.exceptions import BadParams


def _first_error(error: ValidationError) -> str:
    detail = error.errors()[0]
    where = '.'.join(str(p) for p in detail.get('loc', ())) or 'config'
    return f'{where}: {detail["msg"]}'


class PatternEnum(str, Enum):
    dense = 'dense'
    unstructured = 'unstructured'
    vector_wise = 'vw'
    block_wise = 'bw'
    shfl_bw = 'shflbw'
    balanced = 'balanced'

    @classmethod
    def _missing_(cls, value: object) -> 'PatternEnum | None':
        aliases = {
            'vector_wise': cls.vector_wise,
            'vector-wise': cls.vector_wise,
            'block_wise': cls.block_wise,
            'block-wise': cls.block_wise,
            'shfl_bw': cls.shfl_bw,
            'shfl-bw': cls.shfl_bw,
        }
        if isinstance(value, str):
            return aliases.get(value.lower())
        return None

    @property
    def tiles_dense(self) -> bool:
        """Whether tiles of this pattern can be made dense (block, vector, shuffled)."""
        return self in (PatternEnum.vector_wise, PatternEnum.block_wise, PatternEnum.shfl_bw)


class ScheduleOrderEnum(str, Enum):
    load_then_compute = 'load_then_compute'
    compute_then_load = 'compute_then_load'


class HazardKindEnum(str, Enum):
    overwrite_before_read = 'overwrite_before_read'
    read_before_write = 'read_before_write'
    stale_read = 'stale_read'
    metadata_not_loaded = 'metadata_not_loaded'


class AnalysisModeEnum(str, Enum):
    intensity = 'intensity'
    flexibility = 'flexibility'
    required_reuse = 'required-reuse'


class PruneConfig(BaseModel):
    """Parameters of the two-step Shfl-BW pattern search."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(gt=0, le=1)
    beta_factor: float = Field(default=2.0, gt=0)
    V: int = Field(ge=1)
    kmeans_max_iters: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    restarts: int = Field(default=4, ge=1)
    threads: int = Field(default=1, ge=1)

    @property
    def beta(self) -> float:
        return min(1.0, self.beta_factor * self.alpha)

    @classmethod
    def build(cls, **kwargs: Any) -> 'PruneConfig':
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise BadParams(_first_error(e)) from e


class TileConfig(BaseModel):
    """Tile sizes and pipeline depths of the SpMM executor."""

    model_config = ConfigDict(frozen=True)

    T_M: int = Field(default=64, ge=1)
    T_N: int = Field(default=32, ge=1)
    T_K: int = Field(default=16, ge=1)
    regfile_size: int = Field(default=4096, ge=1)
    pipe_stage: int = Field(default=2, ge=2)
    meta_prefetch_stage: int = Field(default=4, ge=1)

    @model_validator(mode='after')
    def _check_regfile(self) -> 'TileConfig':
        if self.T_M * self.T_N > self.regfile_size:
            raise ValueError(
                f'T_M x T_N = {self.T_M * self.T_N} exceeds regfile_size {self.regfile_size}'
            )
        return self

    @classmethod
    def build(cls, **kwargs: Any) -> 'TileConfig':
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise BadParams(_first_error(e)) from e


class HardwareModel(BaseModel):
    """Throughput/bandwidth pair behind the reuse-demand and intensity models."""

    model_config = ConfigDict(frozen=True)

    name: str = 'custom'
    description: str | None = None
    peak_mac_per_s: float = Field(gt=0)
    llc_bandwidth_bytes_per_s: float = Field(gt=0)
    bytes_per_value: float = Field(default=2, gt=0)
    regfile_size: int = Field(default=4096, ge=1)


class IntensityReport(BaseModel):
    """Achievable operation intensity of one sparsity pattern."""

    pattern: PatternEnum
    alpha: float
    V: int | None = None
    reuse_flop_per_byte: float
    reuse_dense_flop_per_byte: float
    ratio_to_dense: float = Field(gt=0, le=1 + 1e-12)
    tile_opt: float
    note: str | None = None


class ValidationReport(BaseModel):
    """Outcome of checking a mask against one sparsity pattern."""

    pattern: PatternEnum
    passed: bool
    counterexample: tuple[int, int] | None = None
    message: str = ''

    def __bool__(self) -> bool:
        return self.passed


class ScheduleEvent(BaseModel):
    kind: str
    slot: int | None = None
    step: int | None = None


class IterationRecord(BaseModel):
    metaload_step: int
    load_step: int
    step: int
    events: list[ScheduleEvent] = Field(default_factory=list)


class Hazard(BaseModel):
    step: int
    slot: int
    kind: HazardKindEnum


class ScheduleCounters(BaseModel):
    meta_bulk_loads: int = 0
    stitches: int = 0
    mmas: int = 0
    total_step: int = 0


class ScheduleTrace(BaseModel):
    """Step-level record of one run of the metadata-prefetch pipeline."""

    config: dict[str, Any]
    iterations: list[IterationRecord] = Field(default_factory=list)
    hazards: list[Hazard] = Field(default_factory=list)
    counters: ScheduleCounters = Field(default_factory=ScheduleCounters)

    @property
    def hazard_free(self) -> bool:
        return not self.hazards

    def to_json(self, include_iterations: bool = False, indent: int | None = 4) -> str:
        payload = {
            'config': self.config,
            'counters': self.counters.model_dump(),
            'hazards': [h.model_dump(mode='json') for h in self.hazards],
        }
        if include_iterations:
            payload['iterations'] = [it.model_dump(mode='json') for it in self.iterations]
        return json.dumps(payload, indent=indent)


class RunManifest(BaseModel):
    """Everything needed to re-run a CLI command and check its outputs."""

    command: str
    inputs: dict[str, str] = Field(default_factory=dict)
    params: dict[str, Any] = Field(default_factory=dict)
    seed: int | None = None
    tool_version: str
    output_digests: dict[str, str] = Field(default_factory=dict)


class PruningEvaluation(BaseModel):
    """Represents a calibration run of the pruning pipeline."""

    instances: int
    rows: int
    cols: int
    alpha: float
    V: int
    seed: int
    shflbw_ge_vw: int = 0
    vw_ge_bw: int = 0
    shflbw_gt_vw: int = 0
    within_90pct_of_optimum: int | None = None
    optimum_instances: int | None = None
    optimum_shape: list[int] | None = None
    optimum_V: int | None = None
    evaluation_time: str | None = None
    model_config = ConfigDict(extra='allow')

    @computed_field
    @property
    def strict_improvement_rate(self) -> float:
        return round(self.shflbw_gt_vw / self.instances, 4) if self.instances else 0.0

    @computed_field
    @property
    def vw_ge_bw_rate(self) -> float:
        return round(self.vw_ge_bw / self.instances, 4) if self.instances else 0.0

    @computed_field
    @property
    def within_90pct_rate(self) -> float | None:
        if not self.optimum_instances or self.within_90pct_of_optimum is None:
            return None
        return round(self.within_90pct_of_optimum / self.optimum_instances, 4)


class ExecutorEvaluation(BaseModel):
    """Represents a randomized oracle sweep of the SpMM or convolution executor."""

    kernel: str
    instances: int
    seed: int
    max_relative_error: float = 0.0
    exact_matches: int = 0
    failures: int = 0
    tolerance: float = 1e-5
    evaluation_time: str | None = None
    model_config = ConfigDict(extra='allow')
