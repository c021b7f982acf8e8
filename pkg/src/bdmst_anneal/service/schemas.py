"""Request/response models for the service endpoints."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field, field_validator


class InstanceModel(BaseModel):
    label: str = ""
    n: int = Field(ge=1)
    edges: list[tuple[int, int]]
    weights: list[int]
    delta: int = Field(ge=2)
    root: Optional[int] = None

    @field_validator("weights")
    @classmethod
    def _positive_weights(cls, v):
        if any(w <= 0 for w in v):
            raise ValueError("weights must be positive")
        return v


class BuildInstanceRequest(BaseModel):
    graph_label: str
    weight_label: str
    delta: int = 2
    root: Optional[int] = None


class SolveExactResponse(BaseModel):
    feasible: bool
    cost: Optional[int] = None
    tree_edges: Optional[list[tuple[int, int]]] = None
    mst_cost: Optional[int] = None


class CompileRequest(BaseModel):
    instance: InstanceModel
    preprocess: bool = True
    epsilon: int = 0


class QuboTermModel(BaseModel):
    i: int
    j: int
    coeff: int


class CompileResponse(BaseModel):
    num_vars: int
    counts: dict[str, int]
    penalty_weight: int
    offset: int
    terms: list[QuboTermModel]
    variables: list[dict]
    coo: str


class EmbedRequest(BaseModel):
    instance: InstanceModel
    preprocess: bool = True
    epsilon: int = 0
    hardware: str = "chimera"
    hw_size: list[int] = [12, 12, 4]
    attempts: int = Field(default=4, ge=1)
    seed: Optional[int] = None


class EmbedResponse(BaseModel):
    num_logical: int
    physical_count: int
    median_chain_size: float
    max_chain_size: int
    chains: dict[str, list[int]]
    hardware: str
    hw_size: list[int]


class ExperimentRequest(BaseModel):
    graph_label: str
    weight_label: str = "w2"
    delta: int = 2
    root: Optional[int] = None
    preprocess: bool = True
    epsilon: int = 0
    hardware: str = "chimera"
    hw_size: list[int] = [12, 12, 4]
    attempts: int = Field(default=4, ge=1)
    t_a: float = Field(default=1.0, gt=0)
    s_p: Optional[float] = None
    t_p: float = Field(default=0.0, ge=0)
    j_ferro: float = Field(default=1.6, gt=0)
    reads: int = Field(default=500, ge=1)
    gauges: int = Field(default=100, ge=1)
    sweeps: int = Field(default=128, ge=1)
    beta_start: float = Field(default=0.1, gt=0)
    beta_end: float = Field(default=10.0, gt=0)
    seed: int = 0


class ExperimentResponse(BaseModel):
    instance: str
    t_a: float
    s_p: Optional[float]
    t_p: float
    j_ferro: float
    gauges: int
    reads: int
    oracle_cost: int
    p_success: float
    chain_break_fraction: float
    best_valid_cost: Optional[int]
    t_tot: float
    tts: str  # extended real, "inf" when unsolved


class GapTraceRequest(BaseModel):
    j_ferro: list[float] = [2.0, 4.0, 8.0]
    grid_points: int = Field(default=97, ge=3)
    s_min: float = Field(default=0.02, gt=0, lt=1)
    s_max: float = Field(default=0.98, gt=0, lt=1)
    k: int = Field(default=4, ge=2)


class GapTracePoint(BaseModel):
    s: float
    energies: list[float]
    gap: float
    p_logical: list[float]


class GapTraceResponse(BaseModel):
    j_ferro: float
    s_star: float
    gap_min: float
    points: list[GapTracePoint]


class PauseRequest(BaseModel):
    j_ferro: float = 2.0
    s_p: Optional[float] = None
    t_p: float = Field(default=0.0, ge=0)
    t_a: float = Field(default=1.0, gt=0)
    temperature: float = Field(default=0.2985, gt=0)
    gamma0: float = Field(default=30.0, ge=0)
    k: int = Field(default=6, ge=2)


class PauseResponse(BaseModel):
    p_ground_final: float
    leakage: float
    s_path: list[float]
    ground_population: list[float]


class TtsRequest(BaseModel):
    p_success: float = Field(ge=0.0, le=1.0)
    t_tot: float = Field(gt=0)


class DeltaTtsRequest(BaseModel):
    tts_nopause: str
    tts_pause: str


class BootstrapRequest(BaseModel):
    values: list[str]
    num_bootstrap: int = Field(default=100_000, ge=1)
    seed: Optional[int] = None


class BootstrapResponse(BaseModel):
    median: str
    p35: str
    p65: str
    num_bootstrap: int
    seed: Optional[int]
