import configparser
import io
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.domain.audio.entity import AugmentConfig, FrontendConfig
from app.domain.bench.entity import DEFAULT_DURATIONS
from app.domain.network.entity import BiMambaVariant, ModelConfig, TrainConfig
from app.domain.scoring.entity import TdcfCostModel
from app.shared.errors import ConfigError, InvalidCostModelError
from app.shared.utils.validators import split_csv


@dataclass
class Config:
    # Logging and Monitoring
    log_level: str
    log_dir: str
    environment: str
    app_version: str
    enable_metrics: bool
    # Runs
    runs_root: str
    torch_num_threads: int


def load_config() -> Config:
    load_dotenv()
    return Config(
        # Logging and Monitoring
        log_level=os.getenv("LOG_LEVEL", "INFO"),
        log_dir=os.getenv("LOG_DIR", "logs"),
        environment=os.getenv("ENVIRONMENT", "development"),
        app_version=os.getenv("APP_VERSION", "1.0.0"),
        enable_metrics=os.getenv("ENABLE_METRICS", "true").lower() == "true",
        # Runs
        runs_root=os.getenv("RUNS_ROOT", "runs"),
        torch_num_threads=int(os.getenv("TORCH_NUM_THREADS", "1")),
    )


class DataConfig(BaseModel):
    """Where the training and dev utterances come from"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    train_manifest: Optional[str] = None
    dev_manifest: Optional[str] = None
    # without manifests a synthetic set is generated
    synth_seed: int = 0
    synth_train_per_class: int = Field(200, ge=1)
    synth_dev_per_class: int = Field(100, ge=1)
    synth_samples: int = Field(32000, ge=1)
    frontend: bool = True


class BenchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    systems: Tuple[str, ...] = ("trunk", "attention")
    durations: Tuple[float, ...] = DEFAULT_DURATIONS
    runs: int = Field(20, ge=1)
    warmup: int = Field(3, ge=0)
    # None means one attention layer per selective-scan branch of the trunk
    attention_layers: Optional[int] = Field(None, ge=1)

    @field_validator("systems", "durations", mode="before")
    @classmethod
    def split_lists(cls, v):
        return split_csv(v)

    @field_validator("systems")
    @classmethod
    def validate_systems(cls, v):
        unknown = set(v) - {"trunk", "frontend", "attention"}
        if unknown:
            raise ValueError(f"unknown bench systems: {sorted(unknown)}")
        return v


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 1234
    out_dir: Optional[str] = None
    variants: Tuple[BiMambaVariant, ...] = tuple(BiMambaVariant)
    tdcf: Optional[str] = None

    @field_validator("variants", mode="before")
    @classmethod
    def split_variants(cls, v):
        return split_csv(v)


class RunConfig(BaseModel):
    """One validated run configuration; every section rejects unknown keys"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    data: DataConfig = DataConfig()
    augment: AugmentConfig = AugmentConfig()
    frontend: FrontendConfig = FrontendConfig()
    bench: BenchConfig = BenchConfig()
    run: RunSection = RunSection()


SECTIONS = tuple(RunConfig.model_fields)


def _read_sections(text: str, source: str) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}")
    return {name: dict(parser.items(name)) for name in parser.sections()}


def _apply_overrides(
    sections: Dict[str, Dict[str, str]], overrides: Sequence[str]
) -> None:
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override {item!r} is not section.key=value")
        sections.setdefault(section, {})[name] = value.strip()


def _format_errors(error: ValidationError) -> str:
    parts = []
    for e in error.errors():
        key = ".".join(str(p) for p in e["loc"])
        parts.append(f"{key}: {e['msg']}")
    return "; ".join(parts)


def parse_run_config(
    text: str, overrides: Sequence[str] = (), source: str = "<config>"
) -> RunConfig:
    """
    Parse a sectioned key=value config, apply ``section.key=value``
    overrides, then validate.

    Raises:
        ConfigError: unknown section or key, bad value or malformed override
    """
    sections = _read_sections(text, source)
    _apply_overrides(sections, overrides)
    unknown = set(sections) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
    # an absent seed in [model] follows [run]
    run_seed = sections.get("run", {}).get("seed")
    if run_seed is not None:
        sections.setdefault("model", {}).setdefault("seed", run_seed)
    try:
        return RunConfig.model_validate(sections)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_errors(e)}")


def load_run_config(path: str, overrides: Sequence[str] = ()) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}")
    return parse_run_config(text, overrides, source=path)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_run_config(config: RunConfig) -> str:
    """The fully resolved config in the same format; None values are left out"""
    out = io.StringIO()
    for section in SECTIONS:
        out.write(f"[{section}]\n")
        values = getattr(config, section)
        for name in type(values).model_fields:
            value = getattr(values, name)
            if value is not None:
                out.write(f"{name} = {_format_value(value)}\n")
        out.write("\n")
    return out.getvalue()


def load_cost_model(path: str) -> TdcfCostModel:
    """Read the [tdcf] section of a cost-model file"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            sections = _read_sections(f.read(), path)
    except OSError as e:
        raise ConfigError(f"cannot read cost model {path}: {e.strerror}")
    if set(sections) != {"tdcf"}:
        raise ConfigError(f"{path}: expected exactly one [tdcf] section")
    try:
        return TdcfCostModel.model_validate(sections["tdcf"])
    except ValidationError as e:
        raise InvalidCostModelError(f"invalid cost model: {_format_errors(e)}")


def variant_names(config: RunConfig) -> List[str]:
    return [v.value for v in config.run.variants]
