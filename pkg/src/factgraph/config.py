"""Pipeline configuration: a TOML file, fully defaulted and validated.

Every CLI flag overrides its config key.  The effective configuration's
digest is written into every run manifest so artifacts are traceable to
the exact settings that produced them.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .gateway import DEFAULT_API_KEY_ENV
from .promptgen import DEFAULT_GROUP_DELIMITER, DEFAULT_TUPLE_DELIMITER
from .synthesis import NLI_POLICIES, POLICY_DROP_IF_CORRECT


@dataclass
class BackendConfig:
    kind: str = "mock"  # http | mock
    endpoint: str = ""
    model: str = "offline"
    max_in_flight: int = 4
    api_key_env: str = DEFAULT_API_KEY_ENV
    temperature: float = 0.0
    max_tokens: int = 2048
    fixtures: str = ""  # mock: optional digest->text JSON file
    scripted: bool = True  # mock: enable the scripted responder fallback


@dataclass
class ScorerConfig:
    kind: str = "mock"  # mock | http
    endpoint: str = ""
    max_batch: int = 32


@dataclass
class PromptConfig:
    dir: str = ""  # empty -> packaged templates
    tuple_delimiter: str = DEFAULT_TUPLE_DELIMITER
    group_delimiter: str = DEFAULT_GROUP_DELIMITER


@dataclass
class SynthesisConfig:
    hops: list[int] = field(default_factory=lambda: [3, 4])
    shape: str = "path"
    max_subgraphs_per_doc: int = 2
    corrupt_fraction: float = 0.18
    nli_policy_hotpotqa: str = POLICY_DROP_IF_CORRECT
    nli_policy_musique: str = POLICY_DROP_IF_CORRECT


@dataclass
class EvalConfig:
    budget_tokens: int = 400
    grid_step: float = 0.01
    fixed_threshold: bool = False
    fixed_threshold_value: float = 0.5
    bootstrap_runs: int = 100
    bootstrap_sample_size: int = 150
    hopscan_sample_size: int = 500


@dataclass
class PipelineConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    prompts: PromptConfig = field(default_factory=PromptConfig)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    cache_dir: str = ""
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return {
            "backend": vars(self.backend),
            "scorer": vars(self.scorer),
            "prompts": vars(self.prompts),
            "synthesis": vars(self.synthesis),
            "eval": vars(self.eval),
            "seed": self.seed,
            "cache_dir": self.cache_dir,
            "out_dir": self.out_dir,
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


_SECTIONS = {
    "backend": BackendConfig,
    "scorer": ScorerConfig,
    "prompts": PromptConfig,
    "synthesis": SynthesisConfig,
    "eval": EvalConfig,
}


def _apply_section(target, data: dict, section: str, violations: list[str]):
    for key, value in data.items():
        if not hasattr(target, key):
            violations.append(f"unknown key {section}.{key}")
            continue
        setattr(target, key, value)


def build_config(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    """Defaulted config from a parsed TOML mapping; raises with ALL violations."""
    violations: list[str] = []
    config = PipelineConfig()
    for name, value in data.items():
        if name in _SECTIONS:
            if isinstance(value, dict):
                _apply_section(getattr(config, name), value, name, violations)
            else:
                violations.append(f"section {name} must be a table")
        elif name in ("seed", "cache_dir", "out_dir"):
            setattr(config, name, value)
        else:
            violations.append(f"unknown key {name}")

    if base_dir is not None:
        for attr in ("cache_dir", "out_dir"):
            value = getattr(config, attr)
            if value and not Path(value).is_absolute():
                setattr(config, attr, str(base_dir / value))
        for obj, attr in ((config.prompts, "dir"), (config.backend, "fixtures")):
            value = getattr(obj, attr)
            if value and not Path(value).is_absolute():
                setattr(obj, attr, str(base_dir / value))

    if config.backend.kind not in ("http", "mock"):
        violations.append("backend.kind must be http or mock")
    if config.backend.kind == "http" and not config.backend.endpoint:
        violations.append("backend.endpoint required for the http backend")
    if config.backend.max_in_flight < 1:
        violations.append("backend.max_in_flight must be >= 1")
    if config.backend.temperature < 0:
        violations.append("backend.temperature must be >= 0")
    if config.backend.max_tokens < 1:
        violations.append("backend.max_tokens must be >= 1")
    if config.scorer.kind not in ("mock", "http"):
        violations.append("scorer.kind must be mock or http")
    if config.scorer.kind == "http" and not config.scorer.endpoint:
        violations.append("scorer.endpoint required for the http scorer")
    if not isinstance(config.seed, int) or isinstance(config.seed, bool):
        violations.append("seed must be an integer")
    if not config.synthesis.hops or any(
        (not isinstance(h, int)) or h < 1 for h in config.synthesis.hops
    ):
        violations.append("synthesis.hops must all be >= 1")
    if config.synthesis.shape not in ("path", "branched"):
        violations.append("synthesis.shape must be path or branched")
    if config.synthesis.max_subgraphs_per_doc < 1:
        violations.append("synthesis.max_subgraphs_per_doc must be >= 1")
    if not 0.0 <= config.synthesis.corrupt_fraction <= 1.0:
        violations.append("synthesis.corrupt_fraction must be within [0, 1]")
    for key in ("nli_policy_hotpotqa", "nli_policy_musique"):
        if getattr(config.synthesis, key) not in NLI_POLICIES:
            violations.append(f"synthesis.{key} must be one of {NLI_POLICIES}")
    if config.eval.budget_tokens < 1:
        violations.append("eval.budget_tokens must be >= 1")
    if not 0.0 < config.eval.grid_step <= 1.0:
        violations.append("eval.grid_step must be in (0, 1]")
    if not 0.0 <= config.eval.fixed_threshold_value <= 1.0:
        violations.append("eval.fixed_threshold_value must be within [0, 1]")
    if config.eval.bootstrap_runs < 1:
        violations.append("eval.bootstrap_runs must be >= 1")
    if config.eval.bootstrap_sample_size < 1:
        violations.append("eval.bootstrap_sample_size must be >= 1")
    if config.prompts.dir and not Path(config.prompts.dir).is_dir():
        violations.append(f"prompts.dir does not exist: {config.prompts.dir}")
    if config.backend.fixtures and not Path(config.backend.fixtures).is_file():
        violations.append(f"backend.fixtures does not exist: {config.backend.fixtures}")
    if not config.prompts.tuple_delimiter or not config.prompts.group_delimiter:
        violations.append("prompt delimiters must be non-empty")
    elif config.prompts.tuple_delimiter == config.prompts.group_delimiter:
        violations.append("prompt delimiters must be distinct")

    if violations:
        raise ConfigError(violations)
    return config


def validate_config(path: str | Path) -> PipelineConfig:
    """Load, default, and validate a config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"config parse error: {exc}"]) from exc
    return build_config(data, base_dir=path.parent.resolve())
