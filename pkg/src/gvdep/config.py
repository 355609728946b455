"""Run configuration: dataclass settings plus the auditable action-map/trigger file."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

CONFIG_VERSION = 1

# Competition/season identifiers of the two tournaments in the public open-data index.
EURO_2020 = (55, 43)
WOMENS_EURO_2022 = (53, 106)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LabelConfig:
    k: int = 5
    k_prime: int = 10
    gain_triggers: tuple[str, ...] = ("tackle", "interception", "offside")
    gain_requires_success: bool = True
    attack_requires_success: bool = False

    def __post_init__(self):
        if self.k < 1 or self.k_prime < 1:
            raise ConfigError("label horizons must be >= 1")


@dataclass(frozen=True)
class GameFilter:
    """Selects matches by competition stage and teams by the stage they reached.

    The defaults select the best-16 comparison: group stage plus round of 16,
    restricted to the teams that played in the round of 16.
    """

    stages: tuple[str, ...] = ("Group Stage", "Round of 16")
    teams_from_stage: str | None = "Round of 16"


BEST_16 = GameFilter()
LAST_8 = GameFilter(stages=("Group Stage", "Quarter-finals"), teams_from_stage="Quarter-finals")


@dataclass(frozen=True)
class ActionMap:
    table: dict = field(default_factory=dict, hash=False)
    version: int = CONFIG_VERSION


@dataclass(frozen=True)
class FileConfig:
    action_map: ActionMap
    labels: LabelConfig


def _default_config_text() -> str:
    return resources.files("gvdep").joinpath("data/action_map.ini").read_text(encoding="utf-8")


def load_config(path=None, *, k: int = 5, k_prime: int = 10) -> FileConfig:
    """Read the action-map/trigger file; ``path=None`` loads the shipped default."""
    parser = configparser.ConfigParser(delimiters=("=",), inline_comment_prefixes=None)
    parser.optionxform = str  # keys are case-sensitive provider names
    if path is None:
        parser.read_string(_default_config_text())
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser.read(path, encoding="utf-8")

    version = parser.getint("meta", "version", fallback=CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version}")
    if not parser.has_section("action_map"):
        raise ConfigError("config lacks an [action_map] section")

    from gvdep.actions import ActionType  # local: actions imports this module

    table = {}
    for key, value in parser.items("action_map"):
        try:
            table[key.strip()] = ActionType[value.strip()]
        except KeyError:
            raise ConfigError(f"unknown action type {value!r} for {key!r}") from None

    triggers = tuple(t.strip() for t in
                     parser.get("gains", "triggers", fallback="tackle, interception, offside")
                     .split(",") if t.strip())
    for t in triggers:
        if t != "offside" and t not in ActionType.__members__:
            raise ConfigError(f"unknown gain trigger {t!r}")
    labels = LabelConfig(
        k=k,
        k_prime=k_prime,
        gain_triggers=triggers,
        gain_requires_success=parser.getboolean("gains", "require_success", fallback=True),
        attack_requires_success=parser.getboolean("attacks", "require_success", fallback=False),
    )
    return FileConfig(ActionMap(table, version), labels)
