"""Flat `key = value` config files, merged with CLI overrides.

Every config key has a CLI flag of the same name (dashes on the command
line, underscores in the file): `learning_rate = 0.01` in a file is
`--learning-rate 0.01` on the command line, and the flag wins.
"""

from __future__ import annotations

from dataclasses import fields

from .diffnet import HyperParams
from .errors import ConfigurationError


def _as_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {raw!r}")


# key -> coercion; None means keep the raw string
KEY_TYPES: dict[str, object] = {
    "architecture": None,
    "architectures": None,
    "train_data": None,
    "dev_data": None,
    "test_data": None,
    "out_dir": None,
    "entity_types": None,
    "selection_metric": None,
    "word_dim": int,
    "char_dim": int,
    "tag_dim": int,
    "hidden_dim": int,
    "dropout": float,
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "beta1": float,
    "beta2": float,
    "epsilon": float,
    "seed": int,
    "replications": int,
    "use_char": _as_bool,
}

_HYPER_KEYS = {
    "word_dim", "char_dim", "tag_dim", "hidden_dim", "epochs", "batch_size",
    "learning_rate", "beta1", "beta2", "epsilon", "seed",
}


def parse_config_file(path: str) -> dict[str, object]:
    """Parse `key = value` lines; '#' starts a comment, blank lines skipped."""
    settings: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            if not sep:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected `key = value`, got {stripped!r}"
                )
            key = key.strip()
            if key not in KEY_TYPES:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            settings[key] = coerce(key, value.strip())
    return settings


def coerce(key: str, raw: str) -> object:
    caster = KEY_TYPES[key]
    if caster is None:
        return raw
    try:
        return caster(raw)
    except (ValueError, ConfigurationError) as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r} ({exc})") from exc


def merge_settings(file_settings: dict[str, object],
                   cli_settings: dict[str, object]) -> dict[str, object]:
    """CLI values (already typed, None meaning "not given") win over file."""
    merged = dict(file_settings)
    for key, value in cli_settings.items():
        if value is not None:
            merged[key] = value
    return merged


def hyper_from_settings(settings: dict[str, object]) -> HyperParams:
    kwargs = {k: settings[k] for k in _HYPER_KEYS if k in settings}
    if "dropout" in settings:
        kwargs["dropout_rate"] = settings["dropout"]
    valid = {f.name for f in fields(HyperParams)}
    assert set(kwargs) <= valid
    return HyperParams(**kwargs)


def entity_types_from(settings: dict[str, object]) -> tuple[str, ...]:
    raw = settings.get("entity_types")
    if raw is None:
        from .corpus import DEFAULT_ENTITY_TYPES
        return DEFAULT_ENTITY_TYPES
    types = tuple(t for t in str(raw).split(",") if t)
    if not types:
        raise ConfigurationError("entity_types must be a comma-joined list")
    return types
